#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include <unistd.h>

#include "nrel/document_graph.hpp"
#include "nrel/embeddings.hpp"
#include "nrel/params.hpp"

namespace fixture {

// "The deletion mutation on exon-19 of EGFR gene was present in 16 patients"
inline constexpr std::size_t kExon19 = 4;
inline constexpr std::size_t kEgfr = 6;
inline constexpr std::size_t kGene = 7;

inline nrel::SentenceInput fig1_sentence() {
  return {{"The", "deletion", "mutation", "on", "exon-19", "of", "EGFR", "gene", "was", "present", "in", "16",
           "patients"},
          {{9, 2, "nsubj"},
           {2, 0, "det"},
           {2, 1, "amod"},
           {2, 4, "prep_on"},
           {4, 7, "prep_of"},
           {7, 6, "nn"},
           {9, 8, "cop"},
           {9, 12, "prep_in"},
           {12, 11, "num"}},
          9};
}

/// The dependency arcs of the fragment alone.
inline nrel::DocumentGraph fig1_dependency_graph() {
  const auto s = fig1_sentence();
  std::vector<nrel::Token> tokens;
  for (std::size_t i = 0; i < s.tokens.size(); ++i) tokens.push_back({i, s.tokens[i], 0});
  std::vector<nrel::Edge> edges;
  for (const auto& a : s.arcs) edges.push_back({a.head, a.dep, a.label, nrel::EdgeKind::dependency});
  return nrel::DocumentGraph(std::move(tokens), std::move(edges));
}

/// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    auto base = std::filesystem::temp_directory_path();
    for (int i = 0;; ++i) {
      path_ = base / ("nrel_test_" + std::to_string(::getpid()) + "_" + std::to_string(i));
      if (std::filesystem::create_directory(path_)) break;
    }
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }

  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(file(name)) << text;
    return file(name);
  }

 private:
  std::filesystem::path path_;
};

}  // namespace fixture
