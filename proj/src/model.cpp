#include "nrel/model.hpp"

#include <set>

namespace nrel {

std::vector<std::string> collect_edge_labels(std::span<const Instance> instances) {
  std::vector<std::string> out{kUnkLabel, kNextTok, kPrevTok, kNextSent};
  std::set<std::string> seen(out.begin(), out.end());
  for (const auto& x : instances)
    for (const auto& e : x.graph.edges())
      if (seen.insert(e.label).second) out.push_back(e.label);
  return out;
}

}  // namespace nrel
