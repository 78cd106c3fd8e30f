#pragma once

// Single-file model checkpoint:
//   "NRELCKPT" | u32 version
//   records until EOF, each: u8 kind | u32 name length | name | payload
//     kind 1, tensor:  u8 frozen | u32 rank | u64 extents[rank] | f64 values
//     kind 2, strings: u64 count | (u64 length | bytes) per string
// Integers and doubles are little-endian.

#include <string>

#include "nrel/model.hpp"

namespace nrel {

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::string& path, const RelationModel<double>& model);
RelationModel<double> load_checkpoint(const std::string& path);

/// Accepts either a checkpoint file or a directory holding "model.ckpt".
std::string resolve_checkpoint_path(const std::string& path);

}  // namespace nrel
