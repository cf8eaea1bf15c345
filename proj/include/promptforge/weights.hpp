#pragma once

#include <cstdint>
#include <filesystem>

#include "promptforge/seq2seq.hpp"

namespace promptforge {

// Weight file layout (all integers and floats little-endian):
//   magic "PFRZ1" | version u32 | config: 7 x u64 + seed i64 |
//   parameters as f64 in ParameterLayout order | FNV-1a 64 checksum of all preceding bytes
inline constexpr char kWeightMagic[5] = {'P', 'F', 'R', 'Z', '1'};
inline constexpr std::uint32_t kWeightFormatVersion = 1;

void save_weights(const FrozenSeq2Seq &model, const std::filesystem::path &path);
FrozenSeq2Seq load_weights(const std::filesystem::path &path);

} // namespace promptforge
