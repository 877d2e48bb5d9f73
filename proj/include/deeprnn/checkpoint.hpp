// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "deeprnn/data.hpp"
#include "deeprnn/model.hpp"

namespace deeprnn {

/// Portable model file. All integers and doubles are little-endian.
///
///   "DRNN"            4-byte magic
///   u32 version       currently 1
///   u32 n, n bytes    model description, "key=value\n" lines
///   u32 n             vocabulary entries, each u32 length + bytes
///   u32 n             tensors, each:
///                       u32 length + name bytes
///                       u8 rank (1 for biases, 2 otherwise), u64 per dim
///                       f64 lr multiplier
///                       f64 values, row-major
struct Checkpoint {
  ModelConfig config;
  ParamSet params;
  std::string preset;                   // empty when unknown
  std::optional<TextLevel> text_level;  // unset for piano-roll models
  std::vector<std::string> vocabulary;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
/// Throws ParseError on a bad magic, unsupported version or truncation.
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace deeprnn
