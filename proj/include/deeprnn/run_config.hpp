// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "deeprnn/init.hpp"
#include "deeprnn/model.hpp"
#include "deeprnn/optimize.hpp"

namespace deeprnn {

/// Everything one CLI run needs. Built from a flat key=value file; keys the
/// file leaves out take the preset's defaults.
struct RunConfig {
  DatasetPreset preset = DatasetPreset::char_level;
  ModelConfig model;
  std::size_t vocab_size = 0;  // text presets; input/output dims follow it
  std::string train_path;
  std::string valid_path;
  std::string test_path;
  std::string parent;  // checkpoint to warm-start from
  std::size_t seq_len = 200;
  TrainPlan plan;
  std::string out_dir = "run";
  std::size_t gradcheck_length = 8;
  double gradcheck_eps = 1e-5;

  /// Every key with its resolved value, in canonical order.
  std::string to_text() const;
};

using RawConfig = std::map<std::string, std::string, std::less<>>;

/// All recognised keys, in the order to_text() writes them.
const std::vector<std::string>& run_config_keys();

/// Parses "key = value" lines; '#' starts a comment. Unknown or repeated
/// keys are a ConfigError naming the line.
RawConfig parse_key_values(std::string_view text);

/// Applies preset defaults, then the explicit values, then validates.
RunConfig resolve_run_config(const RawConfig& raw);

RunConfig load_run_config(const std::filesystem::path& path, const RawConfig& overrides = {});

}  // namespace deeprnn
