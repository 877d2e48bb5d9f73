// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>

#include "deeprnn/core_math.hpp"
#include "deeprnn/model.hpp"

namespace deeprnn {

enum class DatasetPreset { music, char_level, word_level };

std::string_view to_string(DatasetPreset p);
/// Accepts "music", "char", "word". Throws ConfigError otherwise.
DatasetPreset parse_preset(std::string_view name);

/// Gaussian standard deviations for the matrices touching x_t or y_t.
struct PresetStds {
  double input = 0.0;        // input-to-hidden, and the S_x shortcut
  double output = 0.0;       // hidden-to-output (or output intermediate to output)
  double output_inter = 0.0; // hidden-to-intermediate of a deep output stack
};

PresetStds preset_stds(DatasetPreset p);

inline constexpr std::size_t kSparseConnections = 20;
inline constexpr double kRectifierBias = 0.1;

/// Each column (output unit) receives min(nnz_per_unit, rows) nonzero
/// incoming weights at uniformly drawn rows, values N(0, std²).
Matrix sparse_init(Rng& rng, std::size_t rows, std::size_t cols, std::size_t nnz_per_unit,
                   double std);

/// M / σ_max(M). Throws ConfigError on the zero matrix.
Matrix rescale_to_unit_spectral(const Matrix& m);

struct InitRule {
  enum class Kind { sparse_spectral, gaussian, constant };
  Kind kind = Kind::constant;
  double value = 0.0;  // std for gaussian, fill for constant; unused for sparse
  std::size_t nnz = kSparseConnections;
};

/// One rule per parameter name.
using InitRecipe = std::map<std::string, InitRule, std::less<>>;

/// Hidden-to-hidden matrices (W, W1, W2, S_h, stacked U/W above level 1) get
/// sparse + spectral rules; input- and output-side matrices get the preset
/// Gaussians; biases are 0 except those feeding rectifier layers.
InitRecipe make_recipe(const ModelConfig& config, DatasetPreset preset);

ParamSet init_model(const ModelConfig& config, DatasetPreset preset, Rng& rng);
ParamSet init_model(const ModelConfig& config, const InitRecipe& recipe, Rng& rng);

/// Copies every tensor of `source` whose name exists in `deep_params` and
/// marks it with lr multiplier 0.1; everything else is left as initialized
/// (multiplier 1). Throws ConfigError on shape mismatch of a shared name.
ParamSet warm_start(const ModelConfig& deep_config, const ParamSet& deep_params,
                    const ParamSet& source);

inline constexpr double kPretrainedLrMultiplier = 0.1;

/// Accepts only the pretraining pairs srnn <- rnn and dots <- dts.
void check_warm_start_parent(Architecture deep, Architecture source);

}  // namespace deeprnn
