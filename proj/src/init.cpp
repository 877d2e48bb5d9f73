// SPDX-License-Identifier: Apache-2.0
#include "deeprnn/init.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

#include "deeprnn/errors.hpp"

namespace deeprnn {

std::string_view to_string(DatasetPreset p) {
  switch (p) {
    case DatasetPreset::music: return "music";
    case DatasetPreset::char_level: return "char";
    case DatasetPreset::word_level: return "word";
  }
  return "?";
}

DatasetPreset parse_preset(std::string_view name) {
  if (name == "music") return DatasetPreset::music;
  if (name == "char") return DatasetPreset::char_level;
  if (name == "word") return DatasetPreset::word_level;
  throw ConfigError("unknown preset '" + std::string(name) + "' (expected music, char or word)");
}

PresetStds preset_stds(DatasetPreset p) {
  switch (p) {
    case DatasetPreset::music: return {0.1, 0.01, 0.01};
    case DatasetPreset::char_level: return {0.01, 0.001, 0.01};
    case DatasetPreset::word_level: return {0.1, 0.1, 0.01};
  }
  throw ConfigError("unknown preset");
}

Matrix sparse_init(Rng& rng, std::size_t rows, std::size_t cols, std::size_t nnz_per_unit,
                   double std) {
  if (nnz_per_unit == 0) throw ConfigError("sparse_init: nnz_per_unit must be >= 1");
  Matrix m(rows, cols);
  const std::size_t nnz = std::min(nnz_per_unit, rows);
  std::vector<std::size_t> order(rows);
  for (std::size_t c = 0; c < cols; ++c) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    // partial Fisher-Yates: the first nnz slots are a uniform sample without replacement
    for (std::size_t k = 0; k < nnz; ++k) {
      const std::size_t j = k + rng.uniform_below(rows - k);
      std::swap(order[k], order[j]);
      m(order[k], c) = rng.normal(0.0, std);
    }
  }
  return m;
}

Matrix rescale_to_unit_spectral(const Matrix& m) {
  const double sigma = largest_singular_value(m, 1e-6, 1000, "rescale target");
  return m.scaled(1.0 / sigma);
}

namespace {

bool is_hidden_to_hidden(const ModelConfig& c, std::string_view name) {
  if (name == "W" || name == "W1" || name == "W2" || name == "S_h") return true;
  if (c.architecture == Architecture::srnn && name.find(".l") != std::string_view::npos) {
    return name.front() == 'U' || name.front() == 'W';
  }
  return false;
}

bool is_input_side(std::string_view name) { return name == "U" || name == "S_x"; }

}  // namespace

InitRecipe make_recipe(const ModelConfig& config, DatasetPreset preset) {
  const PresetStds stds = preset_stds(preset);
  InitRecipe recipe;
  for (const auto& p : build(config).params) {
    InitRule rule;
    if (p.is_bias) {
      const bool feeds_rectifier =
          (p.name == "b_d" && config.output_inter_nl == Nonlinearity::rectifier) ||
          (p.name == "b_t" && config.transition_inter_nl == Nonlinearity::rectifier) ||
          (p.name.starts_with("b_h") && config.hidden_nl == Nonlinearity::rectifier);
      rule = {InitRule::Kind::constant, feeds_rectifier ? kRectifierBias : 0.0};
    } else if (is_hidden_to_hidden(config, p.name)) {
      rule = {InitRule::Kind::sparse_spectral, 1.0};
    } else if (is_input_side(p.name)) {
      rule = {InitRule::Kind::gaussian, stds.input};
    } else if (p.name == "V1") {
      rule = {InitRule::Kind::gaussian, stds.output_inter};
    } else {
      rule = {InitRule::Kind::gaussian, stds.output};  // V, V2, V_top
    }
    recipe.emplace(p.name, rule);
  }
  return recipe;
}

ParamSet init_model(const ModelConfig& config, const InitRecipe& recipe, Rng& rng) {
  ParamSet params = build(config).params;
  if (recipe.size() != params.size()) {
    throw ConfigError("init recipe has " + std::to_string(recipe.size()) + " rules for " +
                      std::to_string(params.size()) + " parameters");
  }
  for (auto& p : params) {
    auto it = recipe.find(p.name);
    if (it == recipe.end()) throw ConfigError("init recipe has no rule for '" + p.name + "'");
    const InitRule& rule = it->second;
    switch (rule.kind) {
      case InitRule::Kind::constant:
        p.value.fill(rule.value);
        break;
      case InitRule::Kind::gaussian:
        p.value = gaussian_matrix(rng, p.value.rows(), p.value.cols(), rule.value);
        break;
      case InitRule::Kind::sparse_spectral:
        p.value = rescale_to_unit_spectral(
            sparse_init(rng, p.value.rows(), p.value.cols(), rule.nnz, rule.value));
        break;
    }
  }
  return params;
}

ParamSet init_model(const ModelConfig& config, DatasetPreset preset, Rng& rng) {
  return init_model(config, make_recipe(config, preset), rng);
}

ParamSet warm_start(const ModelConfig& deep_config, const ParamSet& deep_params,
                    const ParamSet& source) {
  deep_config.validate();
  ParamSet out = deep_params;
  for (auto& p : out) {
    const Param* src = source.find(p.name);
    if (src == nullptr) continue;
    if (src->value.rows() != p.value.rows() || src->value.cols() != p.value.cols()) {
      throw ConfigError("warm_start: '" + p.name + "' is " + shape_string(src->value) +
                        " in the source but " + shape_string(p.value) + " in the target");
    }
    p.value = src->value;
    p.lr_multiplier = kPretrainedLrMultiplier;
  }
  return out;
}

void check_warm_start_parent(Architecture deep, Architecture source) {
  const bool ok = (deep == Architecture::srnn && source == Architecture::rnn) ||
                  (deep == Architecture::dots && source == Architecture::dts);
  if (!ok) {
    throw ConfigError("warm start: " + std::string(to_string(deep)) + " cannot be initialized from " +
                      std::string(to_string(source)) + " (supported: srnn <- rnn, dots <- dts)");
  }
}

}  // namespace deeprnn
