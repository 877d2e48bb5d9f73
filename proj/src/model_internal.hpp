// SPDX-License-Identifier: Apache-2.0
// Shared between the forward pass and backpropagation; not installed.
#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "deeprnn/model.hpp"

namespace deeprnn::detail {

struct TensorSpec {
  std::string name;
  std::size_t rows;
  std::size_t cols;
  bool is_bias;
};

/// Names and shapes of every tensor, in ParamSet order.
std::vector<TensorSpec> tensor_specs(const ModelConfig& config);

inline constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

/// ParamSet indices of the tensors each architecture reads.
struct Layout {
  struct Level {
    std::size_t input = kNone;
    std::size_t recurrent = kNone;
    std::size_t bias = kNone;
  };
  std::vector<Level> levels;  // rnn (one level) and srnn

  std::size_t u = kNone;  // deep transition
  std::size_t w1 = kNone;
  std::size_t b_t = kNone;
  std::size_t w2 = kNone;
  std::size_t b_h = kNone;
  std::size_t s_h = kNone;
  std::size_t s_x = kNone;

  std::size_t v = kNone;  // shallow output
  std::size_t b_o = kNone;

  std::size_t v1 = kNone;  // deep output
  std::size_t b_d = kNone;
  std::size_t v2 = kNone;
  std::size_t b_y = kNone;
};

/// Checks that `params` carries every tensor of `config` with the right shape.
Layout resolve_layout(const ParamSet& params, const ModelConfig& config);

/// Either a binary frame or a dense vector.
struct InputRef {
  const Frame* sparse = nullptr;
  const Vector* dense = nullptr;
};

/// out += Uᵀx
void add_input(const Matrix& u, InputRef x, std::span<double> out);
/// gU += x ⊗ delta
void add_input_grad(Matrix& gu, InputRef x, std::span<const double> delta);

/// Activations of one timestep.
struct StepCache {
  Vector trans_inter;          // deep transition intermediate layer
  std::vector<Vector> levels;  // new hidden state per level
  Vector out_inter;            // deep output intermediate layer
  Vector logits;               // pre-head output
};

/// Computes the new state (into cache.levels) and intermediates.
void transition(const ParamSet& p, const Layout& layout, const ModelConfig& c, InputRef x,
                std::span<const Vector> prev, StepCache& cache);

/// Computes logits (and the output intermediate) from the top level in cache.
void output(const ParamSet& p, const Layout& layout, const ModelConfig& c, StepCache& cache);

Vector head_distribution(OutputHead head, const Vector& logits);

/// Throws ConfigError for frames outside the model dimensions.
void check_frames(const ModelConfig& c, std::span<const Frame> inputs,
                  std::span<const Frame> targets);

}  // namespace deeprnn::detail
