// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "deeprnn/core_math.hpp"
#include "deeprnn/model.hpp"

namespace deeprnn {

/// Gradient buffers mirroring a ParamSet entry for entry.
struct GradSet {
  std::vector<std::string> names;
  std::vector<Matrix> values;

  static GradSet zeros_like(const ParamSet& params);

  std::size_t size() const noexcept { return values.size(); }
  const Matrix& at(std::string_view name) const;
  Matrix& at(std::string_view name);

  double global_norm() const;
  void scale(double factor);
  /// this += other, entry by entry in a fixed order.
  void add(const GradSet& other);
};

struct BpttResult {
  GradSet grads;
  double total_nll = 0.0;
  HiddenState final_state;
};

/// Gradient of the summed cross-entropy over one (sub)sequence. No gradient
/// flows into `h0`: each call is a truncation boundary.
BpttResult bptt(const ParamSet& params, const ModelConfig& config, std::span<const Frame> inputs,
                std::span<const Frame> targets, const HiddenState& h0);

/// Rescales the whole gradient so its joint L2 norm is at most `threshold`.
GradSet clip_gradients(const GradSet& g, double threshold);
/// In-place variant. Returns the norm before clipping.
double clip_gradients_inplace(GradSet& g, double threshold);

/// Central differences (J(θ+εe_i) − J(θ−εe_i)) / 2ε of the forward nll, one
/// scalar parameter at a time. Independent of bptt: only forward() is used.
GradSet finite_difference_grad(const ParamSet& params, const ModelConfig& config,
                               std::span<const Frame> inputs, std::span<const Frame> targets,
                               const HiddenState& h0, double eps = 1e-5);

/// Central differences of an arbitrary scalar function at `point`.
std::vector<double> central_difference(const std::function<double(std::span<const double>)>& f,
                                       std::span<const double> point, double eps);

/// |a − b| / max(|a|, |b|, 1e−8)
double relative_error(double a, double b);

struct GradCheckEntry {
  std::string name;
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_relative_error = 0.0;
  std::string worst_name;

  bool passed(double tolerance) const { return max_relative_error < tolerance; }
};

GradCheckReport compare_gradients(const GradSet& analytic, const GradSet& numeric);

}  // namespace deeprnn
