// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "deeprnn/core_math.hpp"

namespace deeprnn {

/// rnn: shallow transition and output.
/// dt / dts: one-intermediate-layer transition MLP, dts adds linear shortcuts
///   from h_{t-1} and x_t straight into the new state.
/// dot / dots: deep transition as dt / dts plus a one-intermediate-layer output MLP.
/// srnn: `levels` stacked shallow recurrent levels, output from the top one.
enum class Architecture { rnn, dt, dts, dot, dots, srnn };

enum class OutputHead { softmax, bernoulli };

std::string_view to_string(Architecture a);
Architecture parse_architecture(std::string_view name);
std::string_view to_string(OutputHead h);
OutputHead parse_output_head(std::string_view name);

bool has_deep_transition(Architecture a);
bool has_deep_output(Architecture a);
bool has_shortcuts(Architecture a);

struct ModelConfig {
  Architecture architecture = Architecture::rnn;
  std::size_t input_dim = 0;
  std::size_t output_dim = 0;
  std::size_t hidden_dim = 0;
  std::size_t transition_inter_dim = 0;
  std::size_t output_inter_dim = 0;
  std::size_t levels = 1;
  Nonlinearity hidden_nl = Nonlinearity::sigmoid;
  Nonlinearity transition_inter_nl = Nonlinearity::sigmoid;
  Nonlinearity output_inter_nl = Nonlinearity::sigmoid;
  OutputHead output_head = OutputHead::softmax;

  /// Number of recurrent levels actually carried in a HiddenState.
  std::size_t state_levels() const noexcept {
    return architecture == Architecture::srnn ? levels : 1;
  }

  /// Throws ConfigError describing the first violated constraint.
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// One named tensor. Biases are stored as 1 x n matrices with `is_bias` set.
struct Param {
  std::string name;
  Matrix value;
  bool is_bias = false;
  double lr_multiplier = 1.0;
};

/// Named tensors in a fixed, architecture-determined order.
class ParamSet {
 public:
  void add(Param p);

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  std::size_t scalar_count() const noexcept;

  const Param* find(std::string_view name) const;
  Param* find(std::string_view name);
  /// Throws ConfigError if `name` is absent.
  const Param& at(std::string_view name) const;
  Param& at(std::string_view name);

  Param& operator[](std::size_t i) { return entries_[i]; }
  const Param& operator[](std::size_t i) const { return entries_[i]; }

  auto begin() noexcept { return entries_.begin(); }
  auto end() noexcept { return entries_.end(); }
  auto begin() const noexcept { return entries_.begin(); }
  auto end() const noexcept { return entries_.end(); }

 private:
  std::vector<Param> entries_;
};

struct HiddenState {
  std::vector<Vector> levels;

  static HiddenState zeros(const ModelConfig& config);
  friend bool operator==(const HiddenState&, const HiddenState&) = default;
};

/// Binary frame given by its active indices: a one-hot symbol or a set of
/// sounding pitches.
using Frame = std::vector<int>;

struct BuildResult {
  ParamSet params;
  std::size_t parameter_count = 0;
};

/// Allocates every tensor the architecture needs, zero-filled.
///
/// Parameter names (shapes as fan_in x fan_out, T = transition_inter_dim,
/// D = output_inter_dim):
///   rnn       U[in,H] W[H,H] b_h[H]
///   dt        U[in,T] W1[H,T] b_t[T] W2[T,H] b_h[H]
///   dts       dt + S_h[H,H] S_x[in,H]
///   dot/dots  dt/dts transition
///   srnn      U[in,H] W[H,H] b_h[H], then U.l<k>[H,H] W.l<k>[H,H] b_h.l<k>[H] for k >= 2
///   output    V[H,out] b_o[out] (rnn, dt, dts); V1[H,D] b_d[D] V2[D,out] b_y[out] (dot, dots);
///             V_top[H,out] b_top[out] (srnn)
/// The distinct output names keep warm starts from copying a shallow output
/// layer into a deeper model.
BuildResult build(const ModelConfig& config);

/// New hidden state after reading one frame.
HiddenState step_transition(const ParamSet& params, const ModelConfig& config, const Frame& x,
                            const HiddenState& h_prev);
/// Same, for a dense input vector.
HiddenState step_transition(const ParamSet& params, const ModelConfig& config, const Vector& x,
                            const HiddenState& h_prev);

/// Output distribution read off a state: softmax probabilities or Bernoulli means.
Vector step_output(const ParamSet& params, const ModelConfig& config, const HiddenState& h);

struct StepOutput {
  Vector distribution;
  HiddenState new_state;
};

/// Composition operators: plus_op is the transition, predict_op the output map.
HiddenState plus_op(const ParamSet& params, const ModelConfig& config, const Vector& x,
                    const HiddenState& h);
HiddenState plus_op(const ParamSet& params, const ModelConfig& config, const Frame& x,
                    const HiddenState& h);
Vector predict_op(const ParamSet& params, const ModelConfig& config, const HiddenState& h);

struct ForwardResult {
  std::vector<Vector> distributions;
  std::vector<double> step_nll;
  HiddenState final_state;
  double total_nll = 0.0;
};

/// Runs the model over `inputs`, scoring prediction t against `targets[t]`.
/// total_nll is the left-to-right sum of step_nll.
ForwardResult forward(const ParamSet& params, const ModelConfig& config,
                      std::span<const Frame> inputs, std::span<const Frame> targets,
                      const HiddenState& h0, bool keep_distributions = true);

/// Next-step prediction over a whole sequence: frame t predicts frame t+1.
ForwardResult forward(const ParamSet& params, const ModelConfig& config,
                      std::span<const Frame> sequence, const HiddenState& h0,
                      bool keep_distributions = true);

/// Cross-entropy of a target under a distribution given by pre-head logits.
double step_loss(OutputHead head, std::span<const double> logits, const Frame& target);

}  // namespace deeprnn
