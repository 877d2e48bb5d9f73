// SPDX-License-Identifier: Apache-2.0
#include "deeprnn/model.hpp"

#include <algorithm>
#include <cmath>

#include "deeprnn/errors.hpp"
#include "model_internal.hpp"

namespace deeprnn {

std::string_view to_string(Architecture a) {
  switch (a) {
    case Architecture::rnn: return "rnn";
    case Architecture::dt: return "dt";
    case Architecture::dts: return "dts";
    case Architecture::dot: return "dot";
    case Architecture::dots: return "dots";
    case Architecture::srnn: return "srnn";
  }
  return "?";
}

Architecture parse_architecture(std::string_view name) {
  for (auto a : {Architecture::rnn, Architecture::dt, Architecture::dts, Architecture::dot,
                 Architecture::dots, Architecture::srnn}) {
    if (name == to_string(a)) return a;
  }
  throw ConfigError("unknown architecture '" + std::string(name) +
                    "' (expected rnn, dt, dts, dot, dots or srnn)");
}

std::string_view to_string(OutputHead h) {
  return h == OutputHead::softmax ? "softmax" : "bernoulli";
}

OutputHead parse_output_head(std::string_view name) {
  if (name == "softmax") return OutputHead::softmax;
  if (name == "bernoulli") return OutputHead::bernoulli;
  throw ConfigError("unknown output head '" + std::string(name) + "'");
}

bool has_deep_transition(Architecture a) {
  return a == Architecture::dt || a == Architecture::dts || a == Architecture::dot ||
         a == Architecture::dots;
}

bool has_deep_output(Architecture a) { return a == Architecture::dot || a == Architecture::dots; }

bool has_shortcuts(Architecture a) { return a == Architecture::dts || a == Architecture::dots; }

void ModelConfig::validate() const {
  const std::string arch(to_string(architecture));
  if (input_dim == 0 || output_dim == 0 || hidden_dim == 0) {
    throw ConfigError(arch + ": input_dim, output_dim and hidden_dim must be positive");
  }
  if (has_deep_transition(architecture)) {
    if (transition_inter_dim == 0) throw ConfigError(arch + ": transition_inter_dim must be > 0");
  } else if (transition_inter_dim != 0) {
    throw ConfigError(arch + ": transition_inter_dim must be 0");
  }
  if (has_deep_output(architecture)) {
    if (output_inter_dim == 0) throw ConfigError(arch + ": output_inter_dim must be > 0");
  } else if (output_inter_dim != 0) {
    throw ConfigError(arch + ": output_inter_dim must be 0");
  }
  if (architecture == Architecture::srnn) {
    if (levels < 2) throw ConfigError("srnn: levels must be >= 2, got " + std::to_string(levels));
  } else if (levels != 1) {
    throw ConfigError(arch + ": levels must be 1");
  }
}

void ParamSet::add(Param p) {
  if (find(p.name) != nullptr) throw ConfigError("duplicate parameter '" + p.name + "'");
  if (!(p.lr_multiplier > 0)) throw ConfigError("parameter '" + p.name + "': lr_multiplier <= 0");
  entries_.push_back(std::move(p));
}

std::size_t ParamSet::scalar_count() const noexcept {
  std::size_t n = 0;
  for (const auto& p : entries_) n += p.value.size();
  return n;
}

const Param* ParamSet::find(std::string_view name) const {
  auto it = std::find_if(entries_.begin(), entries_.end(),
                         [&](const Param& p) { return p.name == name; });
  return it == entries_.end() ? nullptr : &*it;
}

Param* ParamSet::find(std::string_view name) {
  auto it = std::find_if(entries_.begin(), entries_.end(),
                         [&](const Param& p) { return p.name == name; });
  return it == entries_.end() ? nullptr : &*it;
}

const Param& ParamSet::at(std::string_view name) const {
  const Param* p = find(name);
  if (p == nullptr) throw ConfigError("missing parameter '" + std::string(name) + "'");
  return *p;
}

Param& ParamSet::at(std::string_view name) {
  Param* p = find(name);
  if (p == nullptr) throw ConfigError("missing parameter '" + std::string(name) + "'");
  return *p;
}

HiddenState HiddenState::zeros(const ModelConfig& config) {
  HiddenState h;
  h.levels.assign(config.state_levels(), Vector(config.hidden_dim));
  return h;
}

namespace detail {

std::vector<TensorSpec> tensor_specs(const ModelConfig& c) {
  c.validate();
  const std::size_t in = c.input_dim, out = c.output_dim, hid = c.hidden_dim;
  const std::size_t t = c.transition_inter_dim, d = c.output_inter_dim;
  std::vector<TensorSpec> s;
  auto mat = [&](std::string name, std::size_t r, std::size_t cols) {
    s.push_back({std::move(name), r, cols, false});
  };
  auto bias = [&](std::string name, std::size_t n) { s.push_back({std::move(name), 1, n, true}); };

  switch (c.architecture) {
    case Architecture::rnn:
      mat("U", in, hid);
      mat("W", hid, hid);
      bias("b_h", hid);
      break;
    case Architecture::dt:
    case Architecture::dts:
    case Architecture::dot:
    case Architecture::dots:
      mat("U", in, t);
      mat("W1", hid, t);
      bias("b_t", t);
      mat("W2", t, hid);
      bias("b_h", hid);
      if (has_shortcuts(c.architecture)) {
        mat("S_h", hid, hid);
        mat("S_x", in, hid);
      }
      break;
    case Architecture::srnn:
      mat("U", in, hid);
      mat("W", hid, hid);
      bias("b_h", hid);
      for (std::size_t l = 2; l <= c.levels; ++l) {
        const std::string suffix = ".l" + std::to_string(l);
        mat("U" + suffix, hid, hid);
        mat("W" + suffix, hid, hid);
        bias("b_h" + suffix, hid);
      }
      break;
  }

  if (has_deep_output(c.architecture)) {
    mat("V1", hid, d);
    bias("b_d", d);
    mat("V2", d, out);
    bias("b_y", out);
  } else if (c.architecture == Architecture::srnn) {
    mat("V_top", hid, out);
    bias("b_top", out);
  } else {
    mat("V", hid, out);
    bias("b_o", out);
  }
  return s;
}

Layout resolve_layout(const ParamSet& params, const ModelConfig& c) {
  const auto specs = tensor_specs(c);
  auto index_of = [&](const TensorSpec& spec) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (params[i].name != spec.name) continue;
      const Matrix& m = params[i].value;
      if (m.rows() != spec.rows || m.cols() != spec.cols) {
        throw ConfigError("parameter '" + spec.name + "' has shape " + shape_string(m) +
                          ", architecture " + std::string(to_string(c.architecture)) +
                          " needs " + std::to_string(spec.rows) + "x" + std::to_string(spec.cols));
      }
      return i;
    }
    throw ConfigError("missing parameter '" + spec.name + "' for architecture " +
                      std::string(to_string(c.architecture)));
  };

  Layout layout;
  auto idx = [&](std::string_view name) {
    for (const auto& spec : specs)
      if (spec.name == name) return index_of(spec);
    return kNone;
  };

  if (has_deep_transition(c.architecture)) {
    layout.u = idx("U");
    layout.w1 = idx("W1");
    layout.b_t = idx("b_t");
    layout.w2 = idx("W2");
    layout.b_h = idx("b_h");
    if (has_shortcuts(c.architecture)) {
      layout.s_h = idx("S_h");
      layout.s_x = idx("S_x");
    }
  } else {
    layout.levels.push_back({idx("U"), idx("W"), idx("b_h")});
    for (std::size_t l = 2; l <= c.state_levels(); ++l) {
      const std::string suffix = ".l" + std::to_string(l);
      layout.levels.push_back({idx("U" + suffix), idx("W" + suffix), idx("b_h" + suffix)});
    }
  }

  if (has_deep_output(c.architecture)) {
    layout.v1 = idx("V1");
    layout.b_d = idx("b_d");
    layout.v2 = idx("V2");
    layout.b_y = idx("b_y");
  } else if (c.architecture == Architecture::srnn) {
    layout.v = idx("V_top");
    layout.b_o = idx("b_top");
  } else {
    layout.v = idx("V");
    layout.b_o = idx("b_o");
  }
  return layout;
}

void add_input(const Matrix& u, InputRef x, std::span<double> out) {
  if (x.sparse != nullptr) {
    const std::size_t cols = u.cols();
    for (int i : *x.sparse) {
      const double* row = u.data() + static_cast<std::size_t>(i) * cols;
      for (std::size_t j = 0; j < cols; ++j) out[j] += row[j];
    }
  } else {
    accumulate_transposed(u, x.dense->span(), out);
  }
}

void add_input_grad(Matrix& gu, InputRef x, std::span<const double> delta) {
  if (x.sparse != nullptr) {
    const std::size_t cols = gu.cols();
    for (int i : *x.sparse) {
      double* row = gu.data() + static_cast<std::size_t>(i) * cols;
      for (std::size_t j = 0; j < cols; ++j) row[j] += delta[j];
    }
  } else {
    accumulate_outer(gu, x.dense->span(), delta);
  }
}

namespace {

void copy_bias(const Matrix& b, Vector& out) {
  if (out.dim() != b.cols()) out = Vector(b.cols());
  std::copy(b.data(), b.data() + b.cols(), out.data());
}

}  // namespace

void transition(const ParamSet& p, const Layout& L, const ModelConfig& c, InputRef x,
                std::span<const Vector> prev, StepCache& cache) {
  cache.levels.resize(c.state_levels());
  if (has_deep_transition(c.architecture)) {
    const Vector& h_prev = prev[0];
    copy_bias(p[L.b_t].value, cache.trans_inter);
    accumulate_transposed(p[L.w1].value, h_prev.span(), cache.trans_inter.span());
    add_input(p[L.u].value, x, cache.trans_inter.span());
    apply_inplace(c.transition_inter_nl, cache.trans_inter.span());

    Vector& h = cache.levels[0];
    copy_bias(p[L.b_h].value, h);
    accumulate_transposed(p[L.w2].value, cache.trans_inter.span(), h.span());
    if (L.s_h != kNone) {
      accumulate_transposed(p[L.s_h].value, h_prev.span(), h.span());
      add_input(p[L.s_x].value, x, h.span());
    }
    apply_inplace(c.hidden_nl, h.span());
    return;
  }

  for (std::size_t l = 0; l < L.levels.size(); ++l) {
    const auto& lv = L.levels[l];
    Vector& h = cache.levels[l];
    copy_bias(p[lv.bias].value, h);
    accumulate_transposed(p[lv.recurrent].value, prev[l].span(), h.span());
    if (l == 0) add_input(p[lv.input].value, x, h.span());
    else accumulate_transposed(p[lv.input].value, cache.levels[l - 1].span(), h.span());
    apply_inplace(c.hidden_nl, h.span());
  }
}

void output(const ParamSet& p, const Layout& L, const ModelConfig& c, StepCache& cache) {
  const Vector& top = cache.levels.back();
  if (has_deep_output(c.architecture)) {
    copy_bias(p[L.b_d].value, cache.out_inter);
    accumulate_transposed(p[L.v1].value, top.span(), cache.out_inter.span());
    apply_inplace(c.output_inter_nl, cache.out_inter.span());
    copy_bias(p[L.b_y].value, cache.logits);
    accumulate_transposed(p[L.v2].value, cache.out_inter.span(), cache.logits.span());
  } else {
    copy_bias(p[L.b_o].value, cache.logits);
    accumulate_transposed(p[L.v].value, top.span(), cache.logits.span());
  }
}

Vector head_distribution(OutputHead head, const Vector& logits) {
  if (head == OutputHead::softmax) return softmax(logits);
  return apply(Nonlinearity::sigmoid, logits);
}

void check_frames(const ModelConfig& c, std::span<const Frame> inputs,
                  std::span<const Frame> targets) {
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    for (int i : inputs[t]) {
      if (i < 0 || static_cast<std::size_t>(i) >= c.input_dim) {
        throw ConfigError("input frame " + std::to_string(t) + " has index " + std::to_string(i) +
                          " outside input_dim " + std::to_string(c.input_dim));
      }
    }
  }
  for (std::size_t t = 0; t < targets.size(); ++t) {
    if (c.output_head == OutputHead::softmax && targets[t].size() != 1) {
      throw ConfigError("softmax target " + std::to_string(t) + " must name exactly one symbol");
    }
    for (int i : targets[t]) {
      if (i < 0 || static_cast<std::size_t>(i) >= c.output_dim) {
        throw ConfigError("target frame " + std::to_string(t) + " has index " +
                          std::to_string(i) + " outside output_dim " +
                          std::to_string(c.output_dim));
      }
    }
  }
}

}  // namespace detail

BuildResult build(const ModelConfig& config) {
  BuildResult result;
  for (const auto& spec : detail::tensor_specs(config)) {
    result.params.add({spec.name, Matrix(spec.rows, spec.cols), spec.is_bias, 1.0});
    result.parameter_count += spec.rows * spec.cols;
  }
  return result;
}

namespace {

void check_state(const ModelConfig& c, const HiddenState& h) {
  if (h.levels.size() != c.state_levels()) {
    throw ConfigError("hidden state has " + std::to_string(h.levels.size()) +
                      " levels, model needs " + std::to_string(c.state_levels()));
  }
  for (const auto& v : h.levels) {
    if (v.dim() != c.hidden_dim) {
      throw ConfigError("hidden state dim " + std::to_string(v.dim()) + " != hidden_dim " +
                        std::to_string(c.hidden_dim));
    }
  }
}

HiddenState transition_state(const ParamSet& params, const ModelConfig& config,
                             detail::InputRef x, const HiddenState& h_prev) {
  const auto layout = detail::resolve_layout(params, config);
  check_state(config, h_prev);
  detail::StepCache cache;
  detail::transition(params, layout, config, x, h_prev.levels, cache);
  return HiddenState{std::move(cache.levels)};
}

}  // namespace

HiddenState step_transition(const ParamSet& params, const ModelConfig& config, const Frame& x,
                            const HiddenState& h_prev) {
  detail::check_frames(config, std::span<const Frame>(&x, 1), {});
  return transition_state(params, config, {&x, nullptr}, h_prev);
}

HiddenState step_transition(const ParamSet& params, const ModelConfig& config, const Vector& x,
                            const HiddenState& h_prev) {
  if (x.dim() != config.input_dim) {
    throw ConfigError("input dim " + std::to_string(x.dim()) + " != input_dim " +
                      std::to_string(config.input_dim));
  }
  return transition_state(params, config, {nullptr, &x}, h_prev);
}

Vector step_output(const ParamSet& params, const ModelConfig& config, const HiddenState& h) {
  const auto layout = detail::resolve_layout(params, config);
  check_state(config, h);
  detail::StepCache cache;
  cache.levels = h.levels;
  detail::output(params, layout, config, cache);
  return detail::head_distribution(config.output_head, cache.logits);
}

HiddenState plus_op(const ParamSet& params, const ModelConfig& config, const Vector& x,
                    const HiddenState& h) {
  return step_transition(params, config, x, h);
}

HiddenState plus_op(const ParamSet& params, const ModelConfig& config, const Frame& x,
                    const HiddenState& h) {
  return step_transition(params, config, x, h);
}

Vector predict_op(const ParamSet& params, const ModelConfig& config, const HiddenState& h) {
  return step_output(params, config, h);
}

double step_loss(OutputHead head, std::span<const double> logits, const Frame& target) {
  if (head == OutputHead::softmax) {
    return log_sum_exp(logits) - logits[static_cast<std::size_t>(target.front())];
  }
  // Σ_j softplus(z_j) − Σ_{j active} z_j
  double loss = 0.0;
  for (double z : logits) loss += std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
  for (int j : target) loss -= logits[static_cast<std::size_t>(j)];
  return loss;
}

ForwardResult forward(const ParamSet& params, const ModelConfig& config,
                      std::span<const Frame> inputs, std::span<const Frame> targets,
                      const HiddenState& h0, bool keep_distributions) {
  if (inputs.size() != targets.size()) {
    throw ConfigError("forward: " + std::to_string(inputs.size()) + " inputs but " +
                      std::to_string(targets.size()) + " targets");
  }
  const auto layout = detail::resolve_layout(params, config);
  check_state(config, h0);
  detail::check_frames(config, inputs, targets);

  ForwardResult result;
  result.step_nll.reserve(inputs.size());
  if (keep_distributions) result.distributions.reserve(inputs.size());
  HiddenState state = h0;
  detail::StepCache cache;
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    detail::transition(params, layout, config, {&inputs[t], nullptr}, state.levels, cache);
    detail::output(params, layout, config, cache);
    const double nll = step_loss(config.output_head, cache.logits.span(), targets[t]);
    if (!std::isfinite(nll) || !all_finite(cache.levels.back().span())) {
      throw NumericError("forward: non-finite value at timestep " + std::to_string(t));
    }
    result.step_nll.push_back(nll);
    result.total_nll += nll;
    if (keep_distributions) {
      result.distributions.push_back(detail::head_distribution(config.output_head, cache.logits));
    }
    std::swap(state.levels, cache.levels);
  }
  result.final_state = std::move(state);
  return result;
}

ForwardResult forward(const ParamSet& params, const ModelConfig& config,
                      std::span<const Frame> sequence, const HiddenState& h0,
                      bool keep_distributions) {
  const std::size_t steps = sequence.empty() ? 0 : sequence.size() - 1;
  return forward(params, config, sequence.first(steps), sequence.subspan(steps == 0 ? 0 : 1, steps), h0,
                 keep_distributions);
}

}  // namespace deeprnn
