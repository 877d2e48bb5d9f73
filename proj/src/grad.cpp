// SPDX-License-Identifier: Apache-2.0
#include "deeprnn/grad.hpp"

#include <algorithm>
#include <cmath>

#include "deeprnn/errors.hpp"
#include "model_internal.hpp"

namespace deeprnn {

GradSet GradSet::zeros_like(const ParamSet& params) {
  GradSet g;
  g.names.reserve(params.size());
  g.values.reserve(params.size());
  for (const auto& p : params) {
    g.names.push_back(p.name);
    g.values.emplace_back(p.value.rows(), p.value.cols());
  }
  return g;
}

const Matrix& GradSet::at(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return values[i];
  throw ConfigError("gradient set has no entry '" + std::string(name) + "'");
}

Matrix& GradSet::at(std::string_view name) {
  return const_cast<Matrix&>(std::as_const(*this).at(name));
}

double GradSet::global_norm() const {
  double s = 0.0;
  for (const auto& m : values) s += squared_norm(m.span());
  return std::sqrt(s);
}

void GradSet::scale(double factor) {
  for (auto& m : values)
    for (double& v : m.span()) v *= factor;
}

void GradSet::add(const GradSet& other) {
  if (other.values.size() != values.size()) throw ConfigError("GradSet::add: size mismatch");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (other.values[i].size() != values[i].size()) {
      throw ConfigError("GradSet::add: shape mismatch on '" + names[i] + "'");
    }
    auto dst = values[i].span();
    auto src = other.values[i].span();
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
  }
}

namespace {

void add_to(Matrix& bias_grad, std::span<const double> delta) {
  double* b = bias_grad.data();
  for (std::size_t j = 0; j < delta.size(); ++j) b[j] += delta[j];
}

/// delta ⊙ φ'(y), φ' taken from the activation value.
void times_derivative(Nonlinearity nl, std::span<const double> y, std::span<double> delta) {
  for (std::size_t j = 0; j < delta.size(); ++j) delta[j] *= derivative_from_output(nl, y[j]);
}

}  // namespace

BpttResult bptt(const ParamSet& params, const ModelConfig& config, std::span<const Frame> inputs,
                std::span<const Frame> targets, const HiddenState& h0) {
  if (inputs.size() != targets.size()) {
    throw ConfigError("bptt: " + std::to_string(inputs.size()) + " inputs but " +
                      std::to_string(targets.size()) + " targets");
  }
  const auto L = detail::resolve_layout(params, config);
  detail::check_frames(config, inputs, targets);
  if (h0.levels.size() != config.state_levels()) {
    throw ConfigError("bptt: hidden state level count does not match the model");
  }

  const std::size_t steps = inputs.size();
  BpttResult result;
  result.grads = GradSet::zeros_like(params);
  std::vector<detail::StepCache> caches(steps);

  for (std::size_t t = 0; t < steps; ++t) {
    const std::vector<Vector>& prev = t == 0 ? h0.levels : caches[t - 1].levels;
    detail::transition(params, L, config, {&inputs[t], nullptr}, prev, caches[t]);
    detail::output(params, L, config, caches[t]);
    const double nll = step_loss(config.output_head, caches[t].logits.span(), targets[t]);
    if (!std::isfinite(nll) || !all_finite(caches[t].levels.back().span())) {
      throw NumericError("bptt: non-finite value at timestep " + std::to_string(t));
    }
    result.total_nll += nll;
  }
  result.final_state.levels = steps == 0 ? h0.levels : caches.back().levels;

  auto& g = result.grads.values;
  const std::size_t hidden = config.hidden_dim;
  const std::size_t n_levels = config.state_levels();
  std::vector<Vector> from_future(n_levels, Vector(hidden));
  std::vector<Vector> dh(n_levels, Vector(hidden));
  Vector dz(config.output_dim);

  for (std::size_t t = steps; t-- > 0;) {
    const auto& cache = caches[t];
    const std::vector<Vector>& prev = t == 0 ? h0.levels : caches[t - 1].levels;
    const detail::InputRef x{&inputs[t], nullptr};

    // softmax + categorical CE and sigmoid + Bernoulli CE share dL/dz = y − target
    dz = detail::head_distribution(config.output_head, cache.logits);
    for (int j : targets[t]) dz[static_cast<std::size_t>(j)] -= 1.0;

    for (std::size_t l = 0; l < n_levels; ++l) dh[l] = from_future[l];
    Vector& dtop = dh.back();
    const Vector& top = cache.levels.back();
    if (has_deep_output(config.architecture)) {
      add_to(g[L.b_y], dz.span());
      accumulate_outer(g[L.v2], cache.out_inter.span(), dz.span());
      Vector dd(config.output_inter_dim);
      accumulate_product(params[L.v2].value, dz.span(), dd.span());
      times_derivative(config.output_inter_nl, cache.out_inter.span(), dd.span());
      add_to(g[L.b_d], dd.span());
      accumulate_outer(g[L.v1], top.span(), dd.span());
      accumulate_product(params[L.v1].value, dd.span(), dtop.span());
    } else {
      add_to(g[L.b_o], dz.span());
      accumulate_outer(g[L.v], top.span(), dz.span());
      accumulate_product(params[L.v].value, dz.span(), dtop.span());
    }

    if (has_deep_transition(config.architecture)) {
      Vector& dpre_h = dh[0];
      times_derivative(config.hidden_nl, cache.levels[0].span(), dpre_h.span());
      add_to(g[L.b_h], dpre_h.span());
      accumulate_outer(g[L.w2], cache.trans_inter.span(), dpre_h.span());
      Vector dpre_a(config.transition_inter_dim);
      accumulate_product(params[L.w2].value, dpre_h.span(), dpre_a.span());
      times_derivative(config.transition_inter_nl, cache.trans_inter.span(), dpre_a.span());
      add_to(g[L.b_t], dpre_a.span());
      accumulate_outer(g[L.w1], prev[0].span(), dpre_a.span());
      detail::add_input_grad(g[L.u], x, dpre_a.span());

      Vector& dprev = from_future[0];
      dprev.fill(0.0);
      accumulate_product(params[L.w1].value, dpre_a.span(), dprev.span());
      if (L.s_h != detail::kNone) {
        accumulate_outer(g[L.s_h], prev[0].span(), dpre_h.span());
        detail::add_input_grad(g[L.s_x], x, dpre_h.span());
        accumulate_product(params[L.s_h].value, dpre_h.span(), dprev.span());
      }
      continue;
    }

    for (std::size_t l = n_levels; l-- > 0;) {
      const auto& lv = L.levels[l];
      Vector& dpre = dh[l];
      times_derivative(config.hidden_nl, cache.levels[l].span(), dpre.span());
      add_to(g[lv.bias], dpre.span());
      accumulate_outer(g[lv.recurrent], prev[l].span(), dpre.span());
      from_future[l].fill(0.0);
      accumulate_product(params[lv.recurrent].value, dpre.span(), from_future[l].span());
      if (l == 0) {
        detail::add_input_grad(g[lv.input], x, dpre.span());
      } else {
        accumulate_outer(g[lv.input], cache.levels[l - 1].span(), dpre.span());
        accumulate_product(params[lv.input].value, dpre.span(), dh[l - 1].span());
      }
    }
  }
  return result;
}

double clip_gradients_inplace(GradSet& g, double threshold) {
  if (!(threshold > 0)) throw ConfigError("clip threshold must be positive");
  const double norm = g.global_norm();
  // A clipped gradient can come back a few ulps above the threshold; the slack
  // keeps a second clip from rescaling it again.
  if (std::isfinite(threshold) && norm > threshold * (1.0 + 1e-12)) g.scale(threshold / norm);
  return norm;
}

GradSet clip_gradients(const GradSet& g, double threshold) {
  GradSet out = g;
  clip_gradients_inplace(out, threshold);
  return out;
}

GradSet finite_difference_grad(const ParamSet& params, const ModelConfig& config,
                               std::span<const Frame> inputs, std::span<const Frame> targets,
                               const HiddenState& h0, double eps) {
  if (!(eps > 0)) throw ConfigError("finite_difference_grad: eps must be positive");
  ParamSet probe = params;
  GradSet g = GradSet::zeros_like(params);
  auto cost = [&] { return forward(probe, config, inputs, targets, h0, false).step_nll; };
  for (std::size_t i = 0; i < probe.size(); ++i) {
    auto values = probe[i].value.span();
    auto out = g.values[i].span();
    for (std::size_t k = 0; k < values.size(); ++k) {
      const double saved = values[k];
      const double hi = saved + eps;
      const double lo = saved - eps;
      values[k] = hi;
      const std::vector<double> up = cost();
      values[k] = lo;
      const std::vector<double> down = cost();
      values[k] = saved;
      // differencing per step keeps round-off relative to one step's loss, not the total
      double diff = 0.0;
      for (std::size_t t = 0; t < up.size(); ++t) diff += up[t] - down[t];
      out[k] = diff / (hi - lo);
    }
  }
  return g;
}

std::vector<double> central_difference(const std::function<double(std::span<const double>)>& f,
                                       std::span<const double> point, double eps) {
  std::vector<double> x(point.begin(), point.end());
  std::vector<double> grad(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double saved = x[k];
    x[k] = saved + eps;
    const double up = f(x);
    x[k] = saved - eps;
    const double down = f(x);
    x[k] = saved;
    grad[k] = (up - down) / (2.0 * eps);
  }
  return grad;
}

double relative_error(double a, double b) {
  const double denom = std::max({std::abs(a), std::abs(b), 1e-8});
  return std::abs(a - b) / denom;
}

GradCheckReport compare_gradients(const GradSet& analytic, const GradSet& numeric) {
  if (analytic.size() != numeric.size()) throw ConfigError("compare_gradients: size mismatch");
  GradCheckReport report;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const auto a = analytic.values[i].span();
    const auto n = numeric.values[i].span();
    if (a.size() != n.size()) {
      throw ConfigError("compare_gradients: shape mismatch on '" + analytic.names[i] + "'");
    }
    GradCheckEntry entry{analytic.names[i], 0.0, 0};
    for (std::size_t k = 0; k < a.size(); ++k) {
      const double err = relative_error(a[k], n[k]);
      if (err > entry.max_relative_error || std::isnan(err)) {
        entry.max_relative_error = err;
        entry.worst_index = k;
      }
    }
    if (entry.max_relative_error > report.max_relative_error || report.worst_name.empty()) {
      if (entry.max_relative_error >= report.max_relative_error) {
        report.max_relative_error = entry.max_relative_error;
        report.worst_name = entry.name;
      }
    }
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace deeprnn
