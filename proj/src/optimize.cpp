// SPDX-License-Identifier: Apache-2.0
#include "deeprnn/optimize.hpp"

#include <algorithm>
#include <cmath>

#include "deeprnn/errors.hpp"
#include "deeprnn/eval.hpp"

namespace deeprnn {

double lr_inverse(double tau, double tau0, double beta) {
  if (!(beta > 0)) throw ConfigError("lr_inverse: beta must be positive");
  return 1.0 / (1.0 + std::max(0.0, tau - tau0) / beta);
}

double lr_halving_step(double current_lr, double prev_val_nll, double new_val_nll,
                       double significance_threshold) {
  if (!(current_lr > 0)) throw ConfigError("lr_halving_step: learning rate must be positive");
  if (new_val_nll > prev_val_nll - significance_threshold) return current_lr / 2.0;
  return current_lr;
}

ParamSet perturb_weights(const ParamSet& params, Rng& rng, double std) {
  if (std < 0) throw ConfigError("weight noise std must be >= 0");
  ParamSet out = params;
  if (std == 0.0) return out;
  for (auto& p : out)
    for (double& v : p.value.span()) v += rng.normal(0.0, std);
  return out;
}

void sgd_update(ParamSet& params, const GradSet& grads, double lr) {
  if (grads.size() != params.size()) throw ConfigError("sgd_update: gradient/parameter mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto theta = params[i].value.span();
    auto g = grads.values[i].span();
    if (theta.size() != g.size()) {
      throw ConfigError("sgd_update: shape mismatch on '" + params[i].name + "'");
    }
    const double step = lr * params[i].lr_multiplier;
    for (std::size_t k = 0; k < theta.size(); ++k) theta[k] -= step * g[k];
  }
}

std::string_view to_string(ScheduleKind k) {
  return k == ScheduleKind::inverse ? "inverse" : "halving";
}

ScheduleKind parse_schedule(std::string_view name) {
  if (name == "inverse") return ScheduleKind::inverse;
  if (name == "halving") return ScheduleKind::halving;
  throw ConfigError("unknown schedule '" + std::string(name) + "' (expected inverse or halving)");
}

void TrainPlan::validate() const {
  if (!(learning_rate > 0)) throw ConfigError("learning_rate must be > 0");
  if (!(beta > 0)) throw ConfigError("beta must be > 0");
  if (!(clip_threshold > 0)) throw ConfigError("clip_threshold must be > 0");
  if (!(weight_noise_std >= 0)) throw ConfigError("weight_noise_std must be >= 0");
  if (significance_threshold < 0) throw ConfigError("significance_threshold must be >= 0");
  if (max_epochs == 0) throw ConfigError("max_epochs must be >= 1");
}

std::string to_csv(const TrainLog& log) {
  std::string out = "update,lr,train_nll,valid_nll\n";
  for (const auto& r : log.records) {
    out += std::to_string(r.update) + "," + format_double(r.lr) + "," +
           format_double(r.train_nll) + "," + format_double(r.valid_nll) + "\n";
  }
  return out;
}

namespace {

// keeps weight-noise streams disjoint from the stream used for initialization
constexpr std::uint64_t kNoiseStreamBase = std::uint64_t{1} << 32;

}  // namespace

TrainResult sgd_train(const ModelConfig& config, ParamSet params,
                      std::span<const SubseqChunk> train, std::span<const SubseqChunk> valid,
                      const TrainPlan& plan) {
  plan.validate();
  config.validate();
  if (train.empty()) throw ConfigError("sgd_train: no training subsequences");
  const auto valid_set = valid.empty() ? train : valid;

  TrainResult result;
  TrainLog& log = result.log;
  log.tau0 = plan.tau0;
  result.params = params;

  double halving_lr = plan.learning_rate;
  auto current_lr = [&](std::size_t tau) {
    if (plan.schedule == ScheduleKind::halving) return halving_lr;
    if (!log.tau0) return plan.learning_rate;
    return plan.learning_rate *
           lr_inverse(static_cast<double>(tau), static_cast<double>(*log.tau0), plan.beta);
  };

  double best_val = std::numeric_limits<double>::infinity();
  std::optional<double> prev_val;
  std::size_t without_improvement = 0;
  double train_nll_sum = 0.0;
  std::size_t train_steps = 0;
  std::size_t tau = 0;
  bool stop = false;

  auto validate_now = [&] {
    const double val = evaluate(params, config, valid_set).nll_per_step;
    if (!std::isfinite(val)) throw NumericError("validation cost is not finite");
    TrainRecord rec;
    rec.update = tau;
    rec.lr = current_lr(tau);
    rec.train_nll = train_steps == 0 ? 0.0 : train_nll_sum / static_cast<double>(train_steps);
    rec.valid_nll = val;
    log.records.push_back(rec);
    train_nll_sum = 0.0;
    train_steps = 0;

    if (prev_val) {
      if (plan.schedule == ScheduleKind::inverse && !log.tau0 && val > *prev_val) log.tau0 = tau;
      if (plan.schedule == ScheduleKind::halving) {
        halving_lr = lr_halving_step(halving_lr, *prev_val, val, plan.significance_threshold);
      }
    }
    prev_val = val;

    if (val < best_val) {
      best_val = val;
      result.params = params;
      log.best_record = log.records.size() - 1;
      without_improvement = 0;
    } else if (plan.patience > 0 && ++without_improvement >= plan.patience) {
      log.terminal_reason = "no validation improvement in " + std::to_string(plan.patience) +
                            " consecutive validations";
      stop = true;
    }
  };

  const HiddenState zero = HiddenState::zeros(config);
  HiddenState state = zero;
  try {
    for (std::size_t epoch = 0; epoch < plan.max_epochs && !stop; ++epoch) {
      for (const auto& chunk : train) {
        const HiddenState& h0 = chunk.carry_state ? state : zero;
        BpttResult br;
        if (plan.weight_noise_std > 0) {
          Rng noise(plan.seed, kNoiseStreamBase + tau);
          const ParamSet noisy = perturb_weights(params, noise, plan.weight_noise_std);
          br = bptt(noisy, config, chunk.inputs, chunk.targets, h0);
        } else {
          br = bptt(params, config, chunk.inputs, chunk.targets, h0);
        }
        const double norm = clip_gradients_inplace(br.grads, plan.clip_threshold);
        if (!std::isfinite(norm)) {
          throw NumericError("gradient norm is not finite at update " + std::to_string(tau));
        }
        sgd_update(params, br.grads, current_lr(tau));
        ++tau;
        train_nll_sum += br.total_nll;
        train_steps += chunk.inputs.size();
        state = std::move(br.final_state);

        if (plan.eval_every > 0 && tau % plan.eval_every == 0) {
          validate_now();
          if (stop) break;
        }
      }
      if (plan.eval_every == 0 && !stop) validate_now();
    }
    if (!stop) log.terminal_reason = "reached max_epochs";
  } catch (const NumericError& e) {
    log.terminal_reason = std::string("diverged: ") + e.what();
    result.diverged = true;
  }
  log.updates = tau;
  return result;
}

}  // namespace deeprnn
