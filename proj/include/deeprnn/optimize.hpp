// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "deeprnn/core_math.hpp"
#include "deeprnn/data.hpp"
#include "deeprnn/grad.hpp"
#include "deeprnn/model.hpp"

namespace deeprnn {

/// η_τ = 1 / (1 + max(0, τ − τ0) / β)
double lr_inverse(double tau, double tau0, double beta);

/// Halves the rate unless the validation cost fell by more than the threshold.
double lr_halving_step(double current_lr, double prev_val_nll, double new_val_nll,
                       double significance_threshold);

/// params + N(0, std²) on every weight and bias. std == 0 returns an exact copy.
ParamSet perturb_weights(const ParamSet& params, Rng& rng, double std);

/// θ_i ← θ_i − lr · multiplier_i · g_i
void sgd_update(ParamSet& params, const GradSet& grads, double lr);

enum class ScheduleKind { inverse, halving };

std::string_view to_string(ScheduleKind k);
ScheduleKind parse_schedule(std::string_view name);

struct TrainPlan {
  ScheduleKind schedule = ScheduleKind::inverse;
  /// Base rate: multiplies η_τ for the inverse schedule, starting rate for halving.
  double learning_rate = 0.1;
  /// Inverse schedule. Unset means: fix τ0 at the first validation increase.
  std::optional<std::size_t> tau0;
  double beta = 2330.0;
  /// Halving schedule.
  double significance_threshold = 0.0;

  double clip_threshold = 1.0;
  double weight_noise_std = 0.0;
  std::size_t max_epochs = 100;
  std::size_t patience = 10;
  std::uint64_t seed = 1;
  /// Updates between validations; 0 validates once per epoch.
  std::size_t eval_every = 0;

  void validate() const;
};

struct TrainRecord {
  std::size_t update = 0;
  double lr = 0.0;
  double train_nll = 0.0;  // per step, averaged since the previous record
  double valid_nll = 0.0;  // per step
};

struct TrainLog {
  std::vector<TrainRecord> records;
  std::string terminal_reason;
  std::optional<std::size_t> tau0;  // as fixed by the auto rule
  std::size_t updates = 0;
  std::size_t best_record = 0;
};

/// Header "update,lr,train_nll,valid_nll", shortest round-trip decimals.
std::string to_csv(const TrainLog& log);

struct TrainResult {
  ParamSet params;  // parameters at the best validation cost
  TrainLog log;
  bool diverged = false;
};

/// Pure SGD, one subsequence per update: perturb, bptt at the perturbed
/// point, clip, update the clean weights. The state carried between chunks
/// is the one produced by that update's forward pass.
TrainResult sgd_train(const ModelConfig& config, ParamSet params,
                      std::span<const SubseqChunk> train, std::span<const SubseqChunk> valid,
                      const TrainPlan& plan);

}  // namespace deeprnn
