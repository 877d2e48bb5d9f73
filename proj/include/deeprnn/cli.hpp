// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "deeprnn/run_config.hpp"

namespace deeprnn::cli {

/// Exit statuses shared by every command.
inline constexpr int kOk = 0;
inline constexpr int kFailed = 1;      // gradcheck failure, training divergence
inline constexpr int kUsageError = 2;  // bad config, unreadable input, shape mismatch

inline constexpr std::size_t kGradcheckParameterCap = 5000;
inline constexpr double kGradcheckTolerance = 1e-4;

/// Writes model.drnn, train_log.csv and resolved.cfg into rc.out_dir.
int cmd_train(const RunConfig& rc, std::ostream& out, std::ostream& err);

struct EvalOptions {
  std::string checkpoint;
  std::string data;  // file to score; alternatively config + split
  std::optional<std::string> config;
  std::string split = "test";
  std::size_t chunk = 1000;
  bool json = false;
};

int cmd_eval(const EvalOptions& opts, std::ostream& out, std::ostream& err);

struct GradcheckOptions {
  bool all_architectures = false;
  /// Test hook: perturbs the analytic gradient of this parameter.
  std::string corrupt;
};

int cmd_gradcheck(const RunConfig& rc, const GradcheckOptions& opts, std::ostream& out,
                  std::ostream& err);

struct SampleOptions {
  std::string checkpoint;
  std::size_t length = 200;
  std::uint64_t seed = 1;
  double temperature = 1.0;  // 0 decodes the argmax
  std::string prime;         // defaults to the first vocabulary symbol
};

int cmd_sample(const SampleOptions& opts, std::ostream& out, std::ostream& err);

int cmd_params(const RunConfig& rc, std::ostream& out, std::ostream& err);

}  // namespace deeprnn::cli
