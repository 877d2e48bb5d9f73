// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <string>

#include "deeprnn/data.hpp"
#include "deeprnn/model.hpp"

namespace deeprnn {

/// Test metrics, all derived from the natural-log total.
struct MetricReport {
  double total_nll_nats = 0.0;
  std::size_t steps = 0;
  double nll_per_step = 0.0;  // for piano rolls: summed over the 88 keys, averaged over frames
  double bpc = 0.0;           // nll_per_step / ln 2
  double perplexity = 0.0;    // exp(nll_per_step)
};

MetricReport make_report(double total_nll_nats, std::size_t steps);

/// Exact cross-entropy over every chunk, resetting the state to zero on
/// chunks without carry. Step losses are summed in sequence order, so the
/// result does not depend on how the sequences were chunked.
MetricReport evaluate(const ParamSet& params, const ModelConfig& config,
                      std::span<const SubseqChunk> chunks);

/// key=value lines, fixed key order.
std::string report_to_text(const MetricReport& r);
std::string report_to_json(const MetricReport& r);

/// Shortest decimal form that reads back to the same double.
std::string format_double(double v);

}  // namespace deeprnn
