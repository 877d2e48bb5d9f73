// SPDX-License-Identifier: Apache-2.0
#include "deeprnn/eval.hpp"

#include <charconv>
#include <cmath>
#include <numbers>

#include "json.hpp"

namespace deeprnn {

MetricReport make_report(double total_nll_nats, std::size_t steps) {
  MetricReport r;
  r.total_nll_nats = total_nll_nats;
  r.steps = steps;
  r.nll_per_step = steps == 0 ? 0.0 : total_nll_nats / static_cast<double>(steps);
  r.bpc = r.nll_per_step / std::numbers::ln2;
  r.perplexity = std::exp(r.nll_per_step);
  return r;
}

MetricReport evaluate(const ParamSet& params, const ModelConfig& config,
                      std::span<const SubseqChunk> chunks) {
  double total = 0.0;
  std::size_t steps = 0;
  HiddenState state = HiddenState::zeros(config);
  const HiddenState zero = state;
  for (const auto& chunk : chunks) {
    const HiddenState& h0 = chunk.carry_state ? state : zero;
    auto fr = forward(params, config, chunk.inputs, chunk.targets, h0, false);
    for (double nll : fr.step_nll) total += nll;
    steps += fr.step_nll.size();
    state = std::move(fr.final_state);
  }
  return make_report(total, steps);
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string report_to_text(const MetricReport& r) {
  std::string out;
  out += "total_nll_nats=" + format_double(r.total_nll_nats) + "\n";
  out += "steps=" + std::to_string(r.steps) + "\n";
  out += "nll_per_step=" + format_double(r.nll_per_step) + "\n";
  out += "bpc=" + format_double(r.bpc) + "\n";
  out += "perplexity=" + format_double(r.perplexity) + "\n";
  return out;
}

std::string report_to_json(const MetricReport& r) {
  nlohmann::ordered_json j;
  j["total_nll_nats"] = r.total_nll_nats;
  j["steps"] = r.steps;
  j["nll_per_step"] = r.nll_per_step;
  j["bpc"] = r.bpc;
  j["perplexity"] = r.perplexity;
  return j.dump(2) + "\n";
}

}  // namespace deeprnn
