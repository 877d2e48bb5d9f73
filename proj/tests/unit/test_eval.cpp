// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <numbers>

#include "deeprnn/data.hpp"
#include "deeprnn/eval.hpp"
#include "doctest.h"
#include "json.hpp"
#include "support.hpp"

using namespace deeprnn;
using namespace testsupport;

TEST_CASE("uniform predictions give closed-form metrics") {
  const ModelConfig c = toy(Architecture::rnn, 4, 3);
  std::vector<Frame> seq;
  for (int t = 0; t < 37; ++t) seq.push_back({t % 4});
  const std::vector<std::vector<Frame>> songs = {seq};
  const MetricReport r = evaluate(build(c).params, c, iter_subsequences(songs, 10));
  CHECK(r.steps == 36);
  CHECK(r.bpc == doctest::Approx(2.0).epsilon(1e-15));
  const std::vector<std::vector<Frame>> one = {{{0}, {3}}};
  CHECK(evaluate(build(c).params, c, iter_subsequences(one, 10)).bpc == 2.0);
  CHECK(std::abs(r.perplexity - 4.0) < 1e-9);

  for (std::size_t v : {50, 1000}) {
    const ModelConfig big = toy(Architecture::dts, v, 3);
    const std::vector<std::vector<Frame>> s = {{{0}, {1}, {2}}};
    const MetricReport rv = evaluate(build(big).params, big, iter_subsequences(s, 10));
    CHECK(std::abs(rv.perplexity - static_cast<double>(v)) < 1e-9 * static_cast<double>(v));
  }

  const ModelConfig m = toy(Architecture::rnn, 88, 3, OutputHead::bernoulli);
  Rng rng(3);
  const std::vector<std::vector<Frame>> music = {random_frames(m, 12, rng)};
  const MetricReport rm = evaluate(build(m).params, m, iter_subsequences(music, 5));
  CHECK(rm.nll_per_step == doctest::Approx(88 * std::numbers::ln2).epsilon(1e-14));
}

TEST_CASE("report identities") {
  const MetricReport r = make_report(123.456, 100);
  CHECK(r.nll_per_step == 1.23456);
  CHECK(r.bpc == r.nll_per_step / std::numbers::ln2);
  CHECK(r.perplexity == std::exp(r.nll_per_step));
  const MetricReport empty = make_report(0.0, 0);
  CHECK(empty.nll_per_step == 0.0);
}

TEST_CASE("report formats") {
  const MetricReport r = make_report(10.0, 4);
  const std::string text = report_to_text(r);
  CHECK(text.find("total_nll_nats=10\n") != std::string::npos);
  CHECK(text.find("steps=4\n") != std::string::npos);
  const auto j = nlohmann::json::parse(report_to_json(r));
  CHECK(j.at("nll_per_step").get<double>() == 2.5);
  CHECK(j.at("steps").get<int>() == 4);
  CHECK(format_double(0.1) == "0.1");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}
