// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <limits>

#include "deeprnn/data.hpp"
#include "deeprnn/errors.hpp"
#include "deeprnn/eval.hpp"
#include "deeprnn/grad.hpp"
#include "deeprnn/init.hpp"
#include "deeprnn/optimize.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace deeprnn;
using namespace testsupport;

TEST_CASE("inverse schedule") {
  CHECK(lr_inverse(0, 10, 2330) == 1.0);
  CHECK(lr_inverse(10, 10, 2330) == 1.0);
  CHECK(lr_inverse(10 + 2330, 10, 2330) == 0.5);
  CHECK(lr_inverse(100 + 1475, 100, 1475) == 0.5);
  double prev = 2.0;
  for (int tau = 0; tau < 5000; tau += 7) {
    const double e = lr_inverse(tau, 300, 100);
    CHECK(e <= prev);
    prev = e;
  }
}

TEST_CASE("halving schedule") {
  const double thr = 0.01;
  CHECK(lr_halving_step(0.1, 2.0, 2.0 - 2 * thr, thr) == 0.1);
  CHECK(lr_halving_step(0.1, 2.0, 2.1, thr) == 0.05);
  CHECK(lr_halving_step(0.1, 2.0, 2.0 - thr / 2, thr) == 0.05);
  double lr = 0.3;
  for (int k = 1; k <= 30; ++k) {
    lr = lr_halving_step(lr, 1.0, 1.0, thr);
    CHECK(lr == std::ldexp(0.3, -k));
  }
}

TEST_CASE("weight noise") {
  const ModelConfig c = toy(Architecture::rnn, 200, 300);
  Rng rng(1);
  const ParamSet p = random_params(c, rng);
  Rng z(2);
  const ParamSet same = perturb_weights(p, z, 0.0);
  for (std::size_t i = 0; i < p.size(); ++i) CHECK(same[i].value == p[i].value);

  Rng n1(3, 7), n2(3, 7);
  const ParamSet a = perturb_weights(p, n1, 0.075);
  const ParamSet b = perturb_weights(p, n2, 0.075);
  std::vector<double> diff;
  for (std::size_t i = 0; i < p.size(); ++i) {
    CHECK(a[i].value == b[i].value);
    auto x = a[i].value.span();
    auto y = p[i].value.span();
    for (std::size_t k = 0; k < x.size(); ++k) diff.push_back(x[k] - y[k]);
  }
  REQUIRE(diff.size() >= 100000);
  const double s = sample_std(diff);
  CHECK(s >= 0.074);
  CHECK(s <= 0.076);
}

TEST_CASE("sgd_update honours multipliers") {
  const ModelConfig c = toy(Architecture::rnn);
  ParamSet p = build(c).params;
  p.at("W").lr_multiplier = 0.1;
  GradSet g = GradSet::zeros_like(p);
  g.at("W").fill(2.0);
  g.at("U").fill(2.0);
  sgd_update(p, g, 0.5);
  CHECK(p.at("U").value(0, 0) == -1.0);
  CHECK(p.at("W").value(0, 0) == -0.1);
  CHECK_THROWS_AS(p.add(Param{"Z", Matrix(1, 1), false, 0.0}), ConfigError);
}

namespace {

std::vector<Frame> periodic(std::size_t n, std::size_t period) {
  std::vector<Frame> s;
  for (std::size_t t = 0; t < n; ++t) s.push_back({static_cast<int>(t % period)});
  return s;
}

}  // namespace

TEST_CASE("one step with no clipping and no noise is plain gradient descent") {
  const ModelConfig c = toy(Architecture::dt, 3, 4);
  Rng rng(6);
  const ParamSet p = random_params(c, rng);
  const std::vector<std::vector<Frame>> songs = {periodic(11, 3)};
  const auto chunks = iter_subsequences(songs, 10);
  TrainPlan plan;
  plan.schedule = ScheduleKind::halving;
  plan.learning_rate = 0.05;
  plan.clip_threshold = std::numeric_limits<double>::infinity();
  plan.max_epochs = 1;
  const TrainResult r = sgd_train(c, p, chunks, chunks, plan);
  const GradSet g = bptt(p, c, chunks[0].inputs, chunks[0].targets, HiddenState::zeros(c)).grads;
  ParamSet expect = p;
  sgd_update(expect, g, 0.05);
  for (std::size_t i = 0; i < p.size(); ++i) CHECK(r.params[i].value == expect[i].value);
}

TEST_CASE("training is deterministic and returns the best record") {
  const ModelConfig c = toy(Architecture::rnn, 4, 6);
  Rng rng(7);
  const ParamSet p = init_model(c, DatasetPreset::char_level, rng);
  const std::vector<std::vector<Frame>> songs = {periodic(400, 4)};
  const auto chunks = iter_subsequences(songs, 20);
  TrainPlan plan;
  plan.schedule = ScheduleKind::inverse;
  plan.beta = 50;
  plan.max_epochs = 3;
  plan.eval_every = 5;
  plan.weight_noise_std = 0.01;
  plan.seed = 9;
  const TrainResult a = sgd_train(c, p, chunks, chunks, plan);
  const TrainResult b = sgd_train(c, p, chunks, chunks, plan);
  CHECK(to_csv(a.log) == to_csv(b.log));
  REQUIRE(!a.log.records.empty());
  std::size_t best = 0;
  for (std::size_t i = 0; i < a.log.records.size(); ++i) {
    if (i > 0) CHECK(a.log.records[i].update > a.log.records[i - 1].update);
    if (a.log.records[i].valid_nll < a.log.records[best].valid_nll) best = i;
  }
  CHECK(a.log.best_record == best);
  const double v = evaluate(a.params, c, chunks).nll_per_step;
  CHECK(v == doctest::Approx(a.log.records[best].valid_nll).epsilon(1e-12));
  CHECK(to_csv(a.log).rfind("update,lr,train_nll,valid_nll\n", 0) == 0);
}

TEST_CASE("memorizes a period-8 sequence") {
  const ModelConfig c = toy(Architecture::rnn, 8, 16);
  Rng rng(1);
  const ParamSet p = init_model(c, DatasetPreset::char_level, rng);
  const std::vector<std::vector<Frame>> songs = {periodic(8 * 25 + 1, 8)};
  const auto chunks = iter_subsequences(songs, 25);
  TrainPlan plan;
  plan.schedule = ScheduleKind::inverse;
  plan.tau0 = 100000;
  plan.learning_rate = 0.5;
  plan.max_epochs = 250;
  plan.patience = 0;
  plan.clip_threshold = 5;
  const TrainResult r = sgd_train(c, p, chunks, chunks, plan);
  CHECK(r.log.updates <= 2000);
  CHECK(r.log.records[r.log.best_record].valid_nll < 0.01);
}

TEST_CASE("patience stops training") {
  // validation runs the training cycle backwards, so fitting one hurts the other
  const ModelConfig c = toy(Architecture::rnn, 4, 6);
  Rng rng(2);
  const ParamSet p = init_model(c, DatasetPreset::char_level, rng);
  std::vector<Frame> backwards;
  for (int t = 0; t < 200; ++t) backwards.push_back({3 - t % 4});
  const std::vector<std::vector<Frame>> train = {periodic(200, 4)}, valid = {backwards};
  const auto tc = iter_subsequences(train, 50);
  const auto vc = iter_subsequences(valid, 50);
  TrainPlan plan;
  plan.schedule = ScheduleKind::halving;
  plan.learning_rate = 0.5;
  plan.max_epochs = 200;
  plan.patience = 2;
  const TrainResult r = sgd_train(c, p, tc, vc, plan);
  CHECK(r.log.records.size() < 200);
  CHECK(r.log.terminal_reason.find("no validation improvement") != std::string::npos);
}

TEST_CASE("plan validation") {
  TrainPlan plan;
  plan.beta = 0;
  CHECK_THROWS_AS(plan.validate(), ConfigError);
  plan = TrainPlan{};
  plan.clip_threshold = 0;
  CHECK_THROWS_AS(plan.validate(), ConfigError);
  plan = TrainPlan{};
  plan.weight_noise_std = -1;
  CHECK_THROWS_AS(plan.validate(), ConfigError);
  CHECK_THROWS_AS(parse_schedule("cosine"), ConfigError);
}
