// SPDX-License-Identifier: Apache-2.0
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "deeprnn/checkpoint.hpp"
#include "deeprnn/cli.hpp"
#include "deeprnn/data.hpp"
#include "doctest.h"
#include "json.hpp"
#include "support.hpp"

using namespace deeprnn;
namespace fs = std::filesystem;

namespace {

struct Scratch {
  fs::path dir;
  explicit Scratch(const std::string& name) : dir(fs::temp_directory_path() / name) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  fs::path write(const std::string& name, const std::string& text) const {
    std::ofstream(dir / name, std::ios::binary) << text;
    return dir / name;
  }
};

std::string slurp(const fs::path& p) { return read_file(p); }

std::string kjv_prefix(const char* split, std::size_t n) {
  return read_file(std::string(DEEPRNN_TEST_DATA) + "/kjv_" + split + ".txt").substr(0, n);
}

RunConfig char_config(const Scratch& s, const std::string& arch, const std::string& out) {
  const auto train = s.write("train.txt", kjv_prefix("train", 10000));
  const auto valid = s.write("valid.txt", kjv_prefix("valid", 2000));
  return resolve_run_config({{"preset", "char"},
                             {"architecture", arch},
                             {"hidden_dim", "12"},
                             {"seq_len", "50"},
                             {"max_epochs", "2"},
                             {"train_path", train.string()},
                             {"valid_path", valid.string()},
                             {"out_dir", (s.dir / out).string()}});
}

}  // namespace

TEST_CASE("train writes reproducible outputs") {
  Scratch s("deeprnn_cli_train");
  std::ostringstream out, err;
  const RunConfig rc = char_config(s, "rnn", "a");
  REQUIRE(cli::cmd_train(rc, out, err) == cli::kOk);
  RunConfig again = rc;
  again.out_dir = (s.dir / "b").string();
  REQUIRE(cli::cmd_train(again, out, err) == cli::kOk);
  for (const char* f : {"model.drnn", "train_log.csv"}) {
    CHECK(slurp(s.dir / "a" / f) == slurp(s.dir / "b" / f));
  }
  const RunConfig echoed = load_run_config(s.dir / "a" / "resolved.cfg");
  CHECK(echoed.model.hidden_dim == 12);
  CHECK(echoed.vocab_size == load_checkpoint(s.dir / "a" / "model.drnn").vocabulary.size());
  CHECK(slurp(s.dir / "a" / "train_log.csv").rfind("update,lr,train_nll,valid_nll\n", 0) == 0);
}

TEST_CASE("missing dataset is a usage error naming the path") {
  Scratch s("deeprnn_cli_missing");
  RunConfig rc = char_config(s, "rnn", "x");
  rc.train_path = (s.dir / "nope.txt").string();
  std::ostringstream out, err;
  CHECK(cli::cmd_train(rc, out, err) == cli::kUsageError);
  CHECK(err.str().find("nope.txt") != std::string::npos);
}

TEST_CASE("warm start through the CLI") {
  Scratch s("deeprnn_cli_warm");
  std::ostringstream out, err;
  RunConfig parent = char_config(s, "dts", "parent");
  parent.plan.max_epochs = 1;
  REQUIRE(cli::cmd_train(parent, out, err) == cli::kOk);
  const Checkpoint pc = load_checkpoint(s.dir / "parent" / "model.drnn");

  RunConfig child = char_config(s, "dots", "child");
  child.plan.max_epochs = 1;
  child.parent = (s.dir / "parent" / "model.drnn").string();
  REQUIRE(cli::cmd_train(child, out, err) == cli::kOk);
  const Checkpoint cc = load_checkpoint(s.dir / "child" / "model.drnn");
  for (const auto& p : pc.params) {
    if (p.name == "V" || p.name == "b_o") {
      CHECK(cc.params.find(p.name) == nullptr);
      continue;
    }
    CAPTURE(p.name);
    const Param& q = cc.params.at(p.name);
    CHECK(q.lr_multiplier == 0.1);
  }
  CHECK(cc.params.at("V1").lr_multiplier == 1.0);

  RunConfig wrong = char_config(s, "dots", "wrong");
  wrong.parent = (s.dir / "child" / "model.drnn").string();
  CHECK(cli::cmd_train(wrong, out, err) == cli::kUsageError);
}

TEST_CASE("eval on a uniform model") {
  Scratch s("deeprnn_cli_eval");
  Checkpoint ck;
  ck.config = testsupport::toy(Architecture::rnn, 4, 3);
  ck.params = build(ck.config).params;
  ck.preset = "char";
  ck.text_level = TextLevel::char_level;
  ck.vocabulary = {"a", "b", "c", "d"};
  save_checkpoint(s.dir / "m.drnn", ck);
  std::string text;
  for (int i = 0; i < 257; ++i) text += "abcd"[i % 4];
  const auto data = s.write("d.txt", text);

  cli::EvalOptions o;
  o.checkpoint = (s.dir / "m.drnn").string();
  o.data = data.string();
  o.json = true;
  std::ostringstream out1, out2, err;
  REQUIRE(cli::cmd_eval(o, out1, err) == cli::kOk);
  const auto j = nlohmann::json::parse(out1.str());
  CHECK(j.at("bpc").get<double>() == doctest::Approx(2.0).epsilon(1e-13));
  REQUIRE(cli::cmd_eval(o, out2, err) == cli::kOk);
  CHECK(out1.str() == out2.str());

  o.json = false;
  o.chunk = 10;
  std::ostringstream a, b;
  REQUIRE(cli::cmd_eval(o, a, err) == cli::kOk);
  o.chunk = 1000;
  REQUIRE(cli::cmd_eval(o, b, err) == cli::kOk);
  CHECK(a.str() == b.str());

  o.data = s.write("bad.txt", "abcx").string();
  std::ostringstream c, e2;
  CHECK(cli::cmd_eval(o, c, e2) == cli::kUsageError);
}

TEST_CASE("gradcheck passes, detects corruption and refuses large models") {
  RunConfig rc = resolve_run_config({{"preset", "char"}, {"architecture", "dots"},
                                     {"hidden_dim", "4"}, {"vocab_size", "5"}});
  std::ostringstream out, err;
  CHECK(cli::cmd_gradcheck(rc, {true, ""}, out, err) == cli::kOk);
  for (const char* a : {"rnn", "dt", "dts", "dot", "dots", "srnn"}) {
    CHECK(out.str().find(std::string(a) + ": PASS") != std::string::npos);
  }
  std::ostringstream bad;
  CHECK(cli::cmd_gradcheck(rc, {false, "W1"}, bad, err) == cli::kFailed);
  CHECK(bad.str().find("FAIL") != std::string::npos);
  CHECK(bad.str().find("worst=W1") != std::string::npos);

  const RunConfig big = resolve_run_config({{"preset", "char"}, {"architecture", "rnn"}});
  std::ostringstream o2, e2;
  CHECK(cli::cmd_gradcheck(big, {}, o2, e2) == cli::kUsageError);
}

TEST_CASE("sampling an overfit period-3 model") {
  Scratch s("deeprnn_cli_sample");
  std::string text;
  for (int i = 0; i < 3000; ++i) text += "abc"[i % 3];
  const auto train = s.write("abc.txt", text);
  const RunConfig rc = resolve_run_config({{"preset", "char"},
                                           {"architecture", "rnn"},
                                           {"hidden_dim", "8"},
                                           {"seq_len", "30"},
                                           {"max_epochs", "3"},
                                           {"learning_rate", "0.5"},
                                           {"train_path", train.string()},
                                           {"out_dir", (s.dir / "run").string()}});
  std::ostringstream out, err;
  REQUIRE(cli::cmd_train(rc, out, err) == cli::kOk);

  cli::SampleOptions o;
  o.checkpoint = (s.dir / "run" / "model.drnn").string();
  o.length = 300;
  o.prime = "a";
  o.seed = 4;
  std::ostringstream s1, s2;
  REQUIRE(cli::cmd_sample(o, s1, err) == cli::kOk);
  REQUIRE(cli::cmd_sample(o, s2, err) == cli::kOk);
  CHECK(s1.str() == s2.str());
  const std::string gen = s1.str();
  std::size_t right = 0;
  char prev = 'a';
  for (std::size_t i = 0; i < o.length; ++i) {
    right += gen[i] == "abc"[(prev - 'a' + 1) % 3];
    prev = gen[i];
  }
  CHECK(static_cast<double>(right) / static_cast<double>(o.length) > 0.99);

  o.temperature = 0;
  std::ostringstream g1;
  REQUIRE(cli::cmd_sample(o, g1, err) == cli::kOk);
  CHECK(g1.str().substr(0, 6) == "bcabca");

  Checkpoint music;
  music.config = testsupport::toy(Architecture::rnn, 88, 3, OutputHead::bernoulli);
  music.params = build(music.config).params;
  save_checkpoint(s.dir / "music.drnn", music);
  o.checkpoint = (s.dir / "music.drnn").string();
  std::ostringstream m, me;
  CHECK(cli::cmd_sample(o, m, me) == cli::kUsageError);
}

TEST_CASE("params table") {
  const RunConfig rc = resolve_run_config({{"preset", "music"}, {"architecture", "rnn"}});
  std::ostringstream out, err;
  REQUIRE(cli::cmd_params(rc, out, err) == cli::kOk);
  CHECK(out.str().find("total 466288") != std::string::npos);
  CHECK(out.str().find("88x600") != std::string::npos);
}

TEST_CASE("binary exit codes") {
  Scratch s("deeprnn_cli_binary");
  const auto cfg = s.write("toy.cfg", "preset=char\narchitecture=rnn\nhidden_dim=3\nvocab_size=4\n");
  const std::string bin = DRNN_BINARY;
  auto run = [&](const std::string& args) {
    const int st = std::system((bin + " " + args + " > /dev/null 2>&1").c_str());
    return WEXITSTATUS(st);
  };
  CHECK(run("--config " + cfg.string() + " params") == 0);
  CHECK(run("--config " + cfg.string() + " gradcheck --all") == 0);
  CHECK(run("--config " + cfg.string() + " train") == 2);
  CHECK(run("--config " + (s.dir / "none.cfg").string() + " params") == 2);
  CHECK(run("frobnicate") == 2);
  const auto bad = s.write("bad.cfg", "hidden=3\n");
  CHECK(run("--config " + bad.string() + " params") == 2);
}
