// SPDX-License-Identifier: Apache-2.0
#include "deeprnn/run_config.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "deeprnn/data.hpp"
#include "deeprnn/errors.hpp"
#include "deeprnn/eval.hpp"

namespace deeprnn {

const std::vector<std::string>& run_config_keys() {
  static const std::vector<std::string> keys = {
      "preset",          "architecture",     "hidden_dim",
      "transition_inter_dim", "output_inter_dim", "levels",
      "hidden_nl",       "transition_inter_nl", "output_inter_nl",
      "output_head",     "vocab_size",       "train_path",
      "valid_path",      "test_path",        "parent",
      "seq_len",         "schedule",         "learning_rate",
      "tau0",            "beta",             "significance_threshold",
      "clip_threshold",  "weight_noise_std", "max_epochs",
      "patience",        "eval_every",       "seed",
      "out_dir",         "gradcheck_length", "gradcheck_eps",
  };
  return keys;
}

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::size_t to_count(std::string_view key, std::string_view v) {
  std::size_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError("key '" + std::string(key) + "': '" + std::string(v) +
                      "' is not a non-negative integer");
  }
  return out;
}

double to_real(std::string_view key, std::string_view v) {
  double out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError("key '" + std::string(key) + "': '" + std::string(v) + "' is not a number");
  }
  return out;
}

/// Table sizes for each preset and architecture family.
void table_sizes(DatasetPreset preset, Architecture a, ModelConfig& m) {
  const bool word = preset == DatasetPreset::word_level;
  const bool chr = preset == DatasetPreset::char_level;
  switch (a) {
    case Architecture::rnn:
      m.hidden_dim = word ? 200 : 600;
      break;
    case Architecture::dt:
    case Architecture::dts:
      m.hidden_dim = m.transition_inter_dim = word ? 200 : 400;
      break;
    case Architecture::dot:
    case Architecture::dots:
      m.hidden_dim = m.transition_inter_dim = word ? 200 : 400;
      m.output_inter_dim = word ? 200 : (chr ? 600 : 400);
      break;
    case Architecture::srnn:
      m.hidden_dim = 400;
      m.levels = 2;
      break;
  }
}

}  // namespace

RawConfig parse_key_values(std::string_view text) {
  RawConfig raw;
  const auto& known = run_config_keys();
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view body = line;
    if (auto hash = body.find('#'); hash != std::string_view::npos) body = body.substr(0, hash);
    body = trim(body);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key=value");
    }
    const std::string key(trim(body.substr(0, eq)));
    const std::string value(trim(body.substr(eq + 1)));
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    if (!raw.emplace(key, value).second) {
      throw ConfigError("line " + std::to_string(line_no) + ": key '" + key + "' repeated");
    }
  }
  return raw;
}

RunConfig resolve_run_config(const RawConfig& raw) {
  const auto& known = run_config_keys();
  for (const auto& [k, v] : raw) {
    if (std::find(known.begin(), known.end(), k) == known.end()) {
      throw ConfigError("unknown key '" + k + "'");
    }
  }
  auto get = [&](std::string_view key) -> const std::string* {
    auto it = raw.find(key);
    return it == raw.end() ? nullptr : &it->second;
  };

  RunConfig rc;
  if (auto v = get("preset")) rc.preset = parse_preset(*v);
  ModelConfig& m = rc.model;
  if (auto v = get("architecture")) m.architecture = parse_architecture(*v);
  table_sizes(rc.preset, m.architecture, m);

  // preset defaults
  switch (rc.preset) {
    case DatasetPreset::music:
      m.output_head = OutputHead::bernoulli;
      rc.plan.schedule = ScheduleKind::inverse;
      rc.plan.beta = 2330.0;
      rc.plan.weight_noise_std = 0.075;
      break;
    case DatasetPreset::char_level:
      m.output_head = OutputHead::softmax;
      m.output_inter_nl = Nonlinearity::rectifier;
      rc.vocab_size = 50;
      rc.plan.schedule = ScheduleKind::halving;
      rc.plan.weight_noise_std = 0.0;
      break;
    case DatasetPreset::word_level:
      m.output_head = OutputHead::softmax;
      rc.vocab_size = 10000;
      rc.plan.schedule = ScheduleKind::halving;
      rc.plan.weight_noise_std = 0.075;
      break;
  }
  rc.plan.learning_rate = 0.1;
  rc.plan.significance_threshold = 0.001;
  rc.plan.clip_threshold = 1.0;

  // explicit values
  if (auto v = get("hidden_dim")) {
    // an explicit hidden size carries over to intermediate layers left unset
    m.hidden_dim = to_count("hidden_dim", *v);
    if (m.transition_inter_dim > 0) m.transition_inter_dim = m.hidden_dim;
    if (m.output_inter_dim > 0) m.output_inter_dim = m.hidden_dim;
  }
  if (auto v = get("transition_inter_dim")) m.transition_inter_dim = to_count("transition_inter_dim", *v);
  if (auto v = get("output_inter_dim")) m.output_inter_dim = to_count("output_inter_dim", *v);
  if (auto v = get("levels")) m.levels = to_count("levels", *v);
  if (auto v = get("hidden_nl")) m.hidden_nl = parse_nonlinearity(*v);
  if (auto v = get("transition_inter_nl")) m.transition_inter_nl = parse_nonlinearity(*v);
  if (auto v = get("output_inter_nl")) m.output_inter_nl = parse_nonlinearity(*v);
  if (auto v = get("output_head")) m.output_head = parse_output_head(*v);
  if (auto v = get("vocab_size")) rc.vocab_size = to_count("vocab_size", *v);
  if (auto v = get("train_path")) rc.train_path = *v;
  if (auto v = get("valid_path")) rc.valid_path = *v;
  if (auto v = get("test_path")) rc.test_path = *v;
  if (auto v = get("parent")) rc.parent = *v;
  if (auto v = get("seq_len")) rc.seq_len = to_count("seq_len", *v);
  if (auto v = get("schedule")) rc.plan.schedule = parse_schedule(*v);
  if (auto v = get("learning_rate")) rc.plan.learning_rate = to_real("learning_rate", *v);
  if (auto v = get("tau0")) {
    if (*v == "auto") rc.plan.tau0.reset();
    else rc.plan.tau0 = to_count("tau0", *v);
  }
  if (auto v = get("beta")) rc.plan.beta = to_real("beta", *v);
  if (auto v = get("significance_threshold")) {
    rc.plan.significance_threshold = to_real("significance_threshold", *v);
  }
  if (auto v = get("clip_threshold")) rc.plan.clip_threshold = to_real("clip_threshold", *v);
  if (auto v = get("weight_noise_std")) rc.plan.weight_noise_std = to_real("weight_noise_std", *v);
  if (auto v = get("max_epochs")) rc.plan.max_epochs = to_count("max_epochs", *v);
  if (auto v = get("patience")) rc.plan.patience = to_count("patience", *v);
  if (auto v = get("eval_every")) rc.plan.eval_every = to_count("eval_every", *v);
  if (auto v = get("seed")) rc.plan.seed = to_count("seed", *v);
  if (auto v = get("out_dir")) rc.out_dir = *v;
  if (auto v = get("gradcheck_length")) rc.gradcheck_length = to_count("gradcheck_length", *v);
  if (auto v = get("gradcheck_eps")) rc.gradcheck_eps = to_real("gradcheck_eps", *v);

  if (rc.preset == DatasetPreset::music) {
    m.input_dim = m.output_dim = kPianoKeys;
  } else {
    if (rc.vocab_size == 0) throw ConfigError("vocab_size must be positive");
    m.input_dim = m.output_dim = rc.vocab_size;
  }
  if (rc.seq_len == 0) throw ConfigError("seq_len must be >= 1");
  if (rc.gradcheck_length == 0) throw ConfigError("gradcheck_length must be >= 1");
  if (!(rc.gradcheck_eps > 0)) throw ConfigError("gradcheck_eps must be > 0");
  m.validate();
  rc.plan.validate();
  return rc;
}

std::string RunConfig::to_text() const {
  std::ostringstream s;
  s << "preset=" << to_string(preset) << "\n"
    << "architecture=" << to_string(model.architecture) << "\n"
    << "hidden_dim=" << model.hidden_dim << "\n"
    << "transition_inter_dim=" << model.transition_inter_dim << "\n"
    << "output_inter_dim=" << model.output_inter_dim << "\n"
    << "levels=" << model.levels << "\n"
    << "hidden_nl=" << to_string(model.hidden_nl) << "\n"
    << "transition_inter_nl=" << to_string(model.transition_inter_nl) << "\n"
    << "output_inter_nl=" << to_string(model.output_inter_nl) << "\n"
    << "output_head=" << to_string(model.output_head) << "\n"
    << "vocab_size=" << vocab_size << "\n"
    << "train_path=" << train_path << "\n"
    << "valid_path=" << valid_path << "\n"
    << "test_path=" << test_path << "\n"
    << "parent=" << parent << "\n"
    << "seq_len=" << seq_len << "\n"
    << "schedule=" << to_string(plan.schedule) << "\n"
    << "learning_rate=" << format_double(plan.learning_rate) << "\n"
    << "tau0=" << (plan.tau0 ? std::to_string(*plan.tau0) : "auto") << "\n"
    << "beta=" << format_double(plan.beta) << "\n"
    << "significance_threshold=" << format_double(plan.significance_threshold) << "\n"
    << "clip_threshold=" << format_double(plan.clip_threshold) << "\n"
    << "weight_noise_std=" << format_double(plan.weight_noise_std) << "\n"
    << "max_epochs=" << plan.max_epochs << "\n"
    << "patience=" << plan.patience << "\n"
    << "eval_every=" << plan.eval_every << "\n"
    << "seed=" << plan.seed << "\n"
    << "out_dir=" << out_dir << "\n"
    << "gradcheck_length=" << gradcheck_length << "\n"
    << "gradcheck_eps=" << format_double(gradcheck_eps) << "\n";
  return s.str();
}

RunConfig load_run_config(const std::filesystem::path& path, const RawConfig& overrides) {
  RawConfig raw;
  try {
    raw = parse_key_values(read_file(path));
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  for (const auto& [k, v] : overrides) raw[k] = v;
  return resolve_run_config(raw);
}

}  // namespace deeprnn
