// SPDX-License-Identifier: Apache-2.0
#include "deeprnn/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>

#include "deeprnn/checkpoint.hpp"
#include "deeprnn/data.hpp"
#include "deeprnn/errors.hpp"
#include "deeprnn/eval.hpp"
#include "deeprnn/grad.hpp"
#include "deeprnn/init.hpp"
#include "deeprnn/optimize.hpp"

namespace deeprnn::cli {

namespace fs = std::filesystem;

namespace {

template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const NumericError& e) {
    err << "error: " << e.what() << "\n";
    return kFailed;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw IoError("error writing '" + path.string() + "'");
}

std::optional<TextLevel> text_level_of(DatasetPreset p) {
  switch (p) {
    case DatasetPreset::char_level: return TextLevel::char_level;
    case DatasetPreset::word_level: return TextLevel::word_level;
    case DatasetPreset::music: return std::nullopt;
  }
  return std::nullopt;
}

Vocabulary vocabulary_from(const std::vector<std::string>& symbols, TextLevel level) {
  Vocabulary v;
  for (const auto& s : symbols) v.add(s);
  if (level == TextLevel::word_level) v.set_unknown();
  return v;
}

std::vector<std::vector<Frame>> music_frames(const std::string& path) {
  std::vector<std::vector<Frame>> songs;
  for (const auto& song : load_pianoroll(path)) songs.push_back(to_frames(song));
  return songs;
}

void require_path(const std::string& path, const std::string& key) {
  if (path.empty()) throw ConfigError(key + " is not set");
}

}  // namespace

int cmd_train(const RunConfig& rc_in, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    RunConfig rc = rc_in;
    require_path(rc.train_path, "train_path");

    std::vector<std::vector<Frame>> train_songs, valid_songs;
    Checkpoint ckpt;
    ckpt.preset = std::string(to_string(rc.preset));
    if (auto level = text_level_of(rc.preset)) {
      TextSplitPaths paths{rc.train_path, std::nullopt, std::nullopt};
      if (!rc.valid_path.empty()) paths.valid = rc.valid_path;
      const TextCorpus corpus = load_text(paths, *level);
      rc.vocab_size = corpus.vocab.size();
      rc.model.input_dim = rc.model.output_dim = rc.vocab_size;
      train_songs.push_back(to_frames(corpus.train));
      if (corpus.valid) valid_songs.push_back(to_frames(*corpus.valid));
      ckpt.text_level = level;
      ckpt.vocabulary = corpus.vocab.symbols();
    } else {
      train_songs = music_frames(rc.train_path);
      if (!rc.valid_path.empty()) valid_songs = music_frames(rc.valid_path);
    }
    rc.model.validate();

    Rng rng(rc.plan.seed);
    ParamSet params = init_model(rc.model, rc.preset, rng);
    if (!rc.parent.empty()) {
      const Checkpoint parent = load_checkpoint(rc.parent);
      check_warm_start_parent(rc.model.architecture, parent.config.architecture);
      if (parent.vocabulary != ckpt.vocabulary) {
        throw ConfigError("parent checkpoint '" + rc.parent + "' was trained on another vocabulary");
      }
      params = warm_start(rc.model, params, parent.params);
    }

    fs::create_directories(rc.out_dir);
    const fs::path dir(rc.out_dir);
    write_text(dir / "resolved.cfg", rc.to_text());

    const auto train_chunks = iter_subsequences(train_songs, rc.seq_len);
    const auto valid_chunks = iter_subsequences(valid_songs, rc.seq_len);
    TrainResult result = sgd_train(rc.model, std::move(params), train_chunks, valid_chunks, rc.plan);

    ckpt.config = rc.model;
    ckpt.params = std::move(result.params);
    save_checkpoint(dir / "model.drnn", ckpt);
    write_text(dir / "train_log.csv", to_csv(result.log));

    out << "updates=" << result.log.updates << "\n";
    if (!result.log.records.empty()) {
      const auto& best = result.log.records[result.log.best_record];
      out << "best_update=" << best.update << "\n"
          << "best_valid_nll=" << format_double(best.valid_nll) << "\n";
    }
    out << "terminal_reason=" << result.log.terminal_reason << "\n";
    if (result.diverged) {
      err << "error: training " << result.log.terminal_reason << "\n";
      return kFailed;
    }
    return kOk;
  });
}

int cmd_eval(const EvalOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Checkpoint ckpt = load_checkpoint(opts.checkpoint);
    std::string path = opts.data;
    if (path.empty()) {
      if (!opts.config) throw ConfigError("eval needs --data or --config with --split");
      const RunConfig rc = load_run_config(*opts.config);
      if (opts.split == "train") path = rc.train_path;
      else if (opts.split == "valid") path = rc.valid_path;
      else if (opts.split == "test") path = rc.test_path;
      else throw ConfigError("unknown split '" + opts.split + "' (expected train, valid or test)");
      require_path(path, opts.split + "_path");
    }
    if (opts.chunk == 0) throw ConfigError("chunk length must be >= 1");

    std::vector<std::vector<Frame>> songs;
    if (ckpt.text_level) {
      const Vocabulary vocab = vocabulary_from(ckpt.vocabulary, *ckpt.text_level);
      if (vocab.size() != ckpt.config.input_dim) {
        throw ConfigError("checkpoint vocabulary has " + std::to_string(vocab.size()) +
                          " symbols but the model reads " + std::to_string(ckpt.config.input_dim));
      }
      songs.push_back(to_frames(encode_text(read_file(path), vocab, *ckpt.text_level)));
    } else {
      if (ckpt.config.input_dim != kPianoKeys || ckpt.config.output_dim != kPianoKeys) {
        throw ConfigError("checkpoint is not an 88-key piano-roll model");
      }
      songs = music_frames(path);
    }
    const auto chunks = iter_subsequences(songs, opts.chunk);
    const MetricReport report = evaluate(ckpt.params, ckpt.config, chunks);
    out << (opts.json ? report_to_json(report) : report_to_text(report));
    return kOk;
  });
}

namespace {

ModelConfig toy_config(const ModelConfig& base, Architecture arch) {
  ModelConfig c = base;
  c.architecture = arch;
  c.transition_inter_dim = has_deep_transition(arch)
                               ? (base.transition_inter_dim > 0 ? base.transition_inter_dim
                                                                : base.hidden_dim)
                               : 0;
  c.output_inter_dim = has_deep_output(arch)
                           ? (base.output_inter_dim > 0 ? base.output_inter_dim : base.hidden_dim)
                           : 0;
  c.levels = arch == Architecture::srnn ? std::max<std::size_t>(2, base.levels) : 1;
  c.validate();
  return c;
}

std::vector<Frame> random_sequence(const ModelConfig& c, std::size_t length, Rng& rng) {
  std::vector<Frame> seq(length);
  for (auto& f : seq) {
    if (c.output_head == OutputHead::softmax) {
      f.push_back(static_cast<int>(rng.uniform_below(c.input_dim)));
    } else {
      for (std::size_t k = 0; k < c.input_dim; ++k)
        if (rng.uniform() < 0.3) f.push_back(static_cast<int>(k));
    }
  }
  return seq;
}

}  // namespace

int cmd_gradcheck(const RunConfig& rc, const GradcheckOptions& opts, std::ostream& out,
                  std::ostream& err) {
  return guarded(err, [&] {
    std::vector<Architecture> archs;
    if (opts.all_architectures) {
      archs = {Architecture::rnn, Architecture::dt,   Architecture::dts,
               Architecture::dot, Architecture::dots, Architecture::srnn};
    } else {
      archs = {rc.model.architecture};
    }

    std::vector<ModelConfig> configs;
    for (auto a : archs) {
      configs.push_back(toy_config(rc.model, a));
      const std::size_t count = build(configs.back()).parameter_count;
      if (count > kGradcheckParameterCap) {
        err << "error: " << to_string(a) << " has " << count << " parameters; gradcheck is capped at "
            << kGradcheckParameterCap << " (finite differences need two forward passes per parameter)\n";
        return kUsageError;
      }
    }

    bool all_pass = true;
    bool corrupted = false;
    out << std::left;
    for (std::size_t i = 0; i < configs.size(); ++i) {
      const ModelConfig& c = configs[i];
      Rng rng(rc.plan.seed, i + 1);
      ParamSet params = build(c).params;
      for (auto& p : params) p.value = gaussian_matrix(rng, p.value.rows(), p.value.cols(), 0.5);
      const auto seq = random_sequence(c, rc.gradcheck_length + 1, rng);
      const std::span<const Frame> frames(seq);
      const auto inputs = frames.first(rc.gradcheck_length);
      const auto targets = frames.subspan(1);
      const HiddenState h0 = HiddenState::zeros(c);

      GradSet analytic = bptt(params, c, inputs, targets, h0).grads;
      if (!opts.corrupt.empty()) {
        for (std::size_t k = 0; k < analytic.size(); ++k) {
          if (analytic.names[k] != opts.corrupt) continue;
          double& g = analytic.values[k].data()[0];
          g = g * 1.01 + 1e-3;
          corrupted = true;
        }
      }
      const GradSet numeric = finite_difference_grad(params, c, inputs, targets, h0, rc.gradcheck_eps);
      const GradCheckReport report = compare_gradients(analytic, numeric);
      for (const auto& e : report.entries) {
        const bool ok = e.max_relative_error < kGradcheckTolerance;
        out << std::setw(6) << to_string(c.architecture) << " " << std::setw(8) << e.name << " "
            << std::scientific << std::setprecision(3) << e.max_relative_error << " "
            << (ok ? "ok" : "FAIL") << "\n";
      }
      const bool pass = report.passed(kGradcheckTolerance);
      out << to_string(c.architecture) << ": " << (pass ? "PASS" : "FAIL")
          << " max_relative_error=" << std::scientific << std::setprecision(3)
          << report.max_relative_error;
      if (!pass) out << " worst=" << report.worst_name;
      out << "\n" << std::defaultfloat;
      all_pass = all_pass && pass;
    }
    if (!opts.corrupt.empty() && !corrupted) {
      err << "warning: no parameter named '" << opts.corrupt << "' to corrupt\n";
    }
    return all_pass ? kOk : kFailed;
  });
}

int cmd_sample(const SampleOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Checkpoint ckpt = load_checkpoint(opts.checkpoint);
    if (ckpt.config.output_head != OutputHead::softmax || !ckpt.text_level) {
      throw ConfigError("sampling needs a softmax-head text model; '" + opts.checkpoint +
                        "' predicts piano-roll frames");
    }
    if (opts.temperature < 0 || !std::isfinite(opts.temperature)) {
      throw ConfigError("temperature must be finite and >= 0");
    }
    const TextLevel level = *ckpt.text_level;
    const Vocabulary vocab = vocabulary_from(ckpt.vocabulary, level);
    if (vocab.size() != ckpt.config.output_dim) {
      throw ConfigError("checkpoint vocabulary does not match the model's output size");
    }
    std::vector<int> prime = encode_text(opts.prime, vocab, level).indices;
    if (prime.empty()) prime.push_back(0);

    const ModelConfig& c = ckpt.config;
    HiddenState state = HiddenState::zeros(c);
    for (int s : prime) state = step_transition(ckpt.params, c, Frame{s}, state);

    Rng rng(opts.seed);
    SymbolSequence generated;
    for (std::size_t n = 0; n < opts.length; ++n) {
      const Vector p = step_output(ckpt.params, c, state);
      std::size_t pick = 0;
      if (opts.temperature == 0.0) {
        for (std::size_t k = 1; k < p.dim(); ++k)
          if (p[k] > p[pick]) pick = k;
      } else {
        Vector logits(p.dim());
        for (std::size_t k = 0; k < p.dim(); ++k) logits[k] = std::log(p[k]) / opts.temperature;
        const Vector q = softmax(logits);
        double u = rng.uniform();
        pick = q.dim() - 1;
        for (std::size_t k = 0; k < q.dim(); ++k) {
          if (u < q[k]) {
            pick = k;
            break;
          }
          u -= q[k];
        }
      }
      generated.indices.push_back(static_cast<int>(pick));
      state = step_transition(ckpt.params, c, Frame{static_cast<int>(pick)}, state);
    }
    out << decode_text(generated, vocab, level) << "\n";
    return kOk;
  });
}

int cmd_params(const RunConfig& rc, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const BuildResult b = build(rc.model);
    out << std::left;
    for (const auto& p : b.params) {
      const std::string shape =
          p.is_bias ? std::to_string(p.value.cols()) : shape_string(p.value);
      out << std::setw(8) << p.name << " " << std::setw(12) << shape << " " << p.value.size()
          << "\n";
    }
    out << "total " << b.parameter_count << "\n";
    return kOk;
  });
}

}  // namespace deeprnn::cli
