// SPDX-License-Identifier: Apache-2.0
#include "deeprnn/data.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

#include "deeprnn/errors.hpp"

namespace deeprnn {

std::string_view to_string(TextLevel level) {
  return level == TextLevel::char_level ? "char" : "word";
}

TextLevel parse_text_level(std::string_view name) {
  if (name == "char") return TextLevel::char_level;
  if (name == "word") return TextLevel::word_level;
  throw ConfigError("unknown text level '" + std::string(name) + "'");
}

int Vocabulary::add(std::string_view symbol) {
  if (auto found = find(symbol)) return *found;
  const int idx = static_cast<int>(symbols_.size());
  symbols_.emplace_back(symbol);
  index_.emplace(symbols_.back(), idx);
  return idx;
}

std::optional<int> Vocabulary::find(std::string_view symbol) const {
  auto it = index_.find(std::string(symbol));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

int Vocabulary::encode(std::string_view symbol) const {
  if (auto found = find(symbol)) return *found;
  if (unknown_) return *unknown_;
  std::string shown(symbol);
  if (shown.size() == 1 && static_cast<unsigned char>(shown[0]) < 0x20) {
    shown = "\\x" + std::to_string(static_cast<unsigned char>(shown[0]));
  }
  throw ConfigError("symbol '" + shown + "' is not in the vocabulary");
}

const std::string& Vocabulary::decode(int index) const {
  if (index < 0 || static_cast<std::size_t>(index) >= symbols_.size()) {
    throw ConfigError("symbol index " + std::to_string(index) + " outside vocabulary of size " +
                      std::to_string(symbols_.size()));
  }
  return symbols_[static_cast<std::size_t>(index)];
}

int Vocabulary::set_unknown(std::string_view token) {
  unknown_ = add(token);
  return *unknown_;
}

std::vector<std::string> tokenize(std::string_view text, TextLevel level) {
  std::vector<std::string> out;
  if (level == TextLevel::char_level) {
    out.reserve(text.size());
    for (char c : text) out.emplace_back(1, c);
    return out;
  }
  std::size_t i = 0;
  auto is_space = [](char c) {
    return c == ' ' || c == '\n' || c == '\t' || c == '\r' || c == '\f' || c == '\v';
  };
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    const std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > start) out.emplace_back(text.substr(start, i - start));
  }
  return out;
}

SymbolSequence encode_text(std::string_view text, const Vocabulary& vocab, TextLevel level) {
  SymbolSequence seq;
  for (const auto& tok : tokenize(text, level)) seq.indices.push_back(vocab.encode(tok));
  return seq;
}

std::string decode_text(const SymbolSequence& seq, const Vocabulary& vocab, TextLevel level) {
  std::string out;
  for (std::size_t i = 0; i < seq.indices.size(); ++i) {
    if (level == TextLevel::word_level && i > 0) out += ' ';
    out += vocab.decode(seq.indices[i]);
  }
  return out;
}

TextCorpus build_text_corpus(std::string_view train, std::optional<std::string_view> valid,
                             std::optional<std::string_view> test, TextLevel level) {
  TextCorpus corpus;
  corpus.level = level;
  const auto tokens = tokenize(train, level);
  if (tokens.empty()) throw ConfigError("training corpus is empty");
  for (const auto& tok : tokens) corpus.train.indices.push_back(corpus.vocab.add(tok));
  if (level == TextLevel::word_level) corpus.vocab.set_unknown();
  if (valid) corpus.valid = encode_text(*valid, corpus.vocab, level);
  if (test) corpus.test = encode_text(*test, corpus.vocab, level);
  return corpus;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error reading '" + path.string() + "'");
  return ss.str();
}

TextCorpus load_text(const TextSplitPaths& paths, TextLevel level) {
  const std::string train = read_file(paths.train);
  std::optional<std::string> valid, test;
  if (paths.valid) valid = read_file(*paths.valid);
  if (paths.test) test = read_file(*paths.test);
  try {
    return build_text_corpus(train, valid ? std::optional<std::string_view>(*valid) : std::nullopt,
                             test ? std::optional<std::string_view>(*test) : std::nullopt, level);
  } catch (const ConfigError& e) {
    throw ConfigError(paths.train.string() + ": " + e.what());
  }
}

std::vector<PianoRollSequence> parse_pianoroll(std::string_view text) {
  std::vector<PianoRollSequence> songs;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
      if (end == text.size()) break;
      continue;
    }

    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(line_no, std::string("malformed JSON: ") + e.what());
    }
    if (!doc.is_array()) throw ParseError(line_no, "song must be an array of frames");
    if (doc.empty()) throw ParseError(line_no, "empty song has no predictable step");

    PianoRollSequence song;
    song.frames.reserve(doc.size());
    for (const auto& frame : doc) {
      if (!frame.is_array()) throw ParseError(line_no, "frame must be an array of key indices");
      std::bitset<kPianoKeys> bits;
      for (const auto& key : frame) {
        if (!key.is_number_integer()) throw ParseError(line_no, "key index must be an integer");
        const auto k = key.get<long long>();
        if (k < 0 || k >= static_cast<long long>(kPianoKeys)) {
          throw ParseError(line_no, "key index " + std::to_string(k) + " outside [0, 88)");
        }
        bits.set(static_cast<std::size_t>(k));
      }
      song.frames.push_back(bits);
    }
    if (song.frames.size() < 2) throw ParseError(line_no, "song needs at least two frames");
    songs.push_back(std::move(song));
    if (end == text.size()) break;
  }
  return songs;
}

std::vector<PianoRollSequence> load_pianoroll(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  try {
    return parse_pianoroll(text);
  } catch (const ParseError& e) {
    throw ParseError(path.string(), e.line(), e.message());
  }
}

std::string pianoroll_to_json(const PianoRollSequence& song) {
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& bits : song.frames) {
    nlohmann::json frame = nlohmann::json::array();
    for (std::size_t k = 0; k < kPianoKeys; ++k)
      if (bits.test(k)) frame.push_back(k);
    doc.push_back(std::move(frame));
  }
  return doc.dump();
}

std::vector<Frame> to_frames(const SymbolSequence& seq) {
  std::vector<Frame> frames;
  frames.reserve(seq.indices.size());
  for (int i : seq.indices) frames.push_back(Frame{i});
  return frames;
}

std::vector<Frame> to_frames(const PianoRollSequence& seq) {
  std::vector<Frame> frames;
  frames.reserve(seq.frames.size());
  for (const auto& bits : seq.frames) {
    Frame f;
    for (std::size_t k = 0; k < kPianoKeys; ++k)
      if (bits.test(k)) f.push_back(static_cast<int>(k));
    frames.push_back(std::move(f));
  }
  return frames;
}

std::vector<SubseqChunk> iter_subsequences(std::span<const std::vector<Frame>> songs,
                                           std::size_t max_len) {
  if (max_len == 0) throw ConfigError("subsequence length must be >= 1");
  std::vector<SubseqChunk> chunks;
  for (std::size_t s = 0; s < songs.size(); ++s) {
    const auto& frames = songs[s];
    if (frames.size() < 2) continue;
    const std::size_t steps = frames.size() - 1;
    const std::span<const Frame> all(frames);
    for (std::size_t start = 0; start < steps; start += max_len) {
      const std::size_t len = std::min(max_len, steps - start);
      chunks.push_back({all.subspan(start, len), all.subspan(start + 1, len), start > 0, s});
    }
  }
  return chunks;
}

}  // namespace deeprnn
