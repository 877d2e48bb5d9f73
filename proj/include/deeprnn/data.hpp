// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <bitset>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "deeprnn/model.hpp"

namespace deeprnn {

inline constexpr std::size_t kPianoKeys = 88;
inline constexpr int kLowestMidiPitch = 21;

enum class TextLevel { char_level, word_level };

std::string_view to_string(TextLevel level);
TextLevel parse_text_level(std::string_view name);

/// Dense symbol <-> index map. Indices follow first occurrence in the
/// training split.
class Vocabulary {
 public:
  static constexpr std::string_view kUnknownToken = "<unk>";

  /// Index of `symbol`, adding it when absent.
  int add(std::string_view symbol);
  std::optional<int> find(std::string_view symbol) const;
  /// Index of `symbol`, falling back to the unknown index. Throws ConfigError
  /// when the symbol is absent and there is no unknown entry.
  int encode(std::string_view symbol) const;
  const std::string& decode(int index) const;

  /// Designates (adding if needed) the unknown-word entry.
  int set_unknown(std::string_view token = kUnknownToken);
  std::optional<int> unknown() const { return unknown_; }

  std::size_t size() const noexcept { return symbols_.size(); }
  const std::vector<std::string>& symbols() const noexcept { return symbols_; }

 private:
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, int> index_;
  std::optional<int> unknown_;
};

struct SymbolSequence {
  std::vector<int> indices;
};

struct PianoRollSequence {
  /// Bit k set means piano key k (MIDI pitch 21 + k) sounds.
  std::vector<std::bitset<kPianoKeys>> frames;
};

struct TextSplitPaths {
  std::filesystem::path train;
  std::optional<std::filesystem::path> valid;
  std::optional<std::filesystem::path> test;
};

struct TextCorpus {
  TextLevel level = TextLevel::char_level;
  Vocabulary vocab;
  SymbolSequence train;
  std::optional<SymbolSequence> valid;
  std::optional<SymbolSequence> test;
};

/// Splits text into symbols: bytes for char level, whitespace-separated
/// tokens for word level.
std::vector<std::string> tokenize(std::string_view text, TextLevel level);

/// Encodes `text` with a fixed vocabulary. Unknown characters are a
/// ConfigError; unknown words map to the unknown index.
SymbolSequence encode_text(std::string_view text, const Vocabulary& vocab, TextLevel level);
std::string decode_text(const SymbolSequence& seq, const Vocabulary& vocab, TextLevel level);

/// Builds the vocabulary from `train` only. Word level always has an unknown
/// entry: a literal "<unk>" in the training text, otherwise appended last.
TextCorpus build_text_corpus(std::string_view train, std::optional<std::string_view> valid,
                             std::optional<std::string_view> test, TextLevel level);

/// Reads the split files. IoError for unreadable files, ConfigError for an
/// empty training split.
TextCorpus load_text(const TextSplitPaths& paths, TextLevel level);

std::string read_file(const std::filesystem::path& path);

/// One song per line: a JSON array of frames, each an array of active key
/// indices in [0, 88). Blank lines are skipped. ParseError carries the line.
std::vector<PianoRollSequence> parse_pianoroll(std::string_view text);
std::vector<PianoRollSequence> load_pianoroll(const std::filesystem::path& path);
/// Inverse of parse_pianoroll for one song (no trailing newline).
std::string pianoroll_to_json(const PianoRollSequence& song);

std::vector<Frame> to_frames(const SymbolSequence& seq);
std::vector<Frame> to_frames(const PianoRollSequence& seq);

/// A training subsequence over an underlying song. `inputs` and `targets`
/// view that song's frames, so the chunk must not outlive them.
struct SubseqChunk {
  std::span<const Frame> inputs;
  std::span<const Frame> targets;  // inputs shifted left by one within the song
  bool carry_state = false;        // false: start from h0 = 0
  std::size_t song = 0;
};

/// Cuts every song into consecutive chunks of at most `max_len` prediction
/// steps. Only each song's first chunk has carry_state == false. A language
/// corpus is passed as a single song.
std::vector<SubseqChunk> iter_subsequences(std::span<const std::vector<Frame>> songs,
                                           std::size_t max_len);

}  // namespace deeprnn
