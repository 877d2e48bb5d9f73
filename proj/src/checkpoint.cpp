// SPDX-License-Identifier: Apache-2.0
#include "deeprnn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "deeprnn/errors.hpp"

namespace deeprnn {

namespace {

constexpr char kMagic[4] = {'D', 'R', 'N', 'N'};

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& in) : in_(in) {}

  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw ParseError(0, "checkpoint truncated at byte " + std::to_string(pos_));
  }
  std::uint8_t u8() {
    need(1);
    return in_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_++]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in_[pos_++]) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  const std::vector<std::uint8_t>& in_;
  std::size_t pos_ = 0;
};

std::string describe(const Checkpoint& c) {
  const ModelConfig& m = c.config;
  std::ostringstream s;
  s << "architecture=" << to_string(m.architecture) << "\n"
    << "input_dim=" << m.input_dim << "\n"
    << "output_dim=" << m.output_dim << "\n"
    << "hidden_dim=" << m.hidden_dim << "\n"
    << "transition_inter_dim=" << m.transition_inter_dim << "\n"
    << "output_inter_dim=" << m.output_inter_dim << "\n"
    << "levels=" << m.levels << "\n"
    << "hidden_nl=" << to_string(m.hidden_nl) << "\n"
    << "transition_inter_nl=" << to_string(m.transition_inter_nl) << "\n"
    << "output_inter_nl=" << to_string(m.output_inter_nl) << "\n"
    << "output_head=" << to_string(m.output_head) << "\n"
    << "preset=" << c.preset << "\n"
    << "text_level=" << (c.text_level ? std::string(to_string(*c.text_level)) : "") << "\n";
  return s.str();
}

std::size_t to_count(const std::map<std::string, std::string>& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) throw ParseError(0, "checkpoint description lacks '" + key + "'");
  try {
    return static_cast<std::size_t>(std::stoull(it->second));
  } catch (const std::exception&) {
    throw ParseError(0, "checkpoint field '" + key + "' is not a count");
  }
}

const std::string& field(const std::map<std::string, std::string>& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) throw ParseError(0, "checkpoint description lacks '" + key + "'");
  return it->second;
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  Writer w;
  w.bytes(kMagic, 4);
  w.u32(kCheckpointVersion);
  w.str(describe(ckpt));
  w.u32(static_cast<std::uint32_t>(ckpt.vocabulary.size()));
  for (const auto& s : ckpt.vocabulary) w.str(s);
  w.u32(static_cast<std::uint32_t>(ckpt.params.size()));
  for (const auto& p : ckpt.params) {
    w.str(p.name);
    if (p.is_bias) {
      w.u8(1);
      w.u64(p.value.cols());
    } else {
      w.u8(2);
      w.u64(p.value.rows());
      w.u64(p.value.cols());
    }
    w.f64(p.lr_multiplier);
    for (double v : p.value.span()) w.f64(v);
  }
  return w.take();
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  r.need(4);
  char magic[4];
  for (char& c : magic) c = static_cast<char>(r.u8());
  if (std::memcmp(magic, kMagic, 4) != 0) throw ParseError(0, "not a DRNN checkpoint (bad magic)");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw ParseError(0, "unsupported checkpoint version " + std::to_string(version));
  }

  std::map<std::string, std::string> kv;
  {
    std::istringstream desc(r.str());
    std::string line;
    while (std::getline(desc, line)) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
  }

  Checkpoint ckpt;
  try {
    ModelConfig& m = ckpt.config;
    m.architecture = parse_architecture(field(kv, "architecture"));
    m.input_dim = to_count(kv, "input_dim");
    m.output_dim = to_count(kv, "output_dim");
    m.hidden_dim = to_count(kv, "hidden_dim");
    m.transition_inter_dim = to_count(kv, "transition_inter_dim");
    m.output_inter_dim = to_count(kv, "output_inter_dim");
    m.levels = to_count(kv, "levels");
    m.hidden_nl = parse_nonlinearity(field(kv, "hidden_nl"));
    m.transition_inter_nl = parse_nonlinearity(field(kv, "transition_inter_nl"));
    m.output_inter_nl = parse_nonlinearity(field(kv, "output_inter_nl"));
    m.output_head = parse_output_head(field(kv, "output_head"));
    m.validate();
    ckpt.preset = field(kv, "preset");
    const std::string& level = field(kv, "text_level");
    if (!level.empty()) ckpt.text_level = parse_text_level(level);
  } catch (const ConfigError& e) {
    throw ParseError(0, std::string("checkpoint description: ") + e.what());
  }

  const std::uint32_t vocab = r.u32();
  for (std::uint32_t i = 0; i < vocab; ++i) ckpt.vocabulary.push_back(r.str());

  const std::uint32_t tensors = r.u32();
  for (std::uint32_t i = 0; i < tensors; ++i) {
    Param p;
    p.name = r.str();
    const std::uint8_t rank = r.u8();
    std::uint64_t rows = 1, cols = 0;
    if (rank == 1) {
      cols = r.u64();
      p.is_bias = true;
    } else if (rank == 2) {
      rows = r.u64();
      cols = r.u64();
    } else {
      throw ParseError(0, "tensor '" + p.name + "' has unsupported rank " + std::to_string(rank));
    }
    p.lr_multiplier = r.f64();
    r.need(rows * cols * 8);
    std::vector<double> values(rows * cols);
    for (double& v : values) v = r.f64();
    p.value = Matrix(rows, cols, std::move(values));
    try {
      ckpt.params.add(std::move(p));
    } catch (const ConfigError& e) {
      throw ParseError(0, e.what());
    }
  }
  if (!r.done()) throw ParseError(0, "trailing bytes after checkpoint tensors");
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const auto bytes = encode_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("error writing '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_checkpoint(bytes);
  } catch (const ParseError& e) {
    throw ParseError(0, path.string() + ": " + e.what());
  }
}

}  // namespace deeprnn
