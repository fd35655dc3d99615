// Copyright 2026 The HPENet Toolkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "hpenet/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <map>

#include "hpenet/error.hpp"

namespace hpenet {

namespace {

constexpr char kMagic[4] = {'H', 'P', 'C', 'K'};

class Out {
 public:
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
  void str(const std::string& s) {
    u64(s.size());
    bytes.insert(bytes.end(), s.begin(), s.end());
  }
  void blob(const NamedBlob& b) {
    str(b.name);
    u32(static_cast<std::uint32_t>(b.shape.size()));
    for (std::size_t d : b.shape) u64(d);
    for (double v : b.values) f64(v);
  }
  std::vector<char> bytes;

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) bytes.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
};

class In {
 public:
  explicit In(std::vector<char> b) : bytes_(std::move(b)) {}
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  double f64() { return std::bit_cast<double>(get(8)); }
  std::string str() {
    const std::size_t at = pos_;
    const std::uint64_t n = u64();
    if (n > bytes_.size() - pos_) throw ParseError("truncated string", at);
    std::string s(bytes_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  NamedBlob blob() {
    NamedBlob b;
    b.name = str();
    const std::size_t at = pos_;
    const std::uint32_t rank = u32();
    if (rank == 0 || rank > 8) throw ParseError("bad rank for '" + b.name + "'", at);
    std::uint64_t count = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
      const std::size_t dat = pos_;
      const std::uint64_t d = u64();
      if (d == 0 || d > (bytes_.size() - pos_) / 8) {
        throw ParseError("bad extent for '" + b.name + "'", dat);
      }
      count *= d;
      if (count > (bytes_.size() - pos_) / 8) {
        throw ParseError("truncated values for '" + b.name + "'", pos_);
      }
      b.shape.push_back(d);
    }
    b.values.resize(count);
    for (double& v : b.values) v = f64();
    return b;
  }
  void magic() {
    for (std::size_t i = 0; i < 4; ++i) {
      if (pos_ >= bytes_.size()) throw ParseError("truncated magic", pos_);
      if (bytes_[pos_] != kMagic[i]) throw ParseError("bad checkpoint magic", pos_);
      ++pos_;
    }
  }
  std::size_t offset() const { return pos_; }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::uint64_t get(int n) {
    if (bytes_.size() - pos_ < static_cast<std::size_t>(n)) {
      throw ParseError("truncated checkpoint", pos_);
    }
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  std::vector<char> bytes_;
  std::size_t pos_ = 0;
};

std::vector<NamedBlob> read_blobs(In& in) {
  const std::size_t at = in.offset();
  const std::uint64_t n = in.u64();
  if (n > (1u << 24)) throw ParseError("implausible tensor count", at);
  std::vector<NamedBlob> out;
  for (std::uint64_t i = 0; i < n; ++i) out.push_back(in.blob());
  return out;
}

void write_blobs(Out& out, const std::vector<NamedBlob>& blobs) {
  out.u64(blobs.size());
  for (const auto& b : blobs) out.blob(b);
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  Out out;
  out.bytes.insert(out.bytes.end(), kMagic, kMagic + 4);
  out.u32(ckpt.version);
  out.str(ckpt.config_json);
  out.str(ckpt.training_json);
  out.u64(ckpt.epoch);
  out.str(ckpt.rng_state);
  out.u64(ckpt.optimizer_step);
  write_blobs(out, ckpt.tensors);
  write_blobs(out, ckpt.first_moments);
  write_blobs(out, ckpt.second_moments);

  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("cannot write checkpoint '" + path + "'");
    f.write(out.bytes.data(), static_cast<std::streamsize>(out.bytes.size()));
    if (!f) throw DataError("failed writing checkpoint '" + path + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw DataError("cannot move checkpoint into place at '" + path + "'");
  }
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open checkpoint '" + path + "'");
  In in(std::vector<char>((std::istreambuf_iterator<char>(f)),
                          std::istreambuf_iterator<char>()));
  Checkpoint c;
  in.magic();
  const std::size_t version_at = in.offset();
  c.version = in.u32();
  if (c.version != kCheckpointVersion) {
    throw ParseError("checkpoint version " + std::to_string(c.version) +
                         " is not supported (expected " +
                         std::to_string(kCheckpointVersion) + ")",
                     version_at);
  }
  c.config_json = in.str();
  c.training_json = in.str();
  c.epoch = in.u64();
  c.rng_state = in.str();
  c.optimizer_step = in.u64();
  c.tensors = read_blobs(in);
  c.first_moments = read_blobs(in);
  c.second_moments = read_blobs(in);
  if (!in.done()) throw ParseError("trailing bytes in checkpoint", in.offset());
  return c;
}

void check_config(const NetworkConfig& expected, const Checkpoint& ckpt) {
  const NetworkConfig stored = NetworkConfig::from_json(ckpt.config_json);
  const auto want = expected.entries();
  const auto have = stored.entries();
  for (std::size_t i = 0; i < want.size(); ++i) {
    if (want[i].second != have[i].second) {
      throw ConfigError("checkpoint config mismatch on '" + want[i].first +
                        "': checkpoint has '" + have[i].second +
                        "', model has '" + want[i].second + "'");
    }
  }
}

Checkpoint capture_state(const Network& model, const AdamW* optimizer) {
  Checkpoint c;
  c.config_json = model.config().to_json();
  for (const auto& e : model.params().entries()) {
    auto v = e.tensor.values();
    c.tensors.push_back({e.name, e.tensor.shape(), {v.begin(), v.end()}});
  }
  if (optimizer) {
    c.optimizer_step = optimizer->step_count();
    // Optimizer params follow the learnable registry entries in order.
    std::vector<std::string> learnable;
    for (const auto& e : model.params().entries()) {
      if (e.learnable) learnable.push_back(e.name);
    }
    const auto& params = optimizer->params();
    for (std::size_t i = 0; i < params.size(); ++i) {
      c.first_moments.push_back(
          {learnable.at(i), params[i].tensor.shape(), optimizer->first_moments()[i]});
      c.second_moments.push_back(
          {learnable.at(i), params[i].tensor.shape(), optimizer->second_moments()[i]});
    }
  }
  return c;
}

void restore_state(Network& model, AdamW* optimizer, const Checkpoint& ckpt) {
  const auto& entries = model.params().entries();
  std::map<std::string, const NamedBlob*> blobs;
  for (const auto& b : ckpt.tensors) blobs[b.name] = &b;
  for (const auto& e : entries) {
    auto it = blobs.find(e.name);
    if (it == blobs.end()) {
      throw ConfigError("checkpoint lacks tensor '" + e.name + "'");
    }
    if (it->second->shape != e.tensor.shape()) {
      throw ConfigError("shape mismatch for '" + e.name + "': checkpoint " +
                        shape_string(it->second->shape) + ", model " +
                        shape_string(e.tensor.shape()));
    }
  }
  if (blobs.size() != entries.size()) {
    for (const auto& b : ckpt.tensors) {
      if (!model.params().find(b.name)) {
        throw ConfigError("checkpoint tensor '" + b.name + "' is not in the model");
      }
    }
  }
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  if (optimizer) {
    const auto& params = optimizer->params();
    if (ckpt.first_moments.size() != params.size() ||
        ckpt.second_moments.size() != params.size()) {
      throw ConfigError("checkpoint optimizer state covers " +
                        std::to_string(ckpt.first_moments.size()) +
                        " parameters, model has " + std::to_string(params.size()));
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
      for (const auto* set : {&ckpt.first_moments, &ckpt.second_moments}) {
        const NamedBlob& b = (*set)[i];
        if (b.shape != params[i].tensor.shape()) {
          throw ConfigError("optimizer moment shape mismatch for '" + b.name + "'");
        }
      }
      m.push_back(ckpt.first_moments[i].values);
      v.push_back(ckpt.second_moments[i].values);
    }
  }
  for (const auto& e : entries) {
    const NamedBlob& b = *blobs.at(e.name);
    Tensor t = e.tensor;
    std::copy(b.values.begin(), b.values.end(), t.values().begin());
  }
  if (optimizer) optimizer->restore(ckpt.optimizer_step, std::move(m), std::move(v));
}

}  // namespace hpenet
