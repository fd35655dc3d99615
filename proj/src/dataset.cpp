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

#include "hpenet/dataset.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <random>
#include <sstream>

#include "hpenet/error.hpp"

namespace hpenet {

namespace {

constexpr char kMagic[4] = {'H', 'P', 'D', 'S'};
constexpr std::uint32_t kVersion = 1;

// ---- little-endian encoding

class Writer {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(static_cast<char>(v)); }
  void u16(std::uint16_t v) { put(v, 2); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void raw(const char* p, std::size_t n) { bytes_.insert(bytes_.end(), p, p + n); }
  const std::vector<char>& bytes() const { return bytes_; }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  std::vector<char> bytes_;
};

class Reader {
 public:
  explicit Reader(std::vector<char> bytes) : bytes_(std::move(bytes)) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  void expect(const char* p, std::size_t n, const char* what) {
    need(n, what);
    for (std::size_t i = 0; i < n; ++i) {
      if (bytes_[pos_ + i] != p[i]) throw ParseError(std::string("bad ") + what, pos_);
    }
    pos_ += n;
  }
  std::size_t offset() const { return pos_; }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n, const char* what = "value") {
    if (bytes_.size() - pos_ < n) {
      throw ParseError(std::string("truncated file while reading ") + what, pos_);
    }
  }
  std::uint64_t get(int n) {
    need(static_cast<std::size_t>(n));
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

// ---- shapes

Vec3 unit_normal(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  for (;;) {
    Vec3 v{n(rng), n(rng), n(rng)};
    const double len = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    if (len > 1e-12) return {v[0] / len, v[1] / len, v[2] / len};
  }
}

using Mat3 = std::array<std::array<double, 3>, 3>;

Mat3 rotation_about_z(double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {{{c, -s, 0.0}, {s, c, 0.0}, {0.0, 0.0, 1.0}}};
}

// Uniform over SO(3) from a unit quaternion.
Mat3 random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  double q[4];
  double len = 0.0;
  do {
    len = 0.0;
    for (double& v : q) {
      v = n(rng);
      len += v * v;
    }
  } while (len < 1e-12);
  len = std::sqrt(len);
  for (double& v : q) v /= len;
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  return {{{1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)},
           {2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)},
           {2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)}}};
}

}  // namespace

std::string_view to_string(ShapeFamily family) {
  switch (family) {
    case ShapeFamily::sphere: return "sphere";
    case ShapeFamily::cube: return "cube";
    case ShapeFamily::cylinder: return "cylinder";
    case ShapeFamily::torus: return "torus";
  }
  return "sphere";
}

ShapeFamily parse_shape_family(std::string_view text) {
  for (auto f : {ShapeFamily::sphere, ShapeFamily::cube, ShapeFamily::cylinder,
                 ShapeFamily::torus}) {
    if (to_string(f) == text) return f;
  }
  throw ConfigError("unknown shape family '" + std::string(text) + "'");
}

std::size_t part_count(ShapeFamily family) {
  return family == ShapeFamily::cylinder || family == ShapeFamily::torus ? 2 : 1;
}

void DatasetSpec::validate() const {
  if (families.empty()) throw ConfigError("dataset needs at least one shape family");
  if (samples == 0) throw ConfigError("dataset needs at least one sample");
  if (points_per_cloud == 0) throw ConfigError("points_per_cloud must be >= 1");
  if (points_per_cloud > 65535 || samples > 0xffffffffULL) {
    throw ConfigError("dataset dimensions exceed the file format");
  }
  if (!(noise_sigma >= 0.0)) throw ConfigError("noise_sigma must be >= 0");
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) {
    throw ConfigError("test_fraction must lie in [0, 1)");
  }
}

std::size_t SyntheticDataset::test_count() const {
  return static_cast<std::size_t>(
      std::llround(static_cast<double>(samples.size()) * spec.test_fraction));
}

std::vector<std::size_t> SyntheticDataset::train_indices() const {
  std::vector<std::size_t> out(train_count());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = i;
  return out;
}

std::vector<std::size_t> SyntheticDataset::test_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = train_count(); i < samples.size(); ++i) out.push_back(i);
  return out;
}

CanonicalShape sample_canonical(ShapeFamily family, std::size_t points,
                                std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_real_distribution<double> u11(-1.0, 1.0);
  const double two_pi = 2.0 * std::numbers::pi;
  CanonicalShape out;
  out.positions.reserve(points);
  out.labels.reserve(points);

  switch (family) {
    case ShapeFamily::sphere:
      for (std::size_t i = 0; i < points; ++i) {
        out.positions.push_back(unit_normal(rng));
        out.labels.push_back(0);
      }
      break;
    case ShapeFamily::cube: {
      std::uniform_int_distribution<int> face(0, 5);
      for (std::size_t i = 0; i < points; ++i) {
        const int f = face(rng);
        Vec3 p{u11(rng), u11(rng), u11(rng)};
        p[f / 2] = f % 2 ? 1.0 : -1.0;
        out.positions.push_back(p);
        out.labels.push_back(0);
      }
      break;
    }
    case ShapeFamily::cylinder: {
      const double r = 0.4 + 0.4 * u01(rng);
      const double h = 1.0 + 1.0 * u01(rng);
      // Area-uniform: caps 2 pi r^2 against side 2 pi r h.
      const double p_cap = r / (r + h);
      for (std::size_t i = 0; i < points; ++i) {
        if (u01(rng) < p_cap) {
          const double rho = r * std::sqrt(u01(rng));
          const double t = two_pi * u01(rng);
          const double z = u01(rng) < 0.5 ? -0.5 * h : 0.5 * h;
          out.positions.push_back({rho * std::cos(t), rho * std::sin(t), z});
          out.labels.push_back(0);
        } else {
          const double t = two_pi * u01(rng);
          out.positions.push_back({r * std::cos(t), r * std::sin(t), h * (u01(rng) - 0.5)});
          out.labels.push_back(1);
        }
      }
      break;
    }
    case ShapeFamily::torus: {
      const double big = 1.0;
      const double tube = 0.25 + 0.2 * u01(rng);
      for (std::size_t i = 0; i < points; ++i) {
        double phi = 0.0;
        // Rejection on the tube angle gives area-uniform samples.
        do {
          phi = two_pi * u01(rng);
        } while (u01(rng) * (big + tube) > big + tube * std::cos(phi));
        const double t = two_pi * u01(rng);
        const double ring = big + tube * std::cos(phi);
        out.positions.push_back({ring * std::cos(t), ring * std::sin(t), tube * std::sin(phi)});
        out.labels.push_back(std::cos(phi) < 0.0 ? 0 : 1);
      }
      break;
    }
  }
  return out;
}

SyntheticDataset generate_dataset(const DatasetSpec& spec) {
  spec.validate();
  SyntheticDataset data;
  data.spec = spec;
  data.num_shape_classes = spec.families.size();
  std::vector<int> part_offset;
  for (ShapeFamily f : spec.families) {
    part_offset.push_back(static_cast<int>(data.num_part_classes));
    data.num_part_classes += part_count(f);
  }

  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  data.samples.reserve(spec.samples);
  for (std::size_t i = 0; i < spec.samples; ++i) {
    std::seed_seq seq{static_cast<std::uint32_t>(spec.seed),
                      static_cast<std::uint32_t>(spec.seed >> 32),
                      static_cast<std::uint32_t>(i), 0x5eedu};
    std::mt19937_64 rng(seq);
    const std::size_t fam = i % spec.families.size();
    CanonicalShape shape = sample_canonical(spec.families[fam], spec.points_per_cloud, rng());

    Mat3 rot{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
    double scale = 1.0;
    Vec3 shift{0.0, 0.0, 0.0};
    if (spec.pose != PoseMode::none) {
      rot = spec.pose == PoseMode::full
                ? random_rotation(rng)
                : rotation_about_z(2.0 * std::numbers::pi * u01(rng));
      scale = 0.8 + 0.4 * u01(rng);
      for (double& v : shift) v = 2.0 * u01(rng) - 1.0;
    }

    Sample s;
    s.cloud_label = static_cast<int>(fam);
    s.category = static_cast<int>(fam);
    s.positions.reserve(shape.positions.size());
    for (std::size_t j = 0; j < shape.positions.size(); ++j) {
      Vec3 p = shape.positions[j];
      if (spec.noise_sigma > 0.0) {
        for (double& v : p) v += spec.noise_sigma * noise(rng);
      }
      Vec3 q{};
      for (int a = 0; a < 3; ++a) {
        q[a] = scale * (rot[a][0] * p[0] + rot[a][1] * p[1] + rot[a][2] * p[2]) + shift[a];
        // Stored as float32 so a file round trip is lossless.
        q[a] = static_cast<double>(static_cast<float>(q[a]));
      }
      s.positions.push_back(q);
      s.part_labels.push_back(part_offset[fam] + shape.labels[j]);
    }
    data.samples.push_back(std::move(s));
  }
  return data;
}

void save_dataset(const SyntheticDataset& data, const std::string& path) {
  const DatasetSpec& spec = data.spec;
  Writer w;
  w.raw(kMagic, 4);
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(data.samples.size()));
  w.u32(static_cast<std::uint32_t>(spec.points_per_cloud));
  w.u32(static_cast<std::uint32_t>(spec.families.size()));
  w.u32(static_cast<std::uint32_t>(data.num_shape_classes));
  w.u32(static_cast<std::uint32_t>(data.num_part_classes));
  w.u64(spec.seed);
  w.f64(spec.noise_sigma);
  w.f64(spec.test_fraction);
  w.u8(static_cast<std::uint8_t>(spec.pose));
  for (ShapeFamily f : spec.families) w.u8(static_cast<std::uint8_t>(f));
  for (const Sample& s : data.samples) {
    if (s.positions.size() != spec.points_per_cloud) {
      throw DataError("sample point count differs from points_per_cloud");
    }
    w.u16(static_cast<std::uint16_t>(s.cloud_label));
    w.u16(static_cast<std::uint16_t>(s.category));
    for (const Vec3& p : s.positions) {
      for (double v : p) w.f32(static_cast<float>(v));
    }
    for (int l : s.part_labels) w.u16(static_cast<std::uint16_t>(l));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write dataset '" + path + "'");
  out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
  if (!out) throw DataError("failed writing dataset '" + path + "'");

  std::ofstream txt(path + ".txt");
  txt << "format: HPDS v" << kVersion << "\n";
  txt << "samples: " << data.samples.size() << " (train " << data.train_count()
      << ", test " << data.test_count() << ")\n";
  txt << "points_per_cloud: " << spec.points_per_cloud << "\n";
  txt << "families:";
  for (ShapeFamily f : spec.families) txt << " " << to_string(f);
  txt << "\nshape_classes: " << data.num_shape_classes << "\n";
  txt << "part_classes: " << data.num_part_classes << "\n";
  txt << "seed: " << spec.seed << "\nnoise_sigma: " << spec.noise_sigma << "\n";
}

SyntheticDataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open dataset '" + path + "'");
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  Reader r(std::move(bytes));
  r.expect(kMagic, 4, "magic");
  const std::size_t version_at = r.offset();
  const std::uint32_t version = r.u32();
  if (version != kVersion) {
    throw ParseError("unsupported dataset version " + std::to_string(version), version_at);
  }
  SyntheticDataset data;
  const std::uint32_t count = r.u32();
  data.spec.samples = count;
  data.spec.points_per_cloud = r.u32();
  const std::uint32_t families = r.u32();
  data.num_shape_classes = r.u32();
  data.num_part_classes = r.u32();
  data.spec.seed = r.u64();
  data.spec.noise_sigma = r.f64();
  data.spec.test_fraction = r.f64();
  const std::size_t pose_at = r.offset();
  const std::uint8_t pose = r.u8();
  if (pose > 2) throw ParseError("bad pose mode", pose_at);
  data.spec.pose = static_cast<PoseMode>(pose);
  data.spec.families.clear();
  for (std::uint32_t i = 0; i < families; ++i) {
    const std::size_t at = r.offset();
    const std::uint8_t f = r.u8();
    if (f > 3) throw ParseError("bad shape family id", at);
    data.spec.families.push_back(static_cast<ShapeFamily>(f));
  }
  const std::size_t n = data.spec.points_per_cloud;
  for (std::uint32_t i = 0; i < count; ++i) {
    Sample s;
    const std::size_t at = r.offset();
    s.cloud_label = r.u16();
    s.category = r.u16();
    if (static_cast<std::size_t>(s.cloud_label) >= data.num_shape_classes) {
      throw ParseError("cloud label out of range", at);
    }
    s.positions.resize(n);
    for (Vec3& p : s.positions) {
      for (double& v : p) v = r.f32();
    }
    s.part_labels.resize(n);
    for (int& l : s.part_labels) {
      const std::size_t lat = r.offset();
      l = r.u16();
      if (static_cast<std::size_t>(l) >= data.num_part_classes) {
        throw ParseError("part label out of range", lat);
      }
    }
    data.samples.push_back(std::move(s));
  }
  if (!r.done()) throw ParseError("trailing bytes after last sample", r.offset());
  return data;
}

}  // namespace hpenet
