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

#include "hpenet/network.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "hpenet/error.hpp"
#include "json.hpp"

namespace hpenet {

namespace {

using Json = nlohmann::ordered_json;

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::size_t parse_count(std::string_view key, std::string_view value) {
  std::size_t out = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError("'" + std::string(key) + "' expects a non-negative integer, got '" +
                      std::string(value) + "'");
  }
  return out;
}

double parse_real(std::string_view key, std::string_view value) {
  std::string s(value);
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) {
    // Also accept fractions such as "1/4".
    const auto slash = s.find('/');
    if (slash != std::string::npos) {
      return parse_real(key, s.substr(0, slash)) /
             parse_real(key, s.substr(slash + 1));
    }
    throw ConfigError("'" + std::string(key) + "' expects a number, got '" + s + "'");
  }
  return out;
}

bool parse_flag(std::string_view key, std::string_view value) {
  const std::string v = lower(value);
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw ConfigError("'" + std::string(key) + "' expects a boolean, got '" +
                    std::string(value) + "'");
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (!std::isspace(static_cast<unsigned char>(c)) && c != '[' && c != ']') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::string format_real(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

void flatten(const Json& node, const std::string& prefix,
             std::vector<std::pair<std::string, std::string>>& out) {
  if (node.is_object()) {
    for (auto it = node.begin(); it != node.end(); ++it) {
      flatten(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
    }
    return;
  }
  std::string value;
  if (node.is_string()) {
    value = node.get<std::string>();
  } else if (node.is_array()) {
    for (std::size_t i = 0; i < node.size(); ++i) {
      if (i) value += ",";
      value += node[i].is_string() ? node[i].get<std::string>() : node[i].dump();
    }
  } else if (node.is_number_float()) {
    value = format_real(node.get<double>());
  } else {
    value = node.dump();
  }
  out.emplace_back(prefix, value);
}

}  // namespace

std::string_view to_string(Task task) {
  switch (task) {
    case Task::classify: return "classify";
    case Task::segment: return "segment";
    case Task::partseg: return "partseg";
  }
  return "classify";
}

Task parse_task(std::string_view text) {
  const std::string t = lower(text);
  if (t == "classify") return Task::classify;
  if (t == "segment") return Task::segment;
  if (t == "partseg") return Task::partseg;
  throw ConfigError("unknown task '" + std::string(text) + "'");
}

NetworkConfig NetworkConfig::preset(std::string_view name, Task task) {
  NetworkConfig c;
  c.task = task;
  const std::string n = lower(name);
  if (n == "s") {
    c.embed_dim = 32;
    c.ref_depths = {0, 0, 0, 0};
  } else if (n == "b") {
    c.embed_dim = 32;
    c.ref_depths = {1, 2, 1, 1};
  } else if (n == "l") {
    c.embed_dim = 32;
    c.ref_depths = {2, 4, 2, 2};
  } else if (n == "xl") {
    c.embed_dim = 64;
    c.ref_depths = {3, 6, 3, 3};
  } else {
    throw ConfigError("unknown preset '" + std::string(name) + "' (s, b, l, xl)");
  }
  return c;
}

std::size_t NetworkConfig::stage_count() const {
  if (abs_stages != 0) return abs_stages;
  return task == Task::segment ? 4 : 2;
}

std::size_t NetworkConfig::level_width(std::size_t level) const {
  return embed_dim << level;
}

std::size_t NetworkConfig::min_points() const {
  std::size_t n = 1;
  for (std::size_t i = 0; i < stage_count(); ++i) n *= downsample_ratio;
  return n;
}

void NetworkConfig::validate() const {
  if (embed_dim == 0) throw ConfigError("embed_dim must be >= 1");
  if (num_classes < 2) throw ConfigError("num_classes must be >= 2");
  if (stage_count() > 4) throw ConfigError("at most 4 ABS stages are supported");
  if (k_abs == 0 || k_ref == 0) throw ConfigError("k must be >= 1");
  if (downsample_ratio == 0) throw ConfigError("downsample_ratio must be >= 1");
  if (abs_layers == 0 || ref_layers == 0) {
    throw ConfigError("aggregation layer counts must be >= 1");
  }
  if (expansion == 0) throw ConfigError("expansion must be >= 1");
  if (task == Task::partseg) {
    if (num_shape_categories == 0) throw ConfigError("num_shape_categories must be >= 1");
    if (class_embedding_dim == 0) throw ConfigError("class_embedding_dim must be >= 1");
  }
  // Encoders are sized per stage; check the narrowest width they will see.
  if (encoding.active()) {
    EncodingConfig probe = encoding;
    probe.output_dim = embed_dim;
    probe.validate();
  }
}

void NetworkConfig::set(std::string_view key, std::string_view value) {
  const std::string k(key);
  if (k == "task") {
    task = parse_task(value);
  } else if (k == "preset") {
    NetworkConfig p = preset(value, task);
    embed_dim = p.embed_dim;
    ref_depths = p.ref_depths;
  } else if (k == "embed_dim") {
    embed_dim = parse_count(k, value);
  } else if (k == "ref_depths") {
    const auto parts = split(value, ',');
    if (parts.size() != 4) throw ConfigError("ref_depths expects 4 entries");
    for (std::size_t i = 0; i < 4; ++i) ref_depths[i] = parse_count(k, parts[i]);
  } else if (k == "num_classes") {
    num_classes = parse_count(k, value);
  } else if (k == "num_shape_categories") {
    num_shape_categories = parse_count(k, value);
  } else if (k == "input_features") {
    input_features = parse_count(k, value);
  } else if (k == "abs_stages") {
    abs_stages = parse_count(k, value);
  } else if (k == "k_abs") {
    k_abs = parse_count(k, value);
  } else if (k == "k_ref") {
    k_ref = parse_count(k, value);
  } else if (k == "downsample_ratio") {
    downsample_ratio = parse_count(k, value);
  } else if (k == "aggregation.abs_layers") {
    abs_layers = parse_count(k, value);
  } else if (k == "aggregation.ref_layers") {
    ref_layers = parse_count(k, value);
  } else if (k == "aggregation.abs_first") {
    abs_first = parse_aggregation_variant(value);
  } else if (k == "aggregation.abs_rest") {
    abs_rest = parse_aggregation_variant(value);
  } else if (k == "aggregation.ref") {
    ref = parse_aggregation_variant(value);
  } else if (k == "aggregation.placement") {
    const auto parts = split(value, '/');
    if (parts.size() != 3) {
      throw ConfigError("aggregation.placement expects abs_first/abs_rest/ref");
    }
    abs_first = parse_aggregation_variant(parts[0]);
    abs_rest = parse_aggregation_variant(parts[1]);
    ref = parse_aggregation_variant(parts[2]);
  } else if (k == "aggregation.mlp_norm") {
    mlp_norm = parse_flag(k, value);
  } else if (k == "encoding.kind") {
    encoding.kind = parse_encoding_kind(value);
  } else if (k == "encoding.ratio") {
    encoding.hidden_ratio = parse_real(k, value);
  } else if (k == "encoding.fusion") {
    encoding.fusion = parse_fusion_mode(value);
  } else if (k == "encoding.coordinates") {
    encoding.coordinates = parse_coordinate_mode(value);
  } else if (k == "encoding.rescale") {
    encoding.rescale = parse_real(k, value);
  } else if (k == "expansion") {
    expansion = parse_count(k, value);
  } else if (k == "head_hidden") {
    head_hidden = parse_count(k, value);
  } else if (k == "class_embedding_dim") {
    class_embedding_dim = parse_count(k, value);
  } else if (k == "fps_start") {
    const std::string v = lower(value);
    if (v == "lexicographic") {
      lexicographic_fps_start = true;
    } else if (v == "first") {
      lexicographic_fps_start = false;
    } else {
      throw ConfigError("fps_start expects lexicographic or first");
    }
  } else {
    throw ConfigError("unknown config key '" + k + "'");
  }
}

std::vector<std::pair<std::string, std::string>> NetworkConfig::entries() const {
  std::string depths;
  for (std::size_t i = 0; i < 4; ++i) {
    if (i) depths += ",";
    depths += std::to_string(ref_depths[i]);
  }
  return {
      {"task", std::string(to_string(task))},
      {"embed_dim", std::to_string(embed_dim)},
      {"ref_depths", depths},
      {"num_classes", std::to_string(num_classes)},
      {"num_shape_categories", std::to_string(num_shape_categories)},
      {"input_features", std::to_string(input_features)},
      {"abs_stages", std::to_string(abs_stages)},
      {"k_abs", std::to_string(k_abs)},
      {"k_ref", std::to_string(k_ref)},
      {"downsample_ratio", std::to_string(downsample_ratio)},
      {"aggregation.abs_layers", std::to_string(abs_layers)},
      {"aggregation.ref_layers", std::to_string(ref_layers)},
      {"aggregation.abs_first", std::string(to_string(abs_first))},
      {"aggregation.abs_rest", std::string(to_string(abs_rest))},
      {"aggregation.ref", std::string(to_string(ref))},
      {"aggregation.mlp_norm", mlp_norm ? "true" : "false"},
      {"encoding.kind", std::string(to_string(encoding.kind))},
      {"encoding.ratio", format_real(encoding.hidden_ratio)},
      {"encoding.fusion", std::string(to_string(encoding.fusion))},
      {"encoding.coordinates", std::string(to_string(encoding.coordinates))},
      {"encoding.rescale", format_real(encoding.rescale)},
      {"expansion", std::to_string(expansion)},
      {"head_hidden", std::to_string(head_hidden)},
      {"class_embedding_dim", std::to_string(class_embedding_dim)},
      {"fps_start", lexicographic_fps_start ? "lexicographic" : "first"},
  };
}

std::string NetworkConfig::to_json() const {
  Json j = Json::object();
  for (const auto& [key, value] : entries()) j[key] = value;
  return j.dump(2);
}

NetworkConfig NetworkConfig::from_json(std::string_view text) {
  NetworkConfig c;
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  std::vector<std::pair<std::string, std::string>> flat;
  flatten(j, "", flat);
  // Task and preset first so later keys refine them.
  for (const auto& key : {"task", "preset"}) {
    for (const auto& [k, v] : flat) {
      if (k == key) c.set(k, v);
    }
  }
  for (const auto& [k, v] : flat) {
    if (k != "task" && k != "preset") c.set(k, v);
  }
  return c;
}

NetworkConfig load_config_file(const std::string& path, NetworkConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  Json j;
  try {
    j = Json::parse(ss.str());
  } catch (const Json::parse_error& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  std::vector<std::pair<std::string, std::string>> flat;
  flatten(j, "", flat);
  for (const auto& key : {"task", "preset"}) {
    for (const auto& [k, v] : flat) {
      if (k == key) base.set(k, v);
    }
  }
  for (const auto& [k, v] : flat) {
    if (k != "task" && k != "preset") base.set(k, v);
  }
  return base;
}

// ------------------------------------------------------------------ Network

Network::Network(const NetworkConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  Rng rng(seed);
  const std::size_t stages = config_.stage_count();

  embedding_ = Dense::make(registry_, "embed", 3 + config_.input_features,
                           config_.embed_dim, rng, true, true);

  for (std::size_t s = 0; s < stages; ++s) {
    const std::size_t in = config_.level_width(s);
    const std::size_t out = config_.level_width(s + 1);
    const std::string name = "stage" + std::to_string(s + 1);

    StagePlan abs;
    abs.kind = StageKind::abs;
    abs.in_channels = in;
    abs.out_channels = out;
    abs.k = config_.k_abs;
    abs.downsample_ratio = config_.downsample_ratio;
    abs.aggregation = AggregationConfig::make(
        s == 0 ? config_.abs_first : config_.abs_rest,
        std::vector<std::size_t>(config_.abs_layers, out));
    abs.aggregation.mlp_norm = config_.mlp_norm;
    abs.encoding = config_.encoding;
    abs.lexicographic_start = config_.lexicographic_fps_start;
    abs_.emplace_back(abs, registry_, name + ".abs", rng);

    StagePlan ref;
    ref.kind = StageKind::ref;
    ref.in_channels = out;
    ref.out_channels = out;
    ref.k = config_.k_ref;
    ref.aggregation = AggregationConfig::make(
        config_.ref, std::vector<std::size_t>(config_.ref_layers, out));
    ref.aggregation.mlp_norm = config_.mlp_norm;
    ref.encoding = config_.encoding;
    ref.ref_depth = config_.ref_depths[s];
    ref.expansion = config_.expansion;
    ref_.emplace_back(ref, registry_, name + ".ref", rng);
  }

  const std::size_t deepest = config_.level_width(stages);
  if (config_.task == Task::classify) {
    const std::size_t hidden = config_.head_hidden ? config_.head_hidden : deepest;
    head_.push_back(Dense::make(registry_, "head.hidden", deepest, hidden, rng,
                                false, true));
    classifier_ = Linear::make(registry_, "head.classifier", hidden,
                               config_.num_classes, rng);
    return;
  }

  std::size_t low = deepest;
  if (config_.task == Task::partseg) {
    // Small symmetric init keeps the category signal from dominating early.
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> table(config_.num_shape_categories *
                              config_.class_embedding_dim);
    for (double& v : table) v = u(rng);
    class_table_ = registry_.add(
        "class_embedding.table",
        Tensor({config_.num_shape_categories, config_.class_embedding_dim},
               std::move(table)));
    low += config_.class_embedding_dim;
  }
  for (std::size_t s = stages; s-- > 0;) {
    const std::size_t skip = config_.level_width(s);
    decoders_.emplace_back(skip, low, skip, config_.expansion, registry_,
                           "decoder" + std::to_string(s), rng);
    low = skip;
  }
  head_.push_back(Dense::make(registry_, "head.hidden", config_.embed_dim,
                              config_.embed_dim, rng, true, true));
  classifier_ = Linear::make(registry_, "head.classifier", config_.embed_dim,
                             config_.num_classes, rng);
}

std::size_t Network::ref_block_count() const {
  std::size_t n = 0;
  for (const auto& r : ref_) n += r.depth();
  return n;
}

StageState Network::embed(ForwardContext& ctx, const InputBatch& input) {
  const std::size_t rows = input.batch * input.points;
  const std::size_t extra = config_.input_features;
  if (input.batch == 0 || input.points == 0) throw SizeError("empty input batch");
  if (input.positions.size() != rows) {
    throw DimensionError("input has " + std::to_string(input.positions.size()) +
                         " positions for " + std::to_string(input.batch) + " x " +
                         std::to_string(input.points) + " points");
  }
  if (input.features.size() != rows * extra) {
    throw DimensionError("input features: expected " + std::to_string(rows * extra) +
                         " values, got " + std::to_string(input.features.size()));
  }
  if (input.points < config_.min_points()) {
    throw SizeError("input has " + std::to_string(input.points) +
                    " points per cloud; the minimum is " +
                    std::to_string(config_.min_points()));
  }
  for (const Vec3& p : input.positions) {
    if (!std::isfinite(p[0]) || !std::isfinite(p[1]) || !std::isfinite(p[2])) {
      throw DataError("input positions must be finite");
    }
  }

  // Cloud-centered coordinates keep the embedding translation invariant.
  const std::size_t width = 3 + extra;
  std::vector<double> x(rows * width);
  for (std::size_t b = 0; b < input.batch; ++b) {
    Vec3 mean{0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < input.points; ++i) {
      for (std::size_t a = 0; a < 3; ++a) mean[a] += input.positions[b * input.points + i][a];
    }
    for (double& v : mean) v /= static_cast<double>(input.points);
    for (std::size_t i = 0; i < input.points; ++i) {
      const std::size_t r = b * input.points + i;
      for (std::size_t a = 0; a < 3; ++a) x[r * width + a] = input.positions[r][a] - mean[a];
      for (std::size_t f = 0; f < extra; ++f) {
        x[r * width + 3 + f] = input.features[r * extra + f];
      }
    }
  }
  StageState s;
  s.batch = input.batch;
  s.points = input.points;
  s.positions = input.positions;
  s.features = embedding_->forward(ctx, Tensor({rows, width}, std::move(x)));
  return s;
}

Tensor Network::forward(ForwardContext& ctx, const InputBatch& input) {
  Graph& g = ctx.graph;
  std::vector<StageState> levels;
  levels.push_back(embed(ctx, input));
  for (std::size_t s = 0; s < abs_.size(); ++s) {
    StageState down = abs_[s].forward(ctx, levels.back());
    levels.push_back(ref_[s].forward(ctx, down));
  }

  if (config_.task == Task::classify) {
    const StageState& top = levels.back();
    Tensor clouds = reshape(g, top.features, {top.batch, top.points, top.channels()});
    Tensor pooled = reduce(g, clouds, 1, Reduction::max);
    Tensor h = pooled;
    for (auto& layer : head_) h = layer.forward(ctx, h);
    return classifier_->forward(g, h);
  }

  StageState low = levels.back();
  if (config_.task == Task::partseg) {
    if (input.shape_categories.size() != input.batch) {
      throw DimensionError("partseg input needs one shape category per cloud");
    }
    std::vector<std::size_t> rows(low.rows());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const int cat = input.shape_categories[r / low.points];
      if (cat < 0 || static_cast<std::size_t>(cat) >= config_.num_shape_categories) {
        throw DataError("shape category " + std::to_string(cat) + " out of range");
      }
      rows[r] = static_cast<std::size_t>(cat);
    }
    Tensor emb = gather_rows(g, *class_table_, rows, {low.rows()});
    low.features = concat(g, {low.features, emb}, 1);
  }
  for (std::size_t d = 0; d < decoders_.size(); ++d) {
    const StageState& skip = levels[levels.size() - 2 - d];
    low = decoders_[d].forward(ctx, low, skip);
  }
  Tensor h = low.features;
  for (auto& layer : head_) h = layer.forward(ctx, h);
  return classifier_->forward(g, h);
}

CostReport Network::cost(std::size_t points) const {
  CostReport report;
  report.points = points;
  embedding_->account(report, "embed", cost_kind::kEmbedding, points);
  std::vector<std::size_t> sizes{points};
  for (std::size_t s = 0; s < abs_.size(); ++s) {
    const std::string name = "stage" + std::to_string(s + 1);
    abs_[s].account(report, name, sizes.back());
    sizes.push_back(abs_[s].output_points(sizes.back()));
    ref_[s].account(report, name, sizes.back());
  }
  if (config_.task == Task::classify) {
    for (const auto& layer : head_) layer.account(report, "head", cost_kind::kHead, 1);
    report.add("head", cost_kind::kHead, classifier_->param_count(),
               classifier_->in * classifier_->out);
    return report;
  }
  if (class_table_) {
    report.add("decoder", cost_kind::kEmbedding, class_table_->size(), 0);
  }
  for (std::size_t d = 0; d < decoders_.size(); ++d) {
    const std::size_t level = sizes.size() - 2 - d;
    decoders_[d].account(report, "decoder" + std::to_string(level), sizes[level]);
  }
  for (const auto& layer : head_) {
    layer.account(report, "head", cost_kind::kHead, points);
  }
  report.add("head", cost_kind::kHead, classifier_->param_count(),
             points * classifier_->in * classifier_->out);
  return report;
}

}  // namespace hpenet
