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

#include "hpenet/cli.hpp"

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "hpenet/analysis.hpp"
#include "hpenet/checkpoint.hpp"
#include "hpenet/error.hpp"
#include "hpenet/trainer.hpp"

namespace hpenet {

namespace {

struct ModelArgs {
  std::string preset = "s";
  std::string task = "classify";
  std::string config_file;
  std::vector<std::string> overrides;

  void attach(CLI::App* cmd) {
    cmd->add_option("--preset", preset, "s, b, l or xl")->capture_default_str();
    cmd->add_option("--task", task, "classify, segment or partseg")->capture_default_str();
    cmd->add_option("--config", config_file, "JSON config file");
    cmd->add_option("--set", overrides, "key=value override (repeatable)");
  }

  NetworkConfig build() const {
    NetworkConfig c = NetworkConfig::preset(preset, parse_task(task));
    if (!config_file.empty()) c = load_config_file(config_file, c);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) {
        throw ConfigError("--set expects key=value, got '" + kv + "'");
      }
      c.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    return c;
  }
};

struct DataArgs {
  std::string path;
  std::size_t samples = 0;
  std::size_t points = 0;
  double noise = -1.0;
  double test_fraction = -1.0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--data", path, "dataset file from gen-data");
    cmd->add_option("--samples", samples, "samples when generating on the fly");
    cmd->add_option("--points", points, "points per cloud when generating");
    cmd->add_option("--noise", noise, "noise sigma when generating");
    cmd->add_option("--test-fraction", test_fraction, "test split fraction");
  }

  SyntheticDataset load(Task task, std::uint64_t seed, std::size_t min_points) const {
    if (!path.empty()) return load_dataset(path);
    DatasetSpec spec = default_dataset_spec(task);
    spec.seed = seed;
    spec.samples = samples ? samples : 48;
    spec.points_per_cloud = points ? points : std::max<std::size_t>(256, min_points);
    if (noise >= 0.0) spec.noise_sigma = noise;
    if (test_fraction >= 0.0) spec.test_fraction = test_fraction;
    return generate_dataset(spec);
  }
};

std::string format_metrics(const Metrics& m) {
  std::ostringstream os;
  os.precision(6);
  os << std::fixed << "oa " << m.oa << ", macc " << m.macc << ", miou " << m.miou;
  return os.str();
}

std::vector<std::string> default_axis_values(const std::string& axis) {
  if (axis == "encoding.kind") return {"none", "pe_sin", "pe_mlp", "hpe_sin", "hpe_mlp"};
  if (axis == "encoding.ratio") return {"0.125", "0.25", "0.5", "1"};
  if (axis == "encoding.fusion") return {"add", "multiply"};
  if (axis == "encoding.coordinates") return {"relative", "absolute"};
  if (axis == "aggregation.placement") {
    return {"conv/preconv/preconv", "preconv/preconv/preconv", "conv/conv/conv",
            "conv_star/preconv/preconv", "proconv/proconv/proconv"};
  }
  throw ConfigError("unknown ablation axis '" + axis +
                    "' (encoding.kind, encoding.ratio, encoding.fusion, "
                    "encoding.coordinates, aggregation.placement)");
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

DatasetSpec default_dataset_spec(Task task) {
  DatasetSpec spec;
  switch (task) {
    case Task::classify:
      spec.families = {ShapeFamily::sphere, ShapeFamily::cube, ShapeFamily::cylinder};
      break;
    case Task::segment:
      spec.families = {ShapeFamily::cylinder};
      break;
    case Task::partseg:
      spec.families = {ShapeFamily::cylinder, ShapeFamily::torus};
      break;
  }
  return spec;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Point-cloud toolkit: data generation, training, cost analysis"};
  app.name("hpenet");
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);
  std::uint64_t seed = 0;
  app.add_option("--seed", seed, "random seed")->capture_default_str();

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset");
  std::string gen_out;
  std::string gen_task = "classify";
  std::string gen_families;
  DatasetSpec gen_spec;
  std::string gen_pose = "full";
  gen->add_option("--out", gen_out, "output file")->required();
  gen->add_option("--task", gen_task, "selects the default families");
  gen->add_option("--families", gen_families, "comma-separated shape families");
  gen->add_option("--samples", gen_spec.samples)->capture_default_str();
  gen->add_option("--points", gen_spec.points_per_cloud)->capture_default_str();
  gen->add_option("--noise", gen_spec.noise_sigma)->capture_default_str();
  gen->add_option("--test-fraction", gen_spec.test_fraction)->capture_default_str();
  gen->add_option("--pose", gen_pose, "none, vertical or full")->capture_default_str();
  gen->add_option("--seed", seed, "random seed");

  // train
  auto* train = app.add_subcommand("train", "train a model");
  ModelArgs train_model;
  DataArgs train_data;
  TrainOptions topt;
  std::string log_path, ckpt_path, resume_path;
  train_model.attach(train);
  train_data.attach(train);
  train->add_option("--epochs", topt.epochs)->capture_default_str();
  train->add_option("--schedule-epochs", topt.schedule_epochs, "cosine horizon (0: epochs)");
  train->add_option("--batch-size", topt.batch_size)->capture_default_str();
  train->add_option("--lr", topt.learning_rate)->capture_default_str();
  train->add_option("--weight-decay", topt.weight_decay)->capture_default_str();
  train->add_option("--smoothing", topt.label_smoothing)->capture_default_str();
  train->add_flag("--augment", topt.augment, "rotate about z and jitter");
  train->add_option("--stop-train", topt.stop_train_metric, "early-stop train metric");
  train->add_option("--stop-test", topt.stop_test_metric, "early-stop test metric");
  train->add_option("--log", log_path, "per-epoch CSV log");
  train->add_option("--checkpoint", ckpt_path, "checkpoint written after each epoch");
  train->add_option("--resume", resume_path, "continue from a checkpoint");
  train->add_option("--seed", seed, "random seed");

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  std::string eval_ckpt;
  DataArgs eval_data;
  std::string eval_split = "test";
  eval->add_option("--checkpoint", eval_ckpt)->required();
  eval_data.attach(eval);
  eval->add_option("--split", eval_split, "train, test or all")->capture_default_str();
  eval->add_option("--seed", seed, "random seed");

  // analyze
  auto* analyze = app.add_subcommand("analyze", "parameter and FLOP report");
  ModelArgs an_model;
  std::size_t an_points = 1024;
  std::string an_format = "csv";
  an_model.attach(analyze);
  analyze->add_option("--points", an_points)->capture_default_str();
  analyze->add_option("--format", an_format, "csv or text")->capture_default_str();
  analyze->add_option("--seed", seed, "random seed");

  // bench
  auto* bench = app.add_subcommand("bench", "inference throughput");
  ModelArgs bench_model;
  BenchmarkOptions bopt;
  double max_jitter = -1.0;
  bench_model.attach(bench);
  bench->add_option("--points", bopt.points)->capture_default_str();
  bench->add_option("--batch", bopt.batch)->capture_default_str();
  bench->add_option("--repeats", bopt.repeats)->capture_default_str();
  bench->add_option("--warmup", bopt.warmup)->capture_default_str();
  bench->add_option("--max-jitter", max_jitter, "fail when stddev/median exceeds this");
  bench->add_option("--seed", seed, "random seed");

  // ablate
  auto* ablate = app.add_subcommand("ablate", "sweep one configuration axis");
  ModelArgs ab_model;
  DataArgs ab_data;
  std::vector<std::string> axes;
  std::string ab_values;
  std::size_t ab_points = 1024;
  std::size_t ab_seeds = 1;
  TrainOptions ab_opt;
  ab_opt.epochs = 0;
  ab_model.attach(ablate);
  ab_data.attach(ablate);
  ablate->add_option("--axis", axes, "axis to sweep (repeatable)")->required();
  ablate->add_option("--values", ab_values, "comma-separated values (single axis)");
  ablate->add_option("--cost-points", ab_points, "points for the FLOP column")
      ->capture_default_str();
  ablate->add_option("--epochs", ab_opt.epochs, "train each cell when > 0")
      ->capture_default_str();
  ablate->add_option("--runs", ab_seeds, "seeds per cell when training")
      ->capture_default_str();
  ablate->add_option("--batch-size", ab_opt.batch_size)->capture_default_str();
  ablate->add_option("--lr", ab_opt.learning_rate)->capture_default_str();
  ablate->add_option("--seed", seed, "random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gen->parsed()) {
      DatasetSpec spec = default_dataset_spec(parse_task(gen_task));
      spec.samples = gen_spec.samples;
      spec.points_per_cloud = gen_spec.points_per_cloud;
      spec.noise_sigma = gen_spec.noise_sigma;
      spec.test_fraction = gen_spec.test_fraction;
      spec.seed = seed;
      if (gen_pose == "none") {
        spec.pose = PoseMode::none;
      } else if (gen_pose == "vertical") {
        spec.pose = PoseMode::vertical;
      } else if (gen_pose == "full") {
        spec.pose = PoseMode::full;
      } else {
        throw ConfigError("--pose expects none, vertical or full");
      }
      if (!gen_families.empty()) {
        spec.families.clear();
        for (const auto& f : split_list(gen_families)) {
          spec.families.push_back(parse_shape_family(f));
        }
      }
      SyntheticDataset data = generate_dataset(spec);
      save_dataset(data, gen_out);
      out << "wrote " << data.samples.size() << " samples to " << gen_out << "\n";
      return kExitOk;
    }

    if (train->parsed()) {
      NetworkConfig config = train_model.build();
      topt.seed = seed;
      SyntheticDataset data = train_data.load(config.task, seed, config.min_points());
      fit_config_to_dataset(config, data);
      Trainer trainer(config, topt, data);
      if (!resume_path.empty()) trainer.restore(load_checkpoint(resume_path));
      std::ofstream log;
      if (!log_path.empty()) {
        const bool append = !resume_path.empty();
        log.open(log_path, append ? std::ios::app : std::ios::trunc);
        if (!log) throw DataError("cannot write '" + log_path + "'");
        if (!append) log << epoch_csv_header();
      }
      out << epoch_csv_header();
      trainer.run([&](const EpochRecord& rec) {
        const std::string row = epoch_csv_row(rec);
        out << row;
        if (log.is_open()) log << row << std::flush;
        if (!ckpt_path.empty()) save_checkpoint(trainer.checkpoint(), ckpt_path);
      });
      return kExitOk;
    }

    if (eval->parsed()) {
      Checkpoint ckpt = load_checkpoint(eval_ckpt);
      NetworkConfig config = NetworkConfig::from_json(ckpt.config_json);
      SyntheticDataset data = eval_data.load(config.task, seed, config.min_points());
      TrainOptions opts = TrainOptions::from_json(ckpt.training_json);
      opts.epochs = 0;
      Trainer trainer(config, opts, data);
      restore_state(trainer.network(), nullptr, ckpt);
      std::vector<std::size_t> idx;
      if (eval_split == "train") {
        idx = data.train_indices();
      } else if (eval_split == "test") {
        idx = data.test_indices();
      } else if (eval_split == "all") {
        idx = data.train_indices();
        const auto t = data.test_indices();
        idx.insert(idx.end(), t.begin(), t.end());
      } else {
        throw ConfigError("--split expects train, test or all");
      }
      if (idx.empty()) throw DataError("selected split is empty");
      out << eval_split << ": " << format_metrics(trainer.evaluate(idx)) << "\n";
      return kExitOk;
    }

    if (analyze->parsed()) {
      NetworkConfig config = an_model.build();
      Network model(config, seed);
      CostReport report = count_flops(model, an_points);
      if (an_format == "csv") {
        out << report.to_csv();
      } else if (an_format == "text") {
        out << report.to_text();
      } else {
        throw ConfigError("--format expects csv or text");
      }
      return kExitOk;
    }

    if (bench->parsed()) {
      NetworkConfig config = bench_model.build();
      Network model(config, seed);
      bopt.seed = seed;
      BenchmarkResult r = benchmark_throughput(model, bopt);
      out << r.to_text();
      if (max_jitter >= 0.0 && r.jitter() > max_jitter) {
        err << "jitter " << r.jitter() << " exceeds bound " << max_jitter << "\n";
        return kExitNumeric;
      }
      return kExitOk;
    }

    if (ablate->parsed()) {
      const NetworkConfig base = ab_model.build();
      if (!ab_values.empty() && axes.size() != 1) {
        throw ConfigError("--values needs exactly one --axis");
      }
      std::optional<SyntheticDataset> data;
      if (ab_opt.epochs > 0) data = ab_data.load(base.task, seed, base.min_points());
      out << "axis,value,seed,params,flops,train_metric,test_metric\n";
      for (const auto& axis : axes) {
        const auto values = ab_values.empty() ? default_axis_values(axis)
                                              : split_list(ab_values);
        for (const auto& value : values) {
          NetworkConfig config = base;
          config.set(axis, value);
          if (data) fit_config_to_dataset(config, *data);
          Network model(config, seed);
          const CostReport cost = count_flops(model, ab_points);
          const std::size_t runs = ab_opt.epochs > 0 ? ab_seeds : 1;
          for (std::size_t r = 0; r < runs; ++r) {
            out << axis << "," << value << "," << seed + r << ","
                << cost.total_params() << "," << cost.total_flops() << ",";
            if (data) {
              TrainOptions o = ab_opt;
              o.seed = seed + r;
              Trainer trainer(config, o, *data);
              const auto log = trainer.run();
              char buf[64];
              std::snprintf(buf, sizeof buf, "%.6f,%.6f",
                            log.back().train_metric(config.task),
                            log.back().test_metric(config.task));
              out << buf;
            } else {
              out << ",";
            }
            out << "\n";
          }
        }
      }
      return kExitOk;
    }
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace hpenet
