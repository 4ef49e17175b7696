// SPDX-License-Identifier: Apache-2.0
#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "pgformer/checkpoint.hpp"
#include "pgformer/data.hpp"
#include "pgformer/errors.hpp"
#include "pgformer/evaluation.hpp"
#include "pgformer/gradcheck.hpp"
#include "pgformer/synth.hpp"

namespace pgformer::cli {

namespace fs = std::filesystem;

namespace {

/// Bad invocation or configuration; maps to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string resolve(const std::string& path, const std::string& base) {
  if (path.empty() || base.empty() || fs::path(path).is_absolute()) return path;
  return (fs::path(base) / path).lexically_normal().string();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw std::runtime_error("cannot create output directory " + dir);
}

MotionFile load_data_file(const std::string& path, const char* what) {
  if (path.empty()) throw UsageError(std::string("no ") + what + " path given");
  if (!fs::exists(path)) throw UsageError(std::string(what) + " file not found: " + path);
  return load_scene_file(path);
}

void check_compatible(const PGformerConfig& model, const MotionFile& data, const std::string& path) {
  if (data.skeleton.joint_count() != model.joints) {
    throw UsageError("skeleton mismatch: model expects J=" + std::to_string(model.joints) + ", " + path + " has J=" +
                     std::to_string(data.skeleton.joint_count()));
  }
  if (data.fps != model.fps) {
    throw UsageError("frame-rate mismatch: model expects " + format_double(model.fps) + " fps, " + path + " has " +
                     format_double(data.fps));
  }
}

struct Dataset {
  Skeleton skeleton;
  std::vector<MotionSequence> train;
  std::vector<MotionSequence> test;
};

Dataset load_dataset(const RunConfig& cfg, std::uint64_t split_seed) {
  MotionFile main = load_data_file(cfg.data, "data");
  check_compatible(cfg.model, main, cfg.data);
  Dataset d;
  d.skeleton = main.skeleton;
  if (!cfg.test_data.empty()) {
    MotionFile test = load_data_file(cfg.test_data, "test data");
    check_compatible(cfg.model, test, cfg.test_data);
    if (test.skeleton != main.skeleton) throw UsageError("data and test data use different skeletons");
    d.train = std::move(main.sequences);
    d.test = std::move(test.sequences);
    return d;
  }
  SplitOptions opt;
  opt.mode = parse_split_mode(cfg.split);
  opt.test_fraction = cfg.test_fraction;
  opt.test_labels = cfg.test_labels;
  opt.seed = split_seed;
  DataSplit s = split(main.sequences, opt);
  d.train = std::move(s.train);
  d.test = std::move(s.test);
  return d;
}

std::vector<Sample> training_windows(const std::vector<MotionSequence>& seqs, const PGformerConfig& m,
                                     std::size_t stride) {
  std::vector<Sample> out;
  for (const auto& s : seqs) {
    auto w = make_windows(s.scene, m.input_frames, m.output_frames, stride);
    out.insert(out.end(), std::make_move_iterator(w.begin()), std::make_move_iterator(w.end()));
  }
  return out;
}

void check_horizons(const RunConfig& cfg) {
  if (cfg.horizons.empty()) throw UsageError("no evaluation horizons given");
  for (std::size_t i = 0; i < cfg.horizons.size(); ++i) {
    if (!(cfg.horizons[i] > 0.0)) throw UsageError("horizons must be positive");
    if (i > 0 && !(cfg.horizons[i] > cfg.horizons[i - 1])) throw UsageError("horizons must be strictly increasing");
    if (cfg.horizons[i] > cfg.max_horizon + 1e-12) {
      throw UsageError("horizon " + format_double(cfg.horizons[i]) + " s exceeds --max-horizon " +
                       format_double(cfg.max_horizon) + " s");
    }
  }
}

std::string epoch_line(const EpochLog& e, std::size_t epochs) {
  char buf[200];
  std::snprintf(buf, sizeof(buf), "epoch %zu/%zu  lr %.3e  loss %.4f  L_f %.3f  L_l %.3f  mpjpe %.3f\n", e.epoch,
                epochs, e.learning_rate, e.total, e.follower, e.leader, e.mpjpe);
  return buf;
}

// Perturbs every non-leader history and reports the largest change of the
// leader's forecast.
double cross_person_response(const PGformer& model, std::uint64_t seed) {
  const PGformerConfig& c = model.config();
  Rng rng(seed);
  std::vector<Tensor> inputs{normal({c.input_frames, c.joints, 3}, 300.0, rng),
                             normal({c.input_frames, c.joints, 3}, 300.0, rng)};
  Tape a(false);
  const Tensor base = model.forward(a, inputs)[0].value();
  inputs[1] = inputs[1] + normal({c.input_frames, c.joints, 3}, 50.0, rng);
  Tape b(false);
  return max_abs_diff(base, model.forward(b, inputs)[0].value());
}

struct Stats {
  double mean = 0, std = 0;
};

Stats stats(const std::vector<double>& v) {
  Stats s;
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    for (double x : v) s.std += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(s.std / static_cast<double>(v.size() - 1));
  }
  return s;
}

struct Overrides {
  std::string config_path;
  std::vector<std::uint64_t> seeds;
  std::string out;
  std::string metric;
  std::vector<double> horizons;
  std::vector<std::string> variants;
  double max_horizon = -1.0;
  std::size_t epochs = 0;
  bool no_dct = false, no_xqa = false, no_proxy = false;
  std::string proxy_mode;
  std::string data;
};

void add_common(CLI::App* cmd, Overrides& o, bool need_config) {
  auto* c = cmd->add_option("--config", o.config_path, "run configuration file");
  if (need_config) c->required();
  cmd->add_option("--seed", o.seeds, "seed (repeat or use --seeds for several)")->expected(1);
  cmd->add_option("--seeds", o.seeds, "comma-separated seed list")->delimiter(',');
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--epochs", o.epochs, "override the epoch count");
  cmd->add_flag("--no-dct", o.no_dct, "disable the DCT/IDCT stages");
  cmd->add_flag("--no-xqa", o.no_xqa, "disable cross-query attention");
  cmd->add_flag("--no-proxy", o.no_proxy, "disable the proxy");
  cmd->add_option("--proxy-mode", o.proxy_mode, "bilinear, gate_mul or gate_add");
}

RunConfig resolve_config(const Overrides& o) {
  RunConfig cfg = o.config_path.empty() ? RunConfig{} : RunConfig::load(o.config_path);
  if (!o.seeds.empty()) cfg.seeds = o.seeds;
  if (!o.out.empty()) cfg.out = o.out;
  if (!o.metric.empty()) cfg.metric = o.metric;
  if (!o.horizons.empty()) cfg.horizons = o.horizons;
  if (!o.variants.empty()) cfg.variants = o.variants;
  if (o.max_horizon > 0.0) cfg.max_horizon = o.max_horizon;
  if (o.epochs > 0) cfg.train.epochs = o.epochs;
  if (o.no_dct) cfg.model.use_dct = false;
  if (o.no_xqa) cfg.model.use_xqa = false;
  if (o.no_proxy) cfg.model.use_proxy = false;
  if (!o.proxy_mode.empty()) cfg.model.proxy_mode = parse_proxy_mode(o.proxy_mode);
  if (!o.data.empty()) cfg.data = o.data;
  cfg.validate();
  return cfg;
}

int cmd_train(const Overrides& o, std::ostream& out) {
  RunConfig cfg = resolve_config(o);
  const std::uint64_t seed = cfg.seeds.front();
  Dataset data = load_dataset(cfg, seed);
  std::vector<Sample> windows = training_windows(data.train, cfg.model, cfg.stride);
  if (windows.empty()) throw UsageError("no training window fits the data (need T+K frames per sequence)");
  ensure_dir(cfg.out);
  const fs::path dir(cfg.out);
  write_text(dir / "config.txt", cfg.to_text());

  TrainConfig tc = cfg.train;
  tc.seed = seed;
  PGformer model(cfg.model, seed);
  out << "training on " << windows.size() << " windows from " << data.train.size() << " sequences, "
      << model.parameters().scalar_count() << " parameters\n";
  double best = std::numeric_limits<double>::infinity();
  TrainResult result = train(model, windows, data.skeleton, tc, [&](const EpochLog& e, const PGformer& m) {
    out << epoch_line(e, tc.epochs);
    if (e.mpjpe < best) {
      best = e.mpjpe;
      write_checkpoint((dir / "best.ckpt").string(), m.to_checkpoint());
    }
  });
  write_checkpoint((dir / "final.ckpt").string(), model.to_checkpoint());
  write_text(dir / "loss.txt", format_loss_table(result.log));
  write_text(dir / "loss.csv", format_loss_records(result.log));
  out << "wrote " << (dir / "final.ckpt").string() << " and " << (dir / "best.ckpt").string() << "\n";
  return kExitOk;
}

struct PredictArgs {
  std::string checkpoint, data, out;
  std::size_t horizon = 0;
};

int cmd_predict(const PredictArgs& a, std::ostream& out) {
  if (!fs::exists(a.checkpoint)) throw UsageError("checkpoint not found: " + a.checkpoint);
  PGformer model = PGformer::from_checkpoint(read_checkpoint(a.checkpoint));
  MotionFile data = load_data_file(a.data, "data");
  check_compatible(model.config(), data, a.data);
  const std::size_t horizon = a.horizon == 0 ? model.config().output_frames : a.horizon;
  MotionFile result;
  result.fps = data.fps;
  result.skeleton = data.skeleton;
  for (const auto& s : data.sequences) {
    if (s.scene.frame_count() < model.config().input_frames) {
      out << "skipping " << s.name << ": shorter than " << model.config().input_frames << " frames\n";
      continue;
    }
    Forecast f = model.predict_recursive(s.scene, horizon, data.skeleton);
    result.sequences.push_back({s.name + "_pred", s.label, std::move(f.frames)});
  }
  save_scene_file(a.out, result);
  out << "wrote " << result.sequences.size() << " forecasts of " << horizon << " frames to " << a.out << "\n";
  return kExitOk;
}

struct EvalArgs {
  Overrides o;
  std::string checkpoint;
  bool identity = false;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  RunConfig cfg = resolve_config(a.o);
  check_horizons(cfg);
  if (cfg.metric != "jme" && cfg.metric != "ame" && cfg.metric != "both") {
    throw UsageError("--metric must be jme, ame or both");
  }
  if (!fs::exists(a.checkpoint)) throw UsageError("checkpoint not found: " + a.checkpoint);
  PGformer model = PGformer::from_checkpoint(read_checkpoint(a.checkpoint));
  cfg.model = model.config();

  std::vector<MotionSequence> sequences;
  Skeleton skeleton;
  if (!a.o.data.empty()) {
    MotionFile f = load_data_file(cfg.data, "data");
    check_compatible(cfg.model, f, cfg.data);
    skeleton = f.skeleton;
    sequences = std::move(f.sequences);
  } else {
    Dataset d = load_dataset(cfg, cfg.seeds.front());
    skeleton = d.skeleton;
    sequences = std::move(d.test);
  }

  EvaluationOptions eo;
  eo.horizons = cfg.horizons;
  eo.stride = cfg.eval_stride;
  eo.similarity = cfg.similarity;
  eo.identity = a.identity;
  EvaluationResult r = evaluate_model(model, sequences, skeleton, eo);

  std::vector<std::pair<std::string, MetricReport>> rows = r.by_label;
  rows.emplace_back("average", r.overall);
  const std::string table = format_metric_table(rows, cfg.metric != "ame", cfg.metric != "jme");
  out << table;
  out << r.windows << " windows, " << r.model_passes << " model passes\n";
  if (!a.o.out.empty()) {
    ensure_dir(cfg.out);
    const fs::path dir(cfg.out);
    write_text(dir / "metrics.txt", table);
    write_text(dir / "metrics.csv", format_metric_records(rows));
    write_text(dir / "per_joint.csv", format_per_joint_csv(r.overall, skeleton));
  }
  return kExitOk;
}

int cmd_gradcheck(const std::string& size, std::uint64_t seed, std::ostream& out) {
  if (size != "tiny") throw UsageError("--size supports only 'tiny'");
  const PGformerConfig cfg = tiny_config();
  SyntheticConfig sc;
  sc.n_sequences = 1;
  sc.joints = cfg.joints;
  sc.frames = cfg.input_frames + cfg.output_frames;
  sc.seed = seed;
  const Skeleton skeleton = Skeleton::generic(cfg.joints);
  const MotionSequence seq = synth_coupled(sc).front();
  const Sample sample{seq.scene.slice(0, cfg.input_frames), seq.scene.slice(cfg.input_frames, cfg.output_frames)};
  PGformer model(cfg, seed);
  GradcheckReport report = gradcheck(model, prepare_sample(sample, cfg, skeleton));
  out << format_gradcheck_report(report);
  return report.passed ? kExitOk : kExitFailure;
}

int cmd_ablate(const Overrides& o, std::ostream& out) {
  RunConfig cfg = resolve_config(o);
  check_horizons(cfg);
  if (cfg.variants.empty()) cfg.variants = {"bt", "xqa", "xqa+p", "xqa+p+g", "no_dct", "gate_mul", "gate_add"};
  for (const auto& v : cfg.variants) apply_variant(cfg.model, v);  // validates names up front

  Dataset data = load_dataset(cfg, cfg.seeds.front());
  std::vector<Sample> windows = training_windows(data.train, cfg.model, cfg.stride);
  if (windows.empty()) throw UsageError("no training window fits the data");
  if (data.test.empty()) throw UsageError("the split left no test sequences");
  ensure_dir(cfg.out);
  const fs::path dir(cfg.out);
  write_text(dir / "config.txt", cfg.to_text());

  EvaluationOptions eo;
  eo.horizons = cfg.horizons;
  eo.stride = cfg.eval_stride;
  eo.similarity = cfg.similarity;

  // variant -> horizon index -> per-seed JME
  std::map<std::string, std::vector<std::vector<double>>> jme, ame;
  std::string records = "horizon,metric,variant,seed,value\n";
  std::string runs = "variant,seed,epochs,final_loss,final_mpjpe,cross_person_response\n";
  std::size_t run_count = 0;
  for (const auto& variant : cfg.variants) {
    const PGformerConfig mc = apply_variant(cfg.model, variant);
    jme[variant].assign(cfg.horizons.size(), {});
    ame[variant].assign(cfg.horizons.size(), {});
    for (std::uint64_t seed : cfg.seeds) {
      TrainConfig tc = cfg.train;
      tc.seed = seed;
      PGformer model(mc, seed);
      TrainResult tr = train(model, windows, data.skeleton, tc);
      ++run_count;
      const double response = cross_person_response(model, seed + 1);
      if (!mc.use_xqa && response != 0.0) {
        throw std::runtime_error("variant " + variant + " leaks information across persons");
      }
      EvaluationResult er = evaluate_model(model, data.test, data.skeleton, eo);
      for (std::size_t h = 0; h < cfg.horizons.size(); ++h) {
        jme[variant][h].push_back(er.overall.jme[h]);
        ame[variant][h].push_back(er.overall.ame[h]);
        records += format_double(cfg.horizons[h]) + ",jme," + variant + "," + std::to_string(seed) + "," +
                   format_double(er.overall.jme[h]) + "\n";
        records += format_double(cfg.horizons[h]) + ",ame," + variant + "," + std::to_string(seed) + "," +
                   format_double(er.overall.ame[h]) + "\n";
      }
      runs += variant + "," + std::to_string(seed) + "," + std::to_string(tc.epochs) + "," +
              format_double(tr.log.back().total) + "," + format_double(tr.log.back().mpjpe) + "," +
              format_double(response) + "\n";
      out << "run " << run_count << ": variant " << variant << ", seed " << seed << ", final loss "
          << format_double(tr.log.back().total) << ", isolation "
          << (mc.use_xqa ? "n/a" : "exact") << "\n";
    }
  }

  const bool with_std = cfg.seeds.size() >= 2;
  std::string table;
  char cell[64];
  for (const auto& [title, values] : {std::pair{"JME (mm)", &jme}, std::pair{"AME (mm)", &ame}}) {
    table += std::string(title) + ", " + std::to_string(cfg.seeds.size()) + " seed(s)\n";
    std::snprintf(cell, sizeof(cell), "%-10s", "variant");
    table += cell;
    for (double h : cfg.horizons) {
      std::snprintf(cell, sizeof(cell), with_std ? " %16.2fs" : " %9.2fs", h);
      table += cell;
    }
    table += "\n";
    for (const auto& variant : cfg.variants) {
      std::snprintf(cell, sizeof(cell), "%-10s", variant.c_str());
      table += cell;
      for (const auto& per_seed : (*values)[variant]) {
        const Stats s = stats(per_seed);
        if (with_std) std::snprintf(cell, sizeof(cell), " %8.1f ± %6.1f", s.mean, s.std);
        else std::snprintf(cell, sizeof(cell), " %10.1f", s.mean);
        table += cell;
      }
      table += "\n";
    }
    table += "\n";
  }
  out << table;
  write_text(dir / "ablation.txt", table);
  write_text(dir / "ablation.csv", records);
  write_text(dir / "runs.csv", runs);
  out << run_count << " training runs logged to " << (dir / "runs.csv").string() << "\n";
  return kExitOk;
}

int cmd_synth(const std::string& config_path, const std::string& out_path, const std::vector<std::uint64_t>& seed,
              std::ostream& out) {
  SyntheticConfig sc;
  if (!config_path.empty()) {
    if (!fs::exists(config_path)) throw UsageError("config file not found: " + config_path);
    ConfigReader r = ConfigReader::load(config_path);
    sc.read(r);
    r.finish();
  }
  if (!seed.empty()) sc.seed = seed.front();
  sc.validate();
  const MotionFile f = synth_motion_file(sc);
  try {
    save_scene_file(out_path, f);
  } catch (const FormatError& e) {
    throw std::runtime_error(e.what());
  }
  std::size_t frames = 0;
  for (const auto& s : f.sequences) frames += s.scene.frame_count();
  out << "wrote " << f.sequences.size() << " sequences, " << frames << " frames in total, to " << out_path << "\n";
  return kExitOk;
}

}  // namespace

RunConfig RunConfig::load(const std::string& path) {
  if (!fs::exists(path)) throw UsageError("config file not found: " + path);
  std::ifstream f(path, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  RunConfig cfg = parse(ss.str(), fs::path(path).parent_path().string());
  return cfg;
}

RunConfig RunConfig::parse(const std::string& text, const std::string& base_dir) {
  ConfigReader r = ConfigReader::parse(text, "run config");
  RunConfig c;
  c.model.read(r);
  c.train.read(r);
  r.read("data", c.data);
  r.read("test_data", c.test_data);
  r.read("out", c.out);
  r.read("seeds", c.seeds);
  r.read("split", c.split);
  r.read("test_fraction", c.test_fraction);
  r.read("test_labels", c.test_labels);
  r.read("stride", c.stride);
  r.read("eval_stride", c.eval_stride);
  r.read("horizons", c.horizons);
  r.read("max_horizon", c.max_horizon);
  r.read("metric", c.metric);
  r.read("variants", c.variants);
  r.read("similarity", c.similarity);
  r.finish();
  c.data = resolve(c.data, base_dir);
  c.test_data = resolve(c.test_data, base_dir);
  c.out = resolve(c.out, base_dir);
  return c;
}

std::string RunConfig::to_text() const {
  ConfigWriter w;
  w.write("data", data);
  w.write("test_data", test_data);
  w.write("out", out);
  w.write("seeds", seeds);
  w.write("split", split);
  w.write("test_fraction", test_fraction);
  std::string labels;
  for (const auto& l : test_labels) labels += (labels.empty() ? "" : ",") + l;
  w.write("test_labels", labels);
  w.write("stride", stride);
  w.write("eval_stride", eval_stride);
  w.write("horizons", horizons);
  w.write("max_horizon", max_horizon);
  w.write("metric", metric);
  std::string vs;
  for (const auto& v : variants) vs += (vs.empty() ? "" : ",") + v;
  w.write("variants", vs);
  w.write("similarity", similarity);
  return "# model\n" + model.to_text() + "# training\n" + train.to_text() + "# run\n" + w.text();
}

void RunConfig::validate() const {
  model.validate();
  train.validate();
  if (seeds.empty()) throw ConfigError("run config: seeds must not be empty");
  if (stride == 0) throw ConfigError("run config: stride must be positive");
  if (!(max_horizon > 0.0)) throw ConfigError("run config: max_horizon must be positive");
  parse_split_mode(split);
}

const std::vector<std::string>& variant_names() {
  static const std::vector<std::string> names{"bt",     "bt+g",   "xqa",      "xqa+p",
                                              "xqa+p+g", "no_dct", "gate_mul", "gate_add"};
  return names;
}

PGformerConfig apply_variant(PGformerConfig c, const std::string& v) {
  auto full = [&c] {
    c.use_xqa = true;
    c.use_proxy = true;
    c.proxy_mode = ProxyMode::bilinear;
    c.use_gravity_loss = true;
    c.use_dct = true;
  };
  if (v == "bt") {
    c.use_xqa = false;
    c.use_gravity_loss = false;
  } else if (v == "bt+g") {
    c.use_xqa = false;
    c.use_gravity_loss = true;
  } else if (v == "xqa") {
    c.use_xqa = true;
    c.use_proxy = false;
    c.use_gravity_loss = false;
  } else if (v == "xqa+p") {
    full();
    c.use_gravity_loss = false;
  } else if (v == "xqa+p+g") {
    full();
  } else if (v == "no_dct") {
    full();
    c.use_dct = false;
  } else if (v == "gate_mul") {
    full();
    c.proxy_mode = ProxyMode::gate_multiply;
  } else if (v == "gate_add") {
    full();
    c.proxy_mode = ProxyMode::gate_add;
  } else {
    std::string valid;
    for (const auto& n : variant_names()) valid += (valid.empty() ? "" : ", ") + n;
    throw ConfigError("unknown variant '" + v + "' (valid: " + valid + ")");
  }
  return c;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"PGformer multi-person motion forecasting"};
  app.require_subcommand(1);

  Overrides train_o, ablate_o;
  EvalArgs eval_a;
  PredictArgs predict_a;
  std::string gc_size = "tiny";
  std::uint64_t gc_seed = 0;
  std::string synth_config, synth_out;
  std::vector<std::uint64_t> synth_seed;

  auto* train_cmd = app.add_subcommand("train", "train a model and write checkpoints plus a loss log");
  add_common(train_cmd, train_o, true);

  auto* predict_cmd = app.add_subcommand("predict", "forecast every sequence of a motion file");
  predict_cmd->add_option("--checkpoint", predict_a.checkpoint, "model checkpoint")->required();
  predict_cmd->add_option("--data", predict_a.data, "input motion file")->required();
  predict_cmd->add_option("--out", predict_a.out, "output motion file")->required();
  predict_cmd->add_option("--horizon", predict_a.horizon, "frames to forecast (default K)");

  auto* eval_cmd = app.add_subcommand("eval", "JME/AME tables for a checkpoint");
  add_common(eval_cmd, eval_a.o, false);
  eval_cmd->add_option("--checkpoint", eval_a.checkpoint, "model checkpoint")->required();
  eval_cmd->add_option("--data", eval_a.o.data, "motion file to evaluate (overrides the config split)");
  eval_cmd->add_option("--metric", eval_a.o.metric, "jme, ame or both");
  eval_cmd->add_option("--horizons", eval_a.o.horizons, "comma-separated horizons in seconds")->delimiter(',');
  eval_cmd->add_option("--max-horizon", eval_a.o.max_horizon, "largest accepted horizon in seconds");
  eval_cmd->add_flag("--identity", eval_a.identity, "score the ground truth against itself");

  auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference check of every parameter group");
  grad_cmd->add_option("--size", gc_size, "model size (tiny)");
  grad_cmd->add_option("--seed", gc_seed, "seed for weights and data");

  auto* ablate_cmd = app.add_subcommand("ablate", "train and compare ablation variants over seeds");
  add_common(ablate_cmd, ablate_o, true);
  ablate_cmd->add_option("--variants", ablate_o.variants, "comma-separated variant names")->delimiter(',');
  ablate_cmd->add_option("--horizons", ablate_o.horizons, "comma-separated horizons in seconds")->delimiter(',');
  ablate_cmd->add_option("--max-horizon", ablate_o.max_horizon, "largest accepted horizon in seconds");

  auto* synth_cmd = app.add_subcommand("synth", "write a lag-coupled synthetic motion file");
  synth_cmd->add_option("--config", synth_config, "synthetic generator settings");
  synth_cmd->add_option("--out", synth_out, "output motion file")->required();
  synth_cmd->add_option("--seed", synth_seed, "generator seed")->expected(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*train_cmd) return cmd_train(train_o, out);
    if (*predict_cmd) return cmd_predict(predict_a, out);
    if (*eval_cmd) return cmd_eval(eval_a, out);
    if (*grad_cmd) return cmd_gradcheck(gc_size, gc_seed, out);
    if (*ablate_cmd) return cmd_ablate(ablate_o, out);
    if (*synth_cmd) return cmd_synth(synth_config, synth_out, synth_seed, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace pgformer::cli
