// hypervd: data generation, training, scoring, evaluation, ablations and
// gradient verification for the hyperbolic audio-visual violence detector.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <fmt/core.h>

#include "hypervd/data_io.hpp"
#include "hypervd/error.hpp"
#include "hypervd/eval.hpp"
#include "hypervd/experiments.hpp"
#include "hypervd/model.hpp"
#include "hypervd/run_config.hpp"
#include "hypervd/training.hpp"

namespace fs = std::filesystem;
using namespace hypervd;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

std::vector<io::VideoBag> require_manifest(const fs::path& p, const char* what) {
  if (p.empty()) throw ConfigError(fmt::format("config: [data] {} is not set", what));
  return io::load_dataset(p);
}

int cmd_gen_synth(const io::SyntheticSpec& spec, const fs::path& out, bool write_config) {
  io::SyntheticDataset d = io::generate_synthetic(spec);
  io::write_dataset(d, out);
  if (write_config) {
    RunConfig rc;
    rc.model = experiments::desk_model_config(spec);
    rc.train = experiments::desk_train_config(spec.seed);
    rc.train_manifest = "train.manifest";
    rc.test_manifest = "test.manifest";
    rc.checkpoint = "hypervd.ckpt";
    rc.history = "history.csv";
    rc.scores_dir = "scores";
    std::ofstream(out / "run.ini") << rc.to_ini();
  }
  fmt::print("wrote {} train / {} test videos to {}\n", d.train.size(), d.test.size(), out.string());
  return 0;
}

int cmd_train(const fs::path& config) {
  const RunConfig rc = RunConfig::load(config);
  const auto train_set = require_manifest(rc.train_manifest, "train_manifest");
  std::vector<io::VideoBag> test_set;
  if (!rc.test_manifest.empty()) test_set = io::load_dataset(rc.test_manifest);
  const auto t0 = std::chrono::steady_clock::now();
  train::TrainResult r = train::train(rc.model, rc.train, train_set, test_set);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  model::save_checkpoint(r.best_model, rc.checkpoint);
  train::write_history(rc.history, r.history);
  const auto& last = r.history.back();
  fmt::print("epochs: {}\nfinal_loss: {:.6f}\nfinal_ap: {:.6f}\nbest_epoch: {}\nbest_ap: {:.6f}\nseconds: {:.2f}\n",
             r.history.size(), last.train_loss, last.eval_ap, r.best_epoch, r.best_ap, secs);
  fmt::print("checkpoint: {}\nhistory: {}\n", rc.checkpoint.string(), rc.history.string());
  return 0;
}

int cmd_score(const fs::path& checkpoint, const fs::path& manifest, const fs::path& out) {
  const model::HyperVDModel m = model::load_checkpoint(checkpoint);
  const auto videos = io::load_dataset(manifest);
  fs::create_directories(out);
  for (const auto& v : videos) {
    const Vector frames = io::expand_scores(train::score_video(m, v));
    std::ofstream f(out / (v.id + ".scores"), std::ios::trunc);
    if (!f) throw DataError(fmt::format("score: cannot write into '{}'", out.string()));
    for (Eigen::Index i = 0; i < frames.size(); ++i) f << fmt::format("{:.17g}\n", frames[i]);
  }
  fmt::print("scored {} videos into {}\n", videos.size(), out.string());
  return 0;
}

Vector read_scores(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw DataError(fmt::format("eval: missing score file '{}'", p.string()));
  std::vector<double> v;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      v.push_back(std::stod(line));
    } catch (const std::exception&) {
      throw FormatError(fmt::format("eval: bad score '{}' in '{}'", line, p.string()));
    }
  }
  return Eigen::Map<Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

int cmd_eval(const fs::path& scores_dir, const fs::path& manifest, const fs::path& curves_dir) {
  std::vector<std::string> ids;
  std::vector<Vector> scores;
  std::vector<std::vector<int>> labels;
  for (const auto& e : io::read_manifest(manifest)) {
    if (!e.frame_labels) throw DataError(fmt::format("eval: video '{}' has no frame labels", e.id));
    ids.push_back(e.id);
    scores.push_back(read_scores(scores_dir / (e.id + ".scores")));
    labels.push_back(io::read_frame_labels(*e.frame_labels));
  }
  const eval::EvalReport rep = eval::evaluate(ids, scores, labels);
  if (!curves_dir.empty()) {
    fs::create_directories(curves_dir);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      eval::export_curves(ids[i], scores[i], labels[i], curves_dir / (ids[i] + ".csv"));
    }
  }
  std::cout << rep.to_text();
  return 0;
}

int cmd_ablate(const fs::path& config, const std::string& axis) {
  const RunConfig rc = RunConfig::load(config);
  const auto train_set = require_manifest(rc.train_manifest, "train_manifest");
  const auto test_set = require_manifest(rc.test_manifest, "test_manifest");
  const auto rows = experiments::run_ablation(rc.model, rc.train, experiments::parse_axis(axis), train_set, test_set);
  std::cout << experiments::format_table(rows);
  return 0;
}

int cmd_gradcheck(const fs::path& config, int videos, std::uint64_t seed) {
  model::ModelConfig mcfg = experiments::toy_model_config();
  int q = 16;
  if (!config.empty()) {
    const RunConfig rc = RunConfig::load(config);
    mcfg = rc.model;
    q = rc.train.q;
  }
  mcfg.dropout = 0.0;
  const model::HyperVDModel m = model::init_model(mcfg, seed);
  const auto data = experiments::toy_videos(mcfg, videos, seed + 1);
  std::vector<const io::VideoBag*> batch;
  for (const auto& v : data) batch.push_back(&v);
  const train::GradCheckReport rep = train::gradient_check(m, batch, q);
  fmt::print("{}, max rel err {:.3e} {} {:.0e} over {} scalars (worst: {})\n", rep.pass() ? "PASS" : "FAIL",
             rep.max_rel_err, rep.pass() ? "<=" : ">", rep.tolerance, rep.n_scalars, rep.worst);
  return rep.pass() ? 0 : kExitNumerical;
}

int cmd_params(const fs::path& config) {
  model::ModelConfig mcfg;
  if (!config.empty()) mcfg = RunConfig::load(config).model;
  const model::HyperVDModel m = model::init_model(mcfg, 0);
  fmt::print("parameters: {}\n", model::count_parameters(m));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hyperbolic graph learning for weakly supervised audio-visual violence detection"};
  app.require_subcommand(1);

  io::SyntheticSpec spec;
  fs::path synth_out;
  bool write_config = false;
  auto* gen = app.add_subcommand("gen-synth", "Generate a synthetic audio-visual dataset with manifests");
  gen->add_option("--out", synth_out, "Output directory")->required();
  gen->add_option("--seed", spec.seed, "Random seed")->capture_default_str();
  gen->add_option("--train", spec.n_train, "Number of training videos")->capture_default_str();
  gen->add_option("--test", spec.n_test, "Number of test videos")->capture_default_str();
  gen->add_option("--t-min", spec.t_min, "Minimum snippets per video")->capture_default_str();
  gen->add_option("--t-max", spec.t_max, "Maximum snippets per video")->capture_default_str();
  gen->add_option("--visual-dim", spec.visual_dim, "Visual feature width D")->capture_default_str();
  gen->add_option("--audio-dim", spec.audio_dim, "Audio feature width d")->capture_default_str();
  gen->add_option("--separation", spec.separation, "Shift of the violent blob")->capture_default_str();
  gen->add_flag("--write-config", write_config, "Also write run.ini configured for this dataset");

  fs::path config;
  auto* trn = app.add_subcommand("train", "Train a model; writes the best checkpoint and the epoch history");
  trn->add_option("--config", config, "Run configuration (INI)")->required();

  fs::path checkpoint, manifest, out_dir;
  auto* score = app.add_subcommand("score", "Write per-video frame scores");
  score->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();
  score->add_option("--manifest", manifest, "Video manifest")->required();
  score->add_option("--out", out_dir, "Output directory for <id>.scores files")->required();

  fs::path scores_dir, curves_dir;
  auto* ev = app.add_subcommand("eval", "Frame-level average precision of score files");
  ev->add_option("--scores", scores_dir, "Directory of <id>.scores files")->required();
  ev->add_option("--manifest", manifest, "Manifest with frame-label paths")->required();
  ev->add_option("--curves", curves_dir, "Optional directory for per-video score curves (CSV)");

  std::string axis;
  auto* abl = app.add_subcommand("ablate", "Train and compare variants along one axis");
  abl->add_option("--config", config, "Run configuration (INI)")->required();
  abl->add_option("--axis", axis, "fusion | branch | geometry")->required()->check(
      CLI::IsMember({"fusion", "branch", "geometry"}));

  int gc_videos = 2;
  std::uint64_t gc_seed = 1;
  auto* gc = app.add_subcommand("gradcheck", "Compare analytic gradients with central finite differences");
  gc->add_option("--config", config, "Run configuration; defaults to the built-in toy model");
  gc->add_option("--videos", gc_videos, "Number of random toy videos")->capture_default_str();
  gc->add_option("--seed", gc_seed, "Seed for parameters and data")->capture_default_str();

  auto* prm = app.add_subcommand("params", "Count learnable parameters");
  prm->add_option("--config", config, "Run configuration; defaults to the full-scale model");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return cmd_gen_synth(spec, synth_out, write_config);
    if (*trn) return cmd_train(config);
    if (*score) return cmd_score(checkpoint, manifest, out_dir);
    if (*ev) return cmd_eval(scores_dir, manifest, curves_dir);
    if (*abl) return cmd_ablate(config, axis);
    if (*gc) return cmd_gradcheck(config, gc_videos, gc_seed);
    if (*prm) return cmd_params(config);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
