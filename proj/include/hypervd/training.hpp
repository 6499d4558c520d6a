#pragma once

// Weakly supervised MIL training: k-max pooling of snippet scores into a
// video score, binary cross-entropy against the video label, Adam with a
// per-epoch cosine-annealed learning rate.

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "hypervd/data_io.hpp"
#include "hypervd/model.hpp"

namespace hypervd::train {

using io::VideoBag;

struct TrainConfig {
  int epochs = 50;
  int batch_size = 128;  // videos per step
  double lr0 = 5e-4;
  int q = 16;            // k = floor(T/q) + 1
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;

  void validate() const;
  std::map<std::string, std::string> to_map() const;
  static TrainConfig from_map(const std::map<std::string, std::string>& kv);
};

// Mean of the k = min(floor(T/q) + 1, T) largest scores.
double topk_mean(const Vector& scores, int q);

// (1/N) sum_i [-y_i log s_i - (1 - y_i) log(1 - s_i)], logs clamped at 1e-12.
double mil_loss(const std::vector<double>& sbar, const std::vector<int>& labels);

struct Gradients {
  double loss = 0.0;
  std::vector<std::string> names;  // parameters(model) order
  std::vector<Matrix> values;
};

// Exact derivatives of the batch MIL loss with respect to every learnable
// scalar. Videos are run one by one (no padding) and their losses averaged.
// Throws NumericalError naming the parameter if a gradient is not finite.
Gradients gradients(const model::HyperVDModel& m, const std::vector<const VideoBag*>& batch, int q, nn::Mode mode,
                    std::mt19937_64* rng = nullptr);

// Batch MIL loss in eval mode (no dropout).
double batch_loss(const model::HyperVDModel& m, const std::vector<const VideoBag*>& batch, int q);

struct AdamState {
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  long step = 0;
};

AdamState init_adam(model::HyperVDModel& m);
// Bias-corrected Adam without weight decay.
void adam_step(model::HyperVDModel& m, AdamState& state, const Gradients& g, double lr, const TrainConfig& cfg);

// lr0 (1 + cos(pi epoch / epochs)) / 2, floored at 0.
double cosine_lr(int epoch, int epochs, double lr0);

struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double eval_ap = 0.0;  // NaN when the held-out set has no frame labels
};

struct TrainResult {
  model::HyperVDModel final_model;
  model::HyperVDModel best_model;  // highest held-out AP, first on ties
  int best_epoch = -1;
  double best_ap = 0.0;
  std::vector<EpochRecord> history;
};

// Deterministic in (configs, data). Throws ConfigError if the training set
// is empty or contains a single class.
TrainResult train(const model::ModelConfig& mcfg, const TrainConfig& tcfg, const std::vector<VideoBag>& train_set,
                  const std::vector<VideoBag>& eval_set);

// Eval-mode snippet scores.
Vector score_video(const model::HyperVDModel& m, const VideoBag& video);
// Frame-level AP over the concatenated frames of videos with frame labels.
double frame_ap(const model::HyperVDModel& m, const std::vector<VideoBag>& videos);

// "epoch,lr,train_loss,eval_ap" CSV.
void write_history(const std::filesystem::path& path, const std::vector<EpochRecord>& history);

struct GradCheckReport {
  std::size_t n_scalars = 0;
  std::size_t n_failed = 0;
  double max_rel_err = 0.0;
  std::string worst;  // "name[index]"
  double tolerance = 0.0;

  bool pass() const { return n_failed == 0; }
};

// Central differences with step h on every learnable scalar, dropout off.
// Relative error |a - n| / max(|a|, |n|, 1e-6).
GradCheckReport gradient_check(const model::HyperVDModel& m, const std::vector<const VideoBag*>& batch, int q,
                               double h = 1e-5, double tolerance = 1e-4);

}  // namespace hypervd::train
