#pragma once

// Ablation sweeps and the small configuration used for gradient checks.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "hypervd/training.hpp"

namespace hypervd::experiments {

enum class AblationAxis { fusion, branch, geometry };

AblationAxis parse_axis(std::string_view name);

struct AblationRow {
  std::string variant;
  double ap = 0.0;
  std::size_t parameters = 0;
};

// fusion:   concat, additive, gated, bilinear_concat, detour
// branch:   hfsg_only, htrg_only, both
// geometry: euclidean, hyperbolic
// Each variant is trained from the same base configs and scored by
// frame-level AP on `test`.
std::vector<AblationRow> run_ablation(const model::ModelConfig& base, const train::TrainConfig& tcfg,
                                      AblationAxis axis, const std::vector<io::VideoBag>& train_set,
                                      const std::vector<io::VideoBag>& test);

std::string format_table(const std::vector<AblationRow>& rows);

// Settings for the small synthetic benchmark: fusion hidden 32, dropout
// off. The full-scale defaults (dropout 0.6, one step per epoch at batch
// 128) do not train a model this small.
model::ModelConfig desk_model_config(const io::SyntheticSpec& spec);
// Batch 8, lr 1e-3, otherwise the defaults.
train::TrainConfig desk_train_config(std::uint64_t seed);

// D=8, d=4, fusion hidden 8, hidden 3, both branches, dropout off.
model::ModelConfig toy_model_config();

// Random toy videos of T=5 snippets, labels alternating 1, 0, 1, ...
std::vector<io::VideoBag> toy_videos(const model::ModelConfig& cfg, int count, std::uint64_t seed);

}  // namespace hypervd::experiments
