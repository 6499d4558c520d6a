#pragma once

#include <filesystem>
#include <string>

#include "hypervd/model.hpp"
#include "hypervd/training.hpp"

namespace hypervd {

// INI-style run configuration:
//
//   [model]   fusion, visual_dim, audio_dim, fusion_hidden, hidden, layers,
//             curvature, tau, gamma, epsilon, dropout, leaky_slope, hfsg,
//             htrg, geometry
//   [train]   epochs, batch_size, lr, q, seed, beta1, beta2, adam_eps
//   [data]    train_manifest, test_manifest
//   [output]  checkpoint, history, scores_dir
//
// Unknown sections or keys are rejected. Relative paths are resolved
// against the config file's directory.
struct RunConfig {
  model::ModelConfig model;
  train::TrainConfig train;
  std::filesystem::path train_manifest;
  std::filesystem::path test_manifest;
  std::filesystem::path checkpoint = "hypervd.ckpt";
  std::filesystem::path history = "history.csv";
  std::filesystem::path scores_dir = "scores";

  // Applies HYPERVD_SEED from the environment if set.
  static RunConfig load(const std::filesystem::path& path);
  static RunConfig parse(const std::string& text, const std::filesystem::path& base_dir = {});
  std::string to_ini() const;
};

// Overrides seed with HYPERVD_SEED when present; throws ConfigError when
// the variable is not an unsigned integer.
void apply_seed_override(train::TrainConfig& cfg);

}  // namespace hypervd
