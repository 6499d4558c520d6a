#pragma once

// End-to-end snippet scorer: fusion -> lift onto the hyperboloid ->
// feature-similarity branch || temporal-relation branch -> concat ->
// Lorentzian classifier. The same container also holds the Euclidean GCN
// baseline used by the geometry ablation.

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "hypervd/fusion.hpp"
#include "hypervd/graphs.hpp"
#include "hypervd/hyper_nn.hpp"

namespace hypervd::model {

enum class Geometry { hyperbolic, euclidean };

std::string_view to_string(Geometry g);
Geometry parse_geometry(std::string_view name);

struct ModelConfig {
  fusion::Strategy fusion = fusion::Strategy::detour;
  fusion::FusionShape fusion_shape{};
  Eigen::Index hidden = 32;
  int layers = 2;
  double curvature = -1.0;
  graphs::GraphConfig graph{};
  double epsilon = 2.0;
  double dropout = 0.6;
  double leaky_slope = 0.01;
  bool hfsg = true;
  bool htrg = true;
  Geometry geometry = Geometry::hyperbolic;

  // Throws ConfigError on any out-of-range value.
  void validate() const;

  // Flat key/value form shared by the run-config [model] section and the
  // checkpoint header. Keys are stable.
  std::map<std::string, std::string> to_map() const;
  // Unknown keys are rejected; missing keys keep their defaults.
  static ModelConfig from_map(const std::map<std::string, std::string>& kv);
};

struct HyperVDModel {
  ModelConfig config;
  fusion::FusionParams fusion;
  // Hyperbolic geometry: per-branch layer stacks, empty when disabled.
  std::vector<nn::HyperbolicLinearParams> hfsg_layers;
  std::vector<nn::HyperbolicLinearParams> htrg_layers;
  nn::ClassifierParams classifier;
  // Euclidean geometry.
  std::vector<nn::LinearParams> hfsg_linear;
  std::vector<nn::LinearParams> htrg_linear;
  nn::LinearParams linear_classifier;
};

// Deterministic in (config, seed).
HyperVDModel init_model(const ModelConfig& config, std::uint64_t seed);

// Canonical order: fusion, hfsg, htrg, classifier.
std::vector<nn::ParamRef> parameters(HyperVDModel& model);
std::size_t count_parameters(const HyperVDModel& model);

struct ScoreVector {
  Vector scores;  // T, each in (0, 1)
};

// Per-layer branch embeddings recorded during a forward pass.
struct ForwardTrace {
  std::vector<Matrix> hfsg;
  std::vector<Matrix> htrg;
};

// xv: T x D, xa: T x d -> scores T x 1. Dispatches on config.geometry.
ad::Var forward_rows(nn::ForwardContext& ctx, const HyperVDModel& model, ad::Var xv, ad::Var xa,
                     ForwardTrace* trace = nullptr);

ScoreVector forward(const HyperVDModel& model, const fusion::FeatureSequence& xv, const fusion::FeatureSequence& xa,
                    nn::Mode mode, std::mt19937_64* rng = nullptr, ForwardTrace* trace = nullptr);

// Baseline entry point; requires config.geometry == euclidean.
ScoreVector euclidean_gcn_forward(const HyperVDModel& baseline, const fusion::FeatureSequence& xv,
                                  const fusion::FeatureSequence& xa, nn::Mode mode, std::mt19937_64* rng = nullptr);

// Binary checkpoint: "HVDM", u16 version, u32 config length + config text,
// u32 tensor count, then per tensor u32 name length, name, u32 rank,
// u32 dims[rank], float64 LE row-major payload.
void save_checkpoint(const HyperVDModel& model, const std::filesystem::path& path);
HyperVDModel load_checkpoint(const std::filesystem::path& path);

}  // namespace hypervd::model
