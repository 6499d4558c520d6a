#pragma once

// Early/middle fusion of per-snippet visual and audio features.

#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hypervd/hyper_nn.hpp"

namespace hypervd::fusion {

enum class Modality { visual, audio, fused };

struct FeatureSequence {
  Matrix data;  // T x dim
  Modality modality = Modality::fused;

  Eigen::Index T() const { return data.rows(); }
  Eigen::Index dim() const { return data.cols(); }
};

enum class Strategy { detour, concat, additive, gated, bilinear_concat };

inline constexpr Strategy kAllStrategies[] = {Strategy::concat, Strategy::additive, Strategy::gated,
                                              Strategy::bilinear_concat, Strategy::detour};

std::string_view to_string(Strategy s);
// Throws ConfigError for unknown names.
Strategy parse_strategy(std::string_view name);

struct FusionShape {
  Eigen::Index visual_dim = 1024;
  Eigen::Index audio_dim = 128;
  Eigen::Index hidden = 512;  // width inside the two-layer stacks
};

struct FusionParams {
  Strategy strategy = Strategy::detour;
  FusionShape shape;
  double dropout_rate = 0.6;
  double leaky_slope = 0.01;
  // Named layers in a fixed per-strategy order:
  //   detour:          f_v1 (D->H), f_v2 (H->d)
  //   concat:          f1 (D+d->H), f2 (H->2d)
  //   additive:        f_a (d->2d), f_v (D->2d)
  //   gated:           U (d->2d), V (D->2d), W (2d->2d)
  //   bilinear_concat: U (d->d), V (D->d)
  std::vector<std::pair<std::string, nn::LinearParams>> layers;

  // Output width, 2d for every strategy.
  Eigen::Index out_dim() const { return 2 * shape.audio_dim; }
  const nn::LinearParams& layer(std::string_view name) const;
};

FusionParams init_fusion(Strategy strategy, const FusionShape& shape, double dropout_rate, double leaky_slope,
                         std::mt19937_64& rng);

std::size_t count_parameters(const FusionParams& p);
void append_params(std::vector<nn::ParamRef>& out, FusionParams& p);

// xv: T x D, xa: T x d -> T x 2d
ad::Var fuse_rows(nn::ForwardContext& ctx, const FusionParams& p, ad::Var xv, ad::Var xa);

// Validates alignment and widths, then runs fuse_rows without gradients.
FeatureSequence fuse(const FusionParams& p, const FeatureSequence& xv, const FeatureSequence& xa, nn::Mode mode,
                     std::mt19937_64* rng = nullptr);

// Throws AlignmentError / DimensionError on mismatch.
void check_inputs(const FusionParams& p, const Matrix& xv, const Matrix& xa);

}  // namespace hypervd::fusion
