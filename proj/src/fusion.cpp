#include "hypervd/fusion.hpp"

#include <fmt/core.h>

#include "hypervd/error.hpp"

namespace hypervd::fusion {

using ad::Var;

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::detour: return "detour";
    case Strategy::concat: return "concat";
    case Strategy::additive: return "additive";
    case Strategy::gated: return "gated";
    case Strategy::bilinear_concat: return "bilinear_concat";
  }
  return "unknown";
}

Strategy parse_strategy(std::string_view name) {
  for (Strategy s : kAllStrategies) {
    if (to_string(s) == name) return s;
  }
  throw ConfigError(fmt::format("fusion: unknown strategy '{}'", name));
}

const nn::LinearParams& FusionParams::layer(std::string_view name) const {
  for (const auto& [n, l] : layers) {
    if (n == name) return l;
  }
  throw ConfigError(fmt::format("fusion: strategy {} has no layer '{}'", to_string(strategy), name));
}

FusionParams init_fusion(Strategy strategy, const FusionShape& shape, double dropout_rate, double leaky_slope,
                         std::mt19937_64& rng) {
  if (shape.visual_dim < 1 || shape.audio_dim < 1 || shape.hidden < 1) {
    throw ConfigError("fusion: dimensions must be positive");
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ConfigError("fusion: dropout must lie in [0, 1)");
  FusionParams p{strategy, shape, dropout_rate, leaky_slope, {}};
  const Eigen::Index D = shape.visual_dim, d = shape.audio_dim, H = shape.hidden;
  auto add = [&](const char* name, Eigen::Index in, Eigen::Index out) {
    p.layers.emplace_back(name, nn::init_linear(in, out, rng));
  };
  switch (strategy) {
    case Strategy::detour:
      add("f_v1", D, H);
      add("f_v2", H, d);
      break;
    case Strategy::concat:
      add("f1", D + d, H);
      add("f2", H, 2 * d);
      break;
    case Strategy::additive:
      add("f_a", d, 2 * d);
      add("f_v", D, 2 * d);
      break;
    case Strategy::gated:
      add("U", d, 2 * d);
      add("V", D, 2 * d);
      add("W", 2 * d, 2 * d);
      break;
    case Strategy::bilinear_concat:
      add("U", d, d);
      add("V", D, d);
      break;
  }
  return p;
}

std::size_t count_parameters(const FusionParams& p) {
  std::size_t n = 0;
  for (const auto& [name, l] : p.layers) n += nn::count_parameters(l);
  return n;
}

void append_params(std::vector<nn::ParamRef>& out, FusionParams& p) {
  for (auto& [name, l] : p.layers) nn::append_params(out, "fusion." + name, l);
}

void check_inputs(const FusionParams& p, const Matrix& xv, const Matrix& xa) {
  if (xv.rows() != xa.rows()) {
    throw AlignmentError(fmt::format("fusion: visual has {} snippets, audio has {}", xv.rows(), xa.rows()));
  }
  if (xv.rows() < 1) throw DimensionError("fusion: empty feature sequence");
  if (xv.cols() != p.shape.visual_dim || xa.cols() != p.shape.audio_dim) {
    throw DimensionError(fmt::format("fusion: expected widths {}/{}, got {}/{}", p.shape.visual_dim,
                                     p.shape.audio_dim, xv.cols(), xa.cols()));
  }
}

Var fuse_rows(nn::ForwardContext& ctx, const FusionParams& p, Var xv, Var xa) {
  auto lin = [&](std::string_view name, Var x) { return nn::linear_rows(ctx, p.layer(name), x); };
  auto act = [&](Var x) { return ctx.dropout(ad::leaky_relu(x, p.leaky_slope), p.dropout_rate); };
  switch (p.strategy) {
    case Strategy::detour: {
      Var v = act(lin("f_v2", act(lin("f_v1", xv))));
      return ad::hcat({v, xa});
    }
    case Strategy::concat:
      return act(lin("f2", act(lin("f1", ad::hcat({xv, xa})))));
    case Strategy::additive:
      return ctx.dropout(ad::add(lin("f_a", xa), lin("f_v", xv)), p.dropout_rate);
    case Strategy::gated: {
      Var gated = ad::cmul(lin("U", xa), ad::sigmoid(lin("V", xv)));
      return ctx.dropout(lin("W", gated), p.dropout_rate);
    }
    case Strategy::bilinear_concat:
      return ctx.dropout(ad::hcat({lin("U", xa), lin("V", xv)}), p.dropout_rate);
  }
  throw ConfigError("fusion: unhandled strategy");
}

FeatureSequence fuse(const FusionParams& p, const FeatureSequence& xv, const FeatureSequence& xa, nn::Mode mode,
                     std::mt19937_64* rng) {
  check_inputs(p, xv.data, xa.data);
  ad::Tape tape;
  nn::ForwardContext ctx(tape, mode, rng, false);
  Var out = fuse_rows(ctx, p, tape.constant(xv.data), tape.constant(xa.data));
  return FeatureSequence{out.value(), Modality::fused};
}

}  // namespace hypervd::fusion
