#include "hypervd/experiments.hpp"

#include <random>

#include <fmt/core.h>

#include "hypervd/error.hpp"

namespace hypervd::experiments {

AblationAxis parse_axis(std::string_view name) {
  if (name == "fusion") return AblationAxis::fusion;
  if (name == "branch") return AblationAxis::branch;
  if (name == "geometry") return AblationAxis::geometry;
  throw ConfigError(fmt::format("ablate: unknown axis '{}' (fusion|branch|geometry)", name));
}

std::vector<AblationRow> run_ablation(const model::ModelConfig& base, const train::TrainConfig& tcfg,
                                      AblationAxis axis, const std::vector<io::VideoBag>& train_set,
                                      const std::vector<io::VideoBag>& test) {
  std::vector<std::pair<std::string, model::ModelConfig>> variants;
  switch (axis) {
    case AblationAxis::fusion:
      for (fusion::Strategy s : fusion::kAllStrategies) {
        model::ModelConfig c = base;
        c.fusion = s;
        variants.emplace_back(std::string(fusion::to_string(s)), c);
      }
      break;
    case AblationAxis::branch: {
      model::ModelConfig a = base, b = base, c = base;
      a.hfsg = true, a.htrg = false;
      b.hfsg = false, b.htrg = true;
      c.hfsg = true, c.htrg = true;
      variants = {{"hfsg_only", a}, {"htrg_only", b}, {"both", c}};
      break;
    }
    case AblationAxis::geometry: {
      model::ModelConfig e = base, h = base;
      e.geometry = model::Geometry::euclidean;
      h.geometry = model::Geometry::hyperbolic;
      variants = {{"euclidean", e}, {"hyperbolic", h}};
      break;
    }
  }
  std::vector<AblationRow> rows;
  for (const auto& [name, cfg] : variants) {
    train::TrainResult r = train::train(cfg, tcfg, train_set, test);
    rows.push_back({name, train::frame_ap(r.final_model, test), model::count_parameters(r.final_model)});
  }
  return rows;
}

std::string format_table(const std::vector<AblationRow>& rows) {
  std::string s = fmt::format("{:<18} {:>10} {:>12}\n", "variant", "AP", "params");
  for (const auto& r : rows) s += fmt::format("{:<18} {:>10.6f} {:>12}\n", r.variant, r.ap, r.parameters);
  return s;
}

model::ModelConfig desk_model_config(const io::SyntheticSpec& spec) {
  model::ModelConfig c;
  c.fusion_shape = {spec.visual_dim, spec.audio_dim, 32};
  c.dropout = 0.0;
  return c;
}

train::TrainConfig desk_train_config(std::uint64_t seed) {
  train::TrainConfig t;
  t.batch_size = 8;
  t.lr0 = 1e-3;
  t.seed = seed;
  return t;
}

model::ModelConfig toy_model_config() {
  model::ModelConfig c;
  c.fusion_shape = {8, 4, 8};
  c.hidden = 3;
  c.dropout = 0.0;
  return c;
}

std::vector<io::VideoBag> toy_videos(const model::ModelConfig& cfg, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<io::VideoBag> out;
  constexpr Eigen::Index kT = 5;
  for (int i = 0; i < count; ++i) {
    io::VideoBag v;
    v.id = fmt::format("toy_{}", i);
    v.label = (i + 1) % 2;
    v.visual.data = Matrix::NullaryExpr(kT, cfg.fusion_shape.visual_dim, [&]() { return normal(rng); });
    v.audio.data = Matrix::NullaryExpr(kT, cfg.fusion_shape.audio_dim, [&]() { return normal(rng); });
    v.visual.modality = fusion::Modality::visual;
    v.audio.modality = fusion::Modality::audio;
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace hypervd::experiments
