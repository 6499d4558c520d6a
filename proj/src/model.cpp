#include "hypervd/model.hpp"

#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

#include <fmt/core.h>

#include "binary_io.hpp"
#include "hypervd/error.hpp"
#include "hypervd/lorentz.hpp"

namespace hypervd::model {

using ad::Var;

std::string_view to_string(Geometry g) { return g == Geometry::hyperbolic ? "hyperbolic" : "euclidean"; }

Geometry parse_geometry(std::string_view name) {
  if (name == "hyperbolic") return Geometry::hyperbolic;
  if (name == "euclidean") return Geometry::euclidean;
  throw ConfigError(fmt::format("model: unknown geometry '{}'", name));
}

void ModelConfig::validate() const {
  if (fusion_shape.visual_dim < 1 || fusion_shape.audio_dim < 1 || fusion_shape.hidden < 1) {
    throw ConfigError("model: fusion dimensions must be positive");
  }
  if (hidden < 1) throw ConfigError("model: hidden must be >= 1");
  if (layers < 1) throw ConfigError("model: layers must be >= 1");
  lorentz::Curvature{curvature};
  graph.validate();
  if (!std::isfinite(epsilon)) throw ConfigError("model: epsilon must be finite");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError(fmt::format("model: dropout must lie in [0, 1), got {}", dropout));
  if (!std::isfinite(leaky_slope)) throw ConfigError("model: leaky_slope must be finite");
  if (!hfsg && !htrg) throw ConfigError("model: at least one graph branch must be enabled");
}

namespace {

double parse_double(const std::string& key, const std::string& s) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw ConfigError(fmt::format("config: '{}' expects a number, got '{}'", key, s));
  }
  return v;
}

long long parse_int(const std::string& key, const std::string& s) {
  long long v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw ConfigError(fmt::format("config: '{}' expects an integer, got '{}'", key, s));
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1" || s == "on") return true;
  if (s == "false" || s == "0" || s == "off") return false;
  throw ConfigError(fmt::format("config: '{}' expects true/false, got '{}'", key, s));
}

}  // namespace

std::map<std::string, std::string> ModelConfig::to_map() const {
  return {
      {"fusion", std::string(fusion::to_string(fusion))},
      {"visual_dim", fmt::format("{}", fusion_shape.visual_dim)},
      {"audio_dim", fmt::format("{}", fusion_shape.audio_dim)},
      {"fusion_hidden", fmt::format("{}", fusion_shape.hidden)},
      {"hidden", fmt::format("{}", hidden)},
      {"layers", fmt::format("{}", layers)},
      {"curvature", fmt::format("{}", curvature)},
      {"tau", fmt::format("{}", graph.tau)},
      {"gamma", fmt::format("{}", graph.gamma)},
      {"epsilon", fmt::format("{}", epsilon)},
      {"dropout", fmt::format("{}", dropout)},
      {"leaky_slope", fmt::format("{}", leaky_slope)},
      {"hfsg", hfsg ? "true" : "false"},
      {"htrg", htrg ? "true" : "false"},
      {"geometry", std::string(to_string(geometry))},
  };
}

ModelConfig ModelConfig::from_map(const std::map<std::string, std::string>& kv) {
  ModelConfig c;
  for (const auto& [k, v] : kv) {
    if (k == "fusion") c.fusion = fusion::parse_strategy(v);
    else if (k == "visual_dim") c.fusion_shape.visual_dim = parse_int(k, v);
    else if (k == "audio_dim") c.fusion_shape.audio_dim = parse_int(k, v);
    else if (k == "fusion_hidden") c.fusion_shape.hidden = parse_int(k, v);
    else if (k == "hidden") c.hidden = parse_int(k, v);
    else if (k == "layers") c.layers = static_cast<int>(parse_int(k, v));
    else if (k == "curvature") c.curvature = parse_double(k, v);
    else if (k == "tau") c.graph.tau = parse_double(k, v);
    else if (k == "gamma") c.graph.gamma = parse_double(k, v);
    else if (k == "epsilon") c.epsilon = parse_double(k, v);
    else if (k == "dropout") c.dropout = parse_double(k, v);
    else if (k == "leaky_slope") c.leaky_slope = parse_double(k, v);
    else if (k == "hfsg") c.hfsg = parse_bool(k, v);
    else if (k == "htrg") c.htrg = parse_bool(k, v);
    else if (k == "geometry") c.geometry = parse_geometry(v);
    else throw ConfigError(fmt::format("config: unknown model key '{}'", k));
  }
  c.validate();
  return c;
}

HyperVDModel init_model(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  HyperVDModel m;
  m.config = config;
  m.fusion = fusion::init_fusion(config.fusion, config.fusion_shape, config.dropout, config.leaky_slope, rng);
  const Eigen::Index fused = m.fusion.out_dim();
  const int branches = (config.hfsg ? 1 : 0) + (config.htrg ? 1 : 0);
  if (config.geometry == Geometry::hyperbolic) {
    auto stack = [&]() {
      std::vector<nn::HyperbolicLinearParams> s;
      Eigen::Index in = fused + 1;
      for (int l = 0; l < config.layers; ++l) {
        s.push_back(nn::init_hyperbolic_linear(in, config.hidden, config.dropout, config.leaky_slope, rng));
        in = config.hidden + 1;
      }
      return s;
    };
    if (config.hfsg) m.hfsg_layers = stack();
    if (config.htrg) m.htrg_layers = stack();
    m.classifier = nn::init_classifier(branches * (config.hidden + 1), config.epsilon, rng);
  } else {
    auto stack = [&]() {
      std::vector<nn::LinearParams> s;
      Eigen::Index in = fused;
      for (int l = 0; l < config.layers; ++l) {
        s.push_back(nn::init_linear(in, config.hidden, rng));
        in = config.hidden;
      }
      return s;
    };
    if (config.hfsg) m.hfsg_linear = stack();
    if (config.htrg) m.htrg_linear = stack();
    m.linear_classifier = nn::init_linear(branches * config.hidden, 1, rng);
  }
  return m;
}

std::vector<nn::ParamRef> parameters(HyperVDModel& m) {
  std::vector<nn::ParamRef> out;
  fusion::append_params(out, m.fusion);
  if (m.config.geometry == Geometry::hyperbolic) {
    for (std::size_t l = 0; l < m.hfsg_layers.size(); ++l) nn::append_params(out, fmt::format("hfsg.{}", l), m.hfsg_layers[l]);
    for (std::size_t l = 0; l < m.htrg_layers.size(); ++l) nn::append_params(out, fmt::format("htrg.{}", l), m.htrg_layers[l]);
    nn::append_params(out, "classifier", m.classifier);
  } else {
    for (std::size_t l = 0; l < m.hfsg_linear.size(); ++l) nn::append_params(out, fmt::format("hfsg.{}", l), m.hfsg_linear[l]);
    for (std::size_t l = 0; l < m.htrg_linear.size(); ++l) nn::append_params(out, fmt::format("htrg.{}", l), m.htrg_linear[l]);
    nn::append_params(out, "classifier", m.linear_classifier);
  }
  return out;
}

std::size_t count_parameters(const HyperVDModel& m) {
  std::size_t n = fusion::count_parameters(m.fusion);
  if (m.config.geometry == Geometry::hyperbolic) {
    for (const auto& l : m.hfsg_layers) n += nn::count_parameters(l);
    for (const auto& l : m.htrg_layers) n += nn::count_parameters(l);
    n += nn::count_parameters(m.classifier);
  } else {
    for (const auto& l : m.hfsg_linear) n += nn::count_parameters(l);
    for (const auto& l : m.htrg_linear) n += nn::count_parameters(l);
    n += nn::count_parameters(m.linear_classifier);
  }
  return n;
}

namespace {

Var hyperbolic_branch(nn::ForwardContext& ctx, const ModelConfig& cfg,
                      const std::vector<nn::HyperbolicLinearParams>& layers, Var x, bool similarity,
                      std::vector<Matrix>* trace) {
  const double k = cfg.curvature;
  Var temporal;
  if (!similarity) temporal = ctx.constant(graphs::htrg_adjacency(x.rows(), cfg.graph.gamma).weights);
  for (const auto& layer : layers) {
    // The similarity graph is rebuilt from each layer's input embeddings.
    Var adj = similarity ? ad::masked_row_softmax(ad::hyperbolic_similarity(x, k), cfg.graph.tau) : temporal;
    x = nn::hyper_agg_rows(adj, nn::hl_rows(ctx, layer, x, k), k);
    if (trace) trace->push_back(x.value());
  }
  Var out = nn::hyperbolic_activation(ctx, x, cfg.leaky_slope, cfg.dropout, k);
  if (trace) trace->push_back(out.value());
  return out;
}

Var euclidean_branch(nn::ForwardContext& ctx, const ModelConfig& cfg, const std::vector<nn::LinearParams>& layers,
                     Var x, bool similarity, std::vector<Matrix>* trace) {
  Var temporal;
  if (!similarity) {
    Matrix a = graphs::htrg_adjacency(x.rows(), cfg.graph.gamma).weights;
    for (Eigen::Index i = 0; i < a.rows(); ++i) a.row(i) /= a.row(i).sum();
    temporal = ctx.constant(std::move(a));
  }
  for (const auto& layer : layers) {
    Var adj = temporal;
    if (similarity) {
      Var unit = ad::row_normalize(x);
      adj = ad::masked_row_softmax(ad::matmul_nt(unit, unit), cfg.graph.tau);
    }
    x = ad::leaky_relu(ad::matmul(adj, nn::linear_rows(ctx, layer, x)), cfg.leaky_slope);
    if (trace) trace->push_back(x.value());
  }
  return ctx.dropout(x, cfg.dropout);
}

}  // namespace

Var forward_rows(nn::ForwardContext& ctx, const HyperVDModel& m, Var xv, Var xa, ForwardTrace* trace) {
  fusion::check_inputs(m.fusion, xv.value(), xa.value());
  const ModelConfig& cfg = m.config;
  Var fused = fusion::fuse_rows(ctx, m.fusion, xv, xa);
  std::vector<Var> parts;
  if (cfg.geometry == Geometry::hyperbolic) {
    Var lifted = ad::lift_rows(fused, cfg.curvature);
    if (cfg.hfsg) parts.push_back(hyperbolic_branch(ctx, cfg, m.hfsg_layers, lifted, true, trace ? &trace->hfsg : nullptr));
    if (cfg.htrg) parts.push_back(hyperbolic_branch(ctx, cfg, m.htrg_layers, lifted, false, trace ? &trace->htrg : nullptr));
    return nn::classifier_rows(ctx, m.classifier, parts.size() == 1 ? parts.front() : ad::hcat(parts));
  }
  if (cfg.hfsg) parts.push_back(euclidean_branch(ctx, cfg, m.hfsg_linear, fused, true, trace ? &trace->hfsg : nullptr));
  if (cfg.htrg) parts.push_back(euclidean_branch(ctx, cfg, m.htrg_linear, fused, false, trace ? &trace->htrg : nullptr));
  Var concat = parts.size() == 1 ? parts.front() : ad::hcat(parts);
  return ad::sigmoid(nn::linear_rows(ctx, m.linear_classifier, concat));
}

ScoreVector forward(const HyperVDModel& m, const fusion::FeatureSequence& xv, const fusion::FeatureSequence& xa,
                    nn::Mode mode, std::mt19937_64* rng, ForwardTrace* trace) {
  ad::Tape tape;
  nn::ForwardContext ctx(tape, mode, rng, false);
  Var s = forward_rows(ctx, m, tape.constant(xv.data), tape.constant(xa.data), trace);
  return ScoreVector{s.value().col(0)};
}

ScoreVector euclidean_gcn_forward(const HyperVDModel& baseline, const fusion::FeatureSequence& xv,
                                  const fusion::FeatureSequence& xa, nn::Mode mode, std::mt19937_64* rng) {
  if (baseline.config.geometry != Geometry::euclidean) {
    throw ConfigError("model: euclidean_gcn_forward needs a euclidean-geometry model");
  }
  return forward(baseline, xv, xa, mode, rng);
}

namespace {

constexpr std::string_view kCheckpointMagic = "HVDM";
constexpr std::uint16_t kCheckpointVersion = 1;

std::string config_text(const ModelConfig& c) {
  std::string s;
  for (const auto& [k, v] : c.to_map()) s += k + "=" + v + "\n";
  return s;
}

ModelConfig parse_config_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError(fmt::format("checkpoint: bad config line '{}'", line));
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return ModelConfig::from_map(kv);
}

}  // namespace

void save_checkpoint(const HyperVDModel& model, const std::filesystem::path& path) {
  HyperVDModel copy = model;  // parameters() hands out mutable views
  detail::ByteWriter w;
  w.bytes(kCheckpointMagic);
  w.u16(kCheckpointVersion);
  const std::string cfg = config_text(copy.config);
  w.u32(static_cast<std::uint32_t>(cfg.size()));
  w.bytes(cfg);
  const auto params = parameters(copy);
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    w.u32(static_cast<std::uint32_t>(p.name.size()));
    w.bytes(p.name);
    w.u32(static_cast<std::uint32_t>(p.rank));
    if (p.rank >= 1) w.u32(static_cast<std::uint32_t>(p.rows));
    if (p.rank == 2) w.u32(static_cast<std::uint32_t>(p.cols));
    const auto m = p.map();
    for (Eigen::Index i = 0; i < p.rows; ++i) {
      for (Eigen::Index j = 0; j < p.cols; ++j) w.f64(m(i, j));
    }
  }
  detail::write_file(path.string(), w.data());
}

HyperVDModel load_checkpoint(const std::filesystem::path& path) {
  const std::vector<char> buf = detail::read_file(path.string());
  detail::ByteReader r(buf, "checkpoint " + path.string());
  if (r.bytes(4) != kCheckpointMagic) r.fail("bad magic");
  if (const auto v = r.u16(); v != kCheckpointVersion) r.fail(fmt::format("unsupported version {}", v));
  const std::uint32_t cfg_len = r.u32();
  HyperVDModel m = init_model(parse_config_text(r.bytes(cfg_len)), 0);
  auto params = parameters(m);
  const std::uint32_t count = r.u32();
  if (count != params.size()) r.fail(fmt::format("expected {} tensors, found {}", params.size(), count));
  std::set<std::string> seen;
  for (std::uint32_t t = 0; t < count; ++t) {
    const std::string name = r.bytes(r.u32());
    auto it = std::find_if(params.begin(), params.end(), [&](const nn::ParamRef& p) { return p.name == name; });
    if (it == params.end() || !seen.insert(name).second) r.fail(fmt::format("unexpected tensor '{}'", name));
    const std::uint32_t rank = r.u32();
    std::uint32_t rows = 1, cols = 1;
    if (rank >= 1) rows = r.u32();
    if (rank == 2) cols = r.u32();
    if (rank > 2 || static_cast<int>(rank) != it->rank || rows != it->rows || cols != it->cols) {
      r.fail(fmt::format("tensor '{}' has the wrong shape", name));
    }
    auto dst = it->map();
    for (Eigen::Index i = 0; i < it->rows; ++i) {
      for (Eigen::Index j = 0; j < it->cols; ++j) dst(i, j) = r.f64();
    }
  }
  if (r.remaining() != 0) r.fail("trailing bytes");
  return m;
}

}  // namespace hypervd::model
