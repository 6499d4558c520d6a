#include "hypervd/training.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>

#include <fmt/core.h>

#include "hypervd/error.hpp"
#include "hypervd/eval.hpp"

namespace hypervd::train {

using ad::Var;

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (!(lr0 >= 0.0) || !std::isfinite(lr0)) throw ConfigError("train: lr must be finite and >= 0");
  if (q < 1) throw ConfigError("train: q must be >= 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("train: betas must lie in [0, 1)");
  if (!(adam_eps > 0.0)) throw ConfigError("train: adam_eps must be > 0");
}

std::map<std::string, std::string> TrainConfig::to_map() const {
  return {{"epochs", fmt::format("{}", epochs)}, {"batch_size", fmt::format("{}", batch_size)},
          {"lr", fmt::format("{}", lr0)},        {"q", fmt::format("{}", q)},
          {"seed", fmt::format("{}", seed)},     {"beta1", fmt::format("{}", beta1)},
          {"beta2", fmt::format("{}", beta2)},   {"adam_eps", fmt::format("{}", adam_eps)}};
}

namespace {

template <class T>
T parse_number(const std::string& key, const std::string& s) {
  T v{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw ConfigError(fmt::format("config: '{}' has invalid value '{}'", key, s));
  }
  return v;
}

}  // namespace

TrainConfig TrainConfig::from_map(const std::map<std::string, std::string>& kv) {
  TrainConfig c;
  for (const auto& [k, v] : kv) {
    if (k == "epochs") c.epochs = parse_number<int>(k, v);
    else if (k == "batch_size") c.batch_size = parse_number<int>(k, v);
    else if (k == "lr") c.lr0 = parse_number<double>(k, v);
    else if (k == "q") c.q = parse_number<int>(k, v);
    else if (k == "seed") c.seed = parse_number<std::uint64_t>(k, v);
    else if (k == "beta1") c.beta1 = parse_number<double>(k, v);
    else if (k == "beta2") c.beta2 = parse_number<double>(k, v);
    else if (k == "adam_eps") c.adam_eps = parse_number<double>(k, v);
    else throw ConfigError(fmt::format("config: unknown train key '{}'", k));
  }
  c.validate();
  return c;
}

double topk_mean(const Vector& scores, int q) {
  const Eigen::Index k = kmax_count(scores.size(), q);
  double acc = 0.0;
  for (Eigen::Index i : kmax_indices(scores, k)) acc += scores[i];
  return acc / static_cast<double>(k);
}

double mil_loss(const std::vector<double>& sbar, const std::vector<int>& labels) {
  if (sbar.empty() || sbar.size() != labels.size()) throw DimensionError("mil: need one label per bag score");
  constexpr double kClamp = 1e-12;
  double acc = 0.0;
  for (std::size_t i = 0; i < sbar.size(); ++i) {
    const double y = labels[i];
    acc += -y * std::log(std::max(sbar[i], kClamp)) - (1.0 - y) * std::log(std::max(1.0 - sbar[i], kClamp));
  }
  return acc / static_cast<double>(sbar.size());
}

namespace {

Var batch_loss_var(nn::ForwardContext& ctx, const model::HyperVDModel& m, const std::vector<const VideoBag*>& batch,
                   int q) {
  if (batch.empty()) throw DataError("train: empty batch");
  std::vector<Var> losses;
  losses.reserve(batch.size());
  for (const VideoBag* v : batch) {
    Var s = model::forward_rows(ctx, m, ctx.constant(v->visual.data), ctx.constant(v->audio.data));
    losses.push_back(ad::bce(ad::topk_mean(s, q), static_cast<double>(v->label)));
  }
  return ad::scale(ad::sum(losses), 1.0 / static_cast<double>(batch.size()));
}

}  // namespace

Gradients gradients(const model::HyperVDModel& m, const std::vector<const VideoBag*>& batch, int q, nn::Mode mode,
                    std::mt19937_64* rng) {
  ad::Tape tape;
  nn::ForwardContext ctx(tape, mode, rng, true);
  Var loss = batch_loss_var(ctx, m, batch, q);
  tape.backward(loss);
  Gradients g;
  g.loss = loss.scalar();
  model::HyperVDModel& view = const_cast<model::HyperVDModel&>(m);  // read-only use of the views
  for (const nn::ParamRef& p : model::parameters(view)) {
    const Var* leaf = ctx.find(p.data);
    Matrix d = leaf ? tape.grad(*leaf) : Matrix::Zero(p.rows, p.cols);
    if (d.rows() != p.rows || d.cols() != p.cols) d.resize(p.rows, p.cols);
    if (!d.allFinite()) throw NumericalError(fmt::format("train: non-finite gradient for parameter '{}'", p.name));
    g.names.push_back(p.name);
    g.values.push_back(std::move(d));
  }
  return g;
}

double batch_loss(const model::HyperVDModel& m, const std::vector<const VideoBag*>& batch, int q) {
  ad::Tape tape;
  nn::ForwardContext ctx(tape, nn::Mode::eval, nullptr, false);
  return batch_loss_var(ctx, m, batch, q).scalar();
}

AdamState init_adam(model::HyperVDModel& m) {
  AdamState s;
  for (const nn::ParamRef& p : model::parameters(m)) {
    s.m.push_back(Matrix::Zero(p.rows, p.cols));
    s.v.push_back(Matrix::Zero(p.rows, p.cols));
  }
  return s;
}

void adam_step(model::HyperVDModel& m, AdamState& state, const Gradients& g, double lr, const TrainConfig& cfg) {
  auto params = model::parameters(m);
  if (params.size() != g.values.size() || params.size() != state.m.size()) {
    throw DimensionError("train: gradient/optimizer state does not match the model");
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Matrix& grad = g.values[i];
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grad;
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
    auto p = params[i].map();
    const Matrix step = (state.m[i] / c1).array() / ((state.v[i] / c2).array().sqrt() + cfg.adam_eps);
    p -= lr * step;
  }
}

double cosine_lr(int epoch, int epochs, double lr0) {
  if (epochs < 1 || epoch < 0 || epoch >= epochs) {
    throw ConfigError(fmt::format("train: epoch {} outside [0, {})", epoch, epochs));
  }
  const double lr = lr0 * (1.0 + std::cos(std::numbers::pi * epoch / static_cast<double>(epochs))) / 2.0;
  return std::max(lr, 0.0);
}

Vector score_video(const model::HyperVDModel& m, const VideoBag& video) {
  return model::forward(m, video.visual, video.audio, nn::Mode::eval).scores;
}

double frame_ap(const model::HyperVDModel& m, const std::vector<VideoBag>& videos) {
  std::vector<std::string> ids;
  std::vector<Vector> scores;
  std::vector<std::vector<int>> labels;
  for (const auto& v : videos) {
    if (v.frame_labels.empty()) continue;
    ids.push_back(v.id);
    scores.push_back(io::expand_scores(score_video(m, v)));
    labels.push_back(v.frame_labels);
  }
  if (ids.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::size_t positives = 0;
  for (const auto& l : labels) positives += static_cast<std::size_t>(std::count(l.begin(), l.end(), 1));
  if (positives == 0) return std::numeric_limits<double>::quiet_NaN();
  return eval::evaluate(ids, scores, labels).ap;
}

TrainResult train(const model::ModelConfig& mcfg, const TrainConfig& tcfg, const std::vector<VideoBag>& train_set,
                  const std::vector<VideoBag>& eval_set) {
  tcfg.validate();
  if (train_set.empty()) throw ConfigError("train: empty training set");
  const bool has_pos = std::any_of(train_set.begin(), train_set.end(), [](const VideoBag& v) { return v.label == 1; });
  const bool has_neg = std::any_of(train_set.begin(), train_set.end(), [](const VideoBag& v) { return v.label == 0; });
  if (!has_pos || !has_neg) throw ConfigError("train: training set must contain both labels");

  TrainResult r;
  r.final_model = model::init_model(mcfg, tcfg.seed);
  r.best_model = r.final_model;
  r.best_ap = -std::numeric_limits<double>::infinity();
  AdamState adam = init_adam(r.final_model);
  std::mt19937_64 rng(tcfg.seed ^ 0x9E3779B97F4A7C15ull);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 0; epoch < tcfg.epochs; ++epoch) {
    const double lr = cosine_lr(epoch, tcfg.epochs, tcfg.lr0);
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(tcfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(tcfg.batch_size));
      std::vector<const VideoBag*> batch;
      for (std::size_t i = start; i < end; ++i) batch.push_back(&train_set[order[i]]);
      Gradients g = gradients(r.final_model, batch, tcfg.q, nn::Mode::train, &rng);
      loss_sum += g.loss * static_cast<double>(batch.size());
      adam_step(r.final_model, adam, g, lr, tcfg);
    }
    EpochRecord rec{epoch + 1, lr, loss_sum / static_cast<double>(train_set.size()), frame_ap(r.final_model, eval_set)};
    if (std::isfinite(rec.eval_ap) && rec.eval_ap > r.best_ap) {
      r.best_ap = rec.eval_ap;
      r.best_epoch = rec.epoch;
      r.best_model = r.final_model;
    }
    r.history.push_back(rec);
  }
  if (r.best_epoch < 0) {
    r.best_model = r.final_model;
    r.best_epoch = tcfg.epochs;
    r.best_ap = std::numeric_limits<double>::quiet_NaN();
  }
  return r;
}

void write_history(const std::filesystem::path& path, const std::vector<EpochRecord>& history) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError(fmt::format("train: cannot write '{}'", path.string()));
  out << "epoch,lr,train_loss,eval_ap\n";
  for (const auto& h : history) out << fmt::format("{},{:.17g},{:.17g},{:.17g}\n", h.epoch, h.lr, h.train_loss, h.eval_ap);
}

GradCheckReport gradient_check(const model::HyperVDModel& m, const std::vector<const VideoBag*>& batch, int q,
                               double h, double tolerance) {
  GradCheckReport rep;
  rep.tolerance = tolerance;
  const Gradients g = gradients(m, batch, q, nn::Mode::eval);
  model::HyperVDModel probe = m;
  auto params = model::parameters(probe);
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    double* data = params[pi].data;
    for (Eigen::Index k = 0; k < params[pi].size(); ++k) {
      const double saved = data[k];
      data[k] = saved + h;
      const double up = batch_loss(probe, batch, q);
      data[k] = saved - h;
      const double down = batch_loss(probe, batch, q);
      data[k] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double analytic = g.values[pi].data()[k];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
      const double rel = std::abs(analytic - numeric) / denom;
      ++rep.n_scalars;
      if (!(rel <= tolerance)) ++rep.n_failed;
      if (!(rel <= rep.max_rel_err)) {
        rep.max_rel_err = rel;
        rep.worst = fmt::format("{}[{}]", params[pi].name, k);
      }
    }
  }
  return rep;
}

}  // namespace hypervd::train
