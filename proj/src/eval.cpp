#include "hypervd/eval.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include <fmt/core.h>

#include "hypervd/error.hpp"

namespace hypervd::eval {

double average_precision(const Vector& scores, const std::vector<int>& labels) {
  if (static_cast<std::size_t>(scores.size()) != labels.size()) {
    throw DimensionError(fmt::format("eval: {} scores but {} labels", scores.size(), labels.size()));
  }
  std::vector<std::size_t> order(labels.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[static_cast<Eigen::Index>(a)] > scores[static_cast<Eigen::Index>(b)];
  });
  // Accumulate precision terms in rank order.
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (labels[order[rank]] == 1) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(rank + 1);
    }
  }
  if (hits == 0) throw DataError("eval: average precision is undefined without positive labels");
  return sum / static_cast<double>(hits);
}

std::string EvalReport::to_text() const {
  std::string s = fmt::format("ap: {:.6f}\nn_frames: {}\nn_positive: {}\nn_videos: {}\n", ap, n_frames, n_positive,
                              per_video.size());
  for (const auto& v : per_video) {
    s += v.ap ? fmt::format("video_ap {}: {:.6f}\n", v.id, *v.ap) : fmt::format("video_ap {}: undefined\n", v.id);
  }
  return s;
}

EvalReport evaluate(const std::vector<std::string>& ids, const std::vector<Vector>& frame_scores,
                    const std::vector<std::vector<int>>& frame_labels) {
  if (ids.size() != frame_scores.size() || ids.size() != frame_labels.size()) {
    throw DimensionError("eval: ids, scores and labels must have one entry per video");
  }
  EvalReport r;
  std::size_t total = 0;
  for (const auto& s : frame_scores) total += static_cast<std::size_t>(s.size());
  Vector all(static_cast<Eigen::Index>(total));
  std::vector<int> labels;
  labels.reserve(total);
  Eigen::Index off = 0;
  for (std::size_t v = 0; v < ids.size(); ++v) {
    if (static_cast<std::size_t>(frame_scores[v].size()) != frame_labels[v].size()) {
      throw DimensionError(fmt::format("eval: video '{}' has {} scores but {} labels", ids[v], frame_scores[v].size(),
                                       frame_labels[v].size()));
    }
    all.segment(off, frame_scores[v].size()) = frame_scores[v];
    off += frame_scores[v].size();
    labels.insert(labels.end(), frame_labels[v].begin(), frame_labels[v].end());
    const bool any = std::find(frame_labels[v].begin(), frame_labels[v].end(), 1) != frame_labels[v].end();
    r.per_video.push_back({ids[v], any ? std::optional(average_precision(frame_scores[v], frame_labels[v])) : std::nullopt});
  }
  r.n_frames = total;
  r.n_positive = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  r.ap = average_precision(all, labels);
  return r;
}

void export_curves(const std::string& video_id, const Vector& frame_scores, const std::vector<int>& frame_labels,
                   const std::filesystem::path& path) {
  if (static_cast<std::size_t>(frame_scores.size()) != frame_labels.size()) {
    throw DimensionError(fmt::format("eval: curve for '{}' has {} scores but {} labels", video_id,
                                     frame_scores.size(), frame_labels.size()));
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError(fmt::format("eval: cannot write '{}'", path.string()));
  out << "frame_index,score,label\n";
  for (std::size_t i = 0; i < frame_labels.size(); ++i) {
    out << fmt::format("{},{:.17g},{}\n", i, frame_scores[static_cast<Eigen::Index>(i)], frame_labels[i]);
  }
}

std::vector<CurveRow> read_curves(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("eval: cannot open '{}'", path.string()));
  std::string line;
  if (!std::getline(in, line) || line != "frame_index,score,label") {
    throw FormatError(fmt::format("eval: '{}' lacks the curve header", path.string()));
  }
  std::vector<CurveRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    CurveRow r{};
    char c1 = 0, c2 = 0;
    if (!(ss >> r.frame >> c1 >> r.score >> c2 >> r.label) || c1 != ',' || c2 != ',') {
      throw FormatError(fmt::format("eval: bad curve row '{}' in '{}'", line, path.string()));
    }
    rows.push_back(r);
  }
  return rows;
}

}  // namespace hypervd::eval
