#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hypervd/numeric.hpp"

namespace hypervd::eval {

// Non-interpolated AP: sum over positives of precision at their rank,
// divided by the number of positives. Ranking is by descending score with
// ties kept in original index order. Throws DataError on length mismatch
// or when there is no positive label.
double average_precision(const Vector& scores, const std::vector<int>& labels);

struct VideoAP {
  std::string id;
  std::optional<double> ap;  // empty for videos without positive frames
};

struct EvalReport {
  double ap = 0.0;
  std::size_t n_frames = 0;
  std::size_t n_positive = 0;
  std::vector<VideoAP> per_video;

  // "key: value" lines.
  std::string to_text() const;
};

// Dataset-level AP over the concatenation of all videos' frames.
EvalReport evaluate(const std::vector<std::string>& ids, const std::vector<Vector>& frame_scores,
                    const std::vector<std::vector<int>>& frame_labels);

struct CurveRow {
  std::size_t frame;
  double score;
  int label;
};

// CSV with header "frame_index,score,label".
void export_curves(const std::string& video_id, const Vector& frame_scores, const std::vector<int>& frame_labels,
                   const std::filesystem::path& path);
std::vector<CurveRow> read_curves(const std::filesystem::path& path);

}  // namespace hypervd::eval
