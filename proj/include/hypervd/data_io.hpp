#pragma once

// Feature files, manifests, frame labels and the synthetic benchmark.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hypervd/fusion.hpp"

namespace hypervd::io {

namespace fs = std::filesystem;

inline constexpr int kFramesPerSnippet = 16;

// "HVDF" | u16 version | u32 rows | u32 cols | rows*cols float32, all LE,
// row-major. Values are rounded to float32 on write.
void write_features(const fs::path& path, const Matrix& m);
Matrix read_features(const fs::path& path);

// One 0/1 value per line.
void write_frame_labels(const fs::path& path, const std::vector<int>& labels);
std::vector<int> read_frame_labels(const fs::path& path);

struct ManifestEntry {
  std::string id;
  fs::path visual;  // absolute or relative to the manifest directory
  fs::path audio;
  int label = 0;
  std::optional<fs::path> frame_labels;
};

// Whitespace-separated: id visual audio label [frame_labels]. Blank lines
// and lines starting with '#' are ignored.
std::vector<ManifestEntry> read_manifest(const fs::path& path);
void write_manifest(const fs::path& path, const std::vector<ManifestEntry>& entries);

struct VideoBag {
  std::string id;
  fusion::FeatureSequence visual;
  fusion::FeatureSequence audio;
  int label = 0;                   // video-level, 0 or 1
  std::vector<int> frame_labels;   // 16*T entries, empty when unknown

  Eigen::Index T() const { return visual.T(); }
};

// Loads every entry; missing files or mismatched snippet counts throw
// DataError rather than being skipped.
std::vector<VideoBag> load_dataset(const fs::path& manifest);

// Each snippet score repeated 16 times, in order.
Vector expand_scores(const Vector& snippet_scores);

struct SyntheticSpec {
  std::uint64_t seed = 7;
  int n_train = 64;
  int n_test = 32;
  Eigen::Index t_min = 24;
  Eigen::Index t_max = 48;
  Eigen::Index visual_dim = 16;
  Eigen::Index audio_dim = 8;
  double separation = 4.0;
};

struct SyntheticDataset {
  std::vector<VideoBag> train;
  std::vector<VideoBag> test;
  // Unit shift directions of the violent blob, one per modality.
  Vector visual_direction;
  Vector audio_direction;
};

// Pure function of the spec. Normal snippets ~ N(0, I); violent snippets ~
// N(separation * u, I) with u fixed per modality. Violent videos carry one
// contiguous violent run covering 10-50% of their snippets. Labels
// alternate so both splits are balanced. Features are float32-exact.
SyntheticDataset generate_synthetic(const SyntheticSpec& spec);

// Writes features/, labels/, train.manifest and test.manifest under dir.
void write_dataset(const SyntheticDataset& data, const fs::path& dir);

}  // namespace hypervd::io
