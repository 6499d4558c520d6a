#include "hypervd/data_io.hpp"

#include <cmath>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>

#include <fmt/core.h>

#include "binary_io.hpp"
#include "hypervd/error.hpp"

namespace hypervd {

namespace detail {

std::vector<char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("io: cannot open '{}'", path));
  return std::vector<char>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, const std::vector<char>& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(fmt::format("io: cannot write '{}'", path));
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw DataError(fmt::format("io: write to '{}' failed", path));
}

}  // namespace detail

namespace io {

namespace {

constexpr std::string_view kFeatureMagic = "HVDF";
constexpr std::uint16_t kFeatureVersion = 1;

fs::path resolve(const fs::path& base, const fs::path& p) { return p.is_absolute() ? p : base / p; }

}  // namespace

void write_features(const fs::path& path, const Matrix& m) {
  if (!m.allFinite()) throw DataError(fmt::format("io: refusing to write non-finite features to '{}'", path.string()));
  detail::ByteWriter w;
  w.bytes(kFeatureMagic);
  w.u16(kFeatureVersion);
  w.u32(static_cast<std::uint32_t>(m.rows()));
  w.u32(static_cast<std::uint32_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) w.f32(static_cast<float>(m(i, j)));
  }
  detail::write_file(path.string(), w.data());
}

Matrix read_features(const fs::path& path) {
  const std::vector<char> buf = detail::read_file(path.string());
  detail::ByteReader r(buf, "features " + path.string());
  if (r.bytes(4) != kFeatureMagic) {
    throw FormatError(fmt::format("features {}: bad magic at byte offset 0", path.string()));
  }
  if (const auto v = r.u16(); v != kFeatureVersion) r.fail(fmt::format("unsupported version {}", v));
  const std::uint32_t rows = r.u32();
  const std::uint32_t cols = r.u32();
  const std::uint64_t expected = 4ull * rows * cols;
  if (r.remaining() != expected) {
    r.fail(fmt::format("payload is {} bytes, header implies {}", r.remaining(), expected));
  }
  Matrix m(rows, cols);
  for (std::uint32_t i = 0; i < rows; ++i) {
    for (std::uint32_t j = 0; j < cols; ++j) {
      const std::size_t at = r.offset();
      const float f = r.f32();
      if (!std::isfinite(f)) {
        throw FormatError(fmt::format("features {}: non-finite value at byte offset {}", path.string(), at));
      }
      m(i, j) = f;
    }
  }
  return m;
}

void write_frame_labels(const fs::path& path, const std::vector<int>& labels) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError(fmt::format("io: cannot write '{}'", path.string()));
  for (int l : labels) out << l << '\n';
}

std::vector<int> read_frame_labels(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("io: cannot open '{}'", path.string()));
  std::vector<int> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    if (line == "0" || line == "1") {
      out.push_back(line[0] - '0');
    } else {
      throw FormatError(fmt::format("frame labels {}: line {} is '{}', expected 0 or 1", path.string(), n, line));
    }
  }
  return out;
}

std::vector<ManifestEntry> read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("manifest: cannot open '{}'", path.string()));
  const fs::path base = path.parent_path();
  std::vector<ManifestEntry> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    std::istringstream fields(line);
    std::vector<std::string> f{std::istream_iterator<std::string>(fields), std::istream_iterator<std::string>()};
    if (f.empty() || f[0][0] == '#') continue;
    if (f.size() != 4 && f.size() != 5) {
      throw FormatError(fmt::format("manifest {}: line {} has {} fields, expected 4 or 5", path.string(), n, f.size()));
    }
    if (f[3] != "0" && f[3] != "1") {
      throw FormatError(fmt::format("manifest {}: line {} label '{}' is not 0/1", path.string(), n, f[3]));
    }
    ManifestEntry e{f[0], resolve(base, f[1]), resolve(base, f[2]), f[3][0] - '0', std::nullopt};
    if (f.size() == 5) e.frame_labels = resolve(base, f[4]);
    for (const fs::path* p : {&e.visual, &e.audio}) {
      if (!fs::exists(*p)) throw DataError(fmt::format("manifest {}: line {} references missing '{}'", path.string(), n, p->string()));
    }
    if (e.frame_labels && !fs::exists(*e.frame_labels)) {
      throw DataError(fmt::format("manifest {}: line {} references missing '{}'", path.string(), n, e.frame_labels->string()));
    }
    out.push_back(std::move(e));
  }
  return out;
}

void write_manifest(const fs::path& path, const std::vector<ManifestEntry>& entries) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError(fmt::format("manifest: cannot write '{}'", path.string()));
  for (const auto& e : entries) {
    out << e.id << '\t' << e.visual.generic_string() << '\t' << e.audio.generic_string() << '\t' << e.label;
    if (e.frame_labels) out << '\t' << e.frame_labels->generic_string();
    out << '\n';
  }
}

std::vector<VideoBag> load_dataset(const fs::path& manifest) {
  std::vector<VideoBag> out;
  for (const auto& e : read_manifest(manifest)) {
    VideoBag bag{e.id, {read_features(e.visual), fusion::Modality::visual},
                 {read_features(e.audio), fusion::Modality::audio}, e.label, {}};
    if (bag.visual.T() != bag.audio.T()) {
      throw AlignmentError(fmt::format("manifest {}: video '{}' has {} visual and {} audio snippets",
                                       manifest.string(), e.id, bag.visual.T(), bag.audio.T()));
    }
    if (bag.T() < 1) throw DataError(fmt::format("manifest {}: video '{}' has no snippets", manifest.string(), e.id));
    if (e.frame_labels) {
      bag.frame_labels = read_frame_labels(*e.frame_labels);
      if (static_cast<Eigen::Index>(bag.frame_labels.size()) != kFramesPerSnippet * bag.T()) {
        throw DataError(fmt::format("manifest {}: video '{}' has {} frame labels, expected {}", manifest.string(),
                                    e.id, bag.frame_labels.size(), kFramesPerSnippet * bag.T()));
      }
    }
    out.push_back(std::move(bag));
  }
  return out;
}

Vector expand_scores(const Vector& s) {
  Vector out(s.size() * kFramesPerSnippet);
  for (Eigen::Index i = 0; i < s.size(); ++i) out.segment(i * kFramesPerSnippet, kFramesPerSnippet).setConstant(s[i]);
  return out;
}

namespace {

Vector random_direction(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Vector u(n);
  do {
    for (Eigen::Index i = 0; i < n; ++i) u[i] = normal(rng);
  } while (u.norm() < 1e-8);
  return u / u.norm();
}

Matrix snippets(Eigen::Index t, const Vector& shift, const std::vector<int>& violent, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Matrix m(t, shift.size());
  for (Eigen::Index i = 0; i < t; ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double x = normal(rng) + (violent[static_cast<std::size_t>(i)] ? shift[j] : 0.0);
      m(i, j) = static_cast<double>(static_cast<float>(x));
    }
  }
  return m;
}

VideoBag make_video(const std::string& id, int label, const SyntheticSpec& spec, const Vector& uv, const Vector& ua,
                    bool keep_frames, std::mt19937_64& rng) {
  const Eigen::Index t = std::uniform_int_distribution<Eigen::Index>(spec.t_min, spec.t_max)(rng);
  std::vector<int> violent(static_cast<std::size_t>(t), 0);
  if (label == 1) {
    const auto lo = std::max<Eigen::Index>(1, static_cast<Eigen::Index>(std::ceil(0.1 * static_cast<double>(t))));
    const auto hi = std::max<Eigen::Index>(lo, static_cast<Eigen::Index>(std::floor(0.5 * static_cast<double>(t))));
    const Eigen::Index len = std::uniform_int_distribution<Eigen::Index>(lo, hi)(rng);
    const Eigen::Index start = std::uniform_int_distribution<Eigen::Index>(0, t - len)(rng);
    for (Eigen::Index i = start; i < start + len; ++i) violent[static_cast<std::size_t>(i)] = 1;
  }
  VideoBag bag;
  bag.id = id;
  bag.label = label;
  bag.visual = {snippets(t, spec.separation * uv, violent, rng), fusion::Modality::visual};
  bag.audio = {snippets(t, spec.separation * ua, violent, rng), fusion::Modality::audio};
  if (keep_frames) {
    for (int v : violent) bag.frame_labels.insert(bag.frame_labels.end(), kFramesPerSnippet, v);
  }
  return bag;
}

}  // namespace

SyntheticDataset generate_synthetic(const SyntheticSpec& spec) {
  if (!(spec.separation >= 0.0)) throw ConfigError("synthetic: separation must be >= 0");
  if (spec.t_min < 1 || spec.t_max < spec.t_min) throw ConfigError("synthetic: need 1 <= t_min <= t_max");
  if (spec.visual_dim < 1 || spec.audio_dim < 1) throw ConfigError("synthetic: feature widths must be positive");
  if (spec.n_train < 0 || spec.n_test < 0) throw ConfigError("synthetic: video counts must be >= 0");
  std::mt19937_64 rng(spec.seed);
  SyntheticDataset d;
  d.visual_direction = random_direction(spec.visual_dim, rng);
  d.audio_direction = random_direction(spec.audio_dim, rng);
  for (int i = 0; i < spec.n_train; ++i) {
    d.train.push_back(make_video(fmt::format("train_{:04d}", i), i % 2, spec, d.visual_direction, d.audio_direction,
                                 false, rng));
  }
  for (int i = 0; i < spec.n_test; ++i) {
    d.test.push_back(make_video(fmt::format("test_{:04d}", i), i % 2, spec, d.visual_direction, d.audio_direction,
                                true, rng));
  }
  return d;
}

void write_dataset(const SyntheticDataset& data, const fs::path& dir) {
  fs::create_directories(dir / "features");
  fs::create_directories(dir / "labels");
  auto emit = [&](const std::vector<VideoBag>& split, bool with_frames) {
    std::vector<ManifestEntry> entries;
    for (const auto& v : split) {
      ManifestEntry e{v.id, fs::path("features") / (v.id + "_v.hvdf"), fs::path("features") / (v.id + "_a.hvdf"),
                      v.label, std::nullopt};
      write_features(dir / e.visual, v.visual.data);
      write_features(dir / e.audio, v.audio.data);
      if (with_frames) {
        e.frame_labels = fs::path("labels") / (v.id + ".txt");
        write_frame_labels(dir / *e.frame_labels, v.frame_labels);
      }
      entries.push_back(std::move(e));
    }
    return entries;
  };
  write_manifest(dir / "train.manifest", emit(data.train, false));
  write_manifest(dir / "test.manifest", emit(data.test, true));
}

}  // namespace io
}  // namespace hypervd
