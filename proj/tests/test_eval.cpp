#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "hypervd/error.hpp"
#include "hypervd/eval.hpp"
#include "support.hpp"

using namespace hypervd;
using namespace hypervd::eval;

namespace {

Vector vec(const std::vector<double>& v) { return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())); }

}  // namespace

TEST_CASE("average precision examples") {
  CHECK(average_precision(vec({0.9, 0.8, 0.1, 0.0}), {1, 1, 0, 0}) == 1.0);
  CHECK(average_precision(vec({0.9, 0.8, 0.7}), {1, 0, 1}) == doctest::Approx(0.833333).epsilon(1e-6));
  CHECK(average_precision(vec({0.9, 0.8, 0.7}), {1, 0, 1}) == doctest::Approx((1.0 + 2.0 / 3.0) / 2).epsilon(1e-15));
  // Ties fall back to index order.
  CHECK(average_precision(vec({0.5, 0.5}), {0, 1}) == 0.5);
  CHECK(average_precision(vec({0.5, 0.5}), {1, 0}) == 1.0);
  CHECK_THROWS_AS(average_precision(vec({0.1, 0.2}), {0, 0}), DataError);
  CHECK_THROWS_AS(average_precision(vec({0.1, 0.2}), {0}), DataError);
}

TEST_CASE("reversed perfect ranking has a closed form") {
  for (int n = 1; n <= 8; ++n) {
    for (int p = 1; p <= n; ++p) {
      std::vector<double> s(n);
      std::vector<int> y(n, 0);
      for (int i = 0; i < n; ++i) s[i] = static_cast<double>(n - i);
      for (int i = n - p; i < n; ++i) y[i] = 1;
      double expected = 0;
      for (int i = 1; i <= p; ++i) expected += static_cast<double>(i) / (n - p + i);
      expected /= p;
      CHECK(average_precision(vec(s), y) == doctest::Approx(expected).epsilon(1e-14));
      CHECK(testing::brute_force_ap(s, y) == doctest::Approx(expected).epsilon(1e-14));
    }
  }
}

TEST_CASE("average precision matches brute force on small sets") {
  std::mt19937_64 rng(81);
  std::uniform_int_distribution<int> len(1, 8), lvl(0, 3), bit(0, 1);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = len(rng);
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (int i = 0; i < n; ++i) {
      s[i] = lvl(rng) * 0.25;  // coarse levels force ties
      y[i] = bit(rng);
    }
    y[std::uniform_int_distribution<int>(0, n - 1)(rng)] = 1;
    CHECK(std::abs(average_precision(vec(s), y) - testing::brute_force_ap(s, y)) <= 1e-12);
  }
}

TEST_CASE("average precision is invariant under monotone transforms") {
  std::mt19937_64 rng(82);
  std::normal_distribution<double> nd;
  std::vector<double> s(200);
  std::vector<int> y(200);
  for (int i = 0; i < 200; ++i) {
    s[i] = nd(rng);
    y[i] = nd(rng) + s[i] > 0.5;
  }
  const double ap = average_precision(vec(s), y);
  std::vector<double> t(200);
  for (int i = 0; i < 200; ++i) t[i] = std::exp(3.0 * s[i]) + 7.0;
  CHECK(average_precision(vec(t), y) == ap);
}

TEST_CASE("random scores give the positive rate") {
  for (std::uint64_t seed : {1, 2, 3}) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u;
    std::vector<double> s(10000);
    std::vector<int> y(10000);
    for (int i = 0; i < 10000; ++i) {
      s[i] = u(rng);
      y[i] = i % 2;
    }
    CHECK(std::abs(average_precision(vec(s), y) - 0.5) <= 0.02);
  }
}

TEST_CASE("dataset evaluation concatenates frames") {
  const std::vector<std::string> ids{"a", "b", "c"};
  const std::vector<Vector> scores{vec({0.9, 0.1}), vec({0.8, 0.7}), vec({0.2})};
  const std::vector<std::vector<int>> labels{{1, 0}, {0, 1}, {0}};
  const auto rep = evaluate(ids, scores, labels);
  CHECK(rep.ap == average_precision(vec({0.9, 0.1, 0.8, 0.7, 0.2}), {1, 0, 0, 1, 0}));
  CHECK(rep.n_frames == 5);
  CHECK(rep.n_positive == 2);
  REQUIRE(rep.per_video.size() == 3);
  CHECK(*rep.per_video[0].ap == 1.0);
  CHECK(*rep.per_video[1].ap == 0.5);
  CHECK_FALSE(rep.per_video[2].ap.has_value());
  CHECK(rep.to_text().rfind("ap: ", 0) == 0);
  CHECK_THROWS_AS(evaluate(ids, scores, {{1, 0}, {0, 1}, {0, 1}}), DataError);
}

TEST_CASE("score curves") {
  const auto dir = testing::temp_dir("curves");
  export_curves("v", vec({0.123456789012, 0.5, 1.0 / 3.0}), {0, 1, 1}, dir / "v.csv");
  const std::string text = testing::slurp(dir / "v.csv");
  CHECK(std::count(text.begin(), text.end(), '\n') == 4);
  CHECK(text.rfind("frame_index,score,label\n", 0) == 0);
  const auto rows = read_curves(dir / "v.csv");
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].frame == 0);
  CHECK(std::abs(rows[0].score - 0.123456789012) < 1e-9);
  CHECK(std::abs(rows[2].score - 1.0 / 3.0) < 1e-9);
  CHECK(rows[2].label == 1);
  export_curves("e", Vector(0), {}, dir / "e.csv");
  CHECK(testing::slurp(dir / "e.csv") == "frame_index,score,label\n");
  CHECK(read_curves(dir / "e.csv").empty());
  CHECK_THROWS_AS(export_curves("x", vec({0.1}), {0, 1}, dir / "x.csv"), DataError);
}
