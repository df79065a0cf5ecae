// Copyright 2026 The fingerloc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "fingerloc/evaluation.h"
#include "fingerloc/rng.h"
#include "test_util.h"

using namespace fingerloc;
using namespace fingerloc::evaluation;
using dataset::CoordScaler;
using numeric::Tensor;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("mean location error examples") {
  const CoordScaler identity({0.0, 0.0}, {1.0, 1.0});
  std::vector<Coord> a{{1.5, -2.0}, {7.0, 3.0}};
  CHECK(mean_location_error(a, a, identity).mle == 0.0);

  std::vector<Coord> p{{0.0, 0.0}}, t{{3.0, 4.0}};
  LocationError e = mean_location_error(p, t, identity);
  CHECK(e.mle == 5.0);
  REQUIRE(e.errors.size() == 1);

  std::vector<Coord> p2{{0.0, 0.0}, {0.0, 0.0}}, t2{{0.0, 0.0}, {6.0, 8.0}};
  e = mean_location_error(p2, t2, identity);
  CHECK(e.mle == 5.0);
  CHECK(e.errors == std::vector<double>{0.0, 10.0});

  std::vector<Coord> one{{0.0, 0.0}};
  CHECK_THROWS_AS(mean_location_error(one, t2, identity), ShapeError);
  CHECK_THROWS_AS(mean_location_error(one, one, CoordScaler{}), Error);
}

TEST_CASE("location error scales with sigma and ignores mu") {
  Rng rng(5);
  std::vector<Coord> p, t;
  for (int i = 0; i < 100; ++i) {
    p.push_back({uniform_unit(rng) - 0.5, uniform_unit(rng) - 0.5});
    t.push_back({uniform_unit(rng) - 0.5, uniform_unit(rng) - 0.5});
  }
  const double base = mean_location_error(p, t, CoordScaler({0.0, 0.0}, {8.0, 4.0})).mle;
  const double doubled = mean_location_error(p, t, CoordScaler({0.0, 0.0}, {16.0, 8.0})).mle;
  CHECK(doubled == doctest::Approx(2.0 * base).epsilon(1e-12));
  // Powers of two for mu keep the inverse transform exact enough to compare.
  const double shifted = mean_location_error(p, t, CoordScaler({1024.0, -512.0}, {8.0, 4.0})).mle;
  CHECK(shifted == doctest::Approx(base).epsilon(1e-9));

  LocationError e = mean_location_error(p, t, CoordScaler({0.0, 0.0}, {8.0, 4.0}));
  double sum = 0.0;
  for (size_t i = 1; i < e.errors.size(); ++i) CHECK(e.errors[i - 1] <= e.errors[i]);
  for (double v : e.errors) sum += v;
  CHECK(e.mle == doctest::Approx(sum / 100.0).epsilon(1e-14));
}

TEST_CASE("accuracy and confusion") {
  Tensor<double> logits(4, 3, 0.0);
  const std::vector<int32_t> labels{0, 2, 1, 2};
  for (size_t i = 0; i < labels.size(); ++i) logits(i, static_cast<size_t>(labels[i])) = 1.0;
  CHECK(classification_accuracy(logits, labels) == 1.0);
  Confusion c = confusion_matrix(logits, labels, 3);
  CHECK(c == Confusion{{1, 0, 0}, {0, 1, 0}, {0, 0, 2}});

  // argmax is invariant under positive scaling
  Rng rng(2);
  Tensor<double> r = testing::random_tensor(50, 4, rng, -2.0, 2.0);
  std::vector<int32_t> y(50);
  for (auto& v : y) v = static_cast<int32_t>(uniform_index(rng, 4));
  Tensor<double> scaled = r;
  for (size_t i = 0; i < scaled.size(); ++i) scaled.data()[i] *= 37.5;
  CHECK(classification_accuracy(r, y) == classification_accuracy(scaled, y));

  // ties go to the lowest index
  Tensor<double> tied(1, 3, 0.5);
  CHECK(argmax_rows(tied) == std::vector<int32_t>{0});

  const std::vector<int32_t> bad{0, 3, 1, 2};
  CHECK_THROWS_AS(classification_accuracy(logits, bad), DataError);
  CHECK_THROWS_AS(confusion_matrix(logits, bad, 3), DataError);
}

TEST_CASE("random logits give chance accuracy") {
  Rng rng(11);
  Tensor<double> logits = testing::random_tensor(1000, 5, rng, -1.0, 1.0);
  std::vector<int32_t> y(1000);
  for (auto& v : y) v = static_cast<int32_t>(uniform_index(rng, 5));
  const double acc = classification_accuracy(logits, y);
  CHECK(acc >= 0.16);
  CHECK(acc <= 0.24);

  Confusion c = confusion_matrix(logits, y, 5);
  int64_t total = 0, trace = 0;
  std::vector<int64_t> truth_counts(5, 0);
  for (int32_t v : y) ++truth_counts[static_cast<size_t>(v)];
  for (size_t t = 0; t < 5; ++t) {
    int64_t row = 0;
    for (size_t p = 0; p < 5; ++p) row += c[t][p];
    CHECK(row == truth_counts[t]);
    total += row;
    trace += c[t][t];
  }
  CHECK(total == 1000);
  CHECK(static_cast<double>(trace) / 1000.0 == acc);
}

TEST_CASE("cdf points") {
  const std::vector<double> single{5.0};
  auto pts = cdf_points(single);
  REQUIRE(pts.size() == 1);
  CHECK(pts[0] == std::pair<double, double>{5.0, 1.0});

  const std::vector<double> four{3.0, 1.0, 4.0, 2.0};
  pts = cdf_points(four);
  REQUIRE(pts.size() == 4);
  for (size_t i = 0; i < 4; ++i) {
    CHECK(pts[i].first == static_cast<double>(i + 1));
    CHECK(pts[i].second == 0.25 * static_cast<double>(i + 1));
  }
  CHECK_THROWS_AS(cdf_points(std::vector<double>{}), DataError);

  Rng rng(4);
  std::vector<double> errs(333);
  for (auto& e : errs) e = 20.0 * uniform_unit(rng);
  pts = cdf_points(errs);
  for (size_t i = 1; i < pts.size(); ++i) {
    CHECK(pts[i - 1].first <= pts[i].first);
    CHECK(pts[i - 1].second <= pts[i].second);
  }
  CHECK(pts.back().second == 1.0);
}

TEST_CASE("report and writers") {
  const std::vector<int32_t> pb{0, 1, 1, 0}, tb{0, 1, 0, 0};
  const std::vector<int32_t> pf{2, 0, 1, 1}, tf{2, 0, 1, 0};
  const std::vector<Coord> pc{{0, 0}, {0, 0}, {1, 1}, {2, 2}}, tc{{3, 4}, {0, 0}, {1, 1}, {2, 2}};
  MetricsReport r = make_report(pb, tb, pf, tf, 3, pc, tc);
  CHECK(r.records == 4);
  CHECK(*r.building_accuracy == 0.75);
  CHECK(*r.floor_accuracy == 0.75);
  CHECK(*r.mle_meters == 1.25);
  CHECK(r.summary() == "building=75.00% floor=75.00% mle=1.250 m");

  MetricsReport coords_only = make_report({}, {}, {}, {}, 0, pc, tc);
  CHECK_FALSE(coords_only.building_accuracy.has_value());
  CHECK(coords_only.summary() == "mle=1.250 m");

  testing::TempDir dir("eval");
  write_report(dir.path(), "test", r, {{"seed", "7"}});
  const std::string metrics = slurp(dir / "test_metrics.txt");
  CHECK(metrics.find("records=4\n") != std::string::npos);
  CHECK(metrics.find("mle_m=1.25\n") != std::string::npos);
  CHECK(metrics.find("seed=7\n") != std::string::npos);
  CHECK(slurp(dir / "test_floor_confusion.csv") ==
        "truth,pred0,pred1,pred2\n0,1,1,0\n1,0,1,0\n2,0,0,1\n");
  CHECK(slurp(dir / "test_cdf.csv") == "error_m,fraction\n0,0.25\n0,0.5\n0,0.75\n5,1\n");
}
