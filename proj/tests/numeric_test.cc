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
#include <vector>

#include "doctest.h"
#include "fingerloc/numeric/adam.h"
#include "fingerloc/numeric/kernels.h"
#include "fingerloc/numeric/ops.h"
#include "test_util.h"

using namespace fingerloc;
using namespace fingerloc::numeric;
using fingerloc::testing::Probe;
using fingerloc::testing::random_tensor;

namespace {

constexpr double kTol = 1e-4;

// Keeps entries at least `gap` away from zero so kinks are never crossed.
void push_off_zero(Tensor<double>& t, double gap = 0.05) {
  for (auto& v : t.values()) {
    if (std::abs(v) < gap) v = v < 0 ? v - gap : v + gap;
  }
}

Neighborhoods random_neighborhoods(size_t n, Rng& rng) {
  Neighborhoods nb;
  nb.num_src = n;
  for (size_t d = 0; d < n; ++d) {
    nb.members.push_back(static_cast<uint32_t>(d));
    for (size_t u = 0; u < n; ++u) {
      if (u != d && uniform_unit(rng) < 0.3) nb.members.push_back(static_cast<uint32_t>(u));
    }
    nb.offsets.push_back(static_cast<uint32_t>(nb.members.size()));
  }
  return nb;
}

}  // namespace

TEST_CASE("linear forward examples") {
  auto x = Tensor<double>::from({1, 2}, {1, 2});
  auto w = Tensor<double>::from({2, 2}, {1, 0, 0, 1});
  Tensor<double> b(std::vector<size_t>{2});
  CHECK(linear_forward(x, w, &b) == x);

  Tensor<double> zero(3, 4);
  Rng rng(1);
  auto w2 = random_tensor(4, 5, rng);
  auto b2 = Tensor<double>::from({5}, {1, -2, 3, -4, 5});
  auto y = linear_forward(zero, w2, &b2);
  for (size_t r = 0; r < 3; ++r) {
    for (size_t c = 0; c < 5; ++c) CHECK(y(r, c) == b2[c]);
  }

  CHECK_THROWS_AS(linear_forward(Tensor<double>(2, 3), w, &b), ShapeError);
}

TEST_CASE("linear gradients match finite differences") {
  Rng rng(2);
  Tensor<double> x = random_tensor(3, 5, rng);
  Parameter<double> w("w", random_tensor(5, 4, rng));
  Parameter<double> b("b", Tensor<double>::from({4}, {0.1, -0.2, 0.3, 0.4}));
  Probe probe(3, 4, 3);
  auto loss = [&] { return probe(linear_forward(x, w.value, &b.value)); };
  Tensor<double> dx;
  double err = fingerloc::testing::check_params({&w, &b}, loss, [&] {
    dx = linear_backward(x, w.value, probe.grad(), w.grad, &b.grad);
  });
  CHECK(err < kTol);
  CHECK(fingerloc::testing::check_input(x, dx, loss) < kTol);
}

TEST_CASE("relu and leaky relu") {
  auto x = Tensor<double>::from({1, 3}, {-1, 0, 2});
  CHECK(relu_forward(x) == Tensor<double>::from({1, 3}, {0, 0, 2}));
  auto lr = leaky_relu_forward(Tensor<double>::from({1, 1}, {-10}), 0.01);
  CHECK(lr[0] == doctest::Approx(-0.1).epsilon(1e-12));

  auto ones = Tensor<double>::from({1, 3}, {1, 1, 1});
  CHECK(relu_backward(x, ones) == Tensor<double>::from({1, 3}, {0, 0, 1}));
  auto g = leaky_relu_backward(x, ones, 0.01);
  CHECK(g[0] == 0.01);
  CHECK(g[1] == 0.01);
  CHECK(g[2] == 1.0);

  Rng rng(4);
  Tensor<double> z = random_tensor(4, 6, rng);
  push_off_zero(z);
  Probe probe(4, 6, 5);
  CHECK(fingerloc::testing::check_input(z, relu_backward(z, probe.grad()),
                                        [&] { return probe(relu_forward(z)); }) < kTol);
  CHECK(fingerloc::testing::check_input(z, leaky_relu_backward(z, probe.grad(), 0.01),
                                        [&] { return probe(leaky_relu_forward(z, 0.01)); }) <
        kTol);
}

TEST_CASE("dropout") {
  Rng rng(6);
  Tensor<double> x = random_tensor(10, 10, rng);
  CHECK(dropout_forward(x, 0.0, true, rng).out == x);
  CHECK(dropout_forward(x, 0.5, false, rng).out == x);
  CHECK(dropout_forward(x, 0.5, false, rng).mask.empty());
  CHECK_THROWS(dropout_forward(x, 1.0, true, rng));

  Tensor<double> big(1000, 100, 1.0);
  auto d = dropout_forward(big, 0.5, true, rng);
  size_t survivors = 0;
  double sum = 0.0;
  for (double v : d.out.values()) {
    if (v != 0.0) {
      ++survivors;
      CHECK(v == 2.0);
    }
    sum += v;
  }
  const double frac = static_cast<double>(survivors) / big.size();
  CHECK(frac > 0.49);
  CHECK(frac < 0.51);
  CHECK(std::abs(sum / big.size() - 1.0) < 0.02);

  auto g = dropout_backward(d.mask, big);
  CHECK(g == d.out);
}

TEST_CASE("mean aggregation") {
  SUBCASE("isolated nodes keep their features") {
    Neighborhoods nb;
    nb.num_src = 3;
    nb.members = {0, 1, 2};
    nb.offsets = {0, 1, 2, 3};
    auto x = Tensor<double>::from({3, 2}, {1, 2, 3, 4, 5, 6});
    CHECK(mean_aggregate(x, nb) == x);
  }
  SUBCASE("mean over self and neighbors") {
    Neighborhoods nb;
    nb.num_src = 3;
    nb.members = {0, 1, 2, 1, 2};
    nb.offsets = {0, 3, 4, 5};
    auto x = Tensor<double>::from({3, 1}, {0, 2, 4});
    CHECK(mean_aggregate(x, nb)(0, 0) == 2.0);
  }
  SUBCASE("constants are preserved") {
    Rng rng(7);
    auto nb = random_neighborhoods(15, rng);
    Tensor<double> x(15, 4, 0.3);
    auto y = mean_aggregate(x, nb);
    for (double v : y.values()) CHECK(v == doctest::Approx(0.3).epsilon(1e-15));
  }
  SUBCASE("gradient") {
    Rng rng(8);
    auto nb = random_neighborhoods(12, rng);
    Tensor<double> x = random_tensor(12, 5, rng);
    Probe probe(12, 5, 9);
    auto dx = mean_aggregate_backward(nb, probe.grad());
    CHECK(fingerloc::testing::check_input(x, dx, [&] { return probe(mean_aggregate(x, nb)); }) <
          kTol);
  }
}

TEST_CASE("softmax and cross entropy") {
  auto p = softmax(Tensor<double>(1, 3, 0.0));
  for (double v : p.values()) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  Rng rng(10);
  Tensor<double> logits = random_tensor(20, 7, rng, -30.0, 30.0);
  auto probs = softmax(logits);
  for (size_t r = 0; r < probs.rows(); ++r) {
    double s = 0.0;
    for (double v : probs.row(r)) {
      CHECK(v > 0.0);
      CHECK(v < 1.0);
      s += v;
    }
    CHECK(std::abs(s - 1.0) < 1e-6);
  }

  const std::vector<int32_t> zero_label{0};
  auto confident = Tensor<double>::from({1, 3}, {50, 0, 0});
  CHECK(cross_entropy(confident, zero_label).loss < 1e-8);

  for (size_t k : {2, 5, 16}) {
    Tensor<double> uniform(4, k, 1.5);
    std::vector<int32_t> labels{0, 1, 0, 1};
    CHECK(cross_entropy(uniform, labels).loss ==
          doctest::Approx(std::log(static_cast<double>(k))).epsilon(1e-12));
  }

  const std::vector<int32_t> bad{3};
  CHECK_THROWS_AS(cross_entropy(Tensor<double>(1, 3), bad), DataError);
  const std::vector<int32_t> negative{-1};
  CHECK_THROWS_AS(cross_entropy(Tensor<double>(1, 3), negative), DataError);

  Tensor<double> x = random_tensor(6, 4, rng, -2.0, 2.0);
  const std::vector<int32_t> labels{0, 3, 2, 1, 1, 0};
  auto r = cross_entropy(x, labels);
  CHECK(fingerloc::testing::check_input(x, r.grad,
                                        [&] { return cross_entropy(x, labels).loss; }) < kTol);
}

TEST_CASE("mse") {
  auto a = Tensor<double>::from({2, 2}, {1, 2, 3, 4});
  CHECK(mse(a, a).loss == 0.0);
  auto zero = Tensor<double>::from({1, 2}, {0, 0});
  auto target = Tensor<double>::from({1, 2}, {3, 4});
  CHECK(mse(zero, target).loss == 25.0);
  CHECK_THROWS_AS(mse(a, target), ShapeError);

  Rng rng(11);
  Tensor<double> pred = random_tensor(5, 2, rng);
  Tensor<double> truth = random_tensor(5, 2, rng);
  auto r = mse(pred, truth);
  CHECK(fingerloc::testing::check_input(pred, r.grad, [&] { return mse(pred, truth).loss; }) <
        kTol);
}

TEST_CASE("l1 penalty") {
  Parameter<double> w("w", Tensor<double>::from({2}, {1, -2}));
  std::vector<Parameter<double>*> params{&w};
  CHECK(l1_penalty<double>(params, 0.1, false) == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(l1_penalty<double>(params, 0.0, false) == 0.0);

  Parameter<double> z("z", Tensor<double>::from({3}, {0, 0.5, -0.5}));
  std::vector<Parameter<double>*> zp{&z};
  l1_penalty<double>(zp, 0.2, true);
  CHECK(z.grad[0] == 0.0);
  CHECK(z.grad[1] == doctest::Approx(0.2));
  CHECK(z.grad[2] == doctest::Approx(-0.2));

  Rng rng(12);
  Parameter<double> v("v", random_tensor(4, 3, rng));
  push_off_zero(v.value);
  std::vector<Parameter<double>*> vp{&v};
  CHECK(fingerloc::testing::check_params(
            vp, [&] { return l1_penalty<double>(vp, 0.05, false); },
            [&] { l1_penalty<double>(vp, 0.05, true); }) < kTol);
}

TEST_CASE("two-layer composition gradient") {
  Rng rng(13);
  Tensor<double> x = random_tensor(6, 5, rng);
  Parameter<double> w1("w1", random_tensor(5, 4, rng));
  Parameter<double> b1("b1", Tensor<double>::from({4}, {0.1, 0.2, -0.1, 0.05}));
  Parameter<double> w2("w2", random_tensor(4, 2, rng));
  Parameter<double> b2("b2", Tensor<double>::from({2}, {0.3, -0.3}));
  Tensor<double> target = random_tensor(6, 2, rng);

  auto loss = [&] {
    auto h = leaky_relu_forward(linear_forward(x, w1.value, &b1.value), 0.01);
    return mse(linear_forward(h, w2.value, &b2.value), target).loss;
  };
  auto backward = [&] {
    auto z = linear_forward(x, w1.value, &b1.value);
    auto h = leaky_relu_forward(z, 0.01);
    auto r = mse(linear_forward(h, w2.value, &b2.value), target);
    auto dh = linear_backward(h, w2.value, r.grad, w2.grad, &b2.grad);
    auto dz = leaky_relu_backward(z, dh, 0.01);
    linear_backward(x, w1.value, dz, w1.grad, &b1.grad, false);
  };
  CHECK(fingerloc::testing::check_params({&w1, &b1, &w2, &b2}, loss, backward) < kTol);
}

TEST_CASE("adam") {
  SUBCASE("zero gradient leaves the parameter unchanged") {
    Parameter<double> w("w", Tensor<double>::from({3}, {1, -2, 3}));
    Adam<double> opt({&w});
    opt.step();
    CHECK(w.value == Tensor<double>::from({3}, {1, -2, 3}));
    CHECK(opt.step_count() == 1);
  }
  SUBCASE("first step moves by about lr") {
    Parameter<double> w("w", Tensor<double>::from({1}, {1.0}));
    Adam<double> opt({&w}, AdamOptions{0.0005});
    w.grad[0] = 3.0;
    opt.step();
    CHECK(w.value[0] == doctest::Approx(1.0 - 0.0005).epsilon(1e-6));
    CHECK(w.grad[0] == 3.0);
  }
  SUBCASE("quadratic bowl") {
    const double w0 = 0.1;
    Parameter<double> w("w", Tensor<double>::from({1}, {w0}));
    Adam<double> opt({&w}, AdamOptions{0.0005});
    double prev = std::abs(w0);
    bool monotone = true;
    for (int i = 0; i < 500; ++i) {
      opt.zero_grad();
      w.grad[0] = 2.0 * w.value[0];
      opt.step();
      const double now = std::abs(w.value[0]);
      if (now >= 0.1 * w0 && now > prev) monotone = false;
      prev = now;
    }
    CHECK(monotone);
    CHECK(std::abs(w.value[0]) < 0.1 * w0);
  }
}

TEST_CASE("serial and parallel kernels agree bit for bit") {
  Rng rng(14);
  const size_t m = 37, k = 19, n = 23;
  std::vector<float> a(m * k), b(k * n), bt(n * k), dy(m * n);
  for (auto* v : {&a, &b, &bt, &dy}) {
    for (auto& x : *v) x = static_cast<float>(uniform_unit(rng) - 0.5);
  }
  std::vector<float> c1(m * n), c2(m * n);
  kernels::serial::gemm_nn(m, k, n, a.data(), b.data(), c1.data());
  kernels::parallel::gemm_nn(m, k, n, a.data(), b.data(), c2.data());
  CHECK(c1 == c2);

  std::vector<float> g1(k * n, 0.5f), g2(k * n, 0.5f);
  kernels::serial::gemm_tn_acc(m, k, n, a.data(), dy.data(), g1.data());
  kernels::parallel::gemm_tn_acc(m, k, n, a.data(), dy.data(), g2.data());
  CHECK(g1 == g2);

  std::vector<float> t1(m * k), t2(m * k);
  kernels::serial::gemm_nt(m, n, k, dy.data(), bt.data(), t1.data());
  kernels::parallel::gemm_nt(m, n, k, dy.data(), bt.data(), t2.data());
  CHECK(t1 == t2);

  auto nb = random_neighborhoods(m, rng);
  std::vector<float> s1(m * k), s2(m * k);
  kernels::serial::mean_aggregate<float>(nb.offsets, nb.members, k, a.data(), s1.data());
  kernels::parallel::mean_aggregate<float>(nb.offsets, nb.members, k, a.data(), s2.data());
  CHECK(s1 == s2);

  std::vector<float> r1(m * k, 0.0f), r2(m * k, 0.0f);
  kernels::serial::mean_aggregate_backward<float>(nb.offsets, nb.members, k, m, a.data(),
                                                  r1.data());
  kernels::parallel::mean_aggregate_backward<float>(nb.offsets, nb.members, k, m, a.data(),
                                                    r2.data());
  CHECK(r1 == r2);

  std::vector<double> d1(m * m), d2(m * m);
  kernels::serial::squared_distances(m, m, k, a.data(), a.data(), d1.data());
  kernels::parallel::squared_distances(m, m, k, a.data(), a.data(), d2.data());
  CHECK(d1 == d2);
  for (size_t i = 0; i < m; ++i) CHECK(d1[i * m + i] == 0.0);
}
