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

#ifndef FINGERLOC_TESTS_TEST_UTIL_H_
#define FINGERLOC_TESTS_TEST_UTIL_H_

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "fingerloc/numeric/ops.h"
#include "fingerloc/rng.h"

namespace fingerloc::testing {

using numeric::Parameter;
using numeric::Tensor;

inline Tensor<double> random_tensor(size_t rows, size_t cols, Rng& rng, double lo = -1.0,
                                    double hi = 1.0) {
  Tensor<double> t(rows, cols);
  for (auto& v : t.values()) v = lo + (hi - lo) * uniform_unit(rng);
  return t;
}

// Derivative of `loss` along one scalar by fourth-order central
// differences. The step is the largest of 1e-4, 1e-5, 1e-6 whose estimate
// agrees with the estimate at a ten times smaller step; disagreement means
// a kink (ReLU at zero) lies within reach of the stencil. The choice never
// looks at the analytic gradient.
inline double fd_derivative(double* v, const std::function<double()>& loss) {
  const double saved = *v;
  auto stencil = [&](double h) {
    auto at = [&](double d) {
      *v = saved + d;
      return loss();
    };
    const double r = (8.0 * (at(h) - at(-h)) - (at(2 * h) - at(-2 * h))) / (12.0 * h);
    *v = saved;
    return r;
  };
  double coarse = stencil(1e-4);
  for (double h : {1e-4, 1e-5, 1e-6}) {
    const double fine = stencil(h / 10);
    if (std::abs(coarse - fine) <= 1e-7 + 1e-6 * std::abs(coarse)) return coarse;
    coarse = fine;
  }
  return coarse;
}

// Compares `analytic` against finite differences for every entry of
// `values` and returns the worst relative error. The denominator is floored
// at `floor`: below it the difference quotient is dominated by rounding in
// the loss, so tiny entries are judged on absolute error.
inline double fd_max_rel_error(const std::vector<double*>& values,
                               const std::vector<double>& analytic,
                               const std::function<double()>& loss, double floor = 1e-6) {
  double worst = 0.0;
  for (size_t i = 0; i < values.size(); ++i) {
    const double numeric = fd_derivative(values[i], loss);
    const double denom = std::max({std::abs(numeric), std::abs(analytic[i]), floor});
    const double rel = std::abs(numeric - analytic[i]) / denom;
    if (std::getenv("FINGERLOC_FD_DEBUG") && rel > 1e-5) {
      std::fprintf(stderr, "fd entry %zu: analytic %.12g numeric %.12g rel %.3g\n", i,
                   analytic[i], numeric, rel);
    }
    worst = std::max(worst, rel);
  }
  return worst;
}

// Runs `backward` once on zeroed gradients and checks every parameter entry
// against finite differences of `loss`.
inline double check_params(const std::vector<Parameter<double>*>& params,
                           const std::function<double()>& loss,
                           const std::function<void()>& backward) {
  for (auto* p : params) p->zero_grad();
  backward();
  std::vector<double*> values;
  std::vector<double> analytic;
  for (auto* p : params) {
    for (size_t i = 0; i < p->value.size(); ++i) {
      values.push_back(&p->value[i]);
      analytic.push_back(p->grad[i]);
    }
  }
  return fd_max_rel_error(values, analytic, loss);
}

// Same, for the entries of an input tensor whose gradient is `grad`.
inline double check_input(Tensor<double>& x, const Tensor<double>& grad,
                          const std::function<double()>& loss) {
  std::vector<double*> values;
  std::vector<double> analytic;
  for (size_t i = 0; i < x.size(); ++i) {
    values.push_back(&x[i]);
    analytic.push_back(grad[i]);
  }
  return fd_max_rel_error(values, analytic, loss);
}

// Fixed random linear functional used to reduce an output to a scalar.
class Probe {
 public:
  Probe(size_t rows, size_t cols, uint64_t seed) {
    Rng rng(seed);
    weights_ = random_tensor(rows, cols, rng);
  }
  double operator()(const Tensor<double>& y) const {
    double s = 0.0;
    for (size_t i = 0; i < y.size(); ++i) s += weights_[i] * y[i];
    return s;
  }
  const Tensor<double>& grad() const { return weights_; }

 private:
  Tensor<double> weights_;
};

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("fingerloc-" + tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace fingerloc::testing

#endif  // FINGERLOC_TESTS_TEST_UTIL_H_
