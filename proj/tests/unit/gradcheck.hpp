#pragma once

#include <cmath>
#include <functional>

#include "splicegan/rng.hpp"
#include "splicegan/tensor.hpp"

// Central-difference checks shared by the loss and layer tests. All checks
// run in 64-bit.
namespace gradcheck {

inline double relative_error(double analytic, double numeric) {
  const double scale = std::max({1.0, std::abs(analytic), std::abs(numeric)});
  return std::abs(analytic - numeric) / scale;
}

// Compares an analytic gradient against central finite differences of
// f : tensor -> scalar, coordinate by coordinate.
inline double max_relative_error(splicegan::TensorD& x, const splicegan::TensorD& analytic,
                                 const std::function<double()>& f, double h = 1e-6) {
  double worst = 0.0;
  for (int64_t i = 0; i < x.size(); ++i) {
    const double original = x[i];
    x[i] = original + h;
    const double fp = f();
    x[i] = original - h;
    const double fm = f();
    x[i] = original;
    const double numeric = (fp - fm) / (2.0 * h);
    worst = std::max(worst, relative_error(analytic[i], numeric));
  }
  return worst;
}

inline splicegan::TensorD random_tensor(std::vector<int> shape, splicegan::Rng& rng,
                                        double lo, double hi) {
  splicegan::TensorD t(std::move(shape));
  for (int64_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

}  // namespace gradcheck
