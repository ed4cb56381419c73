#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "qbss/model.hpp"
#include "qbss/rng.hpp"

namespace qbss::testing {

inline MatrixXd random_matrix(int rows, int cols, Rng& rng) {
  MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.gaussian();
  return m;
}

inline VectorXd random_vector(int n, Rng& rng) {
  VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.gaussian();
  return v;
}

// Batch-means standard error for a correlated scalar sequence.
inline double batch_se(const std::vector<double>& x, int n_batches = 50) {
  const int n = static_cast<int>(x.size());
  const int b = n / n_batches;
  std::vector<double> means(n_batches, 0.0);
  double grand = 0.0;
  for (int k = 0; k < n_batches; ++k) {
    for (int i = 0; i < b; ++i) means[k] += x[k * b + i];
    means[k] /= b;
    grand += means[k];
  }
  grand /= n_batches;
  double var = 0.0;
  for (double m : means) var += (m - grand) * (m - grand);
  var /= (n_batches - 1);
  return std::sqrt(var / n_batches);
}

// Two-sample Kolmogorov-Smirnov p-value (asymptotic distribution).
inline double ks_pvalue(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const std::size_t n1 = a.size(), n2 = b.size();
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < n1 && j < n2) {
    if (a[i] <= b[j])
      ++i;
    else
      ++j;
    const double f1 = static_cast<double>(i) / n1;
    const double f2 = static_cast<double>(j) / n2;
    d = std::max(d, std::abs(f1 - f2));
  }
  const double en = std::sqrt(static_cast<double>(n1) * n2 / (n1 + n2));
  const double lambda = (en + 0.12 + 0.11 / en) * d;
  double p = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    p += sign * 2.0 * std::exp(-2.0 * k * k * lambda * lambda);
    sign = -sign;
  }
  return std::min(1.0, std::max(0.0, p));
}

// Golden-section maximization of a unimodal function on [lo, hi].
inline double golden_max(const std::function<double(double)>& f, double lo, double hi,
                         double tol = 1e-10) {
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > tol) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = f(x1);
    }
  }
  return 0.5 * (a + b);
}

// Least-squares fit of the slope of y on x (both already transformed).
inline double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const int n = static_cast<int>(x.size());
  double mx = 0.0, my = 0.0;
  for (int i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double num = 0.0, den = 0.0;
  for (int i = 0; i < n; ++i) {
    num += (x[i] - mx) * (y[i] - my);
    den += (x[i] - mx) * (x[i] - mx);
  }
  return num / den;
}

}  // namespace qbss::testing
