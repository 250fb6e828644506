#pragma once

// Naive reference implementations used as test oracles. Written directly
// from the definitions, deliberately without sharing code with the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "tropfact/matrix.hpp"

namespace oracle {

using tropfact::Matrix;
using tropfact::MaskedMatrix;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline Matrix maxplus(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.cols(), -kInf);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j)
      for (std::size_t k = 0; k < a.cols(); ++k) c(i, j) = std::max(c(i, j), a(i, k) + b(k, j));
  return c;
}

inline Matrix minplus_masked(const Matrix& a, const std::vector<std::uint8_t>& am, const Matrix& b,
                             const std::vector<std::uint8_t>& bm) {
  Matrix c(a.rows(), b.cols(), kInf);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j)
      for (std::size_t k = 0; k < a.cols(); ++k)
        if (am[i * a.cols() + k] && bm[k * b.cols() + j])
          c(i, j) = std::min(c(i, j), a(i, k) + b(k, j));
  return c;
}

// V_kj = min over given i of R_ij - U_ik.
inline Matrix basis(const MaskedMatrix& r, const Matrix& u) {
  Matrix v(u.cols(), r.cols(), kInf);
  for (std::size_t k = 0; k < u.cols(); ++k)
    for (std::size_t j = 0; j < r.cols(); ++j)
      for (std::size_t i = 0; i < r.rows(); ++i)
        if (r.given(i, j)) v(k, j) = std::min(v(k, j), r(i, j) - u(i, k));
  return v;
}

// U_ik = min over given j of R_ij - V_kj.
inline Matrix coef(const MaskedMatrix& r, const Matrix& v) {
  Matrix u(r.rows(), v.rows(), kInf);
  for (std::size_t i = 0; i < r.rows(); ++i)
    for (std::size_t k = 0; k < v.rows(); ++k)
      for (std::size_t j = 0; j < r.cols(); ++j)
        if (r.given(i, j)) u(i, k) = std::min(u(i, k), r(i, j) - v(k, j));
  return u;
}

inline long double error(const MaskedMatrix& r, const Matrix& u, const Matrix& v) {
  const Matrix p = maxplus(u, v);
  long double s = 0;
  for (std::size_t i = 0; i < r.rows(); ++i)
    for (std::size_t j = 0; j < r.cols(); ++j)
      if (r.given(i, j)) s += std::fabs(r(i, j) - p(i, j));
  return s;
}

inline double td(const MaskedMatrix& r, const Matrix& u, const Matrix& v, std::size_t i,
                 std::size_t j) {
  double best = -kInf;
  for (std::size_t k = 0; k < u.cols(); ++k) best = std::max(best, u(i, k) + v(k, j));
  return std::fabs(r(i, j) - best);
}

inline std::size_t f(const Matrix& u, const Matrix& v, std::size_t i, std::size_t j) {
  std::size_t arg = 0;
  for (std::size_t k = 1; k < u.cols(); ++k)
    if (u(i, k) + v(k, j) > u(i, arg) + v(arg, j)) arg = k;
  return arg;
}

inline Matrix random_matrix(std::size_t m, std::size_t n, std::mt19937_64& rng, double lo = -5.0,
                            double hi = 5.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Matrix a(m, n);
  for (auto& x : a.data()) x = d(rng);
  return a;
}

// Random masked matrix with every row and column keeping a given entry.
inline MaskedMatrix random_masked(std::size_t m, std::size_t n, double hide, std::mt19937_64& rng) {
  std::bernoulli_distribution drop(hide);
  for (;;) {
    Matrix v = random_matrix(m, n, rng);
    std::vector<std::uint8_t> mask(m * n);
    for (auto& b : mask) b = drop(rng) ? 0 : 1;
    bool ok = true;
    for (std::size_t i = 0; i < m && ok; ++i) {
      bool any = false;
      for (std::size_t j = 0; j < n; ++j) any |= mask[i * n + j] != 0;
      ok = any;
    }
    for (std::size_t j = 0; j < n && ok; ++j) {
      bool any = false;
      for (std::size_t i = 0; i < m; ++i) any |= mask[i * n + j] != 0;
      ok = any;
    }
    if (ok) return MaskedMatrix(std::move(v), std::move(mask));
  }
}

inline double dcor(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  auto centered = [n](const std::vector<double>& z) {
    std::vector<std::vector<double>> a(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) a[i][j] = std::fabs(z[i] - z[j]);
    std::vector<double> rm(n, 0.0);
    double gm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) rm[i] += a[i][j];
      gm += rm[i];
      rm[i] /= n;
    }
    gm /= double(n) * n;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) a[i][j] = a[i][j] - rm[i] - rm[j] + gm;
    return a;
  };
  const auto a = centered(x), b = centered(y);
  double xy = 0, xx = 0, yy = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      xy += a[i][j] * b[i][j];
      xx += a[i][j] * a[i][j];
      yy += b[i][j] * b[i][j];
    }
  if (xx <= 0 || yy <= 0) return 0.0;
  return std::sqrt(std::max(0.0, xy) / std::sqrt(xx * yy));
}

}  // namespace oracle
