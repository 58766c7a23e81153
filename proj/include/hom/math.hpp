#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

#include "hom/errors.hpp"

namespace hom::math {

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double sqrt2 = 1.41421356237309504880;
inline constexpr double inv_sqrt_2pi = 0.39894228040143267794;

/// Compensated accumulator. Distribution totals must close to ~1e-15 even
/// over a few hundred bins, which plain summation does not guarantee.
class KahanSum {
 public:
  void add(double x) {
    const double y = x - c_;
    const double t = sum_ + y;
    c_ = (t - sum_) - y;
    sum_ = t;
  }
  KahanSum& operator+=(double x) {
    add(x);
    return *this;
  }
  double value() const { return sum_; }

 private:
  double sum_ = 0.0;
  double c_ = 0.0;
};

inline double norm_pdf(double x, double mu, double s) {
  if (!std::isfinite(x)) return 0.0;
  const double z = (x - mu) / s;
  return std::exp(-0.5 * z * z) * inv_sqrt_2pi / s;
}

/// Gaussian mass of N(mu, s) over [a, b], a <= b (either may be infinite).
/// Evaluated through erfc on the side away from the bulk so that far-tail
/// masses keep full relative accuracy.
inline double gauss_mass(double a, double b, double mu, double s) {
  const double za = (a - mu) / (s * sqrt2);
  const double zb = (b - mu) / (s * sqrt2);
  double m;
  if (za + zb > 0.0) {
    m = 0.5 * (std::erfc(za) - std::erfc(zb));
  } else {
    m = 0.5 * (std::erfc(-zb) - std::erfc(-za));
  }
  return m < 0.0 ? 0.0 : m;
}

/// Dense row-major square matrix, just big enough for 4x4 Fisher work.
struct Matrix {
  int n = 0;
  std::vector<double> a;

  Matrix() = default;
  explicit Matrix(int size) : n(size), a(static_cast<std::size_t>(size) * size, 0.0) {}

  double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * n + j]; }
  double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * n + j]; }

  double max_abs() const {
    double m = 0.0;
    for (double x : a) m = std::max(m, std::abs(x));
    return m;
  }
};

struct SymmetricEigen {
  std::vector<double> values;  // ascending
  Matrix vectors;              // columns are eigenvectors
};

/// Cyclic Jacobi diagonalisation for symmetric matrices. The matrices here
/// are at most 4x4, so convergence is immediate and no pivot strategy is
/// needed.
inline SymmetricEigen eigen_symmetric(Matrix m) {
  const int n = m.n;
  Matrix v(n);
  for (int i = 0; i < n; ++i) v(i, i) = 1.0;

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) off += m(i, j) * m(i, j);
    if (off <= 1e-300) break;

    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = m(p, q);
        if (apq == 0.0) continue;
        const double scale = std::abs(m(p, p)) + std::abs(m(q, q));
        if (scale + 100.0 * std::abs(apq) == scale) {
          m(p, q) = m(q, p) = 0.0;
          continue;
        }
        const double theta = (m(q, q) - m(p, p)) / (2.0 * apq);
        double t = 1.0 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        if (theta < 0.0) t = -t;
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        for (int k = 0; k < n; ++k) {
          const double mkp = m(k, p);
          const double mkq = m(k, q);
          m(k, p) = c * mkp - s * mkq;
          m(k, q) = s * mkp + c * mkq;
        }
        for (int k = 0; k < n; ++k) {
          const double mpk = m(p, k);
          const double mqk = m(q, k);
          m(p, k) = c * mpk - s * mqk;
          m(q, k) = s * mpk + c * mqk;
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int i, int j) { return m(i, i) < m(j, j); });

  SymmetricEigen out;
  out.values.resize(n);
  out.vectors = Matrix(n);
  for (int j = 0; j < n; ++j) {
    out.values[j] = m(order[j], order[j]);
    for (int i = 0; i < n; ++i) out.vectors(i, j) = v(i, order[j]);
  }
  return out;
}

struct GoldenResult {
  double x = 0.0;
  double f = 0.0;
};

/// Golden-section maximisation on [a, b] to |x - x*| < xtol. Assumes the
/// bracket holds a single interior maximum; callers bracket with a coarse
/// grid first.
template <class F>
GoldenResult golden_section_max(F&& f, double a, double b, double xtol) {
  constexpr double invphi = 0.61803398874989484820;
  double x1 = b - invphi * (b - a);
  double x2 = a + invphi * (b - a);
  double f1 = f(x1);
  double f2 = f(x2);
  while (b - a > xtol) {
    if (f1 >= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - invphi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + invphi * (b - a);
      f2 = f(x2);
    }
  }
  return f1 >= f2 ? GoldenResult{x1, f1} : GoldenResult{x2, f2};
}

struct NelderMeadOptions {
  int max_iter = 600;
  double ftol_abs = 1e-10;
  double xtol = 1e-9;
};

/// Nelder-Mead maximisation. The objective may return -inf outside its
/// domain; the simplex then contracts back inside.
template <class F>
std::pair<std::vector<double>, double> nelder_mead_max(
    F&& f, const std::vector<double>& x0, const std::vector<double>& step,
    NelderMeadOptions opts = {}) {
  const std::size_t n = x0.size();
  std::vector<std::vector<double>> xs(n + 1, x0);
  std::vector<double> fs(n + 1);
  for (std::size_t i = 0; i < n; ++i) xs[i + 1][i] += step[i];
  for (std::size_t i = 0; i <= n; ++i) fs[i] = f(xs[i]);

  auto order = [&] {
    std::vector<std::size_t> idx(n + 1);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return fs[a] > fs[b]; });
    std::vector<std::vector<double>> xs2;
    std::vector<double> fs2;
    for (auto i : idx) {
      xs2.push_back(xs[i]);
      fs2.push_back(fs[i]);
    }
    xs = std::move(xs2);
    fs = std::move(fs2);
  };

  for (int it = 0; it < opts.max_iter; ++it) {
    order();
    if (std::isfinite(fs[0]) && std::isfinite(fs[n]) &&
        fs[0] - fs[n] < opts.ftol_abs) {
      double spread = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        spread = std::max(spread, std::abs(xs[n][i] - xs[0][i]));
      if (spread < opts.xtol) break;
    }

    std::vector<double> centroid(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) centroid[j] += xs[i][j];
    }
    for (auto& c : centroid) c /= static_cast<double>(n);

    auto blend = [&](double coef) {
      std::vector<double> x(n);
      for (std::size_t j = 0; j < n; ++j)
        x[j] = centroid[j] + coef * (centroid[j] - xs[n][j]);
      return x;
    };

    auto xr = blend(1.0);
    double fr = f(xr);
    if (fr > fs[0]) {
      auto xe = blend(2.0);
      double fe = f(xe);
      if (fe > fr) {
        xs[n] = std::move(xe);
        fs[n] = fe;
      } else {
        xs[n] = std::move(xr);
        fs[n] = fr;
      }
    } else if (fr > fs[n - 1]) {
      xs[n] = std::move(xr);
      fs[n] = fr;
    } else {
      auto xc = blend(fr > fs[n] ? 0.5 : -0.5);
      double fc = f(xc);
      if (fc > std::max(fr, fs[n])) {
        xs[n] = std::move(xc);
        fs[n] = fc;
      } else {
        for (std::size_t i = 1; i <= n; ++i) {
          for (std::size_t j = 0; j < n; ++j)
            xs[i][j] = xs[0][j] + 0.5 * (xs[i][j] - xs[0][j]);
          fs[i] = f(xs[i]);
        }
      }
    }
  }
  order();
  return {xs[0], fs[0]};
}

}  // namespace hom::math
