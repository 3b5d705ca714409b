#pragma once

// Desk models and independent reference computations shared by the tests.
// Nothing here calls into the HB machinery: the oracles are written from
// the closed-form HB1 amplitude relation, direct quadrature and dense
// linear algebra.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/tools/roots.hpp>
#include <unsupported/Eigen/Polynomials>

#include "hbm/model.hpp"
#include "hbm/model_io.hpp"

namespace desk {

using hbm::Mat;
using hbm::Vec;

inline std::string source_path(const std::string& relative) {
  return std::string(HBM_SOURCE_DIR) + "/" + relative;
}

inline hbm::SystemModel load(const std::string& name) {
  return hbm::load_model(source_path("models/" + name + ".json"));
}

inline hbm::SystemModel duffing(double c = 0.05, double k3 = 0.1, double F = 0.2) {
  Mat m(1, 1), cc(1, 1), k(1, 1);
  m << 1;
  cc << c;
  k << 1;
  hbm::NonlinearElement e;
  e.kind = hbm::ElementKind::cubic;
  e.coefficients = {k3};
  hbm::ForcingSpec f;
  f.amplitude = Vec::Ones(1);
  return hbm::SystemModel(m, cc, k, {e}, f, {{"F", F}});
}

inline std::mt19937_64 rng(unsigned seed) { return std::mt19937_64(seed); }

inline Vec random_vector(std::mt19937_64& g, hbm::Index n, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Vec v(n);
  for (hbm::Index i = 0; i < n; ++i) v(i) = u(g);
  return v;
}

inline double uniform(std::mt19937_64& g, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(g);
}

inline double rel_error(const Eigen::Ref<const Mat>& a, const Eigen::Ref<const Mat>& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-300);
}

// HB1 amplitude relation for x'' + c x' + x + k3 x^3 = F cos(w t):
//   ((1 - w^2) a + (3/4) k3 a^3)^2 + (c w a)^2 = F^2,
// written as a cubic in u = a^2 with coefficients (c3, c2, c1, c0).
struct Cubic {
  double c3, c2, c1, c0;
};

inline Cubic amplitude_cubic(double c, double k3, double F, double w) {
  const double al = 0.75 * k3, d = 1.0 - w * w;
  return {al * al, 2.0 * al * d, d * d + c * c * w * w, -F * F};
}

/// Positive amplitudes a solving the HB1 relation, ascending.
inline std::vector<double> hb1_amplitudes(double c, double k3, double F, double w) {
  const Cubic p = amplitude_cubic(c, k3, F, w);
  Eigen::Vector4d coeffs(p.c0, p.c1, p.c2, p.c3);
  Eigen::PolynomialSolver<double, 3> solver(coeffs);
  std::vector<double> out;
  for (const auto& r : solver.roots())
    if (std::abs(r.imag()) <= 1e-9 * (1.0 + std::abs(r.real())) && r.real() > 0.0)
      out.push_back(std::sqrt(r.real()));
  std::sort(out.begin(), out.end());
  return out;
}

inline double cubic_discriminant(const Cubic& p) {
  const double a = p.c3, b = p.c2, c = p.c1, d = p.c0;
  return 18 * a * b * c * d - 4 * b * b * b * d + b * b * c * c - 4 * a * c * c * c -
         27 * a * a * d * d;
}

/// Frequencies in [w_lo, w_hi] where the discriminant of the amplitude cubic
/// vanishes (fold frequencies of the HB1 response), ascending.
inline std::vector<double> hb1_folds(double c, double k3, double F, double w_lo, double w_hi,
                                     int scan = 4000) {
  auto disc = [&](double w) { return cubic_discriminant(amplitude_cubic(c, k3, F, w)); };
  std::vector<double> roots;
  double prev_w = w_lo, prev = disc(w_lo);
  for (int i = 1; i <= scan; ++i) {
    const double w = w_lo + (w_hi - w_lo) * i / scan;
    const double d = disc(w);
    if ((prev < 0) != (d < 0)) {
      boost::uintmax_t iters = 200;
      auto r = boost::math::tools::toms748_solve(disc, prev_w, w, prev, d,
                                                 boost::math::tools::eps_tolerance<double>(52),
                                                 iters);
      roots.push_back(0.5 * (r.first + r.second));
    }
    prev_w = w;
    prev = d;
  }
  return roots;
}

/// The discriminant is quadratic in the constant coefficient -F^2:
///   q2 d^2 + q1 d + q0 with d = -F^2.
struct FoldQuadratic {
  double q2, q1, q0;
};
inline FoldQuadratic fold_quadratic(double c, double k3, double w) {
  const Cubic p = amplitude_cubic(c, k3, 0.0, w);
  const double a = p.c3, b = p.c2, cc = p.c1;
  return {-27 * a * a, 18 * a * b * cc - 4 * b * b * b, b * b * cc * cc - 4 * a * cc * cc * cc};
}

/// Forcing levels F > 0 for which w is a fold of the HB1 response.
inline std::vector<double> fold_forcing(double c, double k3, double w) {
  const FoldQuadratic q = fold_quadratic(c, k3, w);
  const double disc = q.q1 * q.q1 - 4 * q.q2 * q.q0;
  std::vector<double> out;
  if (disc < 0) return out;
  for (double sgn : {-1.0, 1.0}) {
    const double d = (-q.q1 + sgn * std::sqrt(disc)) / (2 * q.q2);
    if (-d > 0) out.push_back(std::sqrt(-d));
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Cusp of the fold locus: the frequency where the two fold forcing levels
/// merge (double root of the discriminant in F^2), and that forcing level.
struct Cusp {
  double omega, forcing;
};
inline Cusp hb1_cusp(double c, double k3) {
  auto merge = [&](double w) {
    const FoldQuadratic q = fold_quadratic(c, k3, w);
    return q.q1 * q.q1 - 4 * q.q2 * q.q0;
  };
  // The locus exists only above the cusp frequency; scan upward from 1.
  double lo = 1.0, hi = 1.0;
  while (merge(hi) <= 0.0) hi += 1e-3;
  lo = hi - 1e-3;
  boost::uintmax_t iters = 200;
  auto r = boost::math::tools::toms748_solve(merge, lo, hi,
                                             boost::math::tools::eps_tolerance<double>(52), iters);
  const double w = 0.5 * (r.first + r.second);
  const FoldQuadratic q = fold_quadratic(c, k3, w);
  return {w, std::sqrt(q.q1 / (2 * q.q2))};
}

/// Residual of x'' + c x' + k x + k3 x^3 = F cos(w t) projected onto the
/// HB basis by trapezoidal quadrature at `samples` points, written directly
/// from the harmonic sums (no collocation matrices).
inline Vec duffing_galerkin(const Vec& z, double w, double c, double k, double k3, double F,
                            int harmonics, int samples) {
  const double inv_sqrt2 = 1.0 / std::numbers::sqrt2;
  Vec h = Vec::Zero(2 * harmonics + 1);
  for (int j = 0; j < samples; ++j) {
    const double th = 2.0 * std::numbers::pi * j / samples;
    double x = z(0) * inv_sqrt2, v = 0.0, a = 0.0;
    for (int kk = 1; kk <= harmonics; ++kk) {
      const double s = z(2 * kk - 1), co = z(2 * kk);
      const double r = kk * w;
      x += s * std::sin(kk * th) + co * std::cos(kk * th);
      v += r * (s * std::cos(kk * th) - co * std::sin(kk * th));
      a += -r * r * (s * std::sin(kk * th) + co * std::cos(kk * th));
    }
    const double res = a + c * v + k * x + k3 * x * x * x - F * std::cos(th);
    h(0) += res * inv_sqrt2;
    for (int kk = 1; kk <= harmonics; ++kk) {
      h(2 * kk - 1) += res * std::sin(kk * th);
      h(2 * kk) += res * std::cos(kk * th);
    }
  }
  return (2.0 / samples) * h;
}

/// Poles of the first-order system [0 I; -M^-1 K, -M^-1 C].
inline hbm::CVec state_poles(const Mat& m, const Mat& c, const Mat& k) {
  const hbm::Index n = m.rows();
  Mat a = Mat::Zero(2 * n, 2 * n);
  a.topRightCorner(n, n) = Mat::Identity(n, n);
  const Eigen::PartialPivLU<Mat> lu(m);
  a.bottomLeftCorner(n, n) = -lu.solve(k);
  a.bottomRightCorner(n, n) = -lu.solve(c);
  return Eigen::EigenSolver<Mat>(a).eigenvalues();
}

/// Largest distance after greedy nearest matching of two point sets.
inline double set_distance(const hbm::CVec& a, const hbm::CVec& b) {
  std::vector<bool> used(static_cast<std::size_t>(b.size()), false);
  double worst = 0.0;
  for (hbm::Index i = 0; i < a.size(); ++i) {
    double best = INFINITY;
    hbm::Index arg = -1;
    for (hbm::Index j = 0; j < b.size(); ++j)
      if (!used[static_cast<std::size_t>(j)] && std::abs(a(i) - b(j)) < best) {
        best = std::abs(a(i) - b(j));
        arg = j;
      }
    if (arg < 0) return INFINITY;
    used[static_cast<std::size_t>(arg)] = true;
    worst = std::max(worst, best);
  }
  return worst;
}

}  // namespace desk
