#include <cmath>
#include <numbers>

#include "hbm/oracle.hpp"

namespace hbm {

std::pair<Vec, Vec> evaluate_state(const HarmonicGrid& grid, const Vec& z, double omega, double t) {
  const Index n = grid.dofs;
  const double theta = omega * t / grid.subharmonic;
  const double rate = grid.rate(1, omega);
  Vec x = z.segment(0, n) / std::numbers::sqrt2;
  Vec v = Vec::Zero(n);
  for (int k = 1; k <= grid.harmonics; ++k) {
    const double sk = std::sin(k * theta), ck = std::cos(k * theta);
    const auto s = z.segment(sine_column(k) * n, n);
    const auto c = z.segment(cosine_column(k) * n, n);
    x += sk * s + ck * c;
    v += (rate * k) * (ck * s - sk * c);
  }
  return {x, v};
}

MonodromyResult spectrum_of(const Mat& matrix, double period) {
  MonodromyResult out;
  out.matrix = matrix;
  out.period = period;
  Eigen::EigenSolver<Mat> es(matrix, false);
  if (es.info() != Eigen::Success) throw NumericalError("monodromy: eigen-solver failed");
  out.multipliers = es.eigenvalues();
  out.exponents.resize(out.multipliers.size());
  for (Index i = 0; i < out.multipliers.size(); ++i)
    out.exponents[i] = std::log(out.multipliers[i]) / period;
  return out;
}

MonodromyResult monodromy(const SystemModel& model, const HarmonicGrid& grid, const Vec& z,
                          double omega, int steps_per_period) {
  const Index n = model.dofs();
  const double period = grid.period(omega);
  const double dt = period / steps_per_period;
  auto coefficients = [&](double t) {
    const auto [x, v] = evaluate_state(grid, z, omega, t);
    Mat c = model.damping(), k = model.stiffness();
    if (!model.elements().empty()) {
      const auto [jx, jv] = model.nonlinear_jacobians(x, v);
      c += jv;
      k += jx;
    }
    return std::pair<Mat, Mat>{c, k};
  };

  Mat y = Mat::Zero(n, 2 * n), yd = Mat::Zero(n, 2 * n);
  y.leftCols(n).setIdentity();
  yd.rightCols(n).setIdentity();
  const auto mass_llt = model.mass().llt();
  auto [c0, k0] = coefficients(0.0);
  Mat a = -mass_llt.solve(c0 * yd + k0 * y);
  for (int i = 1; i <= steps_per_period; ++i) {
    const auto [c, k] = coefficients(i * dt);
    const Mat lhs = model.mass() + 0.5 * dt * c + 0.25 * dt * dt * k;
    const Mat rhs = -c * (yd + 0.5 * dt * a) - k * (y + dt * yd + 0.25 * dt * dt * a);
    const Mat a_next = lhs.partialPivLu().solve(rhs);
    y += dt * yd + 0.25 * dt * dt * (a + a_next);
    yd += 0.5 * dt * (a + a_next);
    a = a_next;
  }
  Mat phi(2 * n, 2 * n);
  phi.topRows(n) = y;
  phi.bottomRows(n) = yd;
  return spectrum_of(phi, period);
}

Mat monodromy_fd(const SystemModel& model, const HarmonicGrid& grid, const Vec& z, double omega,
                 int steps_per_period, double step) {
  const Index n = model.dofs();
  const double period = grid.period(omega);
  const auto [x0, v0] = evaluate_state(grid, z, omega, 0.0);
  const LoadFunction load = harmonic_load(model, omega);
  auto flow = [&](const Vec& x, const Vec& v) {
    const TimeHistory h =
        newmark_integrate(model, load, x, v, period, steps_per_period, steps_per_period);
    Vec s(2 * n);
    s << h.x.col(h.x.cols() - 1), h.v.col(h.v.cols() - 1);
    return s;
  };
  Mat phi(2 * n, 2 * n);
  for (Index k = 0; k < 2 * n; ++k) {
    Vec xp = x0, vp = v0, xm = x0, vm = v0;
    const double base = k < n ? x0[k] : v0[k - n];
    const double eps = step * (1.0 + std::abs(base));
    if (k < n) {
      xp[k] += eps;
      xm[k] -= eps;
    } else {
      vp[k - n] += eps;
      vm[k - n] -= eps;
    }
    phi.col(k) = (flow(xp, vp) - flow(xm, vm)) / (2.0 * eps);
  }
  return phi;
}

Complex fold_exponent(Complex lambda, double omega, int subharmonic) {
  const double span = omega / subharmonic;
  double im = lambda.imag() - span * std::round(lambda.imag() / span);
  if (im <= -0.5 * span) im += span;
  return {lambda.real(), im};
}

double exponent_mismatch(const CVec& a, const CVec& b, double omega, int subharmonic) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  const double span = omega / subharmonic;
  auto distance = [&](Complex p, Complex q) {
    double dim = p.imag() - q.imag();
    dim -= span * std::round(dim / span);
    return std::hypot(p.real() - q.real(), dim);
  };
  std::vector<bool> used(static_cast<std::size_t>(b.size()), false);
  double worst = 0.0;
  for (Index i = 0; i < a.size(); ++i) {
    Index best = -1;
    double best_d = 0.0;
    for (Index j = 0; j < b.size(); ++j) {
      if (used[static_cast<std::size_t>(j)]) continue;
      const double d = distance(a[i], b[j]);
      if (best < 0 || d < best_d) {
        best = j;
        best_d = d;
      }
    }
    used[static_cast<std::size_t>(best)] = true;
    worst = std::max(worst, best_d);
  }
  return worst;
}

}  // namespace hbm
