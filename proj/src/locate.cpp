#include <cmath>

#include "hbm/bifurcation.hpp"

namespace hbm {

namespace {

// Point on H = 0 whose projection on the secant direction d equals s.
std::optional<PathPoint> point_at(const ContinuationProblem& problem, const PathPoint& a,
                                  const PathPoint& b, const Vec& d, double length, double s) {
  const double r = s / length;
  Vec y = a.y + r * (b.y - a.y);
  const Index m = y.size() - 1;
  for (int it = 0; it < 20; ++it) {
    Vec h(m + 1);
    h.head(m) = problem.residual(y);
    h[m] = d.dot(y - a.y) - s;
    const double norm = h.head(m).norm();
    if (!std::isfinite(norm)) return std::nullopt;
    if (norm <= problem.tolerance && std::abs(h[m]) <= 1e-14 * (1.0 + length)) {
      PathPoint p;
      p.y = y;
      p.iterations = it + 1;
      p.residual_norm = norm;
      try {
        p.t = tangent(problem.jacobian(y), a.t);
      } catch (const NumericalError&) {
        return std::nullopt;
      }
      return p;
    }
    Mat g(m + 1, m + 1);
    g.topRows(m) = problem.jacobian(y);
    g.row(m) = d.transpose();
    const Eigen::PartialPivLU<Mat> lu(g);
    if (!(lu.rcond() > 1e-15)) return std::nullopt;
    y -= lu.solve(h);
  }
  return std::nullopt;
}

}  // namespace

LocateResult locate_root(const ContinuationProblem& problem, const PathPoint& a,
                         const PathPoint& b, const PathFunction& phi, double tolerance,
                         int max_iterations) {
  double fa = phi(a), fb = phi(b);
  if (!(fa * fb <= 0.0))
    throw InvalidInput("locate_root: test function has no sign change over the segment");
  LocateResult out;
  if (fa == 0.0 || fb == 0.0) {
    out.point = fa == 0.0 ? a : b;
    out.converged = true;
    return out;
  }
  const double length = (b.y - a.y).norm();
  const Vec d = (b.y - a.y) / length;
  double lo = 0.0, hi = length;
  PathPoint best = std::abs(fa) < std::abs(fb) ? a : b;
  double best_f = std::numeric_limits<double>::infinity();
  int side = 0;
  for (int it = 1; it <= max_iterations; ++it) {
    out.iterations = it;
    double s = (lo * fb - hi * fa) / (fb - fa);
    if (!(s > lo && s < hi)) s = 0.5 * (lo + hi);
    auto p = point_at(problem, a, b, d, length, s);
    if (!p) {
      s = 0.5 * (lo + hi);
      p = point_at(problem, a, b, d, length, s);
      if (!p) break;
    }
    const double f = phi(*p);
    if (std::abs(f) < best_f) {
      best = *p;
      best_f = std::abs(f);
    }
    if (std::abs(f) <= tolerance) {
      out.converged = true;
      break;
    }
    if ((f < 0.0) == (fa < 0.0)) {
      lo = s;
      fa = f;
      if (side == -1) fb *= 0.5;
      side = -1;
    } else {
      hi = s;
      fb = f;
      if (side == 1) fa *= 0.5;
      side = 1;
    }
    if (hi - lo <= 1e-13 * length) {
      out.converged = true;
      break;
    }
  }
  out.point = best;
  out.value = std::isfinite(best_f) ? best_f : std::min(std::abs(fa), std::abs(fb));
  out.bracket = hi - lo;
  return out;
}

}  // namespace hbm
