#include <cmath>
#include <sstream>

#include "hbm/solver.hpp"

namespace hbm {

namespace {

constexpr double singular_rcond = 1e-15;

Mat bordered(const Mat& j, const Vec& row) {
  Mat g(j.rows() + 1, j.cols());
  g.topRows(j.rows()) = j;
  g.row(j.rows()) = row.transpose();
  return g;
}

Vec last_unit(Index size) {
  Vec e = Vec::Zero(size);
  e[size - 1] = 1.0;
  return e;
}

Vec solve_bordered(const Mat& g, const Vec& rhs, const char* what) {
  Eigen::PartialPivLU<Mat> lu(g);
  if (!(lu.rcond() > singular_rcond)) throw NumericalError(std::string(what) + ": singular bordered matrix");
  Vec x = lu.solve(rhs);
  if (!x.allFinite()) throw NumericalError(std::string(what) + ": non-finite solution");
  return x;
}

}  // namespace

CorrectorResult correct_moore_penrose(const ContinuationProblem& problem, const Vec& y_pred,
                                      const Vec& v0, const CorrectorOptions& options) {
  CorrectorResult out;
  out.y = y_pred;
  out.v = v0.normalized();
  for (int it = 1; it <= options.max_iterations; ++it) {
    Vec h;
    try {
      h = problem.residual(out.y);
    } catch (const NumericalError&) {
      return out;
    }
    out.iterations = it;
    out.residual_norm = h.norm();
    out.history.push_back(out.residual_norm);
    if (!std::isfinite(out.residual_norm)) return out;
    if (out.residual_norm <= problem.tolerance) {
      out.converged = true;
      return out;
    }
    if (it == options.max_iterations) break;
    try {
      const Mat j = problem.jacobian(out.y);
      const Mat g = bordered(j, out.v);
      Eigen::PartialPivLU<Mat> lu(g);
      if (!(lu.rcond() > singular_rcond)) return out;
      Vec rhs = Vec::Zero(g.rows());
      rhs.head(h.size()) = h;
      const Vec dy = lu.solve(rhs);
      rhs.head(h.size()) = j * out.v;
      rhs[h.size()] = 0.0;
      const Vec dv = lu.solve(rhs);
      if (!dy.allFinite() || !dv.allFinite()) return out;
      out.y -= dy;
      out.v -= dv;
      out.v.normalize();
    } catch (const NumericalError&) {
      return out;
    }
  }
  return out;
}

Vec tangent(const Mat& jacobian, const Vec& t_prev) {
  return solve_bordered(bordered(jacobian, t_prev), last_unit(jacobian.rows() + 1), "tangent")
      .normalized();
}

Vec initial_tangent(const Mat& jacobian) {
  const Vec ones = Vec::Ones(jacobian.cols());
  try {
    return solve_bordered(bordered(jacobian, ones), last_unit(jacobian.rows() + 1), "tangent")
        .normalized();
  } catch (const NumericalError&) {
    return null_direction(jacobian);
  }
}

Vec null_direction(const Mat& jacobian) {
  const Mat jt = jacobian.transpose();
  Eigen::HouseholderQR<Mat> qr(jt);
  const Mat q = qr.householderQ();
  return q.col(q.cols() - 1);
}

PathResult trace_path(const ContinuationProblem& problem, const Vec& y0, const Vec& t0,
                      const PathSettings& settings,
                      const std::function<bool(const PathPoint&)>& keep_going) {
  PathResult out;
  out.points.push_back({y0, t0.normalized(), 0, problem.residual(y0).norm()});
  double h = std::clamp(settings.step, settings.min_step, settings.max_step);
  while (static_cast<int>(out.points.size()) < settings.max_points) {
    const PathPoint prev = out.points.back();
    const CorrectorResult res =
        correct_moore_penrose(problem, prev.y + h * prev.t, prev.t, settings.corrector);
    bool ok = res.converged;
    Vec t_new;
    if (ok) {
      try {
        t_new = tangent(problem.jacobian(res.y), prev.t);
      } catch (const NumericalError&) {
        ok = false;
      }
    }
    const bool at_floor = h <= settings.min_step * (1.0 + 1e-12);
    if (ok && !at_floor) {
      if ((res.y - prev.y).norm() > 2.0 * h) ok = false;
      else if (t_new.dot(prev.t) < settings.min_turn_cosine) ok = false;
    }
    if (!ok) {
      if (at_floor) {
        std::ostringstream msg;
        msg << "step size underflow after " << out.points.size() << " points";
        out.aborted = true;
        out.message = msg.str();
        return out;
      }
      h = std::max(0.5 * h, settings.min_step);
      continue;
    }
    out.points.push_back({res.y, t_new, res.iterations, res.residual_norm});
    if (!keep_going(out.points.back())) return out;
    if (res.iterations <= settings.fast_iterations) h = std::min(h * settings.growth, settings.max_step);
  }
  out.message = "point limit reached";
  return out;
}

ContinuationProblem frequency_problem(const ResidualWorkspace& ws, double tolerance) {
  const Index m = ws.size();
  ContinuationProblem p;
  p.tolerance = tolerance > 0.0 ? tolerance : ws.default_tolerance();
  p.residual = [&ws, m](const Vec& y) { return ws.residual(y.head(m), y[m]); };
  p.jacobian = [&ws, m](const Vec& y) {
    Mat j(m, m + 1);
    j.leftCols(m) = ws.jacobian_z(y.head(m), y[m]);
    j.col(m) = ws.jacobian_omega(y.head(m), y[m]);
    return j;
  };
  return p;
}

FixedFrequencySolution solve_at_frequency(const ResidualWorkspace& ws, const Vec& z0, double omega,
                                          double tolerance, int max_iterations) {
  const double tol = tolerance > 0.0 ? tolerance : ws.default_tolerance();
  FixedFrequencySolution out;
  out.z = z0;
  Vec z = z0;
  double previous = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= max_iterations; ++it) {
    Vec h;
    try {
      h = ws.residual(z, omega);
    } catch (const NumericalError&) {
      break;
    }
    const double norm = h.norm();
    if (!std::isfinite(norm)) break;
    if (norm < previous) {
      out.z = z;
      out.residual_norm = norm;
      out.iterations = it;
    }
    if (norm <= tol) {
      out.converged = true;
      // keep polishing while Newton still gains at least a factor of two
      if (!(norm < 0.5 * previous)) break;
    }
    previous = std::min(previous, norm);
    Eigen::PartialPivLU<Mat> lu(ws.jacobian_z(z, omega));
    if (!(lu.rcond() > singular_rcond)) break;
    const Vec dz = lu.solve(h);
    if (!dz.allFinite()) break;
    z -= dz;
    if (out.converged && dz.norm() <= 1e-15 * (1.0 + z.norm())) {
      const double final_norm = ws.residual(z, omega).norm();
      if (final_norm <= out.residual_norm) {
        out.z = z;
        out.residual_norm = final_norm;
      }
      break;
    }
  }
  return out;
}

Branch continue_branch(const ResidualWorkspace& ws, const ContinuationSettings& settings) {
  const double w0 = settings.omega_start, w1 = settings.omega_end;
  if (!(w0 > 0.0) || !(w1 > 0.0) || w0 == w1)
    throw InvalidInput("continuation: need distinct positive omega_start and omega_end");
  const double dir = w1 > w0 ? 1.0 : -1.0;
  const Index m = ws.size();
  const ContinuationProblem problem = frequency_problem(ws, settings.tolerance);

  const FixedFrequencySolution start =
      solve_at_frequency(ws, ws.linear_initial_guess(w0), w0, problem.tolerance);
  if (!start.converged)
    throw NumericalError("continuation: no converged start point at omega_start");
  Vec y0(m + 1);
  y0 << start.z, w0;
  Vec t0 = initial_tangent(problem.jacobian(y0));
  if (t0[m] * dir < 0.0) t0 = -t0;

  const double back_margin = 0.05 * std::abs(w1 - w0);
  bool reached_end = false, went_back = false;
  const PathResult path = trace_path(problem, y0, t0, settings.path, [&](const PathPoint& p) {
    const double w = p.y[m];
    if ((w - w1) * dir >= 0.0) {
      reached_end = true;
      return false;
    }
    if ((w - w0) * dir < -back_margin) {
      went_back = true;
      return false;
    }
    return true;
  });

  std::vector<PathPoint> pts = path.points;
  if (reached_end && pts.size() >= 2) {
    // land the last point exactly on omega_end
    const PathPoint& a = pts[pts.size() - 2];
    const PathPoint& b = pts.back();
    const double s = (w1 - a.y[m]) / (b.y[m] - a.y[m]);
    const Vec guess = a.y.head(m) + s * (b.y.head(m) - a.y.head(m));
    const FixedFrequencySolution end = solve_at_frequency(ws, guess, w1, problem.tolerance);
    if (end.converged) {
      Vec y(m + 1);
      y << end.z, w1;
      try {
        pts.back() = {y, tangent(problem.jacobian(y), a.t), end.iterations, end.residual_norm};
      } catch (const NumericalError&) {
      }
    }
  }

  Branch branch;
  for (const auto& p : pts) {
    BranchPoint bp;
    bp.z = p.y.head(m);
    bp.omega = p.y[m];
    bp.tangent = p.t;
    bp.iterations = p.iterations;
    bp.residual_norm = p.residual_norm;
    branch.points.push_back(std::move(bp));
  }
  if (path.aborted || !reached_end) {
    branch.status = RunStatus::partial;
    branch.message = path.aborted ? path.message
                     : went_back  ? "branch turned back past omega_start"
                                  : path.message;
  }
  return branch;
}

}  // namespace hbm
