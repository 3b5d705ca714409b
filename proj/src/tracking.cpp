#include <algorithm>
#include <cmath>
#include <sstream>

#include "hbm/bifurcation.hpp"

namespace hbm {

std::string to_string(CurveKind kind) {
  return kind == CurveKind::fold ? "fold" : "neimark_sacker";
}

TrackingSystem::TrackingSystem(const ResidualWorkspace& ws, CurveKind kind, std::string parameter,
                               double tolerance, double reseed_condition)
    : base_(ws), kind_(kind), parameter_(std::move(parameter)), reseed_condition_(reseed_condition) {
  if (!base_.model().has_parameter(parameter_))
    throw InvalidInput("tracking: unknown parameter '" + parameter_ + "'");
  problem_.tolerance = tolerance > 0.0 ? tolerance : ws.default_tolerance();
  problem_.residual = [this](const Vec& y) { return residual(y); };
  problem_.jacobian = [this](const Vec& y) { return jacobian(y); };
}

ResidualWorkspace TrackingSystem::at(double p) const {
  return base_.with_model(base_.model().with_parameter(parameter_, p));
}

double TrackingSystem::fold_g(const Vec& y, Vec* w, Vec* v) const {
  const Index m = base_.size();
  const ResidualWorkspace ws = at(y[m + 1]);
  const Mat hz = ws.jacobian_z(y.head(m), y[m]);
  if (p_border_.size() != m) throw NumericalError("tracking: borders not seeded");
  const BorderedResult r = bordered_solve(hz, p_border_, q_border_);
  if (w) *w = r.w;
  if (v) *v = bordered_solve_adjoint(hz, p_border_, q_border_).w;
  return r.g;
}

Index TrackingSystem::pick_tracked(const HillSpectrum& s) const {
  Index best = -1;
  double best_score = 0.0;
  for (Index i = 0; i < s.floquet.size(); ++i) {
    const Complex l = s.floquet[i];
    if (l.imag() <= 1e-6) continue;
    const double score = has_tracked_ ? std::abs(l - tracked_) : std::abs(l.real());
    if (best < 0 || score < best_score) {
      best = i;
      best_score = score;
    }
  }
  if (best < 0) throw NumericalError("tracking: no complex exponent pair left (NS character lost)");
  return best;
}

double TrackingSystem::ns_g(const Vec& y, HillSpectrum* spectrum, Index* which) const {
  const Index m = base_.size();
  const ResidualWorkspace ws = at(y[m + 1]);
  HillSpectrum s = hill_spectrum(ws, y.head(m), y[m], spectrum != nullptr);
  const Index k = pick_tracked(s);
  const double g = -s.floquet[k].real();
  if (which) *which = k;
  if (spectrum) *spectrum = std::move(s);
  return g;
}

double TrackingSystem::g(const Vec& y) const {
  return kind_ == CurveKind::fold ? fold_g(y, nullptr, nullptr) : ns_g(y, nullptr, nullptr);
}

Vec TrackingSystem::residual(const Vec& y) const {
  const Index m = base_.size();
  Vec out(m + 1);
  out.head(m) = at(y[m + 1]).residual(y.head(m), y[m]);
  out[m] = g(y);
  return out;
}

Mat TrackingSystem::jacobian(const Vec& y) const {
  const Index m = base_.size();
  const ResidualWorkspace ws = at(y[m + 1]);
  const Vec z = y.head(m);
  Mat j(m + 1, m + 2);
  j.topLeftCorner(m, m) = ws.jacobian_z(z, y[m]);
  j.block(0, m, m, 1) = ws.jacobian_omega(z, y[m]);
  j.block(0, m + 1, m, 1) = ws.jacobian_parameter(z, y[m], parameter_);
  j.row(m) = g_gradient(y).transpose();
  return j;
}

Vec TrackingSystem::g_gradient(const Vec& y) const {
  const Index m = base_.size();
  const ResidualWorkspace ws = at(y[m + 1]);
  const Vec z = y.head(m);
  const double omega = y[m];
  const Coordinate wc{Coordinate::Kind::omega, 0, {}};
  const Coordinate pc{Coordinate::Kind::parameter, 0, parameter_};
  const bool forcing_only = parameter_ == "F";
  Vec grad(m + 2);

  if (kind_ == CurveKind::fold) {
    Vec w, v;
    fold_g(y, &w, &v);
    const CVec dz = bilinear_z_gradient(ws, z, omega, v.cast<Complex>(), w.cast<Complex>());
    grad.head(m) = -dz.real();
    grad[m] = g_derivative(h_z_alpha_fd(ws, z, omega, wc), v, w);
    grad[m + 1] = forcing_only ? 0.0 : g_derivative(h_z_alpha_fd(ws, z, omega, pc), v, w);
    return grad;
  }

  HillSpectrum s;
  Index k = 0;
  ns_g(y, &s, &k);
  const Index idx = s.selected[static_cast<std::size_t>(k)];
  const Eigen::PartialPivLU<CMat> lu(s.eigenvectors);
  if (!(lu.rcond() > 1e-10)) return g_gradient_fd(y);
  CVec e = CVec::Zero(2 * m);
  e[idx] = 1.0;
  const CVec left = lu.transpose().solve(e);  // row idx of Lambda^-1
  const CVec r_top = s.eigenvectors.col(idx).head(m);
  const CVec r_bot = s.eigenvectors.col(idx).tail(m);
  // l^ = Delta2^-T l_top with Delta2 = I (x) M
  const Index n = ws.grid().dofs;
  const Eigen::LLT<Mat> llt(ws.model().mass());
  CVec lhat(m);
  for (Index b = 0; b < m / n; ++b) {
    const CVec seg = left.segment(b * n, n);
    lhat.segment(b * n, n) = llt.solve(seg.real()).cast<Complex>() +
                             Complex(0.0, 1.0) * llt.solve(seg.imag()).cast<Complex>();
  }
  auto dlambda = [&](const Mat& d1, const Mat& hza) -> Complex {
    const CVec t = d1.cast<Complex>() * r_top + hza.cast<Complex>() * r_bot;
    return -(lhat.transpose() * t)(0);
  };
  const CVec dz = bilinear_z_gradient(ws, z, omega, lhat, r_bot);
  grad.head(m) = dz.real();  // g = -Re l, dl/dz = -lhat^T h_zz r_bot
  grad[m] = -dlambda(hill_delta1_domega(ws.model(), ws.grid(), omega),
                     h_z_alpha_fd(ws, z, omega, wc)).real();
  if (forcing_only) {
    grad[m + 1] = 0.0;
  } else {
    const double p = y[m + 1];
    const double eps = 1e-6 * (1.0 + std::abs(p));
    const Mat dc = (base_.model().with_parameter(parameter_, p + eps).damping() -
                    base_.model().with_parameter(parameter_, p - eps).damping()) /
                   (2.0 * eps);
    const Index h = ws.grid().basis_size();
    grad[m + 1] = -dlambda(kron(Mat::Identity(h, h), dc), h_z_alpha_fd(ws, z, omega, pc)).real();
  }
  return grad;
}

Vec TrackingSystem::g_gradient_fd(const Vec& y, double rel_step) const {
  Vec grad(y.size());
  for (Index i = 0; i < y.size(); ++i) {
    const double eps = rel_step * (1.0 + std::abs(y[i]));
    Vec yp = y, ym = y;
    yp[i] += eps;
    ym[i] -= eps;
    grad[i] = (g(yp) - g(ym)) / (2.0 * eps);
  }
  return grad;
}

void TrackingSystem::seed(const Vec& y) {
  const Index m = base_.size();
  if (kind_ == CurveKind::fold) {
    const Mat hz = at(y[m + 1]).jacobian_z(y.head(m), y[m]);
    std::tie(p_border_, q_border_) = seed_borders(hz);
  } else {
    has_tracked_ = false;
    HillSpectrum s = hill_spectrum(at(y[m + 1]), y.head(m), y[m]);
    tracked_ = s.floquet[pick_tracked(s)];
    has_tracked_ = true;
  }
}

void TrackingSystem::accept(const Vec& y) {
  const Index m = base_.size();
  if (kind_ == CurveKind::fold) {
    const Mat hz = at(y[m + 1]).jacobian_z(y.head(m), y[m]);
    bool reseed = false;
    try {
      reseed = bordered_solve(hz, p_border_, q_border_).condition > reseed_condition_;
    } catch (const NumericalError&) {
      reseed = true;
    }
    if (reseed) std::tie(p_border_, q_border_) = seed_borders(hz);
  } else {
    HillSpectrum s = hill_spectrum(at(y[m + 1]), y.head(m), y[m]);
    tracked_ = s.floquet[pick_tracked(s)];
  }
}

BranchPoint TrackingSystem::to_point(const PathPoint& p) const {
  const Index m = base_.size();
  BranchPoint bp;
  bp.z = p.y.head(m);
  bp.omega = p.y[m];
  bp.parameter = p.y[m + 1];
  bp.tangent = p.t;
  bp.iterations = p.iterations;
  bp.residual_norm = p.residual_norm;
  const ResidualWorkspace ws = at(bp.parameter);
  // test values refer to the frequency response at fixed p
  BranchPoint fixed = bp;
  Mat j(m, m + 1);
  j.leftCols(m) = ws.jacobian_z(bp.z, bp.omega);
  j.col(m) = ws.jacobian_omega(bp.z, bp.omega);
  fixed.tangent = null_direction(j);
  annotate_point(ws, fixed);
  bp.stability = fixed.stability;
  bp.marginal = fixed.marginal;
  bp.floquet = fixed.floquet;
  bp.tests = fixed.tests;
  return bp;
}

namespace {

struct DirectionRun {
  std::vector<PathPoint> points;
  bool aborted = false;
  std::string message;
};

}  // namespace

BifurcationCurve track_bifurcation(const ResidualWorkspace& ws, const BranchPoint& seed,
                                   CurveKind kind, const TrackingSettings& settings) {
  const Index m = ws.size();
  const double p0 = std::isfinite(seed.parameter) ? seed.parameter
                                                  : ws.model().parameter(settings.parameter);
  TrackingSystem sys(ws, kind, settings.parameter, settings.tolerance, settings.reseed_condition);
  const ContinuationProblem& problem = sys.problem();

  Vec y0(m + 2);
  y0 << seed.z, seed.omega, p0;
  sys.seed(y0);
  Vec t0 = null_direction(problem.jacobian(y0));
  const CorrectorResult start = correct_moore_penrose(problem, y0, t0, settings.path.corrector);
  if (!start.converged) throw NumericalError("tracking: seed does not satisfy the augmented system");
  y0 = start.y;
  sys.accept(y0);
  t0 = null_direction(problem.jacobian(y0));
  if (t0[m + 1] < 0.0) t0 = -t0;

  auto inside = [&](const Vec& y) {
    return y[m + 1] >= settings.parameter_min && y[m + 1] <= settings.parameter_max &&
           y[m] >= settings.omega_min && y[m] <= settings.omega_max;
  };

  auto run = [&](const Vec& t) {
    sys.seed(y0);
    DirectionRun out;
    const PathResult r = trace_path(problem, y0, t, settings.path, [&](const PathPoint& p) {
      sys.accept(p.y);
      return inside(p.y);
    });
    out.points = r.points;
    out.aborted = r.aborted;
    out.message = r.message;
    return out;
  };

  DirectionRun forward = run(t0);
  DirectionRun backward;
  if (settings.both_directions) backward = run(-t0);

  std::vector<PathPoint> path;
  for (std::size_t i = backward.points.size(); i-- > 1;) {
    PathPoint p = backward.points[i];
    p.t = -p.t;
    path.push_back(std::move(p));
  }
  for (const auto& p : forward.points) path.push_back(p);

  BifurcationCurve curve;
  curve.kind = kind;
  curve.parameter = settings.parameter;
  for (const auto& p : path) curve.points.push_back(sys.to_point(p));

  auto termination = [&](const DirectionRun& r, std::size_t index) {
    Event ev;
    ev.kind = EventKind::termination;
    ev.segment = index;
    ev.point = curve.points[index];
    ev.note = r.message;
    curve.events.push_back(ev);
  };
  if (backward.aborted && !curve.points.empty()) termination(backward, 0);

  // parameter extrema: sign changes of the p-component of the tangent
  sys.seed(y0);
  const PathFunction tp = [m](const PathPoint& p) { return p.t[m + 1]; };
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const double a = path[i].t[m + 1], b = path[i + 1].t[m + 1];
    if (!((a < 0.0) != (b < 0.0))) continue;
    Event ev;
    ev.kind = a < 0.0 ? EventKind::parameter_min : EventKind::parameter_max;
    ev.segment = i;
    ev.point = std::abs(a) < std::abs(b) ? curve.points[i] : curve.points[i + 1];
    try {
      sys.accept(path[i].y);
      const LocateResult r = locate_root(problem, path[i], path[i + 1], tp, settings.locate_tolerance);
      ev.located = r.converged;
      ev.point = sys.to_point(r.point);
      std::ostringstream note;
      note << "|t_p| = " << r.value << " after " << r.iterations << " iterations";
      ev.note = note.str();
    } catch (const std::exception& e) {
      ev.note = std::string("localization failed: ") + e.what();
    }
    curve.events.push_back(std::move(ev));
  }
  if (forward.aborted && !curve.points.empty()) termination(forward, curve.points.size() - 1);

  if (forward.aborted || backward.aborted) {
    curve.status = RunStatus::partial;
    curve.message = forward.aborted ? forward.message : backward.message;
  }
  return curve;
}

}  // namespace hbm
