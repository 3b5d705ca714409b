#include <cmath>
#include <sstream>

#include "hbm/bifurcation.hpp"

namespace hbm {

std::string to_string(EventKind kind) {
  switch (kind) {
    case EventKind::fold: return "fold";
    case EventKind::branch_point: return "branch_point";
    case EventKind::neimark_sacker: return "neimark_sacker";
    case EventKind::parameter_min: return "parameter_min";
    case EventKind::parameter_max: return "parameter_max";
    case EventKind::termination: return "termination";
  }
  return "unknown";
}

void annotate_point(const ResidualWorkspace& ws, BranchPoint& point) {
  const Mat hz = ws.jacobian_z(point.z, point.omega);
  const HillMatrices hill = hill_matrices(ws.model(), ws.grid(), point.omega);
  const HillSpectrum s = hill_eigen(hz, hill, ws.model().mass(), ws.grid().dofs,
                                    ws.grid().rate(1, point.omega));
  point.floquet = s.floquet;
  const StabilityVerdict verdict = is_stable(s.floquet, default_stability_tolerance(point.omega));
  point.stability = verdict.stability;
  point.marginal = verdict.marginal;
  point.tests.neimark_sacker = test_ns(s.floquet);
  if (point.tangent.size() == ws.size() + 1) {
    point.tests.fold = test_fold(point.tangent);
    point.tests.branch_point =
        test_bp(hz, ws.jacobian_omega(point.z, point.omega), point.tangent);
  }
}

namespace {

bool sign_change(double a, double b) {
  return std::isfinite(a) && std::isfinite(b) && ((a < 0.0 && b >= 0.0) || (a >= 0.0 && b < 0.0));
}

PathPoint to_path(const BranchPoint& p) {
  PathPoint out;
  out.y.resize(p.z.size() + 1);
  out.y << p.z, p.omega;
  out.t = p.tangent;
  out.iterations = p.iterations;
  out.residual_norm = p.residual_norm;
  return out;
}

double ns_indicator(const ResidualWorkspace& ws, const Vec& y) {
  const Index m = ws.size();
  const HillSpectrum s = hill_spectrum(ws, y.head(m), y[m]);
  const auto re = critical_complex_real(s.floquet);
  return re ? *re : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

std::vector<Event> annotate_branch(const ResidualWorkspace& ws, Branch& branch,
                                   const AnnotateOptions& options) {
  for (auto& p : branch.points) annotate_point(ws, p);
  std::vector<Event> events;
  if (!options.detect) return events;

  const Index m = ws.size();
  const ContinuationProblem problem = frequency_problem(ws);
  const PathFunction fold_fn = [](const PathPoint& p) { return test_fold(p.t); };
  const PathFunction bp_fn = [&](const PathPoint& p) {
    return test_bp(ws.jacobian_z(p.y.head(m), p.y[m]), ws.jacobian_omega(p.y.head(m), p.y[m]), p.t);
  };
  const PathFunction ns_fn = [&](const PathPoint& p) { return ns_indicator(ws, p.y); };

  auto record = [&](EventKind kind, std::size_t i, const PathFunction& fn) {
    Event ev;
    ev.kind = kind;
    ev.segment = i;
    const BranchPoint& a = branch.points[i];
    const BranchPoint& b = branch.points[i + 1];
    ev.point = std::abs(fn(to_path(a))) <= std::abs(fn(to_path(b))) ? a : b;
    if (options.locate) {
      try {
        const LocateResult r =
            locate_root(problem, to_path(a), to_path(b), fn, options.locate_tolerance);
        ev.located = r.converged;
        BranchPoint bp;
        bp.z = r.point.y.head(m);
        bp.omega = r.point.y[m];
        bp.tangent = r.point.t;
        bp.iterations = r.point.iterations;
        bp.residual_norm = r.point.residual_norm;
        annotate_point(ws, bp);
        ev.point = std::move(bp);
        std::ostringstream note;
        note << "|phi| = " << r.value << " after " << r.iterations << " iterations";
        ev.note = note.str();
      } catch (const std::exception& e) {
        ev.note = std::string("localization failed: ") + e.what();
      }
    }
    if (kind == EventKind::neimark_sacker && ev.located &&
        !is_neimark_sacker_point(ev.point.floquet)) {
      ev.located = false;
      ev.note += "; crossing pair not isolated at the located point";
    }
    events.push_back(std::move(ev));
  };

  for (std::size_t i = 0; i + 1 < branch.points.size(); ++i) {
    const BranchPoint& a = branch.points[i];
    const BranchPoint& b = branch.points[i + 1];
    if (sign_change(a.tests.fold, b.tests.fold)) record(EventKind::fold, i, fold_fn);
    if (sign_change(a.tests.branch_point, b.tests.branch_point))
      record(EventKind::branch_point, i, bp_fn);
    if (sign_change(a.tests.neimark_sacker, b.tests.neimark_sacker) &&
        complex_pair_count(a.floquet) == complex_pair_count(b.floquet)) {
      const auto ra = critical_complex_real(a.floquet), rb = critical_complex_real(b.floquet);
      if (ra && rb && sign_change(*ra, *rb)) record(EventKind::neimark_sacker, i, ns_fn);
    }
  }
  return events;
}

}  // namespace hbm
