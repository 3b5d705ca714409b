#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hbm/branch.hpp"
#include "hbm/solver.hpp"
#include "hbm/stability.hpp"

namespace hbm {

// ---------------------------------------------------------------------------
// Test functions

/// phi_F: the omega component of the unit tangent.
double test_fold(const Vec& t);
/// phi_BP: bordered scalar of det [h_z h_w; t^T] with borders taken from the
/// singular vectors of its smallest singular value. Equals
/// sign(det) * sigma_min, so its roots are exactly the determinant roots.
double test_bp(const Mat& hz, const Vec& hw, const Vec& t);
/// phi_NS: product of (l_i + l_j)/2 over i < j, restricted to pairs where at
/// least one member has |Im| > 1e-6.
double test_ns(const CVec& floquet);

/// Number of conjugate pairs with |Im| > 1e-6 among the exponents.
int complex_pair_count(const CVec& floquet);
/// Signed real part of the complex exponent closest to the imaginary axis
/// (nullopt when all exponents are real).
std::optional<double> critical_complex_real(const CVec& floquet);
/// True when exactly one conjugate pair has |Re| <= re_tol and |Im| > im_tol.
bool is_neimark_sacker_point(const CVec& floquet, double re_tol = 1e-6, double im_tol = 1e-3);

// ---------------------------------------------------------------------------
// Bordering

struct BorderedResult {
  double g = 0.0;
  Vec w;  // direct solve, or v for the adjoint
  double condition = 0.0;  // 1-norm condition estimate of the bordered matrix
};

/// [G p; q^T 0] [w; g] = [0; 1].
BorderedResult bordered_solve(const Mat& g, const Vec& p, const Vec& q);
/// [G^T q; p^T 0] [v; e] = [0; 1].
BorderedResult bordered_solve_adjoint(const Mat& g, const Vec& p, const Vec& q);
/// Borders (p, q) from the left/right singular vectors of sigma_min(G).
std::pair<Vec, Vec> seed_borders(const Mat& g);
/// g_alpha = -v^T G_alpha w.
double g_derivative(const Mat& g_alpha, const Vec& v, const Vec& w);

// ---------------------------------------------------------------------------
// Derivatives

/// A differentiation variable of the augmented systems.
struct Coordinate {
  enum class Kind { z_component, omega, parameter };
  Kind kind = Kind::omega;
  Index index = 0;    // z_component
  std::string name;   // parameter
};

/// True when z component `index` belongs to a DOF without nonlinear elements.
bool is_linear_component(const ResidualWorkspace& ws, Index index);

/// Central difference (h_z(a + eps) - h_z(a - eps)) / (2 eps) with
/// eps = rel_step (1 + |a|). Linear-DOF coefficients return zero unevaluated.
Mat h_z_alpha_fd(const ResidualWorkspace& ws, const Vec& z, double omega, const Coordinate& alpha,
                 double rel_step = 1e-6);

/// diag(Lambda^-1 B_alpha Lambda) at the localized indices xi.
CVec eigenvalue_derivatives(const CMat& eigenvectors, const std::vector<Index>& xi,
                            const CMat& b_alpha);

/// d/dy of the sampled form left^T h_z(z) right over every z component,
/// by central differences on the samples (linear-DOF entries are zero).
CVec bilinear_z_gradient(const ResidualWorkspace& ws, const Vec& z, double omega,
                         const CVec& left, const CVec& right, double rel_step = 1e-6);

// ---------------------------------------------------------------------------
// Root localization

using PathFunction = std::function<double(const PathPoint&)>;

struct LocateResult {
  PathPoint point;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
  double bracket = 0.0;  // final bracket length in arclength
};

/// Illinois/secant iteration in the secant arclength s between two path
/// points, each trial fully re-corrected onto H = 0. Throws InvalidInput when
/// phi does not change sign over the segment.
LocateResult locate_root(const ContinuationProblem& problem, const PathPoint& a,
                         const PathPoint& b, const PathFunction& phi, double tolerance = 1e-8,
                         int max_iterations = 25);

// ---------------------------------------------------------------------------
// Branch annotation and events

enum class EventKind { fold, branch_point, neimark_sacker, parameter_min, parameter_max, termination };
std::string to_string(EventKind kind);

struct Event {
  EventKind kind = EventKind::fold;
  std::size_t segment = 0;  // located between points segment and segment + 1
  bool located = false;
  BranchPoint point;
  std::string note;
};

struct AnnotateOptions {
  bool detect = true;
  bool locate = true;
  double locate_tolerance = 1e-8;
};

/// Fills stability, Floquet exponents and test values on every point, then
/// detects sign changes of the test functions and localizes them.
std::vector<Event> annotate_branch(const ResidualWorkspace& ws, Branch& branch,
                                   const AnnotateOptions& options = {});
/// Stability and test values of a single point (tangent must be set).
void annotate_point(const ResidualWorkspace& ws, BranchPoint& point);

// ---------------------------------------------------------------------------
// Codimension-2 tracking

enum class CurveKind { fold, neimark_sacker };
std::string to_string(CurveKind kind);

struct TrackingSettings {
  std::string parameter = "F";
  double parameter_min = 0.0;
  double parameter_max = 1.0;
  double omega_min = 0.0;
  double omega_max = 1e30;
  PathSettings path;
  double tolerance = 0.0;  // <= 0: workspace default
  bool both_directions = true;
  double locate_tolerance = 1e-8;
  double reseed_condition = 1e8;
};

struct BifurcationCurve {
  CurveKind kind = CurveKind::fold;
  std::string parameter;
  std::vector<BranchPoint> points;  // parameter field holds p2
  std::vector<Event> events;
  RunStatus status = RunStatus::complete;
  std::string message;
};

/// Augmented system [h; g] in y = [z; w; p] for one bifurcation kind.
/// Keeps the frozen borders (fold) or the tracked exponent (NS) between
/// calls; `accept` must be called on every accepted point.
class TrackingSystem {
public:
  TrackingSystem(const ResidualWorkspace& ws, CurveKind kind, std::string parameter,
                 double tolerance = 0.0, double reseed_condition = 1e8);
  TrackingSystem(const TrackingSystem&) = delete;
  TrackingSystem& operator=(const TrackingSystem&) = delete;

  CurveKind kind() const { return kind_; }
  Index size() const { return base_.size() + 2; }
  const ContinuationProblem& problem() const { return problem_; }

  /// Workspace with the parameter set to p.
  ResidualWorkspace at(double p) const;
  /// Scalar g at y (fold: bordered scalar; NS: -Re of the tracked exponent).
  double g(const Vec& y) const;
  /// Analytic/FD gradient of g with respect to y.
  Vec g_gradient(const Vec& y) const;
  /// Central differences of g itself (used as an oracle).
  Vec g_gradient_fd(const Vec& y, double rel_step = 1e-6) const;

  /// Re-seeds borders if needed and records the tracked exponent.
  void accept(const Vec& y);
  /// Initializes borders / exponent selection at a seed.
  void seed(const Vec& y);

  BranchPoint to_point(const PathPoint& p) const;

private:
  Vec residual(const Vec& y) const;
  Mat jacobian(const Vec& y) const;
  double fold_g(const Vec& y, Vec* w, Vec* v) const;
  double ns_g(const Vec& y, HillSpectrum* spectrum, Index* which) const;
  Index pick_tracked(const HillSpectrum& s) const;

  ResidualWorkspace base_;
  CurveKind kind_;
  std::string parameter_;
  double reseed_condition_;
  Vec p_border_, q_border_;
  Complex tracked_ = Complex(0.0, 0.0);
  bool has_tracked_ = false;
  ContinuationProblem problem_;
};

/// Follows the codim-2 locus through `seed` (a located fold or NS event).
BifurcationCurve track_bifurcation(const ResidualWorkspace& ws, const BranchPoint& seed,
                                   CurveKind kind, const TrackingSettings& settings);

}  // namespace hbm
