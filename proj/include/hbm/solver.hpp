#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "hbm/branch.hpp"
#include "hbm/harmonic.hpp"
#include "hbm/kernels.hpp"
#include "hbm/model.hpp"

namespace hbm {

/// Residual h(z, w) = A(w) z - b_ext + Gamma^+ f_nl(Gamma z, Gamma (nabla (x) I) z)
/// and its derivatives. The collocation operator is shared between copies.
class ResidualWorkspace {
public:
  ResidualWorkspace(SystemModel model, HarmonicGrid grid,
                    kernels::Backend backend = kernels::Backend::openmp);

  const SystemModel& model() const { return model_; }
  const HarmonicGrid& grid() const { return grid_; }
  const CollocationOperator& collocation() const { return *collocation_; }
  kernels::Backend backend() const { return backend_; }
  Index size() const { return grid_.size(); }

  /// Same grid and operators around another model (parameter changes).
  ResidualWorkspace with_model(SystemModel model) const;

  /// Harmonic coefficients of the external force F cos(harmonic w t).
  Vec external_coefficients() const;
  /// Gamma^+ f_nl at state z. Throws NumericalError on non-finite samples.
  Vec nonlinear_coefficients(const Vec& z, double omega) const;

  Vec residual(const Vec& z, double omega) const;
  Mat jacobian_z(const Vec& z, double omega) const;
  Vec jacobian_omega(const Vec& z, double omega) const;
  /// dh/dp for a named parameter. "F" is analytic; anything else uses
  /// central differences on rebuilt models.
  Vec jacobian_parameter(const Vec& z, double omega, const std::string& name) const;

  /// Linear FRF packed into the forcing harmonic, zeros elsewhere.
  Vec linear_initial_guess(double omega) const;
  /// Default corrector tolerance 1e-9 (1 + |b_ext|).
  double default_tolerance() const;

  /// peak_amplitudes of z.
  Vec amplitudes(const Vec& z) const;

private:
  Index forcing_column() const;

  SystemModel model_;
  HarmonicGrid grid_;
  std::shared_ptr<const CollocationOperator> collocation_;
  kernels::Backend backend_;
};

/// Underdetermined system H(y) = 0 with y in R^(m+1), followed along its
/// one-dimensional solution set.
struct ContinuationProblem {
  std::function<Vec(const Vec&)> residual;   // m
  std::function<Mat(const Vec&)> jacobian;   // m x (m+1)
  double tolerance = 1e-9;
};

struct CorrectorOptions {
  int max_iterations = 15;
};

struct CorrectorResult {
  Vec y;
  Vec v;
  int iterations = 0;  // residual evaluations
  double residual_norm = 0.0;
  bool converged = false;
  std::vector<double> history;  // |H| at every iterate
};

/// Moore-Penrose corrector: with G_y = [H_y; v^T],
///   y <- y - G_y^-1 [H; 0],   v <- v - G_y^-1 [H_y v; 0],  v normalized.
CorrectorResult correct_moore_penrose(const ContinuationProblem& problem, const Vec& y_pred,
                                      const Vec& v0, const CorrectorOptions& options = {});

/// Unit tangent from [J; t_prev^T] t = [0; 1]. Throws NumericalError when
/// the bordered matrix is singular.
Vec tangent(const Mat& jacobian, const Vec& t_prev);
/// First-step tangent, normalized by requiring the components to sum to 1.
Vec initial_tangent(const Mat& jacobian);
/// Unit vector spanning the (numerical) kernel of an m x (m+1) matrix.
Vec null_direction(const Mat& jacobian);

struct PathSettings {
  double step = 1e-2;
  double min_step = 1e-6;
  double max_step = 1e-1;
  double growth = 1.3;
  int fast_iterations = 3;  // grow the step when the corrector needs at most this many
  int max_points = 5000;
  double min_turn_cosine = 0.8;
  CorrectorOptions corrector;
};

struct PathPoint {
  Vec y;
  Vec t;
  int iterations = 0;
  double residual_norm = 0.0;
};

struct PathResult {
  std::vector<PathPoint> points;
  bool aborted = false;
  std::string message;
};

/// Predictor-corrector path following from a converged (y0, t0). Stops
/// when `keep_going` rejects an accepted point (that point is kept),
/// after max_points, or on step underflow (aborted).
PathResult trace_path(const ContinuationProblem& problem, const Vec& y0, const Vec& t0,
                      const PathSettings& settings,
                      const std::function<bool(const PathPoint&)>& keep_going);

struct ContinuationSettings {
  double omega_start = 0.5;
  double omega_end = 1.5;
  PathSettings path;
  double tolerance = 0.0;  // <= 0 selects the workspace default
};

/// The frequency problem in y = [z; w].
ContinuationProblem frequency_problem(const ResidualWorkspace& ws, double tolerance = 0.0);

/// Newton at fixed w from z0, iterated until the update stalls at round-off.
struct FixedFrequencySolution {
  Vec z;
  int iterations = 0;
  double residual_norm = 0.0;
  bool converged = false;
};
FixedFrequencySolution solve_at_frequency(const ResidualWorkspace& ws, const Vec& z0, double omega,
                                          double tolerance = 0.0, int max_iterations = 50);

/// Branch from omega_start to omega_end, starting from the linear FRF.
/// Stability and test values are left for the annotation stage.
Branch continue_branch(const ResidualWorkspace& ws, const ContinuationSettings& settings);

}  // namespace hbm
