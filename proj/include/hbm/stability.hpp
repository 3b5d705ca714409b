#pragma once

#include <string>
#include <vector>

#include "hbm/branch.hpp"
#include "hbm/harmonic.hpp"
#include "hbm/solver.hpp"

namespace hbm {

/// Delta1 = nabla (x) 2M + I (x) C and Delta2 = I (x) M of the quadratic
/// Hill problem (Delta2 l^2 + Delta1 l + h_z) u = 0.
struct HillMatrices {
  Mat delta1;
  Mat delta2;
};
HillMatrices hill_matrices(const SystemModel& model, const HarmonicGrid& grid, double omega);
/// d Delta1 / d omega = (nabla / omega) (x) 2M.
Mat hill_delta1_domega(const SystemModel& model, const HarmonicGrid& grid, double omega);

/// First-order linearization B = [-Delta2^-1 Delta1, -Delta2^-1 h_z; I, 0].
Mat hill_operator(const Mat& hz, const HillMatrices& hill, const Mat& mass);

struct FloquetSelection {
  std::vector<Index> indices;  // xi, into the full spectrum
  double margin = 0.0;         // |Im| gap between first rejected and last selected
  bool widened = false;
  std::vector<std::string> warnings;
};

/// Picks the 2n eigenvalues of smallest |Im|. Conjugate pairs are taken or
/// dropped together; ties go to ascending Re. When a pair straddles the
/// cut the selection grows by one and a warning is recorded.
FloquetSelection sort_floquet(const CVec& eigenvalues, Index n, double window = 0.0);

struct HillSpectrum {
  CVec eigenvalues;   // lambda, all 2(2N_H+1)n
  CMat eigenvectors;  // Lambda, filled when requested
  std::vector<Index> selected;  // xi
  CVec floquet;       // lambda~
  double margin = 0.0;
  std::vector<std::string> warnings;
};

HillSpectrum hill_eigen(const Mat& hz, const HillMatrices& hill, const Mat& mass, Index n,
                        double window, bool keep_vectors = false);
/// Spectrum at a converged HB point.
HillSpectrum hill_spectrum(const ResidualWorkspace& ws, const Vec& z, double omega,
                           bool keep_vectors = false);

struct StabilityVerdict {
  Stability stability = Stability::unknown;
  bool marginal = false;
};
/// Unstable iff max Re > tol_re; |max Re| <= tol_re is flagged marginal.
StabilityVerdict is_stable(const CVec& floquet, double tol_re);
inline double default_stability_tolerance(double omega) { return 1e-6 * omega; }

}  // namespace hbm
