#pragma once

#include <vector>

#include "hbm/model.hpp"
#include "hbm/types.hpp"

// Data-parallel inner loops of the alternating frequency/time evaluation.
// Every kernel exists twice: a plain serial reference and an OpenMP version.
// The OpenMP versions parallelize over independent outputs and keep each
// reduction in a fixed order, so both backends produce bitwise identical
// results regardless of thread count.
namespace hbm::kernels {

enum class Backend { serial, openmp };

/// One finite-difference probe of a Fourier coefficient: column `column` of
/// DOF `dof` perturbed by +/- step.
struct CoefficientProbe {
  Index column = 0;
  Index dof = 0;
  double step = 0.0;
};

/// Operands of the sampled bilinear form
///   (2/N) sum_j sum_(a,b) L(j,a) [Jx_ab(t_j) R(j,b) + Jv_ab(t_j) Rv(j,b)],
/// i.e. left^T (Gamma^+ dF/dx Gamma + Gamma^+ dF/dv Gamma nabla) right for
/// coefficient vectors left/right sampled into L, R and Rv.
struct BilinearOperands {
  CMat left;           // N x n, samples of the left vector
  CMat right;          // N x n, samples of the right vector
  CMat right_velocity; // N x n, samples of nabla * right
};

namespace serial {
void sample_forces(const SystemModel& model, const Mat& x, const Mat& v, Mat& force);
void sample_jacobians(const SystemModel& model, const Mat& x, const Mat& v, Mat& jx, Mat& jv);
void project_weighted(const Mat& basis, const Vec& weights, Mat& out);
Complex sampled_bilinear(const SystemModel& model, const Mat& x, const Mat& v,
                         const BilinearOperands& ops);
void probe_bilinear(const SystemModel& model, const Mat& x, const Mat& v, const Mat& basis,
                    const Mat& velocity_basis, const BilinearOperands& ops,
                    const std::vector<CoefficientProbe>& probes, CVec& out);
}  // namespace serial

namespace omp {
void sample_forces(const SystemModel& model, const Mat& x, const Mat& v, Mat& force);
void sample_jacobians(const SystemModel& model, const Mat& x, const Mat& v, Mat& jx, Mat& jv);
void project_weighted(const Mat& basis, const Vec& weights, Mat& out);
Complex sampled_bilinear(const SystemModel& model, const Mat& x, const Mat& v,
                         const BilinearOperands& ops);
void probe_bilinear(const SystemModel& model, const Mat& x, const Mat& v, const Mat& basis,
                    const Mat& velocity_basis, const BilinearOperands& ops,
                    const std::vector<CoefficientProbe>& probes, CVec& out);
}  // namespace omp

/// Nonlinear force samples, N x n (rows = time samples).
inline void sample_forces(Backend b, const SystemModel& model, const Mat& x, const Mat& v,
                          Mat& force) {
  b == Backend::serial ? serial::sample_forces(model, x, v, force)
                       : omp::sample_forces(model, x, v, force);
}

/// Jacobian samples, N x P, column p for model.coupled_pairs()[p].
inline void sample_jacobians(Backend b, const SystemModel& model, const Mat& x, const Mat& v,
                             Mat& jx, Mat& jv) {
  b == Backend::serial ? serial::sample_jacobians(model, x, v, jx, jv)
                       : omp::sample_jacobians(model, x, v, jx, jv);
}

/// out = (2/N) basis^T diag(weights) basis.
inline void project_weighted(Backend b, const Mat& basis, const Vec& weights, Mat& out) {
  b == Backend::serial ? serial::project_weighted(basis, weights, out)
                       : omp::project_weighted(basis, weights, out);
}

inline Complex sampled_bilinear(Backend b, const SystemModel& model, const Mat& x, const Mat& v,
                                const BilinearOperands& ops) {
  return b == Backend::serial ? serial::sampled_bilinear(model, x, v, ops)
                              : omp::sampled_bilinear(model, x, v, ops);
}

/// Central differences of the sampled bilinear form with respect to each
/// probed coefficient: out[k] = (form(+step) - form(-step)) / (2 step).
inline void probe_bilinear(Backend b, const SystemModel& model, const Mat& x, const Mat& v,
                           const Mat& basis, const Mat& velocity_basis,
                           const BilinearOperands& ops,
                           const std::vector<CoefficientProbe>& probes, CVec& out) {
  b == Backend::serial
      ? serial::probe_bilinear(model, x, v, basis, velocity_basis, ops, probes, out)
      : omp::probe_bilinear(model, x, v, basis, velocity_basis, ops, probes, out);
}

}  // namespace hbm::kernels
