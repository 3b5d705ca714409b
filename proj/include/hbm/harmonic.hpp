#pragma once

#include <memory>

#include "hbm/model.hpp"
#include "hbm/types.hpp"

namespace hbm {

/// Truncated Fourier basis {1/sqrt2, sin(k th), cos(k th)}, th = w t / nu,
/// sampled at N uniform points per period. The grid itself is frequency
/// independent; w enters only the differentiation operators.
struct HarmonicGrid {
  int harmonics = 1;    // N_H
  int samples = 1024;   // N, power of two, N >= 4 N_H
  int subharmonic = 1;  // nu
  int dofs = 1;         // n

  HarmonicGrid() = default;
  HarmonicGrid(int harmonics, int dofs, int samples = 1024, int subharmonic = 1);

  Index basis_size() const { return 2 * harmonics + 1; }
  Index size() const { return basis_size() * dofs; }
  double rate(int k, double omega) const { return k * omega / subharmonic; }
  double period(double omega) const;
};

/// Basis column of the constant, k-th sine and k-th cosine terms.
inline Index constant_column() { return 0; }
inline Index sine_column(int k) { return 2 * k - 1; }
inline Index cosine_column(int k) { return 2 * k; }
/// Position of basis column `column` of DOF `dof` inside z.
inline Index coefficient_index(Index column, Index dof, Index dofs) { return column * dofs + dof; }

/// (2N_H+1) x (2N_H+1) differentiation block: 0 (+) [0, -k w/nu; k w/nu, 0].
Mat nabla_block(const HarmonicGrid& grid, double omega);
/// Kronecker expansion to n DOFs (block-diagonal nabla (x) I_n).
Mat nabla(const HarmonicGrid& grid, double omega);
Mat nabla_squared(const HarmonicGrid& grid, double omega);

/// Kronecker product small (x) big.
Mat kron(const Mat& small, const Mat& big);

/// Linear dynamics A(w) = nabla^2 (x) M + nabla (x) C + I (x) K, assembled blockwise.
Mat assemble_A(const SystemModel& model, const HarmonicGrid& grid, double omega);
Mat assemble_dA_domega(const SystemModel& model, const HarmonicGrid& grid, double omega);

/// Collocation operator Gamma (Fourier coefficients -> DOF-major time samples)
/// and its left pseudoinverse (2/N) Gamma^T.
class CollocationOperator {
public:
  explicit CollocationOperator(const HarmonicGrid& grid);

  const HarmonicGrid& grid() const { return grid_; }
  /// N x (2N_H+1) sampled basis for one DOF.
  const Mat& basis() const { return basis_; }
  /// basis() * nabla_block / (w / nu): velocity basis per unit rate.
  const Mat& unit_derivative_basis() const { return derivative_basis_; }

  Mat gamma() const;
  Mat pseudoinverse() const;

  /// x~ = Gamma z, ordered [x_1(t_1..t_N), ..., x_n(t_1..t_N)].
  Vec inverse_transform(const Vec& z) const;
  /// b = Gamma^+ f~.
  Vec forward_transform(const Vec& samples) const;

  /// Samples as an N x n matrix (column d holds DOF d).
  Mat sample_matrix(const Vec& z) const;
  Mat velocity_sample_matrix(const Vec& z, double omega) const;
  /// Coefficients from an N x n sample matrix.
  Vec project_matrix(const Mat& samples) const;

private:
  HarmonicGrid grid_;
  Mat basis_;
  Mat derivative_basis_;
};

/// z laid out as an (2N_H+1) x n matrix (row = basis column, col = DOF).
Mat coefficient_matrix(const Vec& z, Index dofs);
Vec coefficient_vector(const Mat& coefficients);

/// max_t |x_d(t)| per DOF: the largest sample refined by Newton on the series.
Vec peak_amplitudes(const CollocationOperator& op, const Vec& z);

}  // namespace hbm
