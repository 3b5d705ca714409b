#include <algorithm>
#include <cmath>

#include "hbm/bifurcation.hpp"

namespace hbm {

namespace {

CMat complex_samples(const Mat& basis, const CVec& coefficients, Index dofs) {
  const Index h = coefficients.size() / dofs;
  CMat c(h, dofs);
  for (Index k = 0; k < h; ++k)
    for (Index d = 0; d < dofs; ++d) c(k, d) = coefficients[coefficient_index(k, d, dofs)];
  return basis.cast<Complex>() * c;
}

}  // namespace

bool is_linear_component(const ResidualWorkspace& ws, Index index) {
  const auto& nl = ws.model().nonlinear_dofs();
  const int dof = static_cast<int>(index % ws.grid().dofs);
  return !std::binary_search(nl.begin(), nl.end(), dof);
}

Mat h_z_alpha_fd(const ResidualWorkspace& ws, const Vec& z, double omega, const Coordinate& alpha,
                 double rel_step) {
  switch (alpha.kind) {
    case Coordinate::Kind::z_component: {
      if (is_linear_component(ws, alpha.index)) return Mat::Zero(ws.size(), ws.size());
      const double eps = rel_step * (1.0 + std::abs(z[alpha.index]));
      Vec zp = z, zm = z;
      zp[alpha.index] += eps;
      zm[alpha.index] -= eps;
      return (ws.jacobian_z(zp, omega) - ws.jacobian_z(zm, omega)) / (2.0 * eps);
    }
    case Coordinate::Kind::omega: {
      const double eps = rel_step * (1.0 + std::abs(omega));
      return (ws.jacobian_z(z, omega + eps) - ws.jacobian_z(z, omega - eps)) / (2.0 * eps);
    }
    case Coordinate::Kind::parameter: {
      const double p = ws.model().parameter(alpha.name);
      const double eps = rel_step * (1.0 + std::abs(p));
      const ResidualWorkspace plus = ws.with_model(ws.model().with_parameter(alpha.name, p + eps));
      const ResidualWorkspace minus = ws.with_model(ws.model().with_parameter(alpha.name, p - eps));
      return (plus.jacobian_z(z, omega) - minus.jacobian_z(z, omega)) / (2.0 * eps);
    }
  }
  return Mat();
}

CVec eigenvalue_derivatives(const CMat& eigenvectors, const std::vector<Index>& xi,
                            const CMat& b_alpha) {
  const Eigen::PartialPivLU<CMat> lu(eigenvectors);
  CVec out(static_cast<Index>(xi.size()));
  for (std::size_t i = 0; i < xi.size(); ++i) {
    // row xi of Lambda^-1 is the solution of Lambda^T y = e_xi
    CVec e = CVec::Zero(eigenvectors.rows());
    e[xi[i]] = 1.0;
    const CVec left = lu.transpose().solve(e);
    out[static_cast<Index>(i)] = left.transpose() * (b_alpha * eigenvectors.col(xi[i]));
  }
  return out;
}

CVec bilinear_z_gradient(const ResidualWorkspace& ws, const Vec& z, double omega,
                         const CVec& left, const CVec& right, double rel_step) {
  const Index m = ws.size(), n = ws.grid().dofs;
  CVec grad = CVec::Zero(m);
  const auto& nl = ws.model().nonlinear_dofs();
  if (nl.empty()) return grad;

  const CollocationOperator& col = ws.collocation();
  const double rate = ws.grid().rate(1, omega);
  const Mat velocity_basis = rate * col.unit_derivative_basis();
  kernels::BilinearOperands ops;
  ops.left = complex_samples(col.basis(), left, n);
  ops.right = complex_samples(col.basis(), right, n);
  ops.right_velocity = complex_samples(velocity_basis, right, n);

  std::vector<kernels::CoefficientProbe> probes;
  std::vector<Index> target;
  for (Index c = 0; c < ws.grid().basis_size(); ++c)
    for (int d : nl) {
      const Index k = coefficient_index(c, d, n);
      probes.push_back({c, d, rel_step * (1.0 + std::abs(z[k]))});
      target.push_back(k);
    }
  const Mat x = col.sample_matrix(z);
  const Mat v = col.velocity_sample_matrix(z, omega);
  CVec values;
  kernels::probe_bilinear(ws.backend(), ws.model(), x, v, col.basis(), velocity_basis, ops, probes,
                          values);
  for (std::size_t i = 0; i < target.size(); ++i) grad[target[i]] = values[static_cast<Index>(i)];
  return grad;
}

}  // namespace hbm
