#include "hbm/solver.hpp"

#include <cmath>

namespace hbm {

ResidualWorkspace::ResidualWorkspace(SystemModel model, HarmonicGrid grid, kernels::Backend backend)
    : model_(std::move(model)),
      grid_(grid),
      collocation_(std::make_shared<const CollocationOperator>(grid)),
      backend_(backend) {
  if (model_.dofs() != grid_.dofs) throw InvalidInput("workspace: model and grid DOF counts differ");
  if (model_.forcing().subharmonic != grid_.subharmonic)
    throw InvalidInput("workspace: grid subharmonic differs from the forcing record");
  forcing_column();
}

ResidualWorkspace ResidualWorkspace::with_model(SystemModel model) const {
  ResidualWorkspace ws = *this;
  if (model.dofs() != grid_.dofs) throw InvalidInput("workspace: model DOF count changed");
  ws.model_ = std::move(model);
  return ws;
}

Index ResidualWorkspace::forcing_column() const {
  const int k = model_.forcing().harmonic * grid_.subharmonic;
  if (k < 1 || k > grid_.harmonics)
    throw InvalidInput("workspace: forcing harmonic lies outside the retained harmonics");
  return cosine_column(k);
}

Vec ResidualWorkspace::external_coefficients() const {
  Vec b = Vec::Zero(size());
  const Vec f = model_.forcing_vector();
  const Index col = forcing_column();
  for (Index d = 0; d < grid_.dofs; ++d) b[coefficient_index(col, d, grid_.dofs)] = f[d];
  return b;
}

Vec ResidualWorkspace::nonlinear_coefficients(const Vec& z, double omega) const {
  if (model_.elements().empty()) return Vec::Zero(size());
  const Mat x = collocation_->sample_matrix(z);
  const Mat v = collocation_->velocity_sample_matrix(z, omega);
  Mat f;
  kernels::sample_forces(backend_, model_, x, v, f);
  for (Index d = 0; d < f.cols(); ++d)
    if (!f.col(d).allFinite())
      throw NumericalError("residual: non-finite nonlinear force samples on DOF " +
                           std::to_string(d));
  return collocation_->project_matrix(f);
}

Vec ResidualWorkspace::residual(const Vec& z, double omega) const {
  if (z.size() != size()) throw InvalidInput("residual: z has wrong length");
  return assemble_A(model_, grid_, omega) * z - external_coefficients() +
         nonlinear_coefficients(z, omega);
}

Mat ResidualWorkspace::jacobian_z(const Vec& z, double omega) const {
  if (z.size() != size()) throw InvalidInput("jacobian_z: z has wrong length");
  Mat hz = assemble_A(model_, grid_, omega);
  if (model_.elements().empty()) return hz;

  const Mat x = collocation_->sample_matrix(z);
  const Mat v = collocation_->velocity_sample_matrix(z, omega);
  Mat jx, jv;
  kernels::sample_jacobians(backend_, model_, x, v, jx, jv);
  const Mat& basis = collocation_->basis();
  const bool velocity = model_.has_velocity_dependence();
  const Mat unit_d = nabla_block(grid_, static_cast<double>(grid_.subharmonic));
  const double rate = grid_.rate(1, omega);
  const Index n = grid_.dofs, h = grid_.basis_size();

  const auto& pairs = model_.coupled_pairs();
  Mat block;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    kernels::project_weighted(backend_, basis, jx.col(static_cast<Index>(p)), block);
    if (velocity) {
      Mat vel;
      kernels::project_weighted(backend_, basis, jv.col(static_cast<Index>(p)), vel);
      block += rate * (vel * unit_d);
    }
    const auto [a, b] = pairs[p];
    for (Index r = 0; r < h; ++r)
      for (Index c = 0; c < h; ++c)
        hz(coefficient_index(r, a, n), coefficient_index(c, b, n)) += block(r, c);
  }
  return hz;
}

Vec ResidualWorkspace::jacobian_omega(const Vec& z, double omega) const {
  Vec hw = assemble_dA_domega(model_, grid_, omega) * z;
  if (!model_.has_velocity_dependence()) return hw;
  // velocity samples scale with w, so d f_nl / d w = (d f_nl / d v) v / w
  const Mat x = collocation_->sample_matrix(z);
  const Mat v = collocation_->velocity_sample_matrix(z, omega);
  Mat jx, jv;
  kernels::sample_jacobians(backend_, model_, x, v, jx, jv);
  Mat s = Mat::Zero(x.rows(), x.cols());
  const auto& pairs = model_.coupled_pairs();
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto [a, b] = pairs[p];
    s.col(a) += jv.col(static_cast<Index>(p)).cwiseProduct(v.col(b)) / omega;
  }
  return hw + collocation_->project_matrix(s);
}

Vec ResidualWorkspace::jacobian_parameter(const Vec& z, double omega,
                                          const std::string& name) const {
  if (!model_.has_parameter(name)) throw InvalidInput("unknown parameter '" + name + "'");
  if (name == "F") {
    Vec d = Vec::Zero(size());
    const Vec& raw = model_.forcing().amplitude;
    const Index col = forcing_column();
    for (Index k = 0; k < grid_.dofs; ++k) d[coefficient_index(col, k, grid_.dofs)] = -raw[k];
    return d;
  }
  const double p = model_.parameter(name);
  const double eps = 1e-6 * (1.0 + std::abs(p));
  const Vec hp = with_model(model_.with_parameter(name, p + eps)).residual(z, omega);
  const Vec hm = with_model(model_.with_parameter(name, p - eps)).residual(z, omega);
  return (hp - hm) / (2.0 * eps);
}

Vec ResidualWorkspace::linear_initial_guess(double omega) const {
  const int harmonic = model_.forcing().harmonic;
  const CVec x = linear_frf(model_, harmonic * omega);
  Vec z = Vec::Zero(size());
  const int k = harmonic * grid_.subharmonic;
  for (Index d = 0; d < grid_.dofs; ++d) {
    z[coefficient_index(cosine_column(k), d, grid_.dofs)] = x[d].real();
    z[coefficient_index(sine_column(k), d, grid_.dofs)] = -x[d].imag();
  }
  return z;
}

double ResidualWorkspace::default_tolerance() const {
  return 1e-9 * (1.0 + external_coefficients().norm());
}

Vec ResidualWorkspace::amplitudes(const Vec& z) const { return peak_amplitudes(*collocation_, z); }

}  // namespace hbm
