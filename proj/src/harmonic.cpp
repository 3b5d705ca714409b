#include "hbm/harmonic.hpp"

#include <array>
#include <cmath>
#include <numbers>

namespace hbm {

HarmonicGrid::HarmonicGrid(int harmonics_, int dofs_, int samples_, int subharmonic_)
    : harmonics(harmonics_), samples(samples_), subharmonic(subharmonic_), dofs(dofs_) {
  if (harmonics < 1) throw InvalidInput("grid: N_H must be >= 1");
  if (dofs < 1) throw InvalidInput("grid: n must be >= 1");
  if (subharmonic < 1) throw InvalidInput("grid: nu must be >= 1");
  if (samples < 4 * harmonics)
    throw InvalidInput("grid: N must be >= 4 N_H (got N = " + std::to_string(samples) +
                       ", N_H = " + std::to_string(harmonics) + ")");
  if ((samples & (samples - 1)) != 0) throw InvalidInput("grid: N must be a power of two");
}

double HarmonicGrid::period(double omega) const {
  return 2.0 * std::numbers::pi * subharmonic / omega;
}

Mat nabla_block(const HarmonicGrid& grid, double omega) {
  const Index h = grid.basis_size();
  Mat d = Mat::Zero(h, h);
  for (int k = 1; k <= grid.harmonics; ++k) {
    const double r = grid.rate(k, omega);
    d(sine_column(k), cosine_column(k)) = -r;
    d(cosine_column(k), sine_column(k)) = r;
  }
  return d;
}

Mat kron(const Mat& small, const Mat& big) {
  Mat out(small.rows() * big.rows(), small.cols() * big.cols());
  for (Index i = 0; i < small.rows(); ++i)
    for (Index j = 0; j < small.cols(); ++j)
      out.block(i * big.rows(), j * big.cols(), big.rows(), big.cols()) = small(i, j) * big;
  return out;
}

Mat nabla(const HarmonicGrid& grid, double omega) {
  return kron(nabla_block(grid, omega), Mat::Identity(grid.dofs, grid.dofs));
}

Mat nabla_squared(const HarmonicGrid& grid, double omega) {
  const Mat d = nabla_block(grid, omega);
  return kron(d * d, Mat::Identity(grid.dofs, grid.dofs));
}

Mat assemble_A(const SystemModel& model, const HarmonicGrid& grid, double omega) {
  const Index n = grid.dofs;
  if (model.dofs() != n) throw InvalidInput("assemble_A: model and grid DOF counts differ");
  const Mat& m = model.mass();
  const Mat& c = model.damping();
  const Mat& k = model.stiffness();
  Mat a = Mat::Zero(grid.size(), grid.size());
  a.block(0, 0, n, n) = k;
  for (int h = 1; h <= grid.harmonics; ++h) {
    const double r = grid.rate(h, omega);
    const Index s = sine_column(h) * n, co = cosine_column(h) * n;
    const Mat diag = k - r * r * m;
    a.block(s, s, n, n) = diag;
    a.block(co, co, n, n) = diag;
    a.block(s, co, n, n) = -r * c;
    a.block(co, s, n, n) = r * c;
  }
  return a;
}

Mat assemble_dA_domega(const SystemModel& model, const HarmonicGrid& grid, double omega) {
  const Index n = grid.dofs;
  const Mat& m = model.mass();
  const Mat& c = model.damping();
  Mat a = Mat::Zero(grid.size(), grid.size());
  for (int h = 1; h <= grid.harmonics; ++h) {
    const double r = grid.rate(h, omega);
    const double dr = grid.rate(h, 1.0);
    const Index s = sine_column(h) * n, co = cosine_column(h) * n;
    const Mat diag = -2.0 * r * dr * m;
    a.block(s, s, n, n) = diag;
    a.block(co, co, n, n) = diag;
    a.block(s, co, n, n) = -dr * c;
    a.block(co, s, n, n) = dr * c;
  }
  return a;
}

CollocationOperator::CollocationOperator(const HarmonicGrid& grid) : grid_(grid) {
  const Index nsamp = grid.samples;
  basis_.resize(nsamp, grid.basis_size());
  derivative_basis_.resize(nsamp, grid.basis_size());
  const double inv_sqrt2 = 1.0 / std::numbers::sqrt2;
  for (Index j = 0; j < nsamp; ++j) {
    const double theta = 2.0 * std::numbers::pi * static_cast<double>(j) / nsamp;
    basis_(j, 0) = inv_sqrt2;
    derivative_basis_(j, 0) = 0.0;
    for (int k = 1; k <= grid.harmonics; ++k) {
      const double sk = std::sin(k * theta), ck = std::cos(k * theta);
      basis_(j, sine_column(k)) = sk;
      basis_(j, cosine_column(k)) = ck;
      derivative_basis_(j, sine_column(k)) = k * ck;
      derivative_basis_(j, cosine_column(k)) = -k * sk;
    }
  }
}

Mat CollocationOperator::gamma() const {
  const Index n = grid_.dofs, nsamp = grid_.samples;
  Mat g = Mat::Zero(n * nsamp, grid_.size());
  for (Index d = 0; d < n; ++d)
    for (Index c = 0; c < grid_.basis_size(); ++c)
      g.block(d * nsamp, coefficient_index(c, d, n), nsamp, 1) = basis_.col(c);
  return g;
}

Mat CollocationOperator::pseudoinverse() const {
  return (2.0 / grid_.samples) * gamma().transpose();
}

Mat coefficient_matrix(const Vec& z, Index dofs) {
  return Eigen::Map<const Mat>(z.data(), dofs, z.size() / dofs).transpose();
}

Vec coefficient_vector(const Mat& coefficients) {
  const Mat t = coefficients.transpose();
  return Eigen::Map<const Vec>(t.data(), t.size());
}

Mat CollocationOperator::sample_matrix(const Vec& z) const {
  if (z.size() != grid_.size()) throw InvalidInput("inverse_transform: z has wrong length");
  return basis_ * coefficient_matrix(z, grid_.dofs);
}

Mat CollocationOperator::velocity_sample_matrix(const Vec& z, double omega) const {
  if (z.size() != grid_.size()) throw InvalidInput("inverse_transform: z has wrong length");
  return grid_.rate(1, omega) * (derivative_basis_ * coefficient_matrix(z, grid_.dofs));
}

Vec CollocationOperator::project_matrix(const Mat& samples) const {
  if (samples.rows() != grid_.samples || samples.cols() != grid_.dofs)
    throw InvalidInput("forward_transform: sample matrix has wrong shape");
  return coefficient_vector((2.0 / grid_.samples) * (basis_.transpose() * samples));
}

Vec CollocationOperator::inverse_transform(const Vec& z) const {
  const Mat x = sample_matrix(z);
  return Eigen::Map<const Vec>(x.data(), x.size());
}

Vec CollocationOperator::forward_transform(const Vec& samples) const {
  if (samples.size() != grid_.samples * grid_.dofs)
    throw InvalidInput("forward_transform: expected n N samples");
  return project_matrix(Eigen::Map<const Mat>(samples.data(), grid_.samples, grid_.dofs));
}

Vec peak_amplitudes(const CollocationOperator& op, const Vec& z) {
  const Mat x = op.sample_matrix(z);
  const Mat c = coefficient_matrix(z, op.grid().dofs);
  const double dtheta = 2.0 * std::numbers::pi / op.grid().samples;
  Vec out(op.grid().dofs);
  for (Index d = 0; d < op.grid().dofs; ++d) {
    Index j = 0;
    x.col(d).cwiseAbs().maxCoeff(&j);
    // x(th) and its first two derivatives from the series
    auto series = [&](double th) {
      std::array<double, 3> r{c(0, d) / std::numbers::sqrt2, 0.0, 0.0};
      for (int k = 1; k <= op.grid().harmonics; ++k) {
        const double s = c(sine_column(k), d), co = c(cosine_column(k), d);
        const double sk = std::sin(k * th), ck = std::cos(k * th);
        r[0] += s * sk + co * ck;
        r[1] += k * (s * ck - co * sk);
        r[2] -= k * k * (s * sk + co * ck);
      }
      return r;
    };
    const double th0 = j * dtheta;
    double th = th0, best = std::abs(x(j, d));
    for (int it = 0; it < 8; ++it) {
      const auto r = series(th);
      if (r[2] == 0.0) break;
      const double next = th - r[1] / r[2];
      if (!(std::abs(next - th0) <= dtheta)) break;
      th = next;
      best = std::max(best, std::abs(series(th)[0]));
    }
    out(d) = best;
  }
  return out;
}

}  // namespace hbm
