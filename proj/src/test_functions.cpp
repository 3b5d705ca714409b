#include <cmath>

#include "hbm/bifurcation.hpp"

namespace hbm {

namespace {
constexpr double complex_threshold = 1e-6;
}

double test_fold(const Vec& t) { return t[t.size() - 1]; }

double test_bp(const Mat& hz, const Vec& hw, const Vec& t) {
  const Index m = hz.rows();
  Mat g(m + 1, m + 1);
  g.topLeftCorner(m, m) = hz;
  g.topRightCorner(m, 1) = hw;
  g.row(m) = t.transpose();
  const auto [p, q] = seed_borders(g);
  const BorderedResult r = bordered_solve(g, p, q);
  // Cramer: g = det G / det [G p; q^T 0]; restore the sign of det G alone
  Mat full(m + 2, m + 2);
  full.setZero();
  full.topLeftCorner(m + 1, m + 1) = g;
  full.topRightCorner(m + 1, 1) = p;
  full.bottomLeftCorner(1, m + 1) = q.transpose();
  const Eigen::PartialPivLU<Mat> lu(full);
  const Mat u = lu.matrixLU().triangularView<Eigen::Upper>();
  double sign = lu.permutationP().determinant();
  for (Index i = 0; i < u.rows(); ++i) sign *= u(i, i) < 0.0 ? -1.0 : 1.0;
  return sign * r.g;
}

double test_ns(const CVec& floquet) {
  Complex prod = 1.0;
  const Index k = floquet.size();
  for (Index i = 0; i < k; ++i)
    for (Index j = i + 1; j < k; ++j) {
      if (std::abs(floquet[i].imag()) <= complex_threshold &&
          std::abs(floquet[j].imag()) <= complex_threshold)
        continue;
      prod *= 0.5 * (floquet[i] + floquet[j]);
    }
  return prod.real();
}

int complex_pair_count(const CVec& floquet) {
  int count = 0;
  for (Index i = 0; i < floquet.size(); ++i)
    if (floquet[i].imag() > complex_threshold) ++count;
  return count;
}

std::optional<double> critical_complex_real(const CVec& floquet) {
  std::optional<double> best;
  for (Index i = 0; i < floquet.size(); ++i) {
    if (floquet[i].imag() <= complex_threshold) continue;
    if (!best || std::abs(floquet[i].real()) < std::abs(*best)) best = floquet[i].real();
  }
  return best;
}

bool is_neimark_sacker_point(const CVec& floquet, double re_tol, double im_tol) {
  int crossing = 0;
  for (Index i = 0; i < floquet.size(); ++i)
    if (floquet[i].imag() > im_tol && std::abs(floquet[i].real()) <= re_tol) ++crossing;
  return crossing == 1;
}

}  // namespace hbm
