#include <algorithm>

#include "hbm/bifurcation.hpp"

namespace hbm {

namespace {

Mat border(const Mat& g, const Vec& p, const Vec& q) {
  const Index m = g.rows();
  if (g.cols() != m || p.size() != m || q.size() != m)
    throw InvalidInput("bordered_solve: dimension mismatch");
  Mat b = Mat::Zero(m + 1, m + 1);
  b.topLeftCorner(m, m) = g;
  b.topRightCorner(m, 1) = p;
  b.bottomLeftCorner(1, m) = q.transpose();
  return b;
}

BorderedResult solve(const Mat& b) {
  const Index m = b.rows() - 1;
  const Eigen::PartialPivLU<Mat> lu(b);
  // the rcond estimate alone misses exact zero pivots
  const Vec pivots = lu.matrixLU().diagonal().cwiseAbs();
  const double rcond = std::min(lu.rcond(), pivots.minCoeff() / pivots.maxCoeff());
  if (!(rcond > 1e-15)) throw NumericalError("bordered system is singular; re-seed the borders");
  Vec rhs = Vec::Zero(m + 1);
  rhs[m] = 1.0;
  const Vec x = lu.solve(rhs);
  if (!x.allFinite()) throw NumericalError("bordered system is singular; re-seed the borders");
  return {x[m], x.head(m), 1.0 / rcond};
}

}  // namespace

BorderedResult bordered_solve(const Mat& g, const Vec& p, const Vec& q) {
  return solve(border(g, p, q));
}

BorderedResult bordered_solve_adjoint(const Mat& g, const Vec& p, const Vec& q) {
  return solve(border(g.transpose(), q, p));
}

std::pair<Vec, Vec> seed_borders(const Mat& g) {
  const Eigen::JacobiSVD<Mat> svd(g, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Index last = g.rows() - 1;
  return {svd.matrixU().col(last), svd.matrixV().col(last)};
}

double g_derivative(const Mat& g_alpha, const Vec& v, const Vec& w) {
  return -v.dot(g_alpha * w);
}

}  // namespace hbm
