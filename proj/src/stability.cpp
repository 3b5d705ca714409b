#include "hbm/stability.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace hbm {

HillMatrices hill_matrices(const SystemModel& model, const HarmonicGrid& grid, double omega) {
  const Index h = grid.basis_size();
  HillMatrices out;
  out.delta1 = kron(nabla_block(grid, omega), 2.0 * model.mass()) +
               kron(Mat::Identity(h, h), model.damping());
  out.delta2 = kron(Mat::Identity(h, h), model.mass());
  return out;
}

Mat hill_delta1_domega(const SystemModel& model, const HarmonicGrid& grid, double omega) {
  return kron(nabla_block(grid, omega) / omega, 2.0 * model.mass());
}

Mat hill_operator(const Mat& hz, const HillMatrices& hill, const Mat& mass) {
  const Index m = hz.rows(), n = mass.rows();
  // Delta2 = I (x) M: solve block by block with the mass factorization
  const Eigen::LLT<Mat> llt(mass);
  auto apply_inverse = [&](const Mat& x) {
    Mat y(x.rows(), x.cols());
    for (Index b = 0; b < m / n; ++b) y.middleRows(b * n, n) = llt.solve(x.middleRows(b * n, n));
    return y;
  };
  (void)hill.delta2;
  Mat out = Mat::Zero(2 * m, 2 * m);
  out.topLeftCorner(m, m) = -apply_inverse(hill.delta1);
  out.topRightCorner(m, m) = -apply_inverse(hz);
  out.bottomLeftCorner(m, m).setIdentity();
  return out;
}

namespace {

struct Unit {
  std::vector<Index> members;
  double imag;  // |Im|
  double real;
};

}  // namespace

FloquetSelection sort_floquet(const CVec& eigenvalues, Index n, double window) {
  const Index total = eigenvalues.size();
  const Index want = 2 * n;
  FloquetSelection out;
  if (total < want) throw InvalidInput("sort_floquet: spectrum smaller than 2n");

  double scale = 1.0;
  for (Index i = 0; i < total; ++i) scale = std::max(scale, std::abs(eigenvalues[i]));
  const double real_tol = 1e-10 * scale;

  std::vector<bool> used(static_cast<std::size_t>(total), false);
  std::vector<Unit> units;
  int unpaired = 0;
  for (Index i = 0; i < total; ++i) {
    if (used[static_cast<std::size_t>(i)]) continue;
    used[static_cast<std::size_t>(i)] = true;
    const Complex l = eigenvalues[i];
    Unit u{{i}, std::abs(l.imag()), l.real()};
    if (std::abs(l.imag()) > real_tol) {
      Index best = -1;
      double best_d = 0.0;
      for (Index j = 0; j < total; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double d = std::abs(eigenvalues[j] - std::conj(l));
        if (best < 0 || d < best_d) {
          best = j;
          best_d = d;
        }
      }
      if (best >= 0 && best_d <= 1e-8 * (1.0 + std::abs(l))) {
        used[static_cast<std::size_t>(best)] = true;
        // positive imaginary part first inside a pair
        if (eigenvalues[best].imag() > l.imag()) u.members = {best, i};
        else u.members = {i, best};
      } else {
        ++unpaired;
      }
    }
    units.push_back(std::move(u));
  }
  if (unpaired > 0) out.warnings.push_back("conjugate pairing failed for some eigenvalues");

  std::stable_sort(units.begin(), units.end(), [&](const Unit& a, const Unit& b) {
    if (std::abs(a.imag - b.imag) > real_tol) return a.imag < b.imag;
    return a.real < b.real;
  });

  std::size_t u = 0;
  Index count = 0;
  double last_imag = 0.0;
  while (count < want && u < units.size()) {
    for (Index idx : units[u].members) out.indices.push_back(idx);
    count += static_cast<Index>(units[u].members.size());
    last_imag = units[u].imag;
    ++u;
  }
  if (count > want) {
    out.widened = true;
    out.warnings.push_back("selection widened to keep a conjugate pair together");
  }
  out.margin = u < units.size() ? units[u].imag - last_imag
                                : std::numeric_limits<double>::infinity();
  if (window > 0.0 && out.margin < 0.1 * window) {
    std::ostringstream msg;
    msg << "small Floquet selection margin " << out.margin;
    out.warnings.push_back(msg.str());
  }
  return out;
}

HillSpectrum hill_eigen(const Mat& hz, const HillMatrices& hill, const Mat& mass, Index n,
                        double window, bool keep_vectors) {
  const Mat b = hill_operator(hz, hill, mass);
  Eigen::EigenSolver<Mat> es(b, keep_vectors);
  if (es.info() != Eigen::Success) throw NumericalError("hill: eigen-solver failed");
  HillSpectrum out;
  out.eigenvalues = es.eigenvalues();
  if (keep_vectors) out.eigenvectors = es.eigenvectors();
  FloquetSelection sel = sort_floquet(out.eigenvalues, n, window);
  out.selected = sel.indices;
  out.margin = sel.margin;
  out.warnings = std::move(sel.warnings);
  out.floquet.resize(static_cast<Index>(out.selected.size()));
  for (std::size_t i = 0; i < out.selected.size(); ++i)
    out.floquet[static_cast<Index>(i)] = out.eigenvalues[out.selected[i]];
  return out;
}

HillSpectrum hill_spectrum(const ResidualWorkspace& ws, const Vec& z, double omega,
                           bool keep_vectors) {
  const HillMatrices hill = hill_matrices(ws.model(), ws.grid(), omega);
  return hill_eigen(ws.jacobian_z(z, omega), hill, ws.model().mass(), ws.grid().dofs,
                    ws.grid().rate(1, omega), keep_vectors);
}

StabilityVerdict is_stable(const CVec& floquet, double tol_re) {
  StabilityVerdict out;
  if (floquet.size() == 0) return out;
  double max_re = -std::numeric_limits<double>::infinity();
  for (Index i = 0; i < floquet.size(); ++i) max_re = std::max(max_re, floquet[i].real());
  out.stability = max_re > tol_re ? Stability::unstable : Stability::stable;
  out.marginal = std::abs(max_re) <= tol_re;
  return out;
}

std::string to_string(Stability s) {
  switch (s) {
    case Stability::stable: return "stable";
    case Stability::unstable: return "unstable";
    case Stability::unknown: return "unknown";
  }
  return "unknown";
}

}  // namespace hbm
