#include <cmath>
#include <numbers>

#include "hbm/records.hpp"

namespace hbm {

HarmonicIndicators harmonic_indicators(const Vec& z, const HarmonicGrid& grid) {
  const Index n = grid.dofs;
  HarmonicIndicators out;
  out.sigma = Mat::Zero(n, grid.harmonics + 1);
  out.defined.assign(static_cast<std::size_t>(n), false);
  for (Index d = 0; d < n; ++d) {
    Vec phi(grid.harmonics + 1);
    phi[0] = std::abs(z[coefficient_index(constant_column(), d, n)]) / std::numbers::sqrt2;
    for (int k = 1; k <= grid.harmonics; ++k)
      phi[k] = std::hypot(z[coefficient_index(sine_column(k), d, n)],
                          z[coefficient_index(cosine_column(k), d, n)]);
    const double total = phi.sum();
    if (total > 0.0) {
      out.sigma.row(d) = (phi / total).transpose();
      out.defined[static_cast<std::size_t>(d)] = true;
    }
  }
  return out;
}

}  // namespace hbm
