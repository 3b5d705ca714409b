#include <omp.h>

#include "kernels_common.hpp"

namespace hbm::kernels::omp {

void sample_forces(const SystemModel& model, const Mat& x, const Mat& v, Mat& force) {
  const auto slots = detail::element_slots(model);
  const ElementEvaluator eval(model);
  force.setZero(x.rows(), x.cols());
  const Index rows = x.rows();
#pragma omp parallel for schedule(static)
  for (Index row = 0; row < rows; ++row) detail::force_row(model, eval, slots, x, v, row, force);
}

void sample_jacobians(const SystemModel& model, const Mat& x, const Mat& v, Mat& jx, Mat& jv) {
  const auto slots = detail::element_slots(model);
  const ElementEvaluator eval(model);
  const auto pairs = static_cast<Index>(model.coupled_pairs().size());
  jx.setZero(x.rows(), pairs);
  jv.setZero(x.rows(), pairs);
  const Index rows = x.rows();
#pragma omp parallel for schedule(static)
  for (Index row = 0; row < rows; ++row) detail::jacobian_row(eval, slots, x, v, row, jx, jv);
}

void project_weighted(const Mat& basis, const Vec& weights, Mat& out) {
  const Index h = basis.cols();
  out.resize(h, h);
#pragma omp parallel for schedule(dynamic)
  for (Index a = 0; a < h; ++a)
    for (Index b = a; b < h; ++b) {
      const double value = detail::projected_entry(basis, weights, a, b);
      out(a, b) = value;
      out(b, a) = value;
    }
}

Complex sampled_bilinear(const SystemModel& model, const Mat& x, const Mat& v,
                         const BilinearOperands& ops) {
  const auto slots = detail::element_slots(model);
  const ElementEvaluator eval(model);
  const Index chunks = detail::chunk_count(x.rows());
  std::vector<Complex> partial(static_cast<std::size_t>(chunks));
#pragma omp parallel for schedule(static)
  for (Index c = 0; c < chunks; ++c)
    partial[static_cast<std::size_t>(c)] = detail::chunk_bilinear(eval, slots, x, v, ops, c);
  Complex total = 0.0;
  for (const Complex& p : partial) total += p;
  return total * (2.0 / static_cast<double>(x.rows()));
}

void probe_bilinear(const SystemModel& model, const Mat& x, const Mat& v, const Mat& basis,
                    const Mat& velocity_basis, const BilinearOperands& ops,
                    const std::vector<CoefficientProbe>& probes, CVec& out) {
  const auto count = static_cast<Index>(probes.size());
  out.resize(count);
#pragma omp parallel for schedule(dynamic)
  for (Index k = 0; k < count; ++k) {
    const auto& probe = probes[static_cast<std::size_t>(k)];
    Mat xp = x, vp = v, xm = x, vm = v;
    detail::perturb(xp, vp, basis, velocity_basis, probe, +1.0);
    detail::perturb(xm, vm, basis, velocity_basis, probe, -1.0);
    // inner sums stay serial so the chunk order matches the reference kernel
    const Complex fp = serial::sampled_bilinear(model, xp, vp, ops);
    const Complex fm = serial::sampled_bilinear(model, xm, vm, ops);
    out[k] = (fp - fm) / (2.0 * probe.step);
  }
}

}  // namespace hbm::kernels::omp
