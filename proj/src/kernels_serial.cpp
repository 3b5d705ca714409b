#include <algorithm>
#include <map>

#include "kernels_common.hpp"

namespace hbm::kernels {

namespace detail {

std::vector<ElementSlots> element_slots(const SystemModel& model) {
  std::map<std::pair<int, int>, int> column;
  const auto& pairs = model.coupled_pairs();
  for (std::size_t p = 0; p < pairs.size(); ++p) column[pairs[p]] = static_cast<int>(p);
  std::vector<ElementSlots> slots;
  for (const auto& el : model.elements()) {
    ElementSlots s{el.dof_i, el.dof_j ? *el.dof_j : -1, {}};
    s.pair[0] = column.at({s.i, s.i});
    if (s.j >= 0) {
      s.pair[1] = column.at({s.i, s.j});
      s.pair[2] = column.at({s.j, s.i});
      s.pair[3] = column.at({s.j, s.j});
    }
    slots.push_back(s);
  }
  return slots;
}

}  // namespace detail

namespace serial {

void sample_forces(const SystemModel& model, const Mat& x, const Mat& v, Mat& force) {
  const auto slots = detail::element_slots(model);
  const ElementEvaluator eval(model);
  force.setZero(x.rows(), x.cols());
  for (Index row = 0; row < x.rows(); ++row) detail::force_row(model, eval, slots, x, v, row, force);
}

void sample_jacobians(const SystemModel& model, const Mat& x, const Mat& v, Mat& jx, Mat& jv) {
  const auto slots = detail::element_slots(model);
  const ElementEvaluator eval(model);
  const auto pairs = static_cast<Index>(model.coupled_pairs().size());
  jx.setZero(x.rows(), pairs);
  jv.setZero(x.rows(), pairs);
  for (Index row = 0; row < x.rows(); ++row) detail::jacobian_row(eval, slots, x, v, row, jx, jv);
}

void project_weighted(const Mat& basis, const Vec& weights, Mat& out) {
  const Index h = basis.cols();
  out.resize(h, h);
  for (Index a = 0; a < h; ++a)
    for (Index b = a; b < h; ++b) out(a, b) = out(b, a) = detail::projected_entry(basis, weights, a, b);
}

Complex sampled_bilinear(const SystemModel& model, const Mat& x, const Mat& v,
                         const BilinearOperands& ops) {
  const auto slots = detail::element_slots(model);
  const ElementEvaluator eval(model);
  const Index chunks = detail::chunk_count(x.rows());
  Complex total = 0.0;
  for (Index c = 0; c < chunks; ++c) total += detail::chunk_bilinear(eval, slots, x, v, ops, c);
  return total * (2.0 / static_cast<double>(x.rows()));
}

void probe_bilinear(const SystemModel& model, const Mat& x, const Mat& v, const Mat& basis,
                    const Mat& velocity_basis, const BilinearOperands& ops,
                    const std::vector<CoefficientProbe>& probes, CVec& out) {
  out.resize(static_cast<Index>(probes.size()));
  for (std::size_t k = 0; k < probes.size(); ++k) {
    Mat xp = x, vp = v, xm = x, vm = v;
    detail::perturb(xp, vp, basis, velocity_basis, probes[k], +1.0);
    detail::perturb(xm, vm, basis, velocity_basis, probes[k], -1.0);
    const Complex fp = sampled_bilinear(model, xp, vp, ops);
    const Complex fm = sampled_bilinear(model, xm, vm, ops);
    out[static_cast<Index>(k)] = (fp - fm) / (2.0 * probes[k].step);
  }
}

}  // namespace serial
}  // namespace hbm::kernels
