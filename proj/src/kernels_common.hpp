#pragma once

// Per-sample arithmetic shared by the serial and OpenMP kernels. Both
// backends call exactly these functions so their results agree bitwise.

#include <array>
#include <vector>

#include "hbm/kernels.hpp"

namespace hbm::kernels::detail {

// Samples per partial sum in reductions over the time grid.
constexpr Index reduction_chunk = 64;

struct ElementSlots {
  int i;
  int j;  // -1 when the element acts on an absolute coordinate
  std::array<int, 4> pair{};  // (i,i) (i,j) (j,i) (j,j) columns in coupled_pairs
};

std::vector<ElementSlots> element_slots(const SystemModel& model);

inline void force_row(const SystemModel& model, const ElementEvaluator& eval,
                      const std::vector<ElementSlots>& slots, const Mat& x, const Mat& v,
                      Index row, Mat& force) {
  for (std::size_t e = 0; e < slots.size(); ++e) {
    const auto& s = slots[e];
    const double u = s.j < 0 ? x(row, s.i) : x(row, s.i) - x(row, s.j);
    const double ud = s.j < 0 ? v(row, s.i) : v(row, s.i) - v(row, s.j);
    const double f = eval.evaluate(e, u, ud).force;
    force(row, s.i) += f;
    if (s.j >= 0) force(row, s.j) -= f;
  }
  (void)model;
}

inline void jacobian_row(const ElementEvaluator& eval, const std::vector<ElementSlots>& slots,
                         const Mat& x, const Mat& v, Index row, Mat& jx, Mat& jv) {
  for (std::size_t e = 0; e < slots.size(); ++e) {
    const auto& s = slots[e];
    const double u = s.j < 0 ? x(row, s.i) : x(row, s.i) - x(row, s.j);
    const double ud = s.j < 0 ? v(row, s.i) : v(row, s.i) - v(row, s.j);
    const LawResponse r = eval.evaluate(e, u, ud);
    jx(row, s.pair[0]) += r.d_displacement;
    jv(row, s.pair[0]) += r.d_velocity;
    if (s.j >= 0) {
      jx(row, s.pair[1]) -= r.d_displacement;
      jx(row, s.pair[2]) -= r.d_displacement;
      jx(row, s.pair[3]) += r.d_displacement;
      jv(row, s.pair[1]) -= r.d_velocity;
      jv(row, s.pair[2]) -= r.d_velocity;
      jv(row, s.pair[3]) += r.d_velocity;
    }
  }
}

inline Complex bilinear_row(const ElementEvaluator& eval, const std::vector<ElementSlots>& slots,
                            const Mat& x, const Mat& v, const BilinearOperands& ops, Index row) {
  Complex acc = 0.0;
  for (std::size_t e = 0; e < slots.size(); ++e) {
    const auto& s = slots[e];
    const double u = s.j < 0 ? x(row, s.i) : x(row, s.i) - x(row, s.j);
    const double ud = s.j < 0 ? v(row, s.i) : v(row, s.i) - v(row, s.j);
    const LawResponse r = eval.evaluate(e, u, ud);
    Complex dl = ops.left(row, s.i), dr = ops.right(row, s.i), drv = ops.right_velocity(row, s.i);
    if (s.j >= 0) {
      dl -= ops.left(row, s.j);
      dr -= ops.right(row, s.j);
      drv -= ops.right_velocity(row, s.j);
    }
    acc += dl * (r.d_displacement * dr + r.d_velocity * drv);
  }
  return acc;
}

inline Complex chunk_bilinear(const ElementEvaluator& eval, const std::vector<ElementSlots>& slots,
                              const Mat& x, const Mat& v, const BilinearOperands& ops,
                              Index chunk) {
  const Index begin = chunk * reduction_chunk;
  const Index end = std::min<Index>(begin + reduction_chunk, x.rows());
  Complex acc = 0.0;
  for (Index row = begin; row < end; ++row) acc += bilinear_row(eval, slots, x, v, ops, row);
  return acc;
}

inline Index chunk_count(Index rows) { return (rows + reduction_chunk - 1) / reduction_chunk; }

inline double projected_entry(const Mat& basis, const Vec& weights, Index a, Index b) {
  double acc = 0.0;
  for (Index j = 0; j < basis.rows(); ++j) acc += basis(j, a) * weights[j] * basis(j, b);
  return acc * (2.0 / static_cast<double>(basis.rows()));
}

inline void perturb(Mat& x, Mat& v, const Mat& basis, const Mat& velocity_basis,
                    const CoefficientProbe& probe, double sign) {
  x.col(probe.dof) += (sign * probe.step) * basis.col(probe.column);
  v.col(probe.dof) += (sign * probe.step) * velocity_basis.col(probe.column);
}

}  // namespace hbm::kernels::detail
