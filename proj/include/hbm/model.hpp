#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hbm/types.hpp"

namespace hbm {

enum class ElementKind { cubic, bilinear, trilinear_regularized, polynomial };

std::string to_string(ElementKind kind);
ElementKind element_kind_from_string(const std::string& name);

/// Scalar restoring-force law built from linear pieces joined at clearances.
/// Each knot is smoothed by a cubic Hermite blend on [a - delta, a + delta]
/// that matches value and slope of the adjacent pieces (C1 law). A zero
/// halfwidth leaves that knot sharp.
class PiecewiseLinearLaw {
public:
  PiecewiseLinearLaw() = default;
  /// knots ascending, slopes.size() == knots.size() + 1; the law passes
  /// through the origin, which must lie in a linear piece.
  PiecewiseLinearLaw(std::vector<double> knots, std::vector<double> slopes,
                     std::vector<double> halfwidths);

  double value(double u) const;
  double slope(double u) const;

  const std::vector<double>& knots() const { return knots_; }
  const std::vector<double>& slopes() const { return slopes_; }
  const std::vector<double>& halfwidths() const { return halfwidths_; }

private:
  double linear_value(std::size_t piece, double u) const;
  std::size_t piece_of(double u) const;

  std::vector<double> knots_;
  std::vector<double> slopes_;
  std::vector<double> halfwidths_;
  // Piece p is anchor_value_[p] + slopes_[p] * (u - anchor_u_[p]).
  std::vector<double> anchor_u_;
  std::vector<double> anchor_value_;
};

/// Stop with an elastic inner band [a_minus, a_plus] and stiffer contact
/// slopes outside it. Rejects delta <= 0 and overlapping blends.
PiecewiseLinearLaw build_regularized_trilinear(double k_in, double k_out_minus, double k_out_plus,
                                               double a_minus, double a_plus, double delta);

/// One-sided stop: clearance > 0 puts the contact on the positive side.
PiecewiseLinearLaw build_regularized_bilinear(double k_in, double k_out, double clearance,
                                              double delta);

struct NonlinearElement {
  ElementKind kind = ElementKind::cubic;
  int dof_i = 0;
  std::optional<int> dof_j;  // relative coordinate u = x_i - x_j when set
  // cubic: [k3]; bilinear: [k_in, k_out]; trilinear: [k_in, k_out_minus, k_out_plus];
  // polynomial: [a1, a2, ...] multiplying u, u^2, ...
  std::vector<double> coefficients;
  // polynomial only: [b1, b2, ...] multiplying udot, udot^2, ...
  std::vector<double> velocity_coefficients;
  std::vector<double> clearances;  // bilinear: [a]; trilinear: [a_minus, a_plus]
  std::optional<double> regularization;  // delta; defaults to 0.01 |a| per knot
  // Optional parameter binding per coefficient ("" = literal value).
  std::vector<std::string> coefficient_parameters;
};

struct LinearConnector {
  enum class Kind { spring, dashpot };
  Kind kind = Kind::spring;
  int dof_i = 0;
  std::optional<int> dof_j;
  double value = 0.0;
  std::string parameter;  // when set, the named parameter supplies the coefficient
};

struct ForcingSpec {
  Vec amplitude;      // N, scaled by parameter "F" when present
  int harmonic = 1;   // excitation at harmonic * omega
  int subharmonic = 1;
};

/// Response of one element law at a given relative displacement/velocity.
struct LawResponse {
  double force = 0.0;
  double d_displacement = 0.0;
  double d_velocity = 0.0;
};

/// Second-order structural system M x'' + C x' + K x + f_nl(x, x') = f_ext(t).
/// Immutable after construction; parameter changes produce a new value.
class SystemModel {
public:
  SystemModel(Mat mass, Mat damping, Mat stiffness, std::vector<NonlinearElement> elements,
              ForcingSpec forcing, std::map<std::string, double> parameters = {},
              std::vector<LinearConnector> connectors = {});

  Index dofs() const { return mass_.rows(); }
  const Mat& mass() const { return mass_; }
  const Mat& damping() const { return damping_; }
  const Mat& stiffness() const { return stiffness_; }
  const Mat& base_damping() const { return base_damping_; }
  const Mat& base_stiffness() const { return base_stiffness_; }

  /// Elements with parameter bindings resolved.
  const std::vector<NonlinearElement>& elements() const { return elements_; }
  const std::vector<NonlinearElement>& element_definitions() const { return definitions_; }
  const std::vector<LinearConnector>& connectors() const { return connectors_; }
  const ForcingSpec& forcing() const { return forcing_; }
  const std::map<std::string, double>& parameters() const { return parameters_; }

  bool has_parameter(const std::string& name) const { return parameters_.count(name) != 0; }
  double parameter(const std::string& name) const;
  SystemModel with_parameter(const std::string& name, double value) const;

  /// Forcing amplitude vector including the "F" scale.
  Vec forcing_vector() const;

  bool has_velocity_dependence() const { return velocity_dependent_; }
  /// DOFs touched by at least one nonlinear element, ascending.
  const std::vector<int>& nonlinear_dofs() const { return nonlinear_dofs_; }
  /// DOF pairs (i, j) where d f_nl_i / d x_j may be nonzero.
  const std::vector<std::pair<int, int>>& coupled_pairs() const { return coupled_pairs_; }

  Vec nonlinear_force(const Vec& x, const Vec& v) const;
  /// (d f_nl / d x, d f_nl / d v), analytic.
  std::pair<Mat, Mat> nonlinear_jacobians(const Vec& x, const Vec& v) const;

private:
  void assemble();

  Mat mass_, base_damping_, base_stiffness_;
  Mat damping_, stiffness_;
  std::vector<NonlinearElement> definitions_;
  std::vector<NonlinearElement> elements_;
  std::vector<PiecewiseLinearLaw> laws_;  // one per element (unused for polynomial kinds)
  std::vector<LinearConnector> connectors_;
  ForcingSpec forcing_;
  std::map<std::string, double> parameters_;
  bool velocity_dependent_ = false;
  std::vector<int> nonlinear_dofs_;
  std::vector<std::pair<int, int>> coupled_pairs_;

  friend class ElementEvaluator;
};

/// Per-element law evaluation shared by the model and the sampling kernels.
class ElementEvaluator {
public:
  explicit ElementEvaluator(const SystemModel& model) : model_(&model) {}
  LawResponse evaluate(std::size_t element, double u, double udot) const;

private:
  const SystemModel* model_;
};

/// Linear frequency response X = (K - w^2 M + i w C)^-1 F at excitation
/// frequency w (rad/s). Throws NumericalError on an undamped resonance.
CVec linear_frf(const SystemModel& model, double omega);

}  // namespace hbm
