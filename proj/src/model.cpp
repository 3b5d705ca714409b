#include "hbm/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace hbm {

std::string to_string(ElementKind kind) {
  switch (kind) {
    case ElementKind::cubic: return "cubic";
    case ElementKind::bilinear: return "bilinear";
    case ElementKind::trilinear_regularized: return "trilinear_regularized";
    case ElementKind::polynomial: return "polynomial";
  }
  return "unknown";
}

ElementKind element_kind_from_string(const std::string& name) {
  if (name == "cubic") return ElementKind::cubic;
  if (name == "bilinear") return ElementKind::bilinear;
  if (name == "trilinear_regularized" || name == "trilinear-regularized" || name == "trilinear")
    return ElementKind::trilinear_regularized;
  if (name == "polynomial") return ElementKind::polynomial;
  throw InvalidInput("unknown nonlinear element kind '" + name + "'");
}

// ---------------------------------------------------------------------------
// PiecewiseLinearLaw

PiecewiseLinearLaw::PiecewiseLinearLaw(std::vector<double> knots, std::vector<double> slopes,
                                       std::vector<double> halfwidths)
    : knots_(std::move(knots)), slopes_(std::move(slopes)), halfwidths_(std::move(halfwidths)) {
  const std::size_t nk = knots_.size();
  if (slopes_.size() != nk + 1 || halfwidths_.size() != nk)
    throw InvalidInput("piecewise law: need one slope per piece and one halfwidth per knot");
  for (double s : slopes_)
    if (!std::isfinite(s)) throw InvalidInput("piecewise law: non-finite slope");
  for (std::size_t k = 0; k < nk; ++k) {
    if (!(halfwidths_[k] >= 0.0)) throw InvalidInput("piecewise law: negative blend halfwidth");
    if (k > 0 && !(knots_[k - 1] + halfwidths_[k - 1] < knots_[k] - halfwidths_[k]))
      throw InvalidInput("piecewise law: overlapping blend intervals");
    if (std::abs(knots_[k]) <= halfwidths_[k])
      throw InvalidInput("piecewise law: origin falls inside a blend interval");
  }

  const std::size_t pieces = nk + 1;
  std::size_t origin_piece = 0;
  while (origin_piece < nk && knots_[origin_piece] < 0.0) ++origin_piece;

  anchor_u_.assign(pieces, 0.0);
  anchor_value_.assign(pieces, 0.0);
  for (std::size_t p = origin_piece + 1; p < pieces; ++p) {
    anchor_u_[p] = knots_[p - 1];
    anchor_value_[p] = linear_value(p - 1, knots_[p - 1]);
  }
  for (std::size_t p = origin_piece; p-- > 0;) {
    anchor_u_[p] = knots_[p];
    anchor_value_[p] = linear_value(p + 1, knots_[p]);
  }
}

double PiecewiseLinearLaw::linear_value(std::size_t piece, double u) const {
  return anchor_value_[piece] + slopes_[piece] * (u - anchor_u_[piece]);
}

std::size_t PiecewiseLinearLaw::piece_of(double u) const {
  return static_cast<std::size_t>(std::upper_bound(knots_.begin(), knots_.end(), u) -
                                  knots_.begin());
}

namespace {

struct Hermite {
  double value, slope;
};

// Cubic Hermite on [x0, x1] through (x0, y0, m0) and (x1, y1, m1).
Hermite hermite(double u, double x0, double x1, double y0, double m0, double y1, double m1) {
  const double h = x1 - x0;
  const double t = (u - x0) / h;
  const double t2 = t * t, t3 = t2 * t;
  const double value = (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * h * m0 +
                       (-2 * t3 + 3 * t2) * y1 + (t3 - t2) * h * m1;
  const double slope = ((6 * t2 - 6 * t) * y0 + (3 * t2 - 4 * t + 1) * h * m0 +
                        (-6 * t2 + 6 * t) * y1 + (3 * t2 - 2 * t) * h * m1) /
                       h;
  return {value, slope};
}

}  // namespace

double PiecewiseLinearLaw::value(double u) const {
  for (std::size_t k = 0; k < knots_.size(); ++k) {
    const double d = halfwidths_[k];
    if (d > 0.0 && u > knots_[k] - d && u < knots_[k] + d) {
      const double x0 = knots_[k] - d, x1 = knots_[k] + d;
      return hermite(u, x0, x1, linear_value(k, x0), slopes_[k], linear_value(k + 1, x1),
                     slopes_[k + 1])
          .value;
    }
  }
  return linear_value(piece_of(u), u);
}

double PiecewiseLinearLaw::slope(double u) const {
  for (std::size_t k = 0; k < knots_.size(); ++k) {
    const double d = halfwidths_[k];
    if (d > 0.0 && u > knots_[k] - d && u < knots_[k] + d) {
      const double x0 = knots_[k] - d, x1 = knots_[k] + d;
      return hermite(u, x0, x1, linear_value(k, x0), slopes_[k], linear_value(k + 1, x1),
                     slopes_[k + 1])
          .slope;
    }
  }
  return slopes_[piece_of(u)];
}

PiecewiseLinearLaw build_regularized_trilinear(double k_in, double k_out_minus, double k_out_plus,
                                               double a_minus, double a_plus, double delta) {
  if (!(a_minus < 0.0 && a_plus > 0.0))
    throw InvalidInput("trilinear law: clearances must satisfy a_minus < 0 < a_plus");
  if (!(delta > 0.0)) throw InvalidInput("trilinear law: regularization halfwidth must be > 0");
  if (!(delta < std::min(-a_minus, a_plus) / 2.0))
    throw InvalidInput("trilinear law: blend intervals overlap (delta too large)");
  return PiecewiseLinearLaw({a_minus, a_plus}, {k_out_minus, k_in, k_out_plus}, {delta, delta});
}

PiecewiseLinearLaw build_regularized_bilinear(double k_in, double k_out, double clearance,
                                              double delta) {
  if (clearance == 0.0) throw InvalidInput("bilinear law: clearance must be nonzero");
  if (!(delta >= 0.0) || !(delta < std::abs(clearance)))
    throw InvalidInput("bilinear law: regularization halfwidth must lie in [0, |a|)");
  if (clearance > 0.0) return PiecewiseLinearLaw({clearance}, {k_in, k_out}, {delta});
  return PiecewiseLinearLaw({clearance}, {k_out, k_in}, {delta});
}

// ---------------------------------------------------------------------------
// SystemModel

namespace {

void add_connector(Mat& target, int i, std::optional<int> j, double value) {
  target(i, i) += value;
  if (j) {
    target(*j, *j) += value;
    target(i, *j) -= value;
    target(*j, i) -= value;
  }
}

void check_dof(int dof, Index n, const char* what) {
  if (dof < 0 || dof >= n)
    throw InvalidInput(std::string(what) + ": DOF index " + std::to_string(dof) +
                       " outside [0, " + std::to_string(n) + ")");
}

}  // namespace

SystemModel::SystemModel(Mat mass, Mat damping, Mat stiffness,
                         std::vector<NonlinearElement> elements, ForcingSpec forcing,
                         std::map<std::string, double> parameters,
                         std::vector<LinearConnector> connectors)
    : mass_(std::move(mass)),
      base_damping_(std::move(damping)),
      base_stiffness_(std::move(stiffness)),
      definitions_(std::move(elements)),
      connectors_(std::move(connectors)),
      forcing_(std::move(forcing)),
      parameters_(std::move(parameters)) {
  const Index n = mass_.rows();
  if (n == 0 || mass_.cols() != n || base_damping_.rows() != n || base_damping_.cols() != n ||
      base_stiffness_.rows() != n || base_stiffness_.cols() != n)
    throw InvalidInput("model: M, C, K must be square with matching size");
  if (!mass_.allFinite() || !base_damping_.allFinite() || !base_stiffness_.allFinite())
    throw InvalidInput("model: matrices contain non-finite entries");
  const double msym = (mass_ - mass_.transpose()).norm();
  if (msym > 1e-12 * (1.0 + mass_.norm())) throw InvalidInput("model: M must be symmetric");
  if (Eigen::LLT<Mat>(mass_).info() != Eigen::Success)
    throw InvalidInput("model: M must be positive definite");
  const double ksym = (base_stiffness_ - base_stiffness_.transpose()).norm();
  if (ksym > 1e-12 * (1.0 + base_stiffness_.norm()))
    throw InvalidInput("model: K must be symmetric");
  if (forcing_.amplitude.size() != n) throw InvalidInput("model: forcing vector size != n");
  if (forcing_.amplitude.cwiseAbs().maxCoeff() == 0.0)
    throw InvalidInput("model: forcing vector must have a nonzero entry");
  if (forcing_.subharmonic < 1) throw InvalidInput("model: subharmonic divisor must be >= 1");
  if (forcing_.harmonic < 1) throw InvalidInput("model: forcing harmonic must be >= 1");
  for (const auto& [name, value] : parameters_)
    if (!std::isfinite(value)) throw InvalidInput("model: parameter '" + name + "' not finite");
  assemble();
}

double SystemModel::parameter(const std::string& name) const {
  auto it = parameters_.find(name);
  if (it == parameters_.end()) throw InvalidInput("model: unknown parameter '" + name + "'");
  return it->second;
}

SystemModel SystemModel::with_parameter(const std::string& name, double value) const {
  if (!has_parameter(name)) throw InvalidInput("model: unknown parameter '" + name + "'");
  SystemModel copy = *this;
  copy.parameters_[name] = value;
  copy.assemble();
  return copy;
}

Vec SystemModel::forcing_vector() const {
  auto it = parameters_.find("F");
  return it == parameters_.end() ? forcing_.amplitude : Vec(forcing_.amplitude * it->second);
}

void SystemModel::assemble() {
  const Index n = dofs();
  damping_ = base_damping_;
  stiffness_ = base_stiffness_;
  for (const auto& c : connectors_) {
    check_dof(c.dof_i, n, "connector");
    if (c.dof_j) check_dof(*c.dof_j, n, "connector");
    const double value = c.parameter.empty() ? c.value : parameter(c.parameter);
    add_connector(c.kind == LinearConnector::Kind::spring ? stiffness_ : damping_, c.dof_i,
                  c.dof_j, value);
  }

  elements_ = definitions_;
  laws_.assign(elements_.size(), PiecewiseLinearLaw{});
  velocity_dependent_ = false;
  std::set<int> dofs_touched;
  std::set<std::pair<int, int>> pairs;
  for (std::size_t e = 0; e < elements_.size(); ++e) {
    auto& el = elements_[e];
    check_dof(el.dof_i, n, "element");
    if (el.dof_j) {
      check_dof(*el.dof_j, n, "element");
      if (*el.dof_j == el.dof_i) throw InvalidInput("element: dof_i and dof_j must differ");
    }
    for (std::size_t k = 0; k < el.coefficient_parameters.size() && k < el.coefficients.size();
         ++k)
      if (!el.coefficient_parameters[k].empty())
        el.coefficients[k] = parameter(el.coefficient_parameters[k]);
    for (double c : el.coefficients)
      if (!std::isfinite(c)) throw InvalidInput("element: non-finite coefficient");

    auto knot_delta = [&](double a) {
      return el.regularization ? *el.regularization : 0.01 * std::abs(a);
    };
    switch (el.kind) {
      case ElementKind::cubic:
        if (el.coefficients.size() != 1) throw InvalidInput("cubic element needs [k3]");
        break;
      case ElementKind::polynomial:
        if (el.coefficients.empty() && el.velocity_coefficients.empty())
          throw InvalidInput("polynomial element needs coefficients");
        if (!el.velocity_coefficients.empty()) velocity_dependent_ = true;
        break;
      case ElementKind::bilinear:
        if (el.coefficients.size() != 2 || el.clearances.size() != 1)
          throw InvalidInput("bilinear element needs [k_in, k_out] and one clearance");
        laws_[e] = build_regularized_bilinear(el.coefficients[0], el.coefficients[1],
                                              el.clearances[0], knot_delta(el.clearances[0]));
        break;
      case ElementKind::trilinear_regularized: {
        if (el.coefficients.size() != 3 || el.clearances.size() != 2)
          throw InvalidInput(
              "trilinear element needs [k_in, k_out_minus, k_out_plus] and two clearances");
        const double am = el.clearances[0], ap = el.clearances[1];
        if (el.regularization) {
          laws_[e] = build_regularized_trilinear(el.coefficients[0], el.coefficients[1],
                                                 el.coefficients[2], am, ap, *el.regularization);
        } else {
          if (!(am < 0.0 && ap > 0.0))
            throw InvalidInput("trilinear law: clearances must satisfy a_minus < 0 < a_plus");
          laws_[e] = PiecewiseLinearLaw({am, ap},
                                        {el.coefficients[1], el.coefficients[0], el.coefficients[2]},
                                        {knot_delta(am), knot_delta(ap)});
        }
        break;
      }
    }
    dofs_touched.insert(el.dof_i);
    if (el.dof_j) {
      dofs_touched.insert(*el.dof_j);
      pairs.insert({el.dof_i, *el.dof_j});
      pairs.insert({*el.dof_j, el.dof_i});
      pairs.insert({*el.dof_j, *el.dof_j});
    }
    pairs.insert({el.dof_i, el.dof_i});
  }
  nonlinear_dofs_.assign(dofs_touched.begin(), dofs_touched.end());
  coupled_pairs_.assign(pairs.begin(), pairs.end());
}

LawResponse ElementEvaluator::evaluate(std::size_t element, double u, double udot) const {
  const auto& el = model_->elements_[element];
  LawResponse r;
  switch (el.kind) {
    case ElementKind::cubic: {
      const double k3 = el.coefficients[0];
      r.force = k3 * u * u * u;
      r.d_displacement = 3.0 * k3 * u * u;
      break;
    }
    case ElementKind::polynomial: {
      double power = 1.0;  // u^(k-1)
      for (std::size_t k = 0; k < el.coefficients.size(); ++k) {
        r.d_displacement += static_cast<double>(k + 1) * el.coefficients[k] * power;
        power *= u;
        r.force += el.coefficients[k] * power;
      }
      power = 1.0;
      for (std::size_t k = 0; k < el.velocity_coefficients.size(); ++k) {
        r.d_velocity += static_cast<double>(k + 1) * el.velocity_coefficients[k] * power;
        power *= udot;
        r.force += el.velocity_coefficients[k] * power;
      }
      break;
    }
    case ElementKind::bilinear:
    case ElementKind::trilinear_regularized: {
      const auto& law = model_->laws_[element];
      r.force = law.value(u);
      r.d_displacement = law.slope(u);
      break;
    }
  }
  return r;
}

Vec SystemModel::nonlinear_force(const Vec& x, const Vec& v) const {
  Vec f = Vec::Zero(dofs());
  ElementEvaluator eval(*this);
  for (std::size_t e = 0; e < elements_.size(); ++e) {
    const auto& el = elements_[e];
    const double u = el.dof_j ? x[el.dof_i] - x[*el.dof_j] : x[el.dof_i];
    const double ud = el.dof_j ? v[el.dof_i] - v[*el.dof_j] : v[el.dof_i];
    const double force = eval.evaluate(e, u, ud).force;
    f[el.dof_i] += force;
    if (el.dof_j) f[*el.dof_j] -= force;
  }
  return f;
}

std::pair<Mat, Mat> SystemModel::nonlinear_jacobians(const Vec& x, const Vec& v) const {
  const Index n = dofs();
  Mat jx = Mat::Zero(n, n), jv = Mat::Zero(n, n);
  ElementEvaluator eval(*this);
  for (std::size_t e = 0; e < elements_.size(); ++e) {
    const auto& el = elements_[e];
    const double u = el.dof_j ? x[el.dof_i] - x[*el.dof_j] : x[el.dof_i];
    const double ud = el.dof_j ? v[el.dof_i] - v[*el.dof_j] : v[el.dof_i];
    const LawResponse r = eval.evaluate(e, u, ud);
    add_connector(jx, el.dof_i, el.dof_j, r.d_displacement);
    add_connector(jv, el.dof_i, el.dof_j, r.d_velocity);
  }
  return {jx, jv};
}

CVec linear_frf(const SystemModel& model, double omega) {
  if (!(omega > 0.0)) throw InvalidInput("linear_frf: omega must be > 0");
  const double w = omega * model.forcing().harmonic;
  const CMat dyn = model.stiffness().cast<Complex>() - (w * w) * model.mass().cast<Complex>() +
                   Complex(0.0, w) * model.damping().cast<Complex>();
  Eigen::FullPivLU<CMat> lu(dyn);
  const double scale = dyn.cwiseAbs().maxCoeff();
  lu.setThreshold(1e-14);
  if (!lu.isInvertible() || scale == 0.0)
    throw NumericalError("linear_frf: dynamic stiffness singular at omega = " +
                         std::to_string(omega) + " (undamped resonance)");
  return lu.solve(model.forcing_vector().cast<Complex>());
}

}  // namespace hbm
