#include <cmath>
#include <numbers>

#include "hbm/oracle.hpp"

namespace hbm {

namespace {

struct State {
  Vec x, v, a;
};

class Stepper {
public:
  Stepper(const SystemModel& model, const LoadFunction& load, const NewmarkOptions& options)
      : model_(model), load_(load), options_(options) {}

  Vec acceleration(const Vec& x, const Vec& v, double t) const {
    const Vec rhs = load_(t) - model_.damping() * v - model_.stiffness() * x -
                    model_.nonlinear_force(x, v);
    return model_.mass().llt().solve(rhs);
  }

  // Advances s by dt, splitting the step when Newton fails.
  void advance(State& s, double t, double dt, int depth) const {
    State trial = s;
    if (try_step(trial, t, dt)) {
      s = std::move(trial);
      return;
    }
    if (depth >= options_.max_halvings)
      throw NumericalError("newmark: inner Newton diverged after repeated step halving");
    advance(s, t, 0.5 * dt, depth + 1);
    advance(s, t + 0.5 * dt, 0.5 * dt, depth + 1);
  }

private:
  bool try_step(State& s, double t, double dt) const {
    const Vec f = load_(t + dt);
    const double scale = 1.0 + f.norm() + (model_.stiffness() * s.x).norm();
    Vec a = s.a;
    const bool nonlinear = !model_.elements().empty();
    for (int it = 0; it < options_.max_newton; ++it) {
      const Vec x = s.x + dt * s.v + 0.25 * dt * dt * (s.a + a);
      const Vec v = s.v + 0.5 * dt * (s.a + a);
      Vec r = model_.mass() * a + model_.damping() * v + model_.stiffness() * x - f;
      Mat k = model_.mass() + 0.5 * dt * model_.damping() + 0.25 * dt * dt * model_.stiffness();
      if (nonlinear) {
        r += model_.nonlinear_force(x, v);
        const auto [jx, jv] = model_.nonlinear_jacobians(x, v);
        k += 0.5 * dt * jv + 0.25 * dt * dt * jx;
      }
      if (!r.allFinite()) return false;
      if (r.norm() <= options_.tolerance * scale) {
        s.x = x;
        s.v = v;
        s.a = a;
        return true;
      }
      a -= k.partialPivLu().solve(r);
      if (!nonlinear && it > 2) return false;
    }
    return false;
  }

  const SystemModel& model_;
  const LoadFunction& load_;
  NewmarkOptions options_;
};

}  // namespace

LoadFunction harmonic_load(const SystemModel& model, double omega) {
  const Vec f = model.forcing_vector();
  const double rate = model.forcing().harmonic * omega;
  return [f, rate](double t) -> Vec { return f * std::cos(rate * t); };
}

TimeHistory newmark_integrate(const SystemModel& model, const LoadFunction& load, const Vec& x0,
                              const Vec& v0, double duration, int steps, int store_every,
                              const NewmarkOptions& options) {
  if (steps < 1 || !(duration > 0.0)) throw InvalidInput("newmark: need a positive duration and step count");
  if (store_every < 1) store_every = 1;
  const Stepper stepper(model, load, options);
  const double dt = duration / steps;
  State s{x0, v0, stepper.acceleration(x0, v0, 0.0)};

  const Index stored = steps / store_every + 1;
  TimeHistory out;
  out.step = dt;
  out.t.resize(stored);
  out.x.resize(model.dofs(), stored);
  out.v.resize(model.dofs(), stored);
  out.t[0] = 0.0;
  out.x.col(0) = s.x;
  out.v.col(0) = s.v;
  Index k = 1;
  for (int i = 1; i <= steps; ++i) {
    stepper.advance(s, (i - 1) * dt, dt, 0);
    if (i % store_every == 0 && k < stored) {
      out.t[k] = i * dt;
      out.x.col(k) = s.x;
      out.v.col(k) = s.v;
      ++k;
    }
  }
  out.t.conservativeResize(k);
  out.x.conservativeResize(Eigen::NoChange, k);
  out.v.conservativeResize(Eigen::NoChange, k);
  return out;
}

TimeHistory newmark_integrate(const SystemModel& model, const Vec& x0, const Vec& v0, double omega,
                              int n_periods, int steps_per_period, const NewmarkOptions& options) {
  const double period = 2.0 * std::numbers::pi * model.forcing().subharmonic / omega;
  return newmark_integrate(model, harmonic_load(model, omega), x0, v0, n_periods * period,
                           n_periods * steps_per_period, 1, options);
}

}  // namespace hbm
