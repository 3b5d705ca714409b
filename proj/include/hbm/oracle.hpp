#pragma once

#include <functional>
#include <string>

#include "hbm/branch.hpp"
#include "hbm/harmonic.hpp"
#include "hbm/model.hpp"

namespace hbm {

/// Uniformly sampled trajectory; column k of x/v is the state at t[k].
struct TimeHistory {
  Vec t;
  Mat x;
  Mat v;
  std::string scheme = "newmark-average-acceleration";
  double step = 0.0;
};

struct NewmarkOptions {
  double tolerance = 1e-10;  // relative residual of the inner Newton loop
  int max_newton = 30;
  int max_halvings = 10;
};

/// Time-dependent load f(t) acting on the model.
using LoadFunction = std::function<Vec(double)>;

/// Average-acceleration Newmark (gamma = 1/2, beta = 1/4) with Newton on the
/// end-of-step acceleration. A step whose Newton loop diverges is split in
/// two and retried. Records every `store_every`-th step.
TimeHistory newmark_integrate(const SystemModel& model, const LoadFunction& load, const Vec& x0,
                              const Vec& v0, double duration, int steps, int store_every = 1,
                              const NewmarkOptions& options = {});

/// Harmonic forcing of the model over n_periods periods T = 2 pi nu / w.
TimeHistory newmark_integrate(const SystemModel& model, const Vec& x0, const Vec& v0, double omega,
                              int n_periods, int steps_per_period,
                              const NewmarkOptions& options = {});

/// External load F cos(harmonic w t) of the model.
LoadFunction harmonic_load(const SystemModel& model, double omega);

/// Displacement/velocity of the HB state z at time t.
std::pair<Vec, Vec> evaluate_state(const HarmonicGrid& grid, const Vec& z, double omega, double t);

struct MonodromyResult {
  Mat matrix;          // 2n x 2n, state ordering [x; v]
  CVec multipliers;
  CVec exponents;      // log(mu) / T, principal branch
  double period = 0.0;
};

/// Variational equations about the HB solution integrated over one period
/// with the same Newmark scheme.
MonodromyResult monodromy(const SystemModel& model, const HarmonicGrid& grid, const Vec& z,
                          double omega, int steps_per_period = 1000);
/// Central differences of the one-period flow of the nonlinear system,
/// started on the HB state at t = 0.
Mat monodromy_fd(const SystemModel& model, const HarmonicGrid& grid, const Vec& z, double omega,
                 int steps_per_period = 1000, double step = 1e-6);
MonodromyResult spectrum_of(const Mat& matrix, double period);

/// Imaginary part folded into (-w/(2 nu), w/(2 nu)].
Complex fold_exponent(Complex lambda, double omega, int subharmonic);
/// Largest distance after greedy nearest matching of two exponent sets,
/// both folded into the principal window.
double exponent_mismatch(const CVec& a, const CVec& b, double omega, int subharmonic);

struct SweptSineSettings {
  double omega_start = 0.5;
  double omega_end = 1.5;
  double sweep_rate = 1e-4;       // rad/s per second
  double samples_per_period = 100;  // at the highest frequency
  double forcing = std::numeric_limits<double>::quiet_NaN();  // overrides "F" when set
};

/// Per-cycle envelope of a linear frequency sweep.
struct SweptSineResult {
  Vec omega;       // instantaneous frequency at each cycle's midpoint
  Mat amplitude;   // cycles x n, max |x| within the cycle
};

SweptSineResult swept_sine(const SystemModel& model, const SweptSineSettings& settings);

}  // namespace hbm
