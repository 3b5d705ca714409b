#include <cmath>
#include <numbers>

#include "hbm/oracle.hpp"

namespace hbm {

SweptSineResult swept_sine(const SystemModel& model, const SweptSineSettings& settings) {
  const double w0 = settings.omega_start, w1 = settings.omega_end;
  if (!(w0 > 0.0) || !(w1 > 0.0) || w0 == w1 || !(settings.sweep_rate > 0.0))
    throw InvalidInput("swept_sine: need positive distinct frequencies and a positive rate");
  if (settings.samples_per_period < 50)
    throw InvalidInput("swept_sine: sampling below 50 points per period");
  const SystemModel m = std::isfinite(settings.forcing) && model.has_parameter("F")
                            ? model.with_parameter("F", settings.forcing)
                            : model;
  Vec f = m.forcing_vector();
  if (std::isfinite(settings.forcing) && !model.has_parameter("F")) f = settings.forcing * m.forcing().amplitude;

  const double duration = std::abs(w1 - w0) / settings.sweep_rate;
  const double r = (w1 - w0) / duration;
  const int harmonic = m.forcing().harmonic;
  auto phase = [=](double t) { return w0 * t + 0.5 * r * t * t; };
  const LoadFunction load = [=](double t) -> Vec { return f * std::cos(harmonic * phase(t)); };

  const double w_max = harmonic * std::max(w0, w1);
  const double dt = 2.0 * std::numbers::pi / (w_max * settings.samples_per_period);
  const int steps = static_cast<int>(std::ceil(duration / dt));
  const TimeHistory h = newmark_integrate(m, load, Vec::Zero(m.dofs()), Vec::Zero(m.dofs()),
                                          duration, steps);

  std::vector<double> omega;
  std::vector<Vec> amp;
  long current = -1;
  Vec peak;
  double t_sum = 0.0;
  int count = 0;
  auto flush = [&] {
    if (count == 0) return;
    omega.push_back(w0 + r * t_sum / count);
    amp.push_back(peak);
  };
  for (Index k = 0; k < h.t.size(); ++k) {
    const long cycle = static_cast<long>(std::floor(phase(h.t[k]) / (2.0 * std::numbers::pi)));
    if (cycle != current) {
      flush();
      current = cycle;
      peak = Vec::Zero(m.dofs());
      t_sum = 0.0;
      count = 0;
    }
    peak = peak.cwiseMax(h.x.col(k).cwiseAbs());
    t_sum += h.t[k];
    ++count;
  }  // the trailing partial cycle is dropped

  SweptSineResult out;
  out.omega.resize(static_cast<Index>(omega.size()));
  out.amplitude.resize(static_cast<Index>(omega.size()), m.dofs());
  for (std::size_t i = 0; i < omega.size(); ++i) {
    out.omega[static_cast<Index>(i)] = omega[i];
    out.amplitude.row(static_cast<Index>(i)) = amp[i].transpose();
  }
  return out;
}

}  // namespace hbm
