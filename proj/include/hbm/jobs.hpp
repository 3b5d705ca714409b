#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "hbm/bifurcation.hpp"
#include "hbm/oracle.hpp"
#include "hbm/solver.hpp"

namespace hbm {

inline constexpr const char* version_string = "1.0.0";

/// Job configuration document:
///
///   {
///     "kind": "frf" | "track-fold" | "track-ns" | "oracle-sweep" | "convergence",
///     "model": "duffing.json",              relative to the config file
///     "parameters": {"F": 0.1},             overrides applied to the model
///     "grid": {"harmonics": 9, "samples": 1024},
///     "backend": "openmp" | "serial",
///     "continuation": {"omega_start": 0.5, "omega_end": 2.0, "step": 0.01,
///                      "min_step": 1e-6, "max_step": 0.05, "max_points": 5000,
///                      "tolerance": 0, "locate": true},
///     "tracking": {"parameter": "F", "min": 0.0, "max": 1.0,
///                  "omega_min": 0.0, "omega_max": 1e30,
///                  "seed_index": 0, "step": 0.01, "max_step": 0.05, "max_points": 2000},
///     "oracle": {"omega_start": 0.5, "omega_end": 2.0, "sweep_rate": 1e-4,
///                "samples_per_period": 100, "forcing": 0.1,
///                "validate_points": 10, "periods": 200, "discard": 150,
///                "steps_per_period": 200},
///     "convergence": {"base": "frf" | "track-fold", "harmonics": [1, ..., 9]}
///   }
///
/// Only the sections used by the job kind are required.
struct JobConfig {
  std::string kind;
  std::string model_path;
  nlohmann::json document;
  std::map<std::string, double> overrides;
  int harmonics = 5;
  int samples = 1024;
  kernels::Backend backend = kernels::Backend::openmp;
  ContinuationSettings continuation;
  bool locate = true;
  TrackingSettings tracking;
  int seed_index = 0;
  SweptSineSettings sweep;
  int validate_points = 0;
  int newmark_periods = 200;
  int newmark_discard = 150;
  int steps_per_period = 200;
  std::string convergence_base = "frf";
  std::vector<int> convergence_harmonics = {1, 2, 3, 4, 5, 6, 7, 8, 9};
};

JobConfig parse_job_config(const nlohmann::json& doc, const std::string& base_dir);
JobConfig load_job_config(const std::string& path);

/// Model with overrides applied.
SystemModel job_model(const JobConfig& config);
ResidualWorkspace job_workspace(const JobConfig& config, int harmonics);

struct FrfOutcome {
  Branch branch;
  std::vector<Event> events;
};
FrfOutcome compute_frf(const ResidualWorkspace& ws, const ContinuationSettings& settings,
                       bool locate = true);

struct TrackOutcome {
  FrfOutcome frequency;
  BifurcationCurve curve;
};
TrackOutcome compute_track(const ResidualWorkspace& ws, const JobConfig& config);

struct ConvergenceRow {
  int harmonics = 0;
  std::string event;   // "fold", "parameter_min", ...
  int ordinal = 0;     // index among events of that kind
  double omega = 0.0;
  double parameter = 0.0;
  double deviation_omega = 0.0;      // percent vs the reference
  double deviation_parameter = 0.0;  // percent vs the reference
  bool ok = true;
  std::string note;
};
/// Repeats the base job for each N_H; the last entry is the reference.
/// Frequency-response studies add a "peak" row per case whose p2 column
/// holds the peak amplitude of DOF 0.
std::vector<ConvergenceRow> convergence_study(const JobConfig& config);

struct JobResult {
  RunStatus status = RunStatus::complete;
  std::vector<std::string> files;
  std::string message;
};

JobResult run_frf(const JobConfig& config, const std::string& out_dir);
JobResult run_track(const JobConfig& config, const std::string& out_dir);
JobResult run_oracle(const JobConfig& config, const std::string& out_dir);
JobResult run_convergence(const JobConfig& config, const std::string& out_dir);

}  // namespace hbm
