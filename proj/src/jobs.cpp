#include "hbm/jobs.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "hbm/model_io.hpp"
#include "hbm/records.hpp"

namespace hbm {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

template <typename T>
void read_if(const json& j, const char* key, T& target) {
  if (j.contains(key)) target = j.at(key).get<T>();
}

void read_path(const json& j, PathSettings& path) {
  read_if(j, "step", path.step);
  read_if(j, "min_step", path.min_step);
  read_if(j, "max_step", path.max_step);
  read_if(j, "max_points", path.max_points);
  read_if(j, "growth", path.growth);
  read_if(j, "max_iterations", path.corrector.max_iterations);
}

std::vector<std::string> dof_labels(Index n) {
  std::vector<std::string> out;
  for (Index d = 0; d < n; ++d) out.push_back("dof_" + std::to_string(d));
  return out;
}

json events_json(const ResidualWorkspace& ws, const std::vector<Event>& events) {
  json arr = json::array();
  const auto labels = dof_labels(ws.grid().dofs);
  for (const auto& e : events) arr.push_back(event_to_json(e, labels, ws.amplitudes(e.point.z)));
  return arr;
}

CsvMeta meta_for(const ResidualWorkspace& ws, const std::string& kind, const std::string& parameter) {
  CsvMeta meta;
  meta.kind = kind;
  meta.dofs = ws.grid().dofs;
  meta.harmonics = ws.grid().harmonics;
  meta.subharmonic = ws.grid().subharmonic;
  meta.parameter = parameter.empty() ? "-" : parameter;
  return meta;
}

double forcing_scale(const SystemModel& model) {
  return model.has_parameter("F") ? model.parameter("F") : 1.0;
}

json run_header(const JobConfig& config, RunStatus status, const std::string& message) {
  json j;
  j["version"] = version_string;
  j["csv_schema"] = csv_schema_version;
  j["kind"] = config.kind;
  j["status"] = status == RunStatus::complete ? "complete" : "partial";
  j["message"] = message;
  j["config"] = config.document;
  return j;
}

std::string prepare(const std::string& out_dir) {
  fs::create_directories(out_dir);
  return out_dir;
}

double percent(double value, double reference) {
  if (reference == 0.0) return value == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return 100.0 * std::abs(value - reference) / std::abs(reference);
}

}  // namespace

JobConfig parse_job_config(const json& doc, const std::string& base_dir) {
  try {
    JobConfig c;
    c.document = doc;
    c.kind = doc.at("kind").get<std::string>();
    static const std::vector<std::string> kinds = {"frf", "track-fold", "track-ns", "oracle-sweep",
                                                   "convergence"};
    if (std::find(kinds.begin(), kinds.end(), c.kind) == kinds.end())
      throw InvalidInput("config: unknown job kind '" + c.kind + "'");
    const fs::path model = doc.at("model").get<std::string>();
    c.model_path = model.is_absolute() ? model.string() : (fs::path(base_dir) / model).string();
    if (!fs::exists(c.model_path)) throw InvalidInput("config: model file '" + c.model_path + "' not found");
    const json overrides = doc.value("parameters", json::object());
    for (const auto& [name, value] : overrides.items())
      c.overrides[name] = value.get<double>();

    const json grid = doc.value("grid", json::object());
    read_if(grid, "harmonics", c.harmonics);
    read_if(grid, "samples", c.samples);
    const std::string backend = doc.value("backend", std::string("openmp"));
    if (backend == "serial") c.backend = kernels::Backend::serial;
    else if (backend == "openmp") c.backend = kernels::Backend::openmp;
    else throw InvalidInput("config: backend must be serial or openmp");

    const json cont = doc.value("continuation", json::object());
    read_if(cont, "omega_start", c.continuation.omega_start);
    read_if(cont, "omega_end", c.continuation.omega_end);
    read_if(cont, "tolerance", c.continuation.tolerance);
    read_if(cont, "locate", c.locate);
    read_path(cont, c.continuation.path);
    const bool needs_branch = c.kind != "oracle-sweep" || doc.contains("continuation");
    if (needs_branch && (!cont.contains("omega_start") || !cont.contains("omega_end")))
      throw InvalidInput("config: continuation.omega_start and omega_end are required");

    if (c.kind == "track-fold" || c.kind == "track-ns" ||
        (c.kind == "convergence" && doc.value("convergence", json::object()).value("base", "frf") != "frf")) {
      const json tr = doc.at("tracking");
      c.tracking.parameter = tr.at("parameter").get<std::string>();
      c.tracking.parameter_min = tr.at("min").get<double>();
      c.tracking.parameter_max = tr.at("max").get<double>();
      if (!(c.tracking.parameter_min < c.tracking.parameter_max))
        throw InvalidInput("config: tracking range is degenerate");
      read_if(tr, "omega_min", c.tracking.omega_min);
      read_if(tr, "omega_max", c.tracking.omega_max);
      read_if(tr, "seed_index", c.seed_index);
      read_if(tr, "tolerance", c.tracking.tolerance);
      read_path(tr, c.tracking.path);
    }
    if (c.kind == "oracle-sweep") {
      const json o = doc.at("oracle");
      c.sweep.omega_start = o.at("omega_start").get<double>();
      c.sweep.omega_end = o.at("omega_end").get<double>();
      read_if(o, "sweep_rate", c.sweep.sweep_rate);
      read_if(o, "samples_per_period", c.sweep.samples_per_period);
      read_if(o, "forcing", c.sweep.forcing);
      read_if(o, "validate_points", c.validate_points);
      read_if(o, "periods", c.newmark_periods);
      read_if(o, "discard", c.newmark_discard);
      read_if(o, "steps_per_period", c.steps_per_period);
      if (c.validate_points > 0 && !doc.contains("continuation"))
        throw InvalidInput("config: oracle validation needs a continuation section");
    }
    if (c.kind == "convergence") {
      const json cv = doc.value("convergence", json::object());
      read_if(cv, "base", c.convergence_base);
      read_if(cv, "harmonics", c.convergence_harmonics);
      if (c.convergence_base != "frf" && c.convergence_base != "track-fold")
        throw InvalidInput("config: convergence.base must be frf or track-fold");
      if (c.convergence_harmonics.size() < 2)
        throw InvalidInput("config: convergence needs at least two harmonic counts");
    }
    return c;
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("config: ") + e.what());
  }
}

JobConfig load_job_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open config '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw InvalidInput("config '" + path + "': " + e.what());
  }
  return parse_job_config(doc, fs::path(path).parent_path().string());
}

SystemModel job_model(const JobConfig& config) {
  SystemModel model = load_model(config.model_path);
  for (const auto& [name, value] : config.overrides) model = model.with_parameter(name, value);
  return model;
}

ResidualWorkspace job_workspace(const JobConfig& config, int harmonics) {
  SystemModel model = job_model(config);
  const int nu = model.forcing().subharmonic;
  HarmonicGrid grid(harmonics, static_cast<int>(model.dofs()), config.samples, nu);
  return ResidualWorkspace(std::move(model), grid, config.backend);
}

FrfOutcome compute_frf(const ResidualWorkspace& ws, const ContinuationSettings& settings,
                       bool locate) {
  FrfOutcome out;
  out.branch = continue_branch(ws, settings);
  AnnotateOptions opts;
  opts.locate = locate;
  out.events = annotate_branch(ws, out.branch, opts);
  return out;
}

TrackOutcome compute_track(const ResidualWorkspace& ws, const JobConfig& config) {
  TrackOutcome out;
  out.frequency = compute_frf(ws, config.continuation, true);
  const CurveKind kind = config.kind == "track-ns" ? CurveKind::neimark_sacker : CurveKind::fold;
  const EventKind wanted = kind == CurveKind::fold ? EventKind::fold : EventKind::neimark_sacker;
  int seen = 0;
  const Event* seed = nullptr;
  for (const auto& e : out.frequency.events) {
    if (e.kind != wanted || !e.located) continue;
    if (seen++ == config.seed_index) {
      seed = &e;
      break;
    }
  }
  if (!seed) throw NumericalError("tracking: no located " + to_string(wanted) + " event to seed from");
  out.curve = track_bifurcation(ws, seed->point, kind, config.tracking);
  return out;
}

JobResult run_frf(const JobConfig& config, const std::string& out_dir) {
  prepare(out_dir);
  const ResidualWorkspace ws = job_workspace(config, config.harmonics);
  const FrfOutcome r = compute_frf(ws, config.continuation, config.locate);
  JobResult res;
  res.status = r.branch.status;
  res.message = r.branch.message;
  const std::string csv = (fs::path(out_dir) / "branch.csv").string();
  write_branch_csv(csv, meta_for(ws, "branch", ""), r.branch.points, ws.grid(),
                   forcing_scale(ws.model()));
  json doc = run_header(config, res.status, res.message);
  doc["points"] = r.branch.points.size();
  doc["events"] = events_json(ws, r.events);
  const std::string events = (fs::path(out_dir) / "events.json").string();
  write_json(events, doc);
  res.files = {csv, events};
  return res;
}

JobResult run_track(const JobConfig& config, const std::string& out_dir) {
  prepare(out_dir);
  const ResidualWorkspace ws = job_workspace(config, config.harmonics);
  const TrackOutcome r = compute_track(ws, config);
  JobResult res;
  res.status = r.curve.status == RunStatus::partial || r.frequency.branch.status == RunStatus::partial
                   ? RunStatus::partial
                   : RunStatus::complete;
  res.message = r.curve.message.empty() ? r.frequency.branch.message : r.curve.message;
  const std::string branch_csv = (fs::path(out_dir) / "branch.csv").string();
  write_branch_csv(branch_csv, meta_for(ws, "branch", ""), r.frequency.branch.points, ws.grid(),
                   forcing_scale(ws.model()));
  const std::string curve_csv = (fs::path(out_dir) / "curve.csv").string();
  write_branch_csv(curve_csv, meta_for(ws, to_string(r.curve.kind), r.curve.parameter),
                   r.curve.points, ws.grid(), forcing_scale(ws.model()));
  json doc = run_header(config, res.status, res.message);
  doc["branch_events"] = events_json(ws, r.frequency.events);
  doc["curve_kind"] = to_string(r.curve.kind);
  doc["curve_parameter"] = r.curve.parameter;
  doc["curve_points"] = r.curve.points.size();
  doc["curve_events"] = events_json(ws, r.curve.events);
  const std::string events = (fs::path(out_dir) / "events.json").string();
  write_json(events, doc);
  res.files = {branch_csv, curve_csv, events};
  return res;
}

JobResult run_oracle(const JobConfig& config, const std::string& out_dir) {
  prepare(out_dir);
  const SystemModel model = job_model(config);
  JobResult res;
  const SweptSineResult sweep = swept_sine(model, config.sweep);
  std::vector<std::string> cols = {"cycle", "omega"};
  for (Index d = 0; d < model.dofs(); ++d) cols.push_back("amp_" + std::to_string(d));
  std::vector<std::vector<std::string>> rows;
  for (Index i = 0; i < sweep.omega.size(); ++i) {
    std::vector<std::string> row = {std::to_string(i), format_double(sweep.omega[i])};
    for (Index d = 0; d < model.dofs(); ++d) row.push_back(format_double(sweep.amplitude(i, d)));
    rows.push_back(std::move(row));
  }
  const std::string sweep_csv = (fs::path(out_dir) / "sweep.csv").string();
  write_table_csv(sweep_csv, "hbm-sweep schema=1", cols, rows);
  res.files.push_back(sweep_csv);

  json doc = run_header(config, RunStatus::complete, "");
  doc["sweep_cycles"] = sweep.omega.size();
  if (config.validate_points > 0) {
    const ResidualWorkspace ws = job_workspace(config, config.harmonics);
    const FrfOutcome frf = compute_frf(ws, config.continuation, false);
    if (frf.branch.status == RunStatus::partial) {
      res.status = RunStatus::partial;
      res.message = frf.branch.message;
    }
    std::vector<std::size_t> stable;
    for (std::size_t i = 0; i < frf.branch.points.size(); ++i)
      if (frf.branch.points[i].stability == Stability::stable && !frf.branch.points[i].marginal)
        stable.push_back(i);
    const std::size_t count = std::min<std::size_t>(stable.size(), config.validate_points);
    std::vector<std::string> vcols = {"index", "omega", "hb_amp_0", "newmark_amp_0", "amp_rel_diff",
                                      "floquet_mismatch"};
    std::vector<std::vector<std::string>> vrows;
    for (std::size_t k = 0; k < count; ++k) {
      const BranchPoint& p = frf.branch.points[stable[(k * stable.size()) / count]];
      const auto [x0, v0] = evaluate_state(ws.grid(), p.z, p.omega, 0.0);
      const TimeHistory h = newmark_integrate(ws.model(), x0, v0, p.omega, config.newmark_periods,
                                              config.steps_per_period);
      const Index skip = static_cast<Index>(config.newmark_discard) * config.steps_per_period;
      const double nm = h.x.row(0).tail(h.x.cols() - skip).cwiseAbs().maxCoeff();
      const double hb = ws.amplitudes(p.z)[0];
      const MonodromyResult mono = monodromy(ws.model(), ws.grid(), p.z, p.omega);
      const double mismatch =
          exponent_mismatch(p.floquet, mono.exponents, p.omega, ws.grid().subharmonic);
      vrows.push_back({std::to_string(stable[(k * stable.size()) / count]), format_double(p.omega),
                       format_double(hb), format_double(nm), format_double(std::abs(nm - hb) / hb),
                       format_double(mismatch)});
    }
    const std::string vcsv = (fs::path(out_dir) / "validation.csv").string();
    write_table_csv(vcsv, "hbm-validation schema=1", vcols, vrows);
    res.files.push_back(vcsv);
    doc["validated_points"] = count;
  }
  doc["status"] = res.status == RunStatus::complete ? "complete" : "partial";
  doc["message"] = res.message;
  const std::string summary = (fs::path(out_dir) / "events.json").string();
  write_json(summary, doc);
  res.files.push_back(summary);
  return res;
}

std::vector<ConvergenceRow> convergence_study(const JobConfig& config) {
  struct Case {
    int harmonics;
    std::vector<ConvergenceRow> events;
    bool ok = true;
    std::string note;
  };
  std::vector<Case> cases;
  for (int nh : config.convergence_harmonics) {
    Case c{nh, {}, true, {}};
    try {
      const ResidualWorkspace ws = job_workspace(config, nh);
      std::vector<Event> events;
      if (config.convergence_base == "frf") {
        const FrfOutcome frf = compute_frf(ws, config.continuation, true);
        events = frf.events;
        // the response peak of DOF 0 also serves linear models, which have no events
        double best = -1.0;
        for (const auto& p : frf.branch.points) {
          const double a = ws.amplitudes(p.z)[0];
          if (a > best) {
            best = a;
            ConvergenceRow row;
            row.harmonics = nh;
            row.event = "peak";
            row.omega = p.omega;
            row.parameter = a;
            if (c.events.empty()) c.events.push_back(row);
            else c.events.front() = row;
          }
        }
      } else {
        JobConfig tc = config;
        tc.kind = "track-fold";
        const TrackOutcome t = compute_track(ws, tc);
        events = t.curve.events;
      }
      std::map<std::string, int> ordinal;
      for (const auto& e : events) {
        if (!e.located) continue;
        ConvergenceRow row;
        row.harmonics = nh;
        row.event = to_string(e.kind);
        row.ordinal = ordinal[row.event]++;
        row.omega = e.point.omega;
        row.parameter = e.point.parameter;
        c.events.push_back(row);
      }
    } catch (const std::exception& e) {
      c.ok = false;
      c.note = e.what();
    }
    cases.push_back(std::move(c));
  }

  const Case& ref = cases.back();
  std::vector<ConvergenceRow> rows;
  for (const Case& c : cases) {
    if (!c.ok) {
      ConvergenceRow row;
      row.harmonics = c.harmonics;
      row.ok = false;
      row.note = c.note;
      rows.push_back(row);
      continue;
    }
    for (ConvergenceRow row : c.events) {
      const auto match = std::find_if(ref.events.begin(), ref.events.end(), [&](const ConvergenceRow& r) {
        return r.event == row.event && r.ordinal == row.ordinal;
      });
      if (!ref.ok || match == ref.events.end()) {
        row.ok = false;
        row.note = "no matching reference event";
        row.deviation_omega = row.deviation_parameter = std::numeric_limits<double>::quiet_NaN();
      } else {
        row.deviation_omega = percent(row.omega, match->omega);
        row.deviation_parameter = std::isfinite(match->parameter)
                                      ? percent(row.parameter, match->parameter)
                                      : 0.0;
      }
      rows.push_back(row);
    }
    if (c.events.size() != ref.events.size()) {
      ConvergenceRow row;
      row.harmonics = c.harmonics;
      row.ok = false;
      row.note = "event count differs from the reference";
      rows.push_back(row);
    }
  }
  return rows;
}

JobResult run_convergence(const JobConfig& config, const std::string& out_dir) {
  prepare(out_dir);
  const auto rows = convergence_study(config);
  JobResult res;
  std::vector<std::vector<std::string>> cells;
  json arr = json::array();
  for (const auto& r : rows) {
    if (!r.ok) res.status = RunStatus::partial;
    cells.push_back({std::to_string(r.harmonics), r.event.empty() ? "-" : r.event,
                     std::to_string(r.ordinal), format_double(r.omega), format_double(r.parameter),
                     format_double(r.deviation_omega), format_double(r.deviation_parameter),
                     r.ok ? "ok" : "failed"});
    arr.push_back({{"harmonics", r.harmonics}, {"event", r.event}, {"ordinal", r.ordinal},
                   {"ok", r.ok}, {"note", r.note}});
  }
  const std::string csv = (fs::path(out_dir) / "convergence.csv").string();
  write_table_csv(csv, "hbm-convergence schema=1",
                  {"harmonics", "event", "ordinal", "omega", "p2", "deviation_omega_pct",
                   "deviation_p2_pct", "status"},
                  cells);
  json doc = run_header(config, res.status, res.status == RunStatus::partial ? "some cases failed" : "");
  doc["rows"] = arr;
  const std::string js = (fs::path(out_dir) / "convergence.json").string();
  write_json(js, doc);
  res.files = {csv, js};
  return res;
}

}  // namespace hbm
