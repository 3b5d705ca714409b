#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "hbm/jobs.hpp"
#include "hbm/records.hpp"
#include "support.hpp"

using namespace hbm;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("hbm_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int hbm_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(HBM_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

int run_config(const std::string& sub, const fs::path& config, const fs::path& out) {
  fs::create_directories(out);
  return hbm_cli(sub + " --config " + config.string() + " --out " + out.string(), out / "log.txt");
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

fs::path config(const std::string& name) { return desk::source_path("configs/" + name + ".json"); }

/// Writes a config next to the models so relative model paths resolve.
fs::path write_config(const fs::path& dir, const std::string& name, json doc) {
  doc["model"] = desk::source_path("models/" + doc["model"].get<std::string>() + ".json");
  const fs::path p = dir / (name + ".json");
  std::ofstream(p) << doc.dump(2);
  return p;
}

int count_kind(const json& events, const std::string& kind) {
  int n = 0;
  for (const auto& e : events)
    if (e["kind"] == kind) ++n;
  return n;
}

}  // namespace

TEST_CASE("frf on the linear model reproduces the analytic FRF") {
  const fs::path out = scratch("linear");
  REQUIRE(run_config("frf", config("linear3_frf"), out) == 0);
  const CsvTable t = read_csv((out / "branch.csv").string());
  CHECK(t.schema == csv_schema_version);
  CHECK(t.meta.kind == "branch");
  CHECK(t.meta.dofs == 3);
  const auto model = desk::load("linear3");
  REQUIRE(t.rows.size() > 50);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const CVec x = linear_frf(model, t.number(r, "omega"));
    for (int d = 0; d < 3; ++d) {
      const double amp = t.number(r, "amp_" + std::to_string(d));
      CHECK(std::abs(amp - std::abs(x(d))) <= 1e-8 * std::abs(x(d)));
    }
    CHECK(t.rows[r][static_cast<std::size_t>(t.column("stability"))] == "stable");
  }
  const json ev = read_json(out / "events.json");
  CHECK(ev["status"] == "complete");
  CHECK(ev["csv_schema"] == csv_schema_version);
  CHECK(ev["events"].empty());

  SUBCASE("CSV header matches the golden file") {
    std::ifstream in(out / "branch.csv");
    std::string l1, l2;
    std::getline(in, l1);
    std::getline(in, l2);
    CHECK(l1 + "\n" + l2 + "\n" == slurp(desk::source_path("tests/golden/linear3_branch_header.csv")));
  }

  SUBCASE("re-running is bit-identical") {
    const fs::path again = scratch("linear_again");
    REQUIRE(run_config("frf", config("linear3_frf"), again) == 0);
    CHECK(slurp(out / "branch.csv") == slurp(again / "branch.csv"));
    CHECK(slurp(out / "events.json") == slurp(again / "events.json"));
  }

  SUBCASE("floats carry 17 significant digits") {
    const std::string cell = t.rows[0][static_cast<std::size_t>(t.column("omega"))];
    CHECK(cell == "0.10000000000000001");
    CHECK(format_double(1.0 / 3.0) == "0.33333333333333331");
    CHECK(format_double(std::numeric_limits<double>::quiet_NaN()) == "nan");
  }
}

TEST_CASE("frf on Duffing logs exactly two folds") {
  const fs::path out = scratch("duffing");
  REQUIRE(run_config("frf", config("duffing_frf"), out) == 0);
  const json ev = read_json(out / "events.json");
  CHECK(count_kind(ev["events"], "fold") == 2);
  CHECK(count_kind(ev["events"], "neimark_sacker") == 0);
  const auto folds = desk::hb1_folds(0.05, 0.1, 0.2, 0.5, 2.5);
  for (const auto& e : ev["events"]) {
    CHECK(e["located"] == true);
    const double w = e["omega"].get<double>();
    CHECK(std::min(std::abs(w - folds[0]), std::abs(w - folds[1])) <= 5e-3);
  }
}

TEST_CASE("fold tracking run and curve round trip") {
  const fs::path out = scratch("track");
  REQUIRE(run_config("track", config("duffing_track_fold"), out) == 0);
  const json ev = read_json(out / "events.json");
  CHECK(ev["curve_kind"] == "fold");
  CHECK(ev["curve_parameter"] == "F");
  REQUIRE(count_kind(ev["curve_events"], "parameter_min") == 1);
  const auto cusp = desk::hb1_cusp(0.05, 0.1);
  for (const auto& e : ev["curve_events"])
    if (e["kind"] == "parameter_min")
      CHECK(std::abs(e["parameter"].get<double>() - cusp.forcing) <= 1e-2 * cusp.forcing);

  const std::string text = slurp(out / "curve.csv");
  std::istringstream in(text);
  const CsvTable t = read_csv(in);
  CHECK(t.meta.kind == "fold");
  CHECK(t.meta.parameter == "F");
  const auto points = points_from_table(t);
  REQUIRE(points.size() == t.rows.size());
  std::ostringstream again;
  write_branch_csv(again, t.meta, points, HarmonicGrid(t.meta.harmonics, t.meta.dofs, 64, t.meta.subharmonic),
                   0.2);
  CHECK(again.str() == text);
}

TEST_CASE("NS tracking over the absorber damping logs the elimination point") {
  const fs::path out = scratch("track_ns");
  REQUIRE(run_config("track", config("nes_track_ns"), out) == 0);
  const json ev = read_json(out / "events.json");
  CHECK(ev["curve_kind"] == "neimark_sacker");
  CHECK(count_kind(ev["curve_events"], "parameter_max") >= 1);
}

TEST_CASE("oracle run validates HB against time integration") {
  const fs::path out = scratch("oracle");
  REQUIRE(run_config("oracle", config("duffing_sweep"), out) == 0);
  const auto sweep = read_csv((out / "sweep.csv").string());
  CHECK(sweep.meta.kind == "sweep");
  CHECK(sweep.rows.size() > 100);
  const auto v = read_csv((out / "validation.csv").string());
  REQUIRE(v.rows.size() == 5);
  for (std::size_t r = 0; r < v.rows.size(); ++r) {
    CHECK(v.number(r, "amp_rel_diff") <= 1e-2);
    CHECK(v.number(r, "floquet_mismatch") <= 1e-3);
  }
}

TEST_CASE("convergence runs") {
  SUBCASE("Duffing fold events converge") {
    const fs::path out = scratch("converge");
    REQUIRE(run_config("converge", config("duffing_converge"), out) == 0);
    const auto t = read_csv((out / "convergence.csv").string());
    int checked = 0;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const auto& row = t.rows[r];
      if (row[1] != "fold") continue;
      CHECK(row[7] == "ok");
      if (t.number(r, "harmonics") == 5) {
        CHECK(t.number(r, "deviation_omega_pct") < 1.0);
        ++checked;
      }
    }
    CHECK(checked == 2);
  }

  SUBCASE("linear model has zero deviation") {
    const fs::path dir = scratch("converge_linear");
    const fs::path cfg = write_config(dir, "conv", {{"kind", "convergence"},
                                                   {"model", "linear3"},
                                                   {"grid", {{"samples", 64}}},
                                                   {"continuation",
                                                    {{"omega_start", 0.1},
                                                     {"omega_end", 2.5},
                                                     {"step", 0.05},
                                                     {"max_step", 0.5}}},
                                                   {"convergence", {{"harmonics", {1, 3, 5}}}}});
    REQUIRE(run_config("converge", cfg, dir / "out") == 0);
    const auto t = read_csv((dir / "out" / "convergence.csv").string());
    REQUIRE(t.rows.size() == 3);
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      CHECK(t.rows[r][1] == "peak");
      CHECK(t.number(r, "deviation_omega_pct") <= 1e-9);
      CHECK(t.number(r, "deviation_p2_pct") <= 1e-9);
    }
  }
}

TEST_CASE("exit codes") {
  const fs::path dir = scratch("exit");
  CHECK(hbm_cli("frf --config " + (dir / "missing.json").string() + " --out " + (dir / "o").string(),
                dir / "log1") == 1);
  CHECK(hbm_cli("", dir / "log2") == 1);
  CHECK(hbm_cli("frf --config " + config("linear3_frf").string(), dir / "log3") == 1);
  CHECK(run_config("track", config("linear3_frf"), dir / "o4") == 1);
  CHECK(slurp(dir / "o4" / "log.txt").find("does not fit subcommand") != std::string::npos);

  const fs::path bad = write_config(dir, "bad", {{"kind", "spectrogram"}, {"model", "duffing"}});
  CHECK(run_config("frf", bad, dir / "o5") == 1);
  const fs::path degenerate = write_config(
      dir, "degenerate",
      {{"kind", "frf"}, {"model", "duffing"}, {"continuation", {{"omega_start", 1.0}, {"omega_end", 1.0}}}});
  CHECK(run_config("frf", degenerate, dir / "o6") == 1);

  const fs::path partial = write_config(dir, "partial",
                                        {{"kind", "frf"},
                                         {"model", "duffing"},
                                         {"grid", {{"harmonics", 3}, {"samples", 64}}},
                                         {"continuation",
                                          {{"omega_start", 0.5},
                                           {"omega_end", 2.5},
                                           {"step", 0.02},
                                           {"max_points", 10}}}});
  REQUIRE(run_config("frf", partial, dir / "o7") == 2);
  const json ev = read_json(dir / "o7" / "events.json");
  CHECK(ev["status"] == "partial");
  CHECK_FALSE(ev["message"].get<std::string>().empty());
  CHECK(read_csv((dir / "o7" / "branch.csv").string()).rows.size() >= 2);
}

TEST_CASE("harmonic indicators") {
  SUBCASE("pure first harmonic") {
    const HarmonicGrid grid(3, 2, 32);
    Vec z = Vec::Zero(grid.size());
    z(coefficient_index(sine_column(1), 0, 2)) = 0.3;
    z(coefficient_index(cosine_column(1), 0, 2)) = -0.4;
    const auto s = harmonic_indicators(z, grid);
    CHECK(s.sigma(0, 1) == doctest::Approx(1.0));
    CHECK(s.sigma.row(0).sum() == doctest::Approx(1.0));
    CHECK(s.defined[0]);
    CHECK_FALSE(s.defined[1]);
    CHECK(s.sigma.row(1).isZero(0.0));
  }

  SUBCASE("indicators are a distribution over harmonics") {
    auto g = desk::rng(71);
    const HarmonicGrid grid(5, 3, 64);
    for (int trial = 0; trial < 10; ++trial) {
      const auto s = harmonic_indicators(desk::random_vector(g, grid.size()), grid);
      for (Index d = 0; d < 3; ++d) {
        CHECK(s.sigma.row(d).minCoeff() >= 0.0);
        CHECK(s.sigma.row(d).maxCoeff() <= 1.0);
        CHECK(s.sigma.row(d).sum() == doctest::Approx(1.0).epsilon(1e-14));
      }
    }
  }

  auto response = [](const SystemModel& model, double w) {
    const ResidualWorkspace ws(model, HarmonicGrid(5, 1, 128));
    ContinuationSettings cs;
    cs.omega_start = 0.5;
    cs.omega_end = w;
    cs.path.step = 0.02;
    const Branch b = continue_branch(ws, cs);
    REQUIRE(b.status == RunStatus::complete);
    return harmonic_indicators(b.points.back().z, ws.grid());
  };

  SUBCASE("odd symmetry of the cubic oscillator kills even harmonics") {
    const auto s = response(desk::duffing(0.05, 0.5, 0.5), 1.1);
    CHECK(s.sigma(0, 0) <= 1e-10);
    CHECK(s.sigma(0, 2) <= 1e-10);
    CHECK(s.sigma(0, 4) <= 1e-10);
    CHECK(s.sigma(0, 3) > 1e-4);
  }

  SUBCASE("a quadratic spring activates even harmonics") {
    SystemModel m = desk::duffing(0.05, 0.5, 0.5);
    json doc = model_to_json(m);
    doc["elements"].push_back({{"kind", "polynomial"}, {"dofs", {0}}, {"coefficients", {0.0, 0.3}}});
    const auto s = response(model_from_json(doc), 1.1);
    CHECK(s.sigma(0, 2) > 1e-3);
  }
}
