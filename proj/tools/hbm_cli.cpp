// hbm: harmonic balance frequency responses, bifurcation tracking and
// time-domain cross-checks of forced nonlinear structures.
//
//   hbm frf      --config job.json --out results/
//   hbm track    --config job.json --out results/
//   hbm oracle   --config job.json --out results/
//   hbm converge --config job.json --out results/
//
// Exit status: 0 success, 2 partial results, 1 error.

#include <iostream>

#include <CLI11.hpp>

#include "hbm/jobs.hpp"

namespace {

int run(const std::string& command, const std::string& config_path, const std::string& out_dir) {
  const hbm::JobConfig config = hbm::load_job_config(config_path);
  auto require = [&](std::initializer_list<const char*> kinds) {
    for (const char* k : kinds)
      if (config.kind == k) return;
    throw hbm::InvalidInput("config kind '" + config.kind + "' does not fit subcommand '" +
                            command + "'");
  };
  hbm::JobResult result;
  if (command == "frf") {
    require({"frf"});
    result = hbm::run_frf(config, out_dir);
  } else if (command == "track") {
    require({"track-fold", "track-ns"});
    result = hbm::run_track(config, out_dir);
  } else if (command == "oracle") {
    require({"oracle-sweep"});
    result = hbm::run_oracle(config, out_dir);
  } else {
    require({"convergence"});
    result = hbm::run_convergence(config, out_dir);
  }
  for (const auto& f : result.files) std::cout << "wrote " << f << '\n';
  if (result.status == hbm::RunStatus::partial) {
    std::cerr << "partial result: " << result.message << '\n';
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Harmonic balance continuation, stability and bifurcation tracking"};
  app.set_version_flag("--version", hbm::version_string);
  app.require_subcommand(1);
  std::string config, out;
  for (const char* name : {"frf", "track", "oracle", "converge"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config, "job configuration (JSON)")->required();
    sub->add_option("--out", out, "output directory")->required();
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  try {
    return run(command, config, out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
