#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "spm/error.hpp"
#include "spm/scenario.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Pseudo-multiplier laboratory: scenario runner"};
  app.require_subcommand(1, 1);

  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  int jobs = 0;
  auto add_flags = [&](CLI::App* sub) {
    sub->add_option("--config", config, "scenario config (JSON key/value tree)")->required();
    sub->add_option("--seed", seed, "overrides the config seed");
    sub->add_option("--out", out, "output directory");
    sub->add_option("--jobs", jobs, "worker threads (0 = runtime default)");
  };
  for (const std::string& s : spm::study_catalog()) add_flags(app.add_subcommand(s, "run the " + s + " study"));
  add_flags(app.add_subcommand("report", "run every study listed in the config"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }
#ifdef _OPENMP
  if (jobs > 0) omp_set_num_threads(jobs);
#endif

  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    const spm::ScenarioConfig cfg = spm::load_config(config, seed);
    std::vector<std::string> only;
    if (cmd != "report") only.push_back(cmd);
    const spm::ScenarioOutcome outcome = spm::run_scenario(cfg, only);
    spm::write_outputs(outcome, cfg.scenario, out);
    for (const auto& c : outcome.report.criteria) std::cout << (c.pass ? "PASS " : "FAIL ") << c.id << "\n";
    return outcome.exit_code;
  } catch (const spm::Error& e) {
    std::cerr << "spm: " << e.what() << "\n";
    return e.kind() == spm::ErrorKind::Config || e.kind() == spm::ErrorKind::Io ? 2 : 1;
  }
}
