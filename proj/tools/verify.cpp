// verify <campaign> [--config file.json] [--set key=value ...] [--out dir]
//        [--seed N] [--jobs N]
//
// Exit status: 0 all checks pass, 1 a tolerance is violated, 2 usage error,
// 3 module or internal error.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "harnack/campaigns.hpp"

namespace {

int default_jobs() {
  if (const char* env = std::getenv("HARNACK_FORGE_JOBS")) {
    try {
      const int j = std::stoi(env);
      if (j > 0) return j;
    } catch (const std::exception&) {
    }
    std::cerr << "warning: ignoring HARNACK_FORGE_JOBS=" << env << "\n";
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace

int main(int argc, char** argv) {
  using namespace harnack;

  if (argc > 1 && argv[1][0] != '-') {
    try {
      find_campaign(argv[1]);
    } catch (const UsageError& e) {
      std::cerr << "usage error: " << e.what() << "\n";
      return 2;
    }
  }

  CLI::App app{"Numerical verification campaigns for kinetic Harnack bounds.", "verify"};
  app.require_subcommand(1, 1);
  std::string config_path, out_dir;
  std::vector<std::string> sets;
  std::optional<long long> seed;
  int jobs = default_jobs();
  for (const auto& def : campaigns()) {
    auto* sub = app.add_subcommand(def.name, def.summary);
    sub->add_option("--config", config_path, "JSON file with flat dotted keys");
    sub->add_option("--set", sets, "override one parameter: key=value (repeatable)");
    sub->add_option("--out", out_dir, "output directory (default results/<campaign>)");
    sub->add_option("--seed", seed, "generator seed (overrides the 'seed' parameter)");
    sub->add_option("--jobs", jobs, "parallel cells (default $HARNACK_FORGE_JOBS or cores)")
        ->check(CLI::PositiveNumber);
    sub->footer(schema_text(def));
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }
  const std::string name = app.get_subcommands().front()->get_name();

  CampaignConfig cfg;
  try {
    cfg = default_config(name);
    if (!config_path.empty()) load_config_file(cfg, config_path);
    for (const auto& s : sets) apply_set(cfg, s);
    if (seed) {
      if (*seed < 0) throw UsageError("--seed must be non-negative");
      cfg.params["seed"] = *seed;
    }
    cfg.output_dir = out_dir.empty() ? "results/" + name : out_dir;
    cfg.jobs = jobs;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  }

  HarnackReport rep;
  try {
    rep = run_campaign(cfg);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }

  std::cout.precision(6);
  for (const auto& r : rep.records) {
    std::cout << (r.pass() ? "PASS " : "FAIL ") << r.check << "  value=" << r.value
              << (r.bound == Bound::AtLeast ? "  >= " : "  <= ") << r.threshold << "\n";
  }
  for (const auto& w : rep.warnings) std::cout << "warning: " << w << "\n";
  std::cout << name << ": " << (rep.pass() ? "pass" : "FAIL") << " (" << rep.records.size()
            << " checks, " << rep.wall_clock_s << " s) -> " << cfg.output_dir << "/report.json\n";
  return rep.pass() ? 0 : 1;
}
