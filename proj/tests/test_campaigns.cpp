#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>

#include "harnack/campaigns.hpp"

using namespace harnack;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("harnack_campaigns_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

int run_verify(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(VERIFY_EXE) + " " + args + " > " + log.string() + " 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

json load_report(const fs::path& dir) {
  std::ifstream in(dir / "report.json");
  json j = json::parse(in);
  j.erase("timestamp");
  j.erase("wall_clock_s");
  return j;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST(Config, DefaultsCoverEverySchemaKey) {
  for (const auto& def : campaigns()) {
    const auto c = default_config(def.name);
    EXPECT_EQ(c.params.size(), def.params.size());
    EXPECT_TRUE(c.params.contains("seed"));
    EXPECT_NE(schema_text(def).find("seed"), std::string::npos);
  }
  EXPECT_THROW(default_config("nope"), UsageError);
}

TEST(Config, UnknownKeyAndTypeMismatch) {
  auto c = default_config("pde-harnack");
  EXPECT_THROW(apply_set(c, "grid.nz=3"), UsageError);
  EXPECT_THROW(apply_set(c, "grid.nx=abc"), UsageError);
  EXPECT_THROW(apply_set(c, "grid.nx=2.5"), UsageError);
  EXPECT_THROW(apply_set(c, "potential=quartic"), UsageError);
  EXPECT_THROW(apply_set(c, "region=1,2"), UsageError);
  EXPECT_THROW(apply_set(c, "t0=-1"), UsageError);
  EXPECT_THROW(apply_set(c, "noequals"), UsageError);
  EXPECT_THROW(merge_json(c, json{{"export", {{"fields", 1}}}}), UsageError);
  EXPECT_THROW(merge_json(c, json{{"campaign", "riccati"}}), UsageError);
}

TEST(Config, CoercionAndFlattening) {
  auto c = default_config("pde-harnack");
  apply_set(c, "snapshots=0.5");
  EXPECT_EQ(c.list("snapshots"), std::vector<double>{0.5});
  apply_set(c, "snapshots=0.3,0.4");
  EXPECT_EQ(c.list("snapshots"), (std::vector<double>{0.3, 0.4}));
  apply_set(c, "grid.nx=64.0");
  EXPECT_EQ(c.integer("grid.nx"), 64);
  merge_json(c, json::parse(R"({"campaign": "pde-harnack", "grid": {"nv": 32},
                                "export.fields": true, "init": "kernel"})"));
  EXPECT_EQ(c.integer("grid.nv"), 32);
  EXPECT_TRUE(c.flag("export.fields"));
  EXPECT_EQ(c.str("init"), "kernel");
}

TEST(Config, FileLoading) {
  const auto d = scratch("cfg");
  std::ofstream(d / "bad.json") << "{ not json";
  std::ofstream(d / "good.json") << R"({"samples": 20})";
  auto c = default_config("harnack-integrated");
  EXPECT_THROW(load_config_file(c, (d / "bad.json").string()), UsageError);
  EXPECT_THROW(load_config_file(c, (d / "missing.json").string()), UsageError);
  load_config_file(c, (d / "good.json").string());
  EXPECT_EQ(c.integer("samples"), 20);
}

TEST(ParallelMap, OrderAndErrors) {
  for (int jobs : {1, 3, 16}) {
    const auto v = parallel_map(100, jobs, [](std::size_t i) { return static_cast<int>(i * i); });
    for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(v[i], static_cast<int>(i * i));
  }
  try {
    parallel_map(20, 4, [](std::size_t i) -> int {
      if (i == 7 || i == 13) throw std::runtime_error(std::to_string(i));
      return 0;
    });
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_STREQ(e.what(), "7");
  }
}

TEST(RunCampaign, EveryCampaignPassesAtSmallSize) {
  const std::map<std::string, std::vector<std::string>> small = {
      {"riccati", {"t_points=5", "comparison.pairs=2"}},
      {"closed-form", {"t_points=5"}},
      {"kernel-sharpness", {}},
      {"pde-harnack", {"grid.nx=128", "grid.nv=128"}},
      {"control-cost", {"pairs=4", "tau=1"}},
      {"harnack-integrated", {"samples=50"}},
      {"errata", {"t_points=3"}},
  };
  for (const auto& def : campaigns()) {
    auto c = default_config(def.name);
    for (const auto& s : small.at(def.name)) apply_set(c, s);
    c.jobs = 2;
    const auto rep = run_campaign(c);
    EXPECT_TRUE(rep.pass()) << def.name << "\n" << to_json(rep).dump(1);
    EXPECT_FALSE(rep.records.empty()) << def.name;
    EXPECT_EQ(rep.campaign, def.name);
  }
}

TEST(RunCampaign, PdeNegativeControlFails) {
  auto c = default_config("pde-harnack");
  apply_set(c, "grid.nx=64");
  apply_set(c, "grid.nv=64");
  apply_set(c, "bound_shift=5");
  EXPECT_FALSE(run_campaign(c).pass());
}

TEST(RunCampaign, ArtifactsWritten) {
  const auto d = scratch("artifacts");
  auto c = default_config("pde-harnack");
  apply_set(c, "grid.nx=32");
  apply_set(c, "grid.nv=32");
  apply_set(c, "snapshots=0.3");
  apply_set(c, "t_end=0.3");
  apply_set(c, "export.fields=true");
  c.output_dir = d.string();
  const auto rep = run_campaign(c);
  for (const auto& a : rep.artifacts) EXPECT_TRUE(fs::exists(d / a)) << a;
  EXPECT_TRUE(fs::exists(d / "field_0.bin.json"));
  const auto f = read_field_binary((d / "field_0.bin").string());
  EXPECT_EQ(f.grid.nx, 32);
  EXPECT_EQ(load_report(d).at("config").at("grid.nx"), 32);
}

TEST(Cli, ExitCodes) {
  const auto d = scratch("cli");
  const auto log = d / "log.txt";
  EXPECT_EQ(run_verify("kernel-sharpness --out " + (d / "ok").string(), log), 0) << slurp(log);
  EXPECT_TRUE(fs::exists(d / "ok" / "report.json"));
  EXPECT_EQ(run_verify("pde-harnack --set grid.nx=64 --set grid.nv=64 --set bound_shift=5 --out " +
                           (d / "fail").string(),
                       log),
            1)
      << slurp(log);
  EXPECT_NE(slurp(log).find("FAIL matrix_harnack"), std::string::npos);
  EXPECT_EQ(run_verify("bogus", log), 2);
  EXPECT_NE(slurp(log).find("kernel-sharpness"), std::string::npos);
  EXPECT_EQ(run_verify("riccati --set nonsense=1", log), 2);
  EXPECT_EQ(run_verify("riccati --set n=two", log), 2);
  EXPECT_EQ(run_verify("riccati --config " + (d / "missing.json").string(), log), 2);
  EXPECT_EQ(run_verify("riccati --jobs 0", log), 2);
  EXPECT_EQ(run_verify("", log), 2);
  EXPECT_EQ(run_verify("pde-harnack --set grid.nx=2 --out " + (d / "err").string(), log), 3)
      << slurp(log);
  EXPECT_EQ(run_verify("pde-harnack --set grid.nx=32 --set grid.nv=32 "
                       "--set region=3.9,3.95,3.9,3.95 --out " + (d / "err").string(),
                       log),
            3)
      << slurp(log);
  EXPECT_EQ(run_verify("riccati --help", log), 0);
  EXPECT_NE(slurp(log).find("comparison.pairs"), std::string::npos);
}

TEST(Cli, DeterministicAcrossJobs) {
  const auto d = scratch("det");
  const auto log = d / "log.txt";
  const std::string base = "control-cost --set pairs=6 --set tau=0.5,1 --seed 9 ";
  ASSERT_EQ(run_verify(base + "--jobs 1 --out " + (d / "a").string(), log), 0) << slurp(log);
  ASSERT_EQ(run_verify(base + "--jobs 4 --out " + (d / "b").string(), log), 0) << slurp(log);
  const auto a = load_report(d / "a"), b = load_report(d / "b");
  EXPECT_EQ(a.dump(), b.dump());
  EXPECT_EQ(a.at("config").at("seed"), 9);
  EXPECT_EQ(slurp(d / "a" / "costs.csv"), slurp(d / "b" / "costs.csv"));
}

TEST(Cli, EnvironmentJobsDefault) {
  const auto d = scratch("env");
  const auto log = d / "log.txt";
  const std::string cmd = "HARNACK_FORGE_JOBS=3 " + std::string(VERIFY_EXE) +
                          " harnack-integrated --set samples=20 --out " + (d / "r").string() +
                          " > " + log.string() + " 2>&1";
  const int rc = std::system(cmd.c_str());
  ASSERT_TRUE(WIFEXITED(rc));
  EXPECT_EQ(WEXITSTATUS(rc), 0) << slurp(log);
}
