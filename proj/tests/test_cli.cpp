#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "gibbsmh/config.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("gibbsmh_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path log_path() { return fs::temp_directory_path() / "gibbsmh_cli_stdout.txt"; }

int run_cli(const std::string& command, const fs::path& config, const fs::path& out, const std::string& extra = "") {
  const std::string cmd = std::string(GIBBSMH_CLI_PATH) + " " + command + " --config " + config.string() + " --out " +
                          out.string() + " --threads 2 " + extra + " > " + log_path().string() +
                          " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path write_config(const fs::path& dir, const json& doc) {
  const auto p = dir / "config.json";
  gibbsmh::write_file_atomic(p, doc.dump(2));
  return p;
}

json gaussian_doc() {
  return {{"seed", 11},
          {"model", {{"family", "gaussian_product"}}},
          {"graph", {{"d", 1}, {"side", 50}}},
          {"run", {{"tau", 2.38}, {"steps", 2000}, {"replicas", 2}, {"pilot_steps", 500}}}};
}

json gff_doc() {
  return {{"seed", 12},
          {"model", {{"family", "gff"}, {"parameters", {{"beta", 1.0}, {"mass2", 1.0}}}}},
          {"graph", {{"d", 2}, {"side", 6}}},
          {"run", {{"tau", 2.38}, {"steps", 2000}, {"replicas", 2}, {"pilot_steps", 500}}}};
}

struct Case {
  std::string command;
  json doc;
  std::vector<std::string> files;
};

std::vector<Case> all_cases() {
  auto tau_doc = gaussian_doc();
  tau_doc["run"]["tau_grid"] = json::array({0.5, 1.5, 2.5});
  auto n_doc = gaussian_doc();
  n_doc["graph"] = {{"d", 1}};
  n_doc["run"]["n_list"] = json::array({4, 16});
  auto m2_doc = n_doc;
  m2_doc["run"]["function"] = "sin_x1";
  auto clt_doc = gaussian_doc();
  clt_doc["run"]["tau"] = 1.0;
  clt_doc["run"]["s_hat"] = 1.0;
  auto oracle_doc = gaussian_doc();
  oracle_doc["oracle"] = {{"checks", {"quad_1d", "determinism"}}};
  return {{"sample", gaussian_doc(), {"trajectory.csv", "estimates.csv", "summary.json"}},
          {"sweep-tau", tau_doc, {"scaling_curve.csv"}},
          {"sweep-n", n_doc, {"n_sweep.csv"}},
          {"estimate-s", gff_doc(), {"estimates.csv", "s2.json"}},
          {"dirichlet-check", m2_doc, {"m2_table.csv"}},
          {"clt-check", clt_doc, {"estimates.csv"}},
          {"oracle-check", oracle_doc, {"oracle_checks.csv"}}};
}

}  // namespace

TEST(Cli, EveryCommandIsByteReproducible) {
  for (const auto& c : all_cases()) {
    const auto dir = scratch(c.command);
    const auto cfg = write_config(dir, c.doc);
    const int first = run_cli(c.command, cfg, dir / "a");
    const int second = run_cli(c.command, cfg, dir / "b");
    // clt-check may legitimately report a statistical failure on a short run.
    if (c.command == "clt-check") {
      EXPECT_TRUE(first == 0 || first == 4) << c.command;
    } else {
      EXPECT_EQ(first, 0) << c.command << ": " << gibbsmh::read_file(log_path());
    }
    EXPECT_EQ(first, second);
    for (const auto& f : c.files) {
      ASSERT_TRUE(fs::exists(dir / "a" / f)) << c.command << " " << f;
      EXPECT_EQ(gibbsmh::read_file(dir / "a" / f), gibbsmh::read_file(dir / "b" / f)) << c.command << " " << f;
    }
    const auto manifest = gibbsmh::RunManifest::from_json(json::parse(gibbsmh::read_file(dir / "a" / "manifest.json")));
    EXPECT_TRUE(manifest.verify());
    EXPECT_EQ(manifest.command, c.command);
    EXPECT_EQ(manifest.seed, c.doc["seed"].get<std::uint64_t>());
    for (const auto& f : c.files) EXPECT_NE(std::find(manifest.outputs.begin(), manifest.outputs.end(), f), manifest.outputs.end());
  }
}

TEST(Cli, SeedOverrideChangesTrajectory) {
  const auto dir = scratch("seed_override");
  const auto cfg = write_config(dir, gaussian_doc());
  ASSERT_EQ(run_cli("sample", cfg, dir / "a"), 0);
  ASSERT_EQ(run_cli("sample", cfg, dir / "b", "--seed-override 99"), 0);
  EXPECT_NE(gibbsmh::read_file(dir / "a" / "trajectory.csv"), gibbsmh::read_file(dir / "b" / "trajectory.csv"));
  const auto manifest = gibbsmh::RunManifest::from_json(json::parse(gibbsmh::read_file(dir / "b" / "manifest.json")));
  EXPECT_EQ(manifest.seed, 99u);
}

TEST(Cli, ConfigErrorsExitTwo) {
  const auto dir = scratch("config_errors");
  auto bad = gaussian_doc();
  bad["run"]["bogus"] = 1;
  EXPECT_EQ(run_cli("sample", write_config(dir, bad), dir / "o"), 2);
  auto no_grid = gaussian_doc();
  EXPECT_EQ(run_cli("sweep-tau", write_config(dir, no_grid), dir / "o"), 2);
  auto bad_fn = gaussian_doc();
  bad_fn["graph"] = {{"d", 1}};
  bad_fn["run"]["n_list"] = json::array({4, 16});
  bad_fn["run"]["function"] = "cos_x1";
  EXPECT_EQ(run_cli("dirichlet-check", write_config(dir, bad_fn), dir / "o"), 2);
  auto empty_battery = gaussian_doc();
  empty_battery["oracle"] = {{"checks", json::array()}};
  EXPECT_EQ(run_cli("oracle-check", write_config(dir, empty_battery), dir / "o"), 2);
  EXPECT_EQ(run_cli("sample", dir / "missing.json", dir / "o"), 2);
  EXPECT_EQ(run_cli("no-such-command", dir / "missing.json", dir / "o"), 2);
}

TEST(Cli, RuntimeErrorsExitThree) {
  const auto dir = scratch("runtime_errors");
  const auto cfg = write_config(dir, gaussian_doc());
  gibbsmh::write_file_atomic(dir / "blocker", "not a directory");
  EXPECT_EQ(run_cli("sample", cfg, dir / "blocker" / "out"), 3);
}

TEST(Cli, SeedCorruptionNegativeControlFails) {
  const auto dir = scratch("corruption");
  auto doc = gaussian_doc();
  doc["oracle"] = {{"checks", {"determinism"}}, {"inject_seed_corruption", true}};
  EXPECT_EQ(run_cli("oracle-check", write_config(dir, doc), dir / "o"), 4);
  const auto table = gibbsmh::CsvTable::parse(gibbsmh::read_file(dir / "o" / "oracle_checks.csv"));
  ASSERT_EQ(table.rows.size(), 1u);
  EXPECT_EQ(table.rows[0][4], "0");
}
