// gibbsmh: command-line driver for the sampler, sweeps and checks.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gibbsmh/gibbsmh.hpp"

namespace fs = std::filesystem;
using namespace gibbsmh;

namespace {

enum ExitCode { kOk = 0, kConfigError = 2, kRuntimeError = 3, kCheckFailure = 4 };

struct CommonArgs {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed_override;
  std::size_t threads = 0;
};

//! Shared plumbing for one command: resolved config, output directory and
//! the manifest that lists every file written.
class Session {
 public:
  Session(std::string command, const CommonArgs& args) : args_(args) {
    config_ = load_config(args.config);
    if (args.seed_override) config_.seed = *args.seed_override;
    if (!args.out.empty()) config_.output_dir = args.out;
    manifest_.command = std::move(command);
    manifest_.config = to_json(config_);
    manifest_.config_hash = config_hash(config_);
    manifest_.seed = config_.seed;
    start_ = std::chrono::system_clock::now();
    manifest_.started_at = utc_timestamp(start_);
  }

  const ExperimentConfig& config() const { return config_; }
  std::size_t threads() const { return args_.threads; }
  fs::path dir() const { return config_.output_dir; }

  void write(const std::string& name, const std::string& content) {
    write_file_atomic(dir() / name, content);
    manifest_.outputs.push_back(name);
  }
  void write_csv(const std::string& name, const CsvTable& t) { write(name, t.to_string()); }
  void write_json(const std::string& name, const nlohmann::json& j) { write(name, j.dump(2) + "\n"); }

  void finish() {
    const auto end = std::chrono::system_clock::now();
    manifest_.finished_at = utc_timestamp(end);
    manifest_.wall_time = std::chrono::duration<double>(end - start_).count();
    manifest_.write(dir() / "manifest.json");
  }

  double require_tau(const char* command) const {
    if (!config_.run.tau) throw ConfigError("run.tau", std::string("required for ") + command);
    return *config_.run.tau;
  }
  const std::vector<std::size_t>& require_n_list(const char* command) const {
    if (!config_.run.n_list) throw ConfigError("run.n_list", std::string("required for ") + command);
    return *config_.run.n_list;
  }

 private:
  CommonArgs args_;
  ExperimentConfig config_;
  RunManifest manifest_;
  std::chrono::system_clock::time_point start_;
};

nlohmann::json estimate_json(const EstimateWithError& e) {
  return {{"value", e.value}, {"std_error", e.std_error}, {"n_samples", e.n_samples}};
}

int cmd_sample(const CommonArgs& args) {
  Session s("sample", args);
  const auto& cfg = s.config();
  const auto model = cfg.build_model();
  const auto window = cfg.build_window(model);
  const double tau = s.require_tau("sample");
  ProposalSpec p{tau, cfg.run.increments, window->size()};
  const auto run = run_chain(model, window, p, cfg.run.steps, cfg.seed, Recording::full(), cfg.init_mode(model));

  const auto acc = acceptance_rate(run.records);
  const auto esjd = esjd_first_coord(run.records, window->size());
  const auto dh = delta_h_stats(run.records);
  const std::string hash = config_hash(cfg);
  const std::vector<EstimatorRow> rows = {{"acceptance_rate", acc, hash},
                                          {"esjd_first_coord", esjd, hash},
                                          {"delta_h_mean", dh.mean, hash},
                                          {"delta_h_variance", dh.variance, hash}};
  s.write_csv("trajectory.csv", trajectory_csv(run));
  s.write_csv("estimates.csv", estimator_csv(rows));
  s.write_json("summary.json", {{"n", window->size()},
                                {"tau", tau},
                                {"steps", run.steps},
                                {"approximate_start", run.approximate_start},
                                {"acceptance", estimate_json(acc)},
                                {"esjd", estimate_json(esjd)},
                                {"delta_h_mean", estimate_json(dh.mean)},
                                {"delta_h_variance", estimate_json(dh.variance)}});
  s.finish();
  std::cout << "acceptance " << format_double(acc.value) << " +- " << format_double(acc.std_error) << "\n";
  return kOk;
}

int cmd_sweep_tau(const CommonArgs& args) {
  Session s("sweep-tau", args);
  const auto& cfg = s.config();
  if (!cfg.run.tau_grid) throw ConfigError("run.tau_grid", "required for sweep-tau");
  const auto model = cfg.build_model();
  const auto window = cfg.build_window(model);
  const auto curve = sweep_tau(model, window, *cfg.run.tau_grid, cfg.run.steps, cfg.seed, cfg.sweep_options(s.threads()));
  s.write_csv("scaling_curve.csv", curve.to_csv());
  s.write_json("summary.json", {{"n", window->size()},
                                {"s2_hat", estimate_json(curve.s2_hat)},
                                {"argmax_esjd_tau", curve.argmax_esjd_tau()},
                                {"tau_star_theory", tau_star(curve.s_hat())}});
  s.finish();
  std::cout << "argmax esjd at tau = " << format_double(curve.argmax_esjd_tau()) << "\n";
  return kOk;
}

int cmd_sweep_n(const CommonArgs& args) {
  Session s("sweep-n", args);
  const auto& cfg = s.config();
  const double tau = s.require_tau("sweep-n");
  const auto& ns = s.require_n_list("sweep-n");
  const auto model = cfg.build_model();
  const auto table = sweep_n(model, ns, tau, cfg.run.steps, cfg.seed, cfg.sweep_options(s.threads()));
  s.write_csv("n_sweep.csv", table.to_csv());
  s.write_json("summary.json", {{"tau", tau}, {"s2_hat", estimate_json(table.s2_hat)}, {"final_gap", table.final_gap()}});
  s.finish();
  std::cout << "final gap " << format_double(table.final_gap()) << "\n";
  return kOk;
}

int cmd_estimate_s(const CommonArgs& args) {
  Session s("estimate-s", args);
  const auto& cfg = s.config();
  const auto model = cfg.build_model();
  const auto window = cfg.build_window(model);
  if (window->interior().empty()) throw ConfigError("graph", "window has no interior vertices");
  const double tau = cfg.run.tau.value_or(2.38);
  Recording rec = Recording::summary();
  rec.snapshot_every = cfg.run.thinning;
  std::vector<ChainRun> runs(cfg.run.replicas);
  const InitMode init = cfg.init_mode(model);
  parallel_for(runs.size(), s.threads(), [&](std::size_t r) {
    ProposalSpec p{tau, cfg.run.increments, window->size()};
    runs[r] = run_chain(model, window, p, cfg.run.steps, cfg.seed, rec, init, r);
  });
  const auto est = estimate_s2(model, runs);
  nlohmann::json out = {{"s2_hat", est.value}, {"s2_se", est.std_error}, {"n_samples", est.n_samples}, {"tau", tau}};
  if (model.is_gaussian()) out["s2_exact"] = gaussian_s2_exact(model, *window);
  const std::vector<EstimatorRow> rows = {{"s2", est, config_hash(cfg)}};
  s.write_csv("estimates.csv", estimator_csv(rows));
  s.write_json("s2.json", out);
  s.finish();
  std::cout << "s2_hat " << format_double(est.value) << " +- " << format_double(est.std_error) << "\n";
  return kOk;
}

int cmd_dirichlet_check(const CommonArgs& args) {
  Session s("dirichlet-check", args);
  const auto& cfg = s.config();
  if (!cfg.run.function) throw ConfigError("run.function", "required for dirichlet-check");
  const double tau = s.require_tau("dirichlet-check");
  const auto& ns = s.require_n_list("dirichlet-check");
  const auto model = cfg.build_model();
  const auto f = CylinderFunction::builtin(*cfg.run.function);
  const auto table = mosco_m2_check(f, model, ns, tau, cfg.run.steps, cfg.seed, cfg.sweep_options(s.threads()));
  s.write_csv("m2_table.csv", table.to_csv());
  s.write_json("summary.json", {{"function", f.name},
                                {"tau", tau},
                                {"s2_hat", estimate_json(table.s2_hat)},
                                {"gaps_nonincreasing", table.gaps_nonincreasing()},
                                {"final_gap_within_2se", table.final_gap_within()}});
  s.finish();
  std::cout << "final gap " << format_double(table.rows.back().gap) << " (se " << format_double(table.rows.back().gap_se)
            << ")\n";
  return kOk;
}

int cmd_clt_check(const CommonArgs& args) {
  Session s("clt-check", args);
  const auto& cfg = s.config();
  const double tau = s.require_tau("clt-check");
  const auto model = cfg.build_model();
  const auto window = cfg.build_window(model);
  Recording rec = Recording::full();
  rec.snapshot_every = cfg.run.thinning;
  ProposalSpec p{tau, cfg.run.increments, window->size()};
  const auto run = run_chain(model, window, p, cfg.run.steps, cfg.seed, rec, cfg.init_mode(model));
  const auto dh = delta_h_stats(run.records);
  const double s2 = cfg.run.s_hat ? *cfg.run.s_hat * *cfg.run.s_hat : estimate_s2(model, run).value;
  const double target_mean = 0.5 * tau * tau * s2, target_var = tau * tau * s2;

  double ks = 0.0;
  const double crit = ks_critical_1pct(run.records.size());
  if (dh.variance.value > 0) {
    std::vector<double> z(run.records.size());
    const double sd = std::sqrt(dh.variance.value);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = (run.records[i].delta_h - dh.mean.value) / sd;
    ks = ks_statistic_normal(std::move(z));
  }
  const bool mean_ok = std::abs(dh.mean.value - target_mean) <= 3 * dh.mean.std_error + 1e-12;
  const bool var_ok = std::abs(dh.variance.value - target_var) <= 0.05 * target_var + 1e-12;
  const bool ks_ok = ks < crit;
  const bool pass = mean_ok && var_ok && ks_ok;

  const std::string hash = config_hash(cfg);
  const std::vector<EstimatorRow> rows = {{"delta_h_mean", dh.mean, hash},
                                          {"delta_h_variance", dh.variance, hash},
                                          {"ks_statistic", {ks, 0.0, run.records.size()}, hash}};
  s.write_csv("estimates.csv", estimator_csv(rows));
  s.write_json("clt.json", {{"dh_mean", dh.mean.value},
                            {"dh_mean_se", dh.mean.std_error},
                            {"dh_var", dh.variance.value},
                            {"dh_var_se", dh.variance.std_error},
                            {"ks_stat", ks},
                            {"ks_critical_1pct", crit},
                            {"s2_hat", s2},
                            {"target_mean", target_mean},
                            {"target_var", target_var},
                            {"pass", pass}});
  s.finish();
  std::cout << "clt-check " << (pass ? "PASS" : "FAIL") << "\n";
  return pass ? kOk : kCheckFailure;
}

int cmd_oracle_check(const CommonArgs& args) {
  Session s("oracle-check", args);
  const auto& cfg = s.config();
  if (!cfg.oracle) throw ConfigError("oracle", "required for oracle-check");
  const auto results = run_oracle_battery(cfg.oracle->checks, cfg.seed, cfg.oracle->inject_seed_corruption);
  s.write_csv("oracle_checks.csv", check_table(results));
  s.finish();
  bool all = true;
  for (const auto& r : results) {
    std::cout << (r.pass ? "PASS " : "FAIL ") << r.check << "\n";
    all = all && r.pass;
  }
  return all ? kOk : kCheckFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random-walk Metropolis on lattice Gibbs models: sampling, scaling sweeps and checks"};
  app.require_subcommand(1);
  CommonArgs args;
  std::uint64_t seed_override = 0;

  struct Command {
    const char* name;
    const char* help;
    int (*fn)(const CommonArgs&);
  };
  const std::vector<Command> commands = {
      {"sample", "run one chain; trajectory, estimates and summary", cmd_sample},
      {"sweep-tau", "acceptance and ESJD over a tau grid", cmd_sweep_tau},
      {"sweep-n", "acceptance against window size", cmd_sweep_n},
      {"estimate-s", "ergodic estimate of s^2", cmd_estimate_s},
      {"dirichlet-check", "discrete against limiting Dirichlet form", cmd_dirichlet_check},
      {"clt-check", "law of the proposed energy change", cmd_clt_check},
      {"oracle-check", "oracle-versus-sampler battery", cmd_oracle_check},
  };
  std::vector<CLI::App*> subs;
  for (const auto& c : commands) {
    auto* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", args.config, "experiment document (JSON)")->required();
    sub->add_option("--out", args.out, "output directory (overrides output_dir)");
    sub->add_option("--seed-override", seed_override, "replace the document's seed");
    sub->add_option("--threads", args.threads, "worker threads (0: all cores)");
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  for (std::size_t i = 0; i < subs.size(); ++i) {
    if (!subs[i]->parsed()) continue;
    if (subs[i]->count("--seed-override")) args.seed_override = seed_override;
    try {
      return commands[i].fn(args);
    } catch (const ConfigError& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return kConfigError;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kRuntimeError;
    }
  }
  return kConfigError;
}
