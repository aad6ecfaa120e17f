#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gibbsmh/estimators.hpp"
#include "gibbsmh/gibbs_model.hpp"
#include "gibbsmh/io.hpp"
#include "gibbsmh/limit_theory.hpp"
#include "gibbsmh/oracle.hpp"
#include "gibbsmh/parallel.hpp"
#include "gibbsmh/rwm_sampler.hpp"

namespace gibbsmh {

//! Monte Carlo value of E[1 ∧ exp(-tau s Z - tau^2 s^2 / 2)], Z ~ N(0, 1).
inline EstimateWithError c_mc_oracle(double tau, double s, std::uint64_t m, std::uint64_t seed) {
  if (m < 1) throw std::invalid_argument("c_mc_oracle: m must be >= 1");
  const CounterRng rng(seed, 0);
  const double ts = tau * s;
  double sum = 0.0, sum_sq = 0.0;
  for (std::uint64_t i = 0; i < m; ++i) {
    const double z = rng.normal(StreamPurpose::oracle, i);
    const double a = accept_prob_from_delta(ts * z + 0.5 * ts * ts);
    sum += a;
    sum_sq += a * a;
  }
  const double md = static_cast<double>(m);
  const double mean = sum / md;
  const double var = m > 1 ? std::max(0.0, (sum_sq - md * mean * mean) / (md - 1.0)) : 0.0;
  return {mean, std::sqrt(var / md), m};
}

//! Knobs shared by the sweep drivers.
struct SweepOptions {
  std::size_t replicas = 8;
  std::size_t threads = 0;  // 0: all hardware threads
  IncrementFamily increments = IncrementFamily::standard_normal;
  std::optional<std::uint64_t> burn_in_steps;  // used when exact sampling is unavailable
  std::optional<double> s_hat;                 // skip the pilot estimate when given
  std::uint64_t pilot_steps = 20000;
  std::size_t thinning = 10;
  BoundaryCondition boundary = {};
};

inline constexpr std::uint64_t kPilotChain = ~std::uint64_t{0};

inline std::uint64_t sweep_chain_id(std::size_t point, std::size_t replica) {
  return (static_cast<std::uint64_t>(point) << 32) | static_cast<std::uint64_t>(replica);
}

inline InitMode default_init(const InteractionModel& model, const SweepOptions& opt) {
  if (model.is_gaussian()) return ExactGaussianInit{};
  return BurnInInit{opt.burn_in_steps.value_or(0), std::nullopt};
}

//! s^2 from a pilot chain at tau = 2.38 on `window`, spatially averaged over
//! interior sites and over states thinned by `opt.thinning`.
inline EstimateWithError pilot_s2(const InteractionModel& model, WindowPtr window, std::uint64_t seed,
                                  const SweepOptions& opt) {
  Recording rec = Recording::summary();
  rec.snapshot_every = std::max<std::size_t>(1, opt.thinning);
  ProposalSpec p{2.38, opt.increments, window->size()};
  const auto run = run_chain(model, window, p, std::max<std::uint64_t>(1, opt.pilot_steps), seed, rec,
                             default_init(model, opt), kPilotChain);
  return estimate_s2(model, run);
}

// ---------------------------------------------------------------------------
// tau sweep

struct ScalingRow {
  double tau = 0.0;
  EstimateWithError acceptance;
  EstimateWithError esjd;
  double c_theory = 0.0;
  double efficiency_theory = 0.0;
};

struct ScalingCurve {
  std::vector<ScalingRow> rows;
  EstimateWithError s2_hat;

  double s_hat() const { return std::sqrt(s2_hat.value); }

  //! Grid point with the largest empirical n * ESJD.
  double argmax_esjd_tau() const {
    if (rows.empty()) throw std::logic_error("empty scaling curve");
    return std::max_element(rows.begin(), rows.end(),
                            [](const auto& a, const auto& b) { return a.esjd.value < b.esjd.value; })
        ->tau;
  }

  CsvTable to_csv() const {
    CsvTable t;
    t.header = {"tau", "acc", "acc_se", "esjd", "esjd_se", "c_theory", "eff_theory"};
    for (const auto& r : rows)
      t.add_row({format_double(r.tau), format_double(r.acceptance.value), format_double(r.acceptance.std_error),
                 format_double(r.esjd.value), format_double(r.esjd.std_error), format_double(r.c_theory),
                 format_double(r.efficiency_theory)});
    return t;
  }

  static ScalingCurve from_csv(const CsvTable& t) {
    ScalingCurve c;
    const auto ct = t.column("tau"), ca = t.column("acc"), cas = t.column("acc_se"), ce = t.column("esjd"),
               ces = t.column("esjd_se"), cc = t.column("c_theory"), cf = t.column("eff_theory");
    for (const auto& row : t.rows) {
      ScalingRow r;
      r.tau = parse_double(row[ct]);
      r.acceptance = {parse_double(row[ca]), parse_double(row[cas]), 0};
      r.esjd = {parse_double(row[ce]), parse_double(row[ces]), 0};
      r.c_theory = parse_double(row[cc]);
      r.efficiency_theory = parse_double(row[cf]);
      c.rows.push_back(r);
    }
    return c;
  }
};

//! Evenly spaced grid lo, lo + step, ..., up to hi (inclusive within 1e-9).
inline std::vector<double> tau_grid(double lo, double hi, double step) {
  if (!(step > 0) || hi < lo) throw std::invalid_argument("tau_grid: need step > 0 and hi >= lo");
  std::vector<double> g;
  for (std::size_t i = 0;; ++i) {
    const double t = lo + static_cast<double>(i) * step;
    if (t > hi + 1e-9) break;
    g.push_back(t);
  }
  return g;
}

inline ScalingCurve sweep_tau(const InteractionModel& model, WindowPtr window, std::span<const double> grid,
                              std::uint64_t steps, std::uint64_t seed, const SweepOptions& opt = {}) {
  if (grid.empty()) throw std::invalid_argument("sweep_tau: empty tau grid");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] < 0) throw std::invalid_argument("sweep_tau: tau must be >= 0");
    if (i && !(grid[i] > grid[i - 1])) throw std::invalid_argument("sweep_tau: tau grid must be increasing");
  }
  const std::size_t R = std::max<std::size_t>(1, opt.replicas);
  ScalingCurve curve;
  curve.s2_hat = opt.s_hat ? EstimateWithError{*opt.s_hat * *opt.s_hat, 0.0, 0} : pilot_s2(model, window, seed, opt);
  const double s = curve.s_hat();

  std::vector<ChainRun> runs(grid.size() * R);
  const InitMode init = default_init(model, opt);
  parallel_for(runs.size(), opt.threads, [&](std::size_t job) {
    const std::size_t i = job / R, r = job % R;
    ProposalSpec p{grid[i], opt.increments, window->size()};
    runs[job] = run_chain(model, window, p, steps, seed, Recording::summary(), init, sweep_chain_id(i, r));
  });
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const std::span<const ChainRun> reps(runs.data() + i * R, R);
    ScalingRow row;
    row.tau = grid[i];
    row.acceptance = acceptance_rate(reps);
    row.esjd = esjd_first_coord(reps);
    row.c_theory = c_theoretical(grid[i], s);
    row.efficiency_theory = grid[i] * grid[i] * row.c_theory;
    curve.rows.push_back(row);
  }
  return curve;
}

// ---------------------------------------------------------------------------
// n sweep

//! Window with exactly n sites: the interval [0, n-1] for d = 1, the cube of
//! side n^(1/d) otherwise (n must then be a perfect d-th power).
inline WindowPtr window_for_size(const InteractionModel& model, std::size_t n, const BoundaryCondition& bc = {}) {
  if (n < 1) throw std::invalid_argument("window size must be >= 1");
  const std::size_t d = model.dimension();
  auto side = static_cast<std::int64_t>(std::llround(std::pow(static_cast<double>(n), 1.0 / static_cast<double>(d))));
  std::size_t check = 1;
  for (std::size_t a = 0; a < d; ++a) check *= static_cast<std::size_t>(side);
  if (check != n)
    throw std::invalid_argument("window size " + std::to_string(n) + " is not a perfect power for d = " +
                                std::to_string(d));
  return std::make_shared<const Window>(build_cube(model, side, bc));
}

struct NSweepRow {
  std::size_t n = 0;
  EstimateWithError acceptance;
  double c_theory = 0.0;
  double gap = 0.0;  // |acceptance - c_theory|
};

struct NSweepTable {
  std::vector<NSweepRow> rows;
  EstimateWithError s2_hat;
  double tau = 0.0;

  double final_gap() const { return rows.empty() ? 0.0 : rows.back().gap; }

  CsvTable to_csv() const {
    CsvTable t;
    t.header = {"n", "acc", "acc_se", "c_theory", "gap"};
    for (const auto& r : rows)
      t.add_row({std::to_string(r.n), format_double(r.acceptance.value), format_double(r.acceptance.std_error),
                 format_double(r.c_theory), format_double(r.gap)});
    return t;
  }

  static NSweepTable from_csv(const CsvTable& t) {
    NSweepTable out;
    const auto cn = t.column("n"), ca = t.column("acc"), cs = t.column("acc_se"), cc = t.column("c_theory"),
               cg = t.column("gap");
    for (const auto& row : t.rows)
      out.rows.push_back({static_cast<std::size_t>(parse_u64(row[cn])), {parse_double(row[ca]), parse_double(row[cs]), 0},
                          parse_double(row[cc]), parse_double(row[cg])});
    return out;
  }
};

inline void check_increasing(std::span<const std::size_t> ns, const char* what) {
  if (ns.empty()) throw std::invalid_argument(std::string(what) + ": empty n list");
  for (std::size_t i = 1; i < ns.size(); ++i)
    if (!(ns[i] > ns[i - 1])) throw std::invalid_argument(std::string(what) + ": n list must be increasing");
}

inline NSweepTable sweep_n(const InteractionModel& model, std::span<const std::size_t> n_list, double tau,
                           std::uint64_t steps, std::uint64_t seed, const SweepOptions& opt = {}) {
  check_increasing(n_list, "sweep_n");
  if (tau < 0) throw std::invalid_argument("sweep_n: tau must be >= 0");
  const std::size_t R = std::max<std::size_t>(1, opt.replicas);
  std::vector<WindowPtr> windows;
  for (auto n : n_list) windows.push_back(window_for_size(model, n, opt.boundary));

  NSweepTable table;
  table.tau = tau;
  table.s2_hat = opt.s_hat ? EstimateWithError{*opt.s_hat * *opt.s_hat, 0.0, 0}
                           : pilot_s2(model, windows.back(), seed, opt);
  const double s = std::sqrt(table.s2_hat.value);

  std::vector<ChainRun> runs(n_list.size() * R);
  const InitMode init = default_init(model, opt);
  parallel_for(runs.size(), opt.threads, [&](std::size_t job) {
    const std::size_t i = job / R, r = job % R;
    ProposalSpec p{tau, opt.increments, windows[i]->size()};
    runs[job] = run_chain(model, windows[i], p, steps, seed, Recording::summary(), init, sweep_chain_id(i, r));
  });
  for (std::size_t i = 0; i < n_list.size(); ++i) {
    NSweepRow row;
    row.n = n_list[i];
    row.acceptance = acceptance_rate(std::span<const ChainRun>(runs.data() + i * R, R));
    row.c_theory = c_theoretical(tau, s);
    row.gap = std::abs(row.acceptance.value - row.c_theory);
    table.rows.push_back(row);
  }
  return table;
}

// ---------------------------------------------------------------------------
// Convergence of the discrete Dirichlet form to its limit

struct M2Row {
  std::size_t n = 0;
  EstimateWithError empirical;
  EstimateWithError limiting;
  double gap = 0.0;     // |empirical - limiting|
  double gap_se = 0.0;  // sqrt(se_empirical^2 + se_limiting^2)
};

struct M2Table {
  std::vector<M2Row> rows;
  std::string function;
  double tau = 0.0;
  EstimateWithError s2_hat;

  //! Gaps never grow by more than `k` combined standard errors between
  //! consecutive rows.
  bool gaps_nonincreasing(double k = 2.0) const {
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const double tol = k * std::hypot(rows[i].gap_se, rows[i - 1].gap_se);
      if (rows[i].gap > rows[i - 1].gap + tol) return false;
    }
    return true;
  }
  bool final_gap_within(double k = 2.0) const {
    return rows.empty() || rows.back().gap <= k * rows.back().gap_se;
  }

  CsvTable to_csv() const {
    CsvTable t;
    t.header = {"n", "empirical", "empirical_se", "limiting", "limiting_se", "gap", "gap_se"};
    for (const auto& r : rows)
      t.add_row({std::to_string(r.n), format_double(r.empirical.value), format_double(r.empirical.std_error),
                 format_double(r.limiting.value), format_double(r.limiting.std_error), format_double(r.gap),
                 format_double(r.gap_se)});
    return t;
  }

  static M2Table from_csv(const CsvTable& t) {
    M2Table out;
    const auto cn = t.column("n"), ce = t.column("empirical"), ces = t.column("empirical_se"),
               cl = t.column("limiting"), cls = t.column("limiting_se"), cg = t.column("gap"),
               cgs = t.column("gap_se");
    for (const auto& row : t.rows)
      out.rows.push_back({static_cast<std::size_t>(parse_u64(row[cn])), {parse_double(row[ce]), parse_double(row[ces]), 0},
                          {parse_double(row[cl]), parse_double(row[cls]), 0}, parse_double(row[cg]),
                          parse_double(row[cgs])});
    return out;
  }
};

inline M2Table mosco_m2_check(const CylinderFunction& f, const InteractionModel& model,
                              std::span<const std::size_t> n_list, double tau, std::uint64_t steps,
                              std::uint64_t seed, const SweepOptions& opt = {}) {
  check_increasing(n_list, "mosco_m2_check");
  if (f.N > n_list.front()) throw std::invalid_argument("mosco_m2_check: f reads more coordinates than the smallest window");
  if (tau < 0) throw std::invalid_argument("mosco_m2_check: tau must be >= 0");
  const std::size_t R = std::max<std::size_t>(1, opt.replicas);
  std::vector<WindowPtr> windows;
  for (auto n : n_list) windows.push_back(window_for_size(model, n, opt.boundary));

  M2Table table;
  table.function = f.name;
  table.tau = tau;
  const auto* product = std::get_if<GaussianProduct>(&model.family());
  if (opt.s_hat)
    table.s2_hat = {*opt.s_hat * *opt.s_hat, 0.0, 0};
  else if (product)
    table.s2_hat = {1.0 / product->variance, 0.0, 0};
  else
    table.s2_hat = pilot_s2(model, windows.back(), seed, opt);
  const double s = std::sqrt(table.s2_hat.value);

  Recording rec = Recording::summary();
  rec.trace_coords = f.N;
  std::vector<ChainRun> runs(n_list.size() * R);
  const InitMode init = default_init(model, opt);
  parallel_for(runs.size(), opt.threads, [&](std::size_t job) {
    const std::size_t i = job / R, r = job % R;
    ProposalSpec p{tau, opt.increments, windows[i]->size()};
    runs[job] = run_chain(model, windows[i], p, steps, seed, rec, init, sweep_chain_id(i, r));
  });

  EstimateWithError limiting;
  if (product) {
    limiting = limiting_form_gaussian_product(f, tau, product->variance);
  } else {
    std::vector<std::vector<double>> samples;
    const std::size_t thin = std::max<std::size_t>(1, opt.thinning);
    for (std::size_t r = 0; r < R; ++r) {
      const auto& run = runs[(n_list.size() - 1) * R + r];
      for (std::size_t t = 0; t <= run.steps; t += thin) {
        const auto row = run.trace_row(t);
        samples.emplace_back(row.begin(), row.end());
      }
    }
    limiting = limiting_form(f, tau, s, samples);
  }

  for (std::size_t i = 0; i < n_list.size(); ++i) {
    M2Row row;
    row.n = n_list[i];
    row.empirical = dirichlet_form_empirical(f, std::span<const ChainRun>(runs.data() + i * R, R));
    row.limiting = limiting;
    row.gap = std::abs(row.empirical.value - limiting.value);
    row.gap_se = std::hypot(row.empirical.std_error, limiting.std_error);
    table.rows.push_back(row);
  }
  return table;
}

}  // namespace gibbsmh
