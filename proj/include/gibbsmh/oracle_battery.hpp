#pragma once

// Oracle-versus-main-path checks shared by the CLI and the test suites.

#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "gibbsmh/estimators.hpp"
#include "gibbsmh/io.hpp"
#include "gibbsmh/limit_theory.hpp"
#include "gibbsmh/oracle.hpp"
#include "gibbsmh/rwm_sampler.hpp"
#include "gibbsmh/scaling.hpp"

namespace gibbsmh {

struct CheckResult {
  std::string check;
  double value = 0.0;
  double reference = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

inline CsvTable check_table(std::span<const CheckResult> rows) {
  CsvTable t;
  t.header = {"check", "value", "reference", "tolerance", "pass"};
  for (const auto& r : rows)
    t.add_row({r.check, format_double(r.value), format_double(r.reference), format_double(r.tolerance),
               r.pass ? "1" : "0"});
  return t;
}

namespace battery {

inline std::string tau_label(double tau) { return format_double(tau); }

//! MC acceptance of an n = 1 Gaussian chain against quadrature, within 3 SE.
inline std::vector<CheckResult> quad_acceptance_checks(std::uint64_t seed, std::uint64_t steps = 200000) {
  const auto model = InteractionModel::gaussian_product(1);
  const auto window = std::make_shared<const Window>(build_box(model, 0));
  std::vector<CheckResult> out;
  std::size_t i = 0;
  for (double tau : {0.5, 1.0, 2.0, 4.0}) {
    const double q = quad_acceptance(model, *window, tau, IncrementFamily::standard_normal).value;
    ProposalSpec p{tau, IncrementFamily::standard_normal, 1};
    const auto run = run_chain(model, window, p, steps, seed, Recording::summary(), ExactGaussianInit{}, i++);
    const auto acc = acceptance_rate(std::span<const ChainRun>(&run, 1));
    out.push_back({"quad_acceptance_tau_" + tau_label(tau), acc.value, q, 3 * acc.std_error,
                   std::abs(acc.value - q) <= 3 * acc.std_error});
  }
  return out;
}

//! Discretized detailed balance for n = 1: transition counts between state
//! bins are symmetric, and bin occupancy matches the quadrature mass.
inline std::vector<CheckResult> detailed_balance_checks(std::uint64_t seed, double tau = 2.0,
                                                        std::uint64_t steps = 400000) {
  const auto model = InteractionModel::gaussian_product(1);
  const auto window = std::make_shared<const Window>(build_box(model, 0));
  Recording rec = Recording::summary();
  rec.trace_coords = 1;
  ProposalSpec p{tau, IncrementFamily::standard_normal, 1};
  const auto run = run_chain(model, window, p, steps, seed, rec, ExactGaussianInit{}, 0);

  constexpr int kBins = 12;
  constexpr double lo = -3.0, hi = 3.0;
  auto bin = [&](double x) {
    if (x < lo) return 0;
    if (x >= hi) return kBins + 1;
    return 1 + static_cast<int>((x - lo) / (hi - lo) * kBins);
  };
  constexpr int B = kBins + 2;
  std::vector<double> flux(B * B, 0.0);
  const std::size_t nb = kDefaultBatches;
  std::vector<std::vector<double>> occupancy(B, std::vector<double>(nb, 0.0));
  for (std::uint64_t t = 0; t < steps; ++t) {
    const int a = bin(run.trace_row(t)[0]), b = bin(run.trace_row(t + 1)[0]);
    flux[a * B + b] += 1.0;
    occupancy[a][t * nb / steps] += static_cast<double>(nb) / static_cast<double>(steps);
  }
  double z_max = 0.0;
  for (int a = 0; a < B; ++a)
    for (int b = a + 1; b < B; ++b) {
      const double f = flux[a * B + b], g = flux[b * B + a];
      if (f + g < 50) continue;
      z_max = std::max(z_max, std::abs(f - g) / std::sqrt(f + g));
    }
  double occ_z = 0.0;
  for (int a = 1; a <= kBins; ++a) {
    const double left = lo + (a - 1) * (hi - lo) / kBins, right = left + (hi - lo) / kBins;
    const auto rule = composite_legendre(left, right, 8);
    double mass = 0.0;
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) mass += rule.weights[q] * normal_pdf(rule.nodes[q]);
    const auto est = from_batch_means(occupancy[a], steps);
    occ_z = std::max(occ_z, std::abs(est.value - mass) / est.std_error);
  }
  return {{"detailed_balance_flux_zmax", z_max, 0.0, 4.5, z_max <= 4.5},
          {"detailed_balance_occupancy_zmax", occ_z, 0.0, 4.5, occ_z <= 4.5}};
}

//! Exact sampler covariance on the 1D free field n = 3 (tridiagonal precision),
//! every entry within 3 SE of the inverse precision.
inline std::vector<CheckResult> gaussian_sampling_checks(std::uint64_t seed, std::uint64_t draws = 100000) {
  const auto model = InteractionModel::gff(1, 1.0, 0.0);
  const Window window = build_box(model, 1);
  const PrecisionMatrix pm = build_precision(model, window);
  const Eigen::MatrixXd cov = pm.covariance();
  const CounterRng rng(seed, 0);
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(3, 3);
  for (std::uint64_t i = 0; i < draws; ++i) {
    const auto x = gaussian_exact_sample(pm, rng, i);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) acc(a, b) += x[a] * x[b];
  }
  acc /= static_cast<double>(draws);
  double z_max = 0.0;
  for (int a = 0; a < 3; ++a)
    for (int b = a; b < 3; ++b) {
      const double se = std::sqrt((cov(a, a) * cov(b, b) + cov(a, b) * cov(a, b)) / static_cast<double>(draws));
      z_max = std::max(z_max, std::abs(acc(a, b) - cov(a, b)) / se);
    }
  return {{"gaussian_sampling_cov_zmax", z_max, 0.0, 3.0, z_max <= 3.0}};
}

//! Ergodic s^2 on a 2D free-field window against the exact quadratic form.
inline std::vector<CheckResult> s2_exact_checks(std::uint64_t seed, std::int64_t side = 8, std::uint64_t steps = 20000) {
  const auto model = InteractionModel::gff(2, 1.0, 1.0);
  const auto window = std::make_shared<const Window>(build_cube(model, side));
  const double exact = gaussian_s2_exact(model, *window);
  Recording rec = Recording::summary();
  rec.snapshot_every = 10;
  ProposalSpec p{2.38 / std::sqrt(exact), IncrementFamily::standard_normal, window->size()};
  const auto run = run_chain(model, window, p, steps, seed, rec, ExactGaussianInit{}, 0);
  const auto est = estimate_s2(model, run);
  return {{"s2_exact_gff_" + std::to_string(side), est.value, exact, 3 * est.std_error,
           std::abs(est.value - exact) <= 3 * est.std_error}};
}

inline std::vector<CheckResult> c_mc_checks(std::uint64_t seed, std::uint64_t m = 1000000) {
  std::vector<CheckResult> out;
  for (double ts : {0.5, 1.0, 2.38, 4.0}) {
    const auto mc = c_mc_oracle(ts, 1.0, m, seed);
    const double c = c_theoretical(ts, 1.0);
    out.push_back({"c_mc_tau_s_" + tau_label(ts), mc.value, c, 4 * mc.std_error,
                   std::abs(mc.value - c) <= 4 * mc.std_error});
  }
  return out;
}

inline std::vector<CheckResult> quad_1d_checks() {
  auto cos2 = [](double x) { return std::cos(x) * std::cos(x); };
  const double exact = 0.5 * (1.0 + std::exp(-2.0));
  const double gh = quad_expectation_1d(cos2, Density1D::normal(), true);
  const double gl = quad_expectation_1d(cos2, Density1D::normal(), false);
  return {{"quad_1d_cos2_hermite", gh, exact, 1e-8, std::abs(gh - exact) <= 1e-8},
          {"quad_1d_cos2_legendre", gl, exact, 1e-8, std::abs(gl - exact) <= 1e-8}};
}

//! Two runs that should share a seed produce byte-identical trajectories.
//! `corrupt` perturbs the second seed as a negative control.
inline std::vector<CheckResult> determinism_checks(std::uint64_t seed, bool corrupt) {
  const auto model = InteractionModel::gaussian_product(1);
  const auto window = std::make_shared<const Window>(build_cube(model, 20));
  ProposalSpec p{2.38, IncrementFamily::standard_normal, window->size()};
  const auto a = run_chain(model, window, p, 2000, seed);
  const auto b = run_chain(model, window, p, 2000, corrupt ? seed ^ 0x5EEDull : seed);
  const bool same = trajectory_csv(a).to_string() == trajectory_csv(b).to_string();
  return {{"determinism_trajectory", same ? 1.0 : 0.0, 1.0, 0.0, same}};
}

}  // namespace battery

inline std::vector<CheckResult> run_oracle_battery(std::span<const std::string> checks, std::uint64_t seed,
                                                   bool inject_seed_corruption = false) {
  std::vector<CheckResult> out;
  auto append = [&](std::vector<CheckResult> r) { out.insert(out.end(), r.begin(), r.end()); };
  for (const auto& c : checks) {
    if (c == "quad_acceptance") append(battery::quad_acceptance_checks(seed));
    else if (c == "detailed_balance") append(battery::detailed_balance_checks(seed));
    else if (c == "gaussian_sampling") append(battery::gaussian_sampling_checks(seed));
    else if (c == "s2_exact") append(battery::s2_exact_checks(seed));
    else if (c == "c_mc") append(battery::c_mc_checks(seed));
    else if (c == "quad_1d") append(battery::quad_1d_checks());
    else if (c == "determinism") append(battery::determinism_checks(seed, inject_seed_corruption));
    else throw std::invalid_argument("unknown oracle check '" + c + "'");
  }
  return out;
}

}  // namespace gibbsmh
