#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gibbsmh/gibbs_model.hpp"
#include "gibbsmh/io.hpp"
#include "gibbsmh/limit_theory.hpp"
#include "gibbsmh/oracle.hpp"
#include "gibbsmh/rwm_sampler.hpp"

namespace gibbsmh {

struct EstimateWithError {
  double value = 0.0;
  double std_error = 0.0;
  std::uint64_t n_samples = 0;
};

inline constexpr std::size_t kDefaultBatches = 50;

//! Mean of the batch means and their standard error. With fewer samples than
//! batches every sample is its own batch.
inline EstimateWithError from_batch_means(std::span<const double> means, std::uint64_t n_samples) {
  if (means.empty()) throw std::invalid_argument("no batches");
  double mean = 0.0;
  for (double m : means) mean += m;
  mean /= static_cast<double>(means.size());
  double ss = 0.0;
  for (double m : means) ss += (m - mean) * (m - mean);
  const double b = static_cast<double>(means.size());
  const double se = means.size() > 1 ? std::sqrt(ss / (b - 1.0) / b) : 0.0;
  return {mean, se, n_samples};
}

inline std::vector<double> batch_mean_vector(std::span<const double> xs, std::size_t batches = kDefaultBatches) {
  if (xs.empty()) throw std::invalid_argument("batch means of an empty sample");
  const std::size_t nb = std::min(batches, xs.size());
  std::vector<double> means(nb, 0.0);
  for (std::size_t b = 0; b < nb; ++b) {
    const std::size_t lo = b * xs.size() / nb, hi = (b + 1) * xs.size() / nb;
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += xs[i];
    means[b] = s / static_cast<double>(hi - lo);
  }
  return means;
}

inline EstimateWithError batch_means(std::span<const double> xs, std::size_t batches = kDefaultBatches) {
  const auto means = batch_mean_vector(xs, batches);
  return from_batch_means(means, xs.size());
}

//! Pools replicas as one set of batch means, so the error bar reflects both
//! within- and between-replica spread.
inline EstimateWithError pooled_batch_means(const std::vector<std::vector<double>>& per_replica) {
  std::vector<double> all;
  std::uint64_t count = 0;
  for (const auto& xs : per_replica) {
    const auto means = batch_mean_vector(xs);
    all.insert(all.end(), means.begin(), means.end());
    count += xs.size();
  }
  return from_batch_means(all, count);
}

// ---------------------------------------------------------------------------
// Record-stream estimators

inline EstimateWithError acceptance_rate(std::span<const StepRecord> records) {
  if (records.empty()) throw std::invalid_argument("acceptance_rate: no records");
  std::vector<double> a(records.size());
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = records[i].accepted ? 1.0 : 0.0;
  return batch_means(a);
}

inline EstimateWithError esjd_first_coord(std::span<const StepRecord> records, std::size_t n) {
  if (records.empty()) throw std::invalid_argument("esjd_first_coord: no records");
  std::vector<double> j(records.size());
  for (std::size_t i = 0; i < j.size(); ++i) j[i] = static_cast<double>(n) * records[i].jump_sq_first_coord;
  return batch_means(j);
}

struct DeltaHStats {
  EstimateWithError mean;
  EstimateWithError variance;
};

inline DeltaHStats delta_h_stats(std::span<const StepRecord> records) {
  if (records.empty()) throw std::invalid_argument("delta_h_stats: no records");
  std::vector<double> dh(records.size());
  for (std::size_t i = 0; i < dh.size(); ++i) dh[i] = records[i].delta_h;
  DeltaHStats out;
  out.mean = batch_means(dh);
  const double m = out.mean.value;
  std::vector<double> sq(dh.size());
  for (std::size_t i = 0; i < dh.size(); ++i) sq[i] = (dh[i] - m) * (dh[i] - m);
  out.variance = batch_means(sq);
  if (dh.size() > 1) {
    const double bessel = static_cast<double>(dh.size()) / static_cast<double>(dh.size() - 1);
    out.variance.value *= bessel;
    out.variance.std_error *= bessel;
  }
  return out;
}

//! Per-replica views over streaming summaries, for runs recorded without
//! full step records.
namespace detail {
inline std::vector<double> summary_batches(const ChainSummary& s, const std::vector<double>& sums, double scale = 1.0) {
  std::vector<double> out(sums.size());
  for (std::size_t b = 0; b < sums.size(); ++b) out[b] = scale * sums[b] / static_cast<double>(s.batch_count[b]);
  return out;
}
inline EstimateWithError pool_summaries(std::span<const ChainRun> runs,
                                        const std::vector<double> ChainSummary::*field, bool scale_by_n) {
  if (runs.empty()) throw std::invalid_argument("no chain runs");
  std::vector<double> all;
  std::uint64_t count = 0;
  for (const auto& r : runs) {
    const double scale = scale_by_n ? static_cast<double>(r.proposal.n) : 1.0;
    const auto b = summary_batches(r.summary, r.summary.*field, scale);
    all.insert(all.end(), b.begin(), b.end());
    count += r.summary.steps;
  }
  return from_batch_means(all, count);
}
}  // namespace detail

//! Pooled acceptance over replicas (uses the batch sums every run carries).
inline EstimateWithError acceptance_rate(std::span<const ChainRun> runs) {
  return detail::pool_summaries(runs, &ChainSummary::batch_accept, false);
}

inline EstimateWithError esjd_first_coord(std::span<const ChainRun> runs) {
  return detail::pool_summaries(runs, &ChainSummary::batch_jump_sq, true);
}

inline EstimateWithError delta_h_mean(std::span<const ChainRun> runs) {
  return detail::pool_summaries(runs, &ChainSummary::batch_delta_h, false);
}

// ---------------------------------------------------------------------------
// s^2 = E[(D_0 H)^2] by spatial averaging over interior sites and temporal
// averaging over states.

inline double spatial_grad_sq(Energy& energy, std::span<const double> x) {
  const auto interior = energy.window().interior();
  if (interior.empty()) throw std::invalid_argument("estimate_s2: window has no interior vertices");
  double acc = 0.0;
  for (auto k : interior) {
    const double g = energy.grad(x, k);
    acc += g * g;
  }
  return acc / static_cast<double>(interior.size());
}

inline EstimateWithError estimate_s2(const InteractionModel& model, const Window& window,
                                     std::span<const std::vector<double>> states) {
  if (states.empty()) throw std::invalid_argument("estimate_s2: no states");
  Energy energy(model, window);
  std::vector<double> per_state(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) per_state[i] = spatial_grad_sq(energy, states[i]);
  auto est = batch_means(per_state);
  est.n_samples = states.size() * window.interior().size();
  return est;
}

inline EstimateWithError estimate_s2(const InteractionModel& model, const ChainRun& run) {
  return estimate_s2(model, *run.final_state.window, run.snapshots);
}

//! Replica-pooled s^2 from the snapshots of several runs on one window.
inline EstimateWithError estimate_s2(const InteractionModel& model, std::span<const ChainRun> runs) {
  if (runs.empty()) throw std::invalid_argument("estimate_s2: no runs");
  const Window& window = *runs.front().final_state.window;
  Energy energy(model, window);
  std::vector<std::vector<double>> per_replica;
  std::uint64_t count = 0;
  for (const auto& r : runs) {
    std::vector<double> v(r.snapshots.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = spatial_grad_sq(energy, r.snapshots[i]);
    count += v.size() * window.interior().size();
    per_replica.push_back(std::move(v));
  }
  auto est = pooled_batch_means(per_replica);
  est.n_samples = count;
  return est;
}

//! Kolmogorov-Smirnov distance between the empirical law of `xs` and N(0, 1).
inline double ks_statistic_normal(std::vector<double> xs) {
  if (xs.empty()) throw std::invalid_argument("ks_statistic_normal: no samples");
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = normal_cdf(xs[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

//! Asymptotic 1% critical value of the one-sample KS statistic.
inline double ks_critical_1pct(std::size_t n) { return 1.6276 / std::sqrt(static_cast<double>(n)); }

// ---------------------------------------------------------------------------
// Cylinder test functions of the first N coordinates.

struct CylinderFunction {
  std::string name;
  std::size_t N = 0;
  std::function<double(std::span<const double>)> eval;
  std::function<void(std::span<const double>, std::span<double>)> grad;
  double sup_value = 0.0;
  double sup_grad_norm = 0.0;

  double grad_norm_sq(std::span<const double> x) const {
    std::vector<double> g(N);
    grad(x, g);
    double s = 0.0;
    for (double v : g) s += v * v;
    return s;
  }

  static CylinderFunction sin_x1() {
    return {"sin_x1", 1, [](std::span<const double> x) { return std::sin(x[0]); },
            [](std::span<const double> x, std::span<double> g) { g[0] = std::cos(x[0]); }, 1.0, 1.0};
  }
  static CylinderFunction tanh_x1() {
    return {"tanh_x1", 1, [](std::span<const double> x) { return std::tanh(x[0]); },
            [](std::span<const double> x, std::span<double> g) {
              const double c = std::cosh(x[0]);
              g[0] = 1.0 / (c * c);
            },
            1.0, 1.0};
  }
  //! exp(-(x1^2 + x2^2) / 2).
  static CylinderFunction gauss_bump_x1x2() {
    return {"gauss_bump_x1x2", 2,
            [](std::span<const double> x) { return std::exp(-0.5 * (x[0] * x[0] + x[1] * x[1])); },
            [](std::span<const double> x, std::span<double> g) {
              const double e = std::exp(-0.5 * (x[0] * x[0] + x[1] * x[1]));
              g[0] = -x[0] * e;
              g[1] = -x[1] * e;
            },
            1.0, std::exp(-0.5)};
  }
  static CylinderFunction constant(double c = 1.0) {
    return {"constant", 0, [c](std::span<const double>) { return c; }, [](std::span<const double>, std::span<double>) {},
            std::abs(c), 0.0};
  }

  //! The built-in set selectable by name from experiment configs.
  static CylinderFunction builtin(const std::string& name) {
    if (name == "sin_x1") return sin_x1();
    if (name == "tanh_x1") return tanh_x1();
    if (name == "gauss_bump_x1x2") return gauss_bump_x1x2();
    throw std::invalid_argument("unknown cylinder function '" + name +
                                "' (expected sin_x1, tanh_x1 or gauss_bump_x1x2)");
  }
};

//! Per-step values (n/2)[f(X(t+1)) - f(X(t))]^2 along a run's head trace.
inline std::vector<double> dirichlet_increments(const CylinderFunction& f, const ChainRun& run) {
  const std::size_t n = run.proposal.n;
  if (f.N > n) throw std::invalid_argument("dirichlet_form_empirical: f uses more coordinates than the window has");
  if (f.N > run.trace_coords)
    throw std::invalid_argument("dirichlet_form_empirical: run did not trace the first " + std::to_string(f.N) +
                                " coordinates");
  std::vector<double> out(run.steps);
  double prev = f.eval(run.trace_row(0));
  for (std::size_t t = 0; t < run.steps; ++t) {
    const double next = f.eval(run.trace_row(t + 1));
    const double d = next - prev;
    out[t] = 0.5 * static_cast<double>(n) * d * d;
    prev = next;
  }
  return out;
}

inline EstimateWithError dirichlet_form_empirical(const CylinderFunction& f, const ChainRun& run) {
  return batch_means(dirichlet_increments(f, run));
}

inline EstimateWithError dirichlet_form_empirical(const CylinderFunction& f, std::span<const ChainRun> runs) {
  if (runs.empty()) throw std::invalid_argument("dirichlet_form_empirical: no runs");
  std::vector<std::vector<double>> per;
  for (const auto& r : runs) per.push_back(dirichlet_increments(f, r));
  return pooled_batch_means(per);
}

//! E(f) = (tau^2 c(tau) / 2) * mean |grad f|^2 over stationary samples of the
//! first N coordinates (one row per sample).
inline EstimateWithError limiting_form(const CylinderFunction& f, double tau, double s_hat,
                                       std::span<const std::vector<double>> samples) {
  const double pref = 0.5 * tau * tau * c_theoretical(tau, s_hat);
  if (samples.empty()) {
    if (f.N == 0 || pref == 0.0) return {0.0, 0.0, 0};
    throw std::invalid_argument("limiting_form: no samples");
  }
  std::vector<double> g(samples.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (samples[i].size() < f.N) throw std::invalid_argument("limiting_form: sample narrower than f");
    g[i] = pref * f.grad_norm_sq(samples[i]);
  }
  return batch_means(g);
}

//! E(f) for a product of N(0, variance) marginals, by tensor Gauss-Hermite
//! quadrature over the (at most two) coordinates f reads.
inline EstimateWithError limiting_form_gaussian_product(const CylinderFunction& f, double tau, double variance = 1.0) {
  if (f.N > 2) throw std::invalid_argument("limiting_form_gaussian_product: f.N must be <= 2");
  const double s = 1.0 / std::sqrt(variance);
  const double pref = 0.5 * tau * tau * c_theoretical(tau, s);
  if (f.N == 0) return {0.0, 0.0, 0};
  const auto rule = gauss_hermite_probabilist(120);
  const double sd = std::sqrt(variance);
  double acc = 0.0;
  std::vector<double> x(f.N);
  if (f.N == 1) {
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      x[0] = sd * rule.nodes[i];
      acc += rule.weights[i] * f.grad_norm_sq(x);
    }
  } else {
    for (std::size_t i = 0; i < rule.nodes.size(); ++i)
      for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
        x[0] = sd * rule.nodes[i];
        x[1] = sd * rule.nodes[j];
        acc += rule.weights[i] * rule.weights[j] * f.grad_norm_sq(x);
      }
  }
  return {pref * acc, 0.0, 0};
}

// ---------------------------------------------------------------------------
// CSV rows {estimator, value, std_error, n_samples, config_hash}

struct EstimatorRow {
  std::string estimator;
  EstimateWithError estimate;
  std::string config_hash;
};

inline CsvTable estimator_csv(std::span<const EstimatorRow> rows) {
  CsvTable t;
  t.header = {"estimator", "value", "std_error", "n_samples", "config_hash"};
  for (const auto& r : rows)
    t.add_row({r.estimator, format_double(r.estimate.value), format_double(r.estimate.std_error),
               std::to_string(r.estimate.n_samples), r.config_hash});
  return t;
}

inline std::vector<EstimatorRow> parse_estimator_csv(const CsvTable& t) {
  const auto ce = t.column("estimator"), cv = t.column("value"), cs = t.column("std_error"),
             cn = t.column("n_samples"), ch = t.column("config_hash");
  std::vector<EstimatorRow> out;
  for (const auto& row : t.rows)
    out.push_back({row[ce], {parse_double(row[cv]), parse_double(row[cs]), parse_u64(row[cn])}, row[ch]});
  return out;
}

}  // namespace gibbsmh
