#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "gibbsmh/gibbs_model.hpp"
#include "gibbsmh/io.hpp"
#include "gibbsmh/oracle.hpp"
#include "gibbsmh/random.hpp"

namespace gibbsmh {

//! Proposal y = x + (tau / sqrt(n)) R with R i.i.d. from `increments`.
struct ProposalSpec {
  double tau = 2.38;
  IncrementFamily increments = IncrementFamily::standard_normal;
  std::size_t n = 1;

  double step_sd() const { return tau / std::sqrt(static_cast<double>(n)); }
};

struct StepRecord {
  double delta_h = 0.0;  // of the proposed move, accepted or not
  bool accepted = false;
  double u = 0.0;
  double jump_sq_first_coord = 0.0;  // 0 when rejected

  bool operator==(const StepRecord&) const = default;
};

//! 1 ∧ exp(-ΔH); exp is only ever taken of a non-positive argument.
inline double accept_prob_from_delta(double delta_h) { return delta_h <= 0.0 ? 1.0 : std::exp(-delta_h); }

inline double accept_prob(const InteractionModel& model, const Configuration& x, const Configuration& y) {
  return accept_prob_from_delta(delta_hamiltonian(model, x, y));
}

//! Fills `increments` with the raw unit-variance draws for step t.
inline void draw_increments(const CounterRng& rng, std::uint64_t t, IncrementFamily family,
                            std::span<double> increments) {
  if (family == IncrementFamily::standard_normal)
    rng.fill_normal(StreamPurpose::proposal, t, increments);
  else
    rng.fill_uniform_unit_variance(StreamPurpose::proposal, t, increments);
}

inline Configuration propose(const Configuration& state, const ProposalSpec& spec, const CounterRng& rng,
                             std::uint64_t t = 0) {
  std::vector<double> r(state.size());
  draw_increments(rng, t, spec.increments, r);
  std::vector<double> y = state.values;
  const double sd = spec.step_sd();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += sd * r[i];
  return Configuration(state.window, std::move(y));
}

//! Test hooks for a single transition.
struct StepHooks {
  std::optional<double> forced_u;
};

//! Reusable transition kernel for one chain. Not thread-safe; one per chain.
class RwmKernel {
 public:
  RwmKernel(const InteractionModel& model, const Window& window, ProposalSpec spec, CounterRng rng)
      : energy_(model, window), spec_(spec), rng_(rng), proposal_(window.size()), increments_(window.size()) {
    if (spec_.n != window.size()) spec_.n = window.size();
    if (!(spec_.tau >= 0.0)) throw std::invalid_argument("proposal tau must be >= 0");
  }

  const ProposalSpec& spec() const noexcept { return spec_; }
  const CounterRng& rng() const noexcept { return rng_; }
  Energy& energy() noexcept { return energy_; }

  //! One proposal and one uniform draw; `x` is updated only on acceptance.
  StepRecord advance(std::vector<double>& x, std::uint64_t t, const StepHooks& hooks = {}) {
    draw_increments(rng_, t, spec_.increments, increments_);
    const double sd = spec_.step_sd();
    for (std::size_t i = 0; i < x.size(); ++i) proposal_[i] = x[i] + sd * increments_[i];
    StepRecord rec;
    rec.delta_h = energy_.delta(x, proposal_);
    rec.u = hooks.forced_u ? *hooks.forced_u : rng_.uniform(StreamPurpose::acceptance, t);
    rec.accepted = rec.u < accept_prob_from_delta(rec.delta_h);
    if (rec.accepted) {
      if (!x.empty()) {
        const double d = proposal_[0] - x[0];
        rec.jump_sq_first_coord = d * d;
      }
      x.swap(proposal_);
    }
    return rec;
  }

 private:
  Energy energy_;
  ProposalSpec spec_;
  CounterRng rng_;
  std::vector<double> proposal_;
  std::vector<double> increments_;
};

inline std::pair<Configuration, StepRecord> step(const InteractionModel& model, const Configuration& state,
                                                 const ProposalSpec& spec, const CounterRng& rng,
                                                 std::uint64_t t = 0, const StepHooks& hooks = {}) {
  RwmKernel kernel(model, *state.window, spec, rng);
  std::vector<double> x = state.values;
  const StepRecord rec = kernel.advance(x, t, hooks);
  return {Configuration(state.window, std::move(x)), rec};
}

// ---------------------------------------------------------------------------
// Initial states

struct ExactGaussianInit {};
struct BurnInInit {
  std::uint64_t steps = 0;  // 0: 50 n
  std::optional<double> tau0;  // default 2.38 / s_hat
};
struct GivenInit {
  Configuration state;
};
using InitMode = std::variant<ExactGaussianInit, BurnInInit, GivenInit>;

struct InitialState {
  Configuration state;
  bool approximate = false;
};

//! Rough s from curvature: s^2 = E[D_k H^2] = E[D_kk H], evaluated at `x`.
inline double curvature_scale(Energy& energy, std::span<const double> x) {
  const auto& w = energy.window();
  const auto sites = w.interior().empty() ? std::span<const std::size_t>() : w.interior();
  double acc = 0.0;
  std::size_t count = 0;
  if (sites.empty()) {
    for (std::size_t k = 0; k < w.size(); ++k, ++count) acc += energy.hessian(x, k, k);
  } else {
    for (auto k : sites) acc += energy.hessian(x, k, k), ++count;
  }
  return std::sqrt(std::max(acc / static_cast<double>(count), 1e-12));
}

inline InitialState init_state(const InteractionModel& model, WindowPtr window, const InitMode& mode,
                               const CounterRng& rng) {
  if (auto* given = std::get_if<GivenInit>(&mode)) {
    if (given->state.size() != window->size()) throw std::invalid_argument("given initial state has wrong length");
    return {Configuration(window, given->state.values), false};
  }
  if (std::holds_alternative<ExactGaussianInit>(mode)) {
    if (!model.is_gaussian())
      throw std::invalid_argument("exact_gaussian initialization requires a Gaussian family, not " +
                                  family_name(model.family()));
    check_compatible(model, *window);
    std::vector<double> x(window->size());
    if (auto* gp = std::get_if<GaussianProduct>(&model.family())) {
      rng.fill_normal(StreamPurpose::initial_state, 0, x);
      const double sd = std::sqrt(gp->variance);
      for (auto& v : x) v *= sd;
    } else {
      x = gaussian_exact_sample(build_precision(model, *window), rng, 0);
    }
    return {Configuration(window, std::move(x)), false};
  }
  const auto& burn = std::get<BurnInInit>(mode);
  std::vector<double> x(window->size(), 0.0);
  ProposalSpec spec;
  spec.n = window->size();
  RwmKernel kernel(model, *window, spec, rng.split(0xB0B));
  spec.tau = burn.tau0 ? *burn.tau0 : 2.38 / curvature_scale(kernel.energy(), x);
  RwmKernel tuned(model, *window, spec, rng.split(0xB0B));
  const std::uint64_t steps = burn.steps ? burn.steps : 50 * window->size();
  for (std::uint64_t t = 0; t < steps; ++t) tuned.advance(x, t);
  return {Configuration(window, std::move(x)), true};
}

// ---------------------------------------------------------------------------
// Chain driver

enum class RecordingKind { full, thinned, summary };

struct Recording {
  RecordingKind kind = RecordingKind::full;
  std::size_t every = 1;          // thinned: keep every k-th step record
  std::size_t trace_coords = 0;   // first coordinates of X(t) kept at every step
  std::size_t snapshot_every = 0; // full-state snapshots; 0 disables
  std::size_t batches = 50;

  static Recording full() { return {}; }
  static Recording thinned(std::size_t k) { return {RecordingKind::thinned, k}; }
  static Recording summary() { return {RecordingKind::summary}; }
};

//! Streaming batch sums, filled in every recording mode.
struct ChainSummary {
  std::uint64_t steps = 0;
  std::vector<double> batch_accept, batch_delta_h, batch_delta_h_sq, batch_jump_sq;
  std::vector<std::uint64_t> batch_count;
};

struct ChainRun {
  std::uint64_t seed = 0;
  std::uint64_t chain_id = 0;
  std::uint64_t steps = 0;
  ProposalSpec proposal;
  bool approximate_start = false;
  std::vector<StepRecord> records;
  std::vector<std::uint64_t> record_steps;  // step index of each record (thinned)
  std::size_t trace_coords = 0;
  std::vector<double> head_trace;           // (steps + 1) x trace_coords, row t = X(t)
  std::vector<std::vector<double>> snapshots;
  ChainSummary summary;
  Configuration final_state;
  double wall_time = 0.0;

  std::span<const double> trace_row(std::size_t t) const {
    return {head_trace.data() + t * trace_coords, trace_coords};
  }
};

inline ChainRun run_chain(const InteractionModel& model, WindowPtr window, const ProposalSpec& proposal,
                          std::uint64_t steps, std::uint64_t seed, const Recording& recording = {},
                          const InitMode& init = ExactGaussianInit{}, std::uint64_t chain_id = 0) {
  if (steps < 1) throw std::invalid_argument("run_chain: steps must be >= 1");
  if (recording.trace_coords > window->size()) throw std::invalid_argument("run_chain: trace wider than window");
  const auto start = std::chrono::steady_clock::now();
  const CounterRng rng(seed, chain_id);
  InitialState s0 = init_state(model, window, init, rng);

  ChainRun run;
  run.seed = seed;
  run.chain_id = chain_id;
  run.steps = steps;
  run.proposal = proposal;
  run.proposal.n = window->size();
  run.approximate_start = s0.approximate;
  run.trace_coords = recording.trace_coords;

  const std::size_t nb = std::max<std::size_t>(1, std::min<std::uint64_t>(recording.batches, steps));
  auto& sm = run.summary;
  sm.steps = steps;
  sm.batch_accept.assign(nb, 0.0);
  sm.batch_delta_h.assign(nb, 0.0);
  sm.batch_delta_h_sq.assign(nb, 0.0);
  sm.batch_jump_sq.assign(nb, 0.0);
  sm.batch_count.assign(nb, 0);

  const std::size_t every = std::max<std::size_t>(1, recording.every);
  if (recording.kind == RecordingKind::full) run.records.reserve(steps);
  if (recording.kind == RecordingKind::thinned) run.records.reserve(steps / every + 1);
  if (run.trace_coords) run.head_trace.reserve((steps + 1) * run.trace_coords);

  std::vector<double> x = std::move(s0.state.values);
  auto push_trace = [&] { run.head_trace.insert(run.head_trace.end(), x.begin(), x.begin() + run.trace_coords); };
  if (run.trace_coords) push_trace();
  if (recording.snapshot_every) run.snapshots.push_back(x);

  RwmKernel kernel(model, *window, run.proposal, rng);
  for (std::uint64_t t = 0; t < steps; ++t) {
    const StepRecord rec = kernel.advance(x, t);
    const std::size_t b = static_cast<std::size_t>((t * nb) / steps);
    sm.batch_accept[b] += rec.accepted;
    sm.batch_delta_h[b] += rec.delta_h;
    sm.batch_delta_h_sq[b] += rec.delta_h * rec.delta_h;
    sm.batch_jump_sq[b] += rec.jump_sq_first_coord;
    ++sm.batch_count[b];
    if (recording.kind == RecordingKind::full) {
      run.records.push_back(rec);
    } else if (recording.kind == RecordingKind::thinned && (t + 1) % every == 0) {
      run.records.push_back(rec);
      run.record_steps.push_back(t);
    }
    if (run.trace_coords) push_trace();
    if (recording.snapshot_every && (t + 1) % recording.snapshot_every == 0) run.snapshots.push_back(x);
  }
  run.final_state = Configuration(window, std::move(x));
  run.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return run;
}

// ---------------------------------------------------------------------------
// Trajectory stream: t, delta_h, accepted, jump_sq_first_coord

inline CsvTable trajectory_csv(const ChainRun& run) {
  CsvTable t;
  t.header = {"t", "delta_h", "accepted", "jump_sq_first_coord"};
  for (std::size_t i = 0; i < run.records.size(); ++i) {
    const auto& r = run.records[i];
    const std::uint64_t step_index = run.record_steps.empty() ? i : run.record_steps[i];
    t.add_row({std::to_string(step_index), format_double(r.delta_h), r.accepted ? "1" : "0",
               format_double(r.jump_sq_first_coord)});
  }
  return t;
}

//! Parses a trajectory table back into (t, record) pairs. The uniform draw is
//! not part of the stream and comes back as 0.
inline std::vector<std::pair<std::uint64_t, StepRecord>> parse_trajectory(const CsvTable& t) {
  const auto ct = t.column("t"), cd = t.column("delta_h"), ca = t.column("accepted"),
             cj = t.column("jump_sq_first_coord");
  std::vector<std::pair<std::uint64_t, StepRecord>> out;
  for (const auto& row : t.rows) {
    StepRecord r;
    r.delta_h = parse_double(row[cd]);
    r.accepted = row[ca] == "1";
    r.jump_sq_first_coord = parse_double(row[cj]);
    out.emplace_back(parse_u64(row[ct]), r);
  }
  return out;
}

}  // namespace gibbsmh
