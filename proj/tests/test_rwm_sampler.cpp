#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <random>

#include "gibbsmh/estimators.hpp"
#include "gibbsmh/oracle.hpp"
#include "gibbsmh/rwm_sampler.hpp"

using namespace gibbsmh;

namespace {
WindowPtr share(Window w) { return std::make_shared<const Window>(std::move(w)); }
}  // namespace

TEST(InitState, ExactGaussianProductIsIndependentNormals) {
  const auto m = InteractionModel::gaussian_product(1);
  const auto w = share(build_cube(m, 3));
  const CounterRng rng(5, 0);
  const auto s = init_state(m, w, ExactGaussianInit{}, rng);
  std::vector<double> z(3);
  rng.fill_normal(StreamPurpose::initial_state, 0, z);
  EXPECT_EQ(s.state.values, z);
  EXPECT_FALSE(s.approximate);
}

TEST(InitState, ExactFreeFieldMatchesInversePrecision) {
  const auto m = InteractionModel::gff(1, 1.0, 1.0);
  const auto w = share(build_box(m, 2));
  const Eigen::MatrixXd cov = build_precision(m, *w).covariance();
  const std::size_t n = w->size();
  const std::size_t draws = 100000;
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < draws; ++i) {
    const auto x = init_state(m, w, ExactGaussianInit{}, CounterRng(77, i)).state.values;
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b) acc(a, b) += x[a] * x[b];
  }
  acc /= static_cast<double>(draws);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) {
      const double se = std::sqrt((cov(a, a) * cov(b, b) + cov(a, b) * cov(a, b)) / static_cast<double>(draws));
      EXPECT_NEAR(acc(a, b), cov(a, b), 3 * se) << a << "," << b;
    }
}

TEST(InitState, GivenIsReturnedUnchanged) {
  const auto m = InteractionModel::gaussian_product(1);
  const auto w = share(build_cube(m, 3));
  const Configuration x(w, {0.1, -2.0, 3.5});
  EXPECT_EQ(init_state(m, w, GivenInit{x}, CounterRng(1, 0)).state.values, x.values);
}

TEST(InitState, ExactRequiresGaussianFamily) {
  const auto m = InteractionModel::phi4(1, 1.0, 0.0, 1.0);
  const auto w = share(build_box(m, 2));
  EXPECT_THROW(init_state(m, w, ExactGaussianInit{}, CounterRng(1, 0)), std::invalid_argument);
  const auto s = init_state(m, w, BurnInInit{200, std::nullopt}, CounterRng(1, 0));
  EXPECT_TRUE(s.approximate);
  EXPECT_EQ(s.state.size(), w->size());
}

TEST(Propose, ZeroTauIsIdentity) {
  const auto m = InteractionModel::gaussian_product(1);
  const auto w = share(build_cube(m, 4));
  const Configuration x(w, {1, 2, 3, 4});
  EXPECT_EQ(propose(x, {0.0, IncrementFamily::standard_normal, 4}, CounterRng(3, 0)).values, x.values);
}

TEST(Propose, ReproducibleAndStateUntouched) {
  const auto m = InteractionModel::gaussian_product(1);
  const auto w = share(build_cube(m, 4));
  const Configuration x(w, {1, 2, 3, 4});
  const ProposalSpec p{1.0, IncrementFamily::standard_normal, 4};
  const auto a = propose(x, p, CounterRng(3, 0), 7), b = propose(x, p, CounterRng(3, 0), 7);
  EXPECT_EQ(a.values, b.values);
  EXPECT_NE(a.values, x.values);
  EXPECT_EQ(x.values, (std::vector<double>{1, 2, 3, 4}));
}

TEST(Propose, IncrementScaleIsTauOverRootN) {
  const auto m = InteractionModel::gaussian_product(1);
  const std::size_t n = 10000;
  const auto w = share(build_cube(m, static_cast<std::int64_t>(n)));
  const auto x = Configuration::zeros(w);
  const ProposalSpec p{2.38, IncrementFamily::standard_normal, n};
  EXPECT_DOUBLE_EQ(p.step_sd(), 0.0238);
  double ss = 0.0;
  std::size_t count = 0;
  for (std::uint64_t t = 0; t < 10; ++t)
    for (double v : propose(x, p, CounterRng(4, 0), t).values) ss += v * v, ++count;
  EXPECT_NEAR(std::sqrt(ss / static_cast<double>(count)), 0.0238, 0.01 * 0.0238);
}

TEST(IncrementFamilies, MomentsAreZeroAndOne) {
  const std::size_t N = 200000;
  const CounterRng rng(8, 0);
  for (auto fam : {IncrementFamily::standard_normal, IncrementFamily::uniform}) {
    std::vector<double> r(N);
    draw_increments(rng, 0, fam, r);
    double m = 0.0, v = 0.0;
    for (double x : r) m += x;
    m /= static_cast<double>(N);
    for (double x : r) v += (x - m) * (x - m);
    v /= static_cast<double>(N - 1);
    EXPECT_LT(std::abs(m), 4.0 / std::sqrt(static_cast<double>(N)));
    EXPECT_LT(std::abs(v - 1.0), 5.0 / std::sqrt(static_cast<double>(N)));
  }
}

TEST(AcceptProb, Examples) {
  const auto m = InteractionModel::gaussian_product(1);
  const auto w = share(build_box(m, 0));
  const Configuration x(w, {0.0}), y(w, {1.0});
  EXPECT_EQ(accept_prob(m, x, x), 1.0);
  EXPECT_EQ(accept_prob_from_delta(-5.0), 1.0);
  EXPECT_NEAR(accept_prob(m, x, y), std::exp(-0.5), 1e-15);
  EXPECT_NEAR(accept_prob(m, x, y), 0.60653, 1e-5);
}

TEST(AcceptProb, LogSpaceHandlesExtremeEnergyChanges) {
  EXPECT_EQ(accept_prob_from_delta(-1e6), 1.0);
  EXPECT_EQ(accept_prob_from_delta(1e6), 0.0);
  EXPECT_TRUE(std::isfinite(accept_prob_from_delta(800.0)));
}

TEST(AcceptProb, InvariantUnderConstantPotentialShift) {
  const auto base = InteractionModel::gff(2, 1.0, 0.5);
  const auto shifted = base.with_energy_offset(3.75);
  const auto w = share(build_cube(base, 6));
  std::mt19937 gen(12);
  std::normal_distribution<double> z;
  for (int t = 0; t < 100; ++t) {
    std::vector<double> a(w->size()), b(w->size());
    for (auto& v : a) v = z(gen);
    for (auto& v : b) v = z(gen) * 0.3;
    for (std::size_t i = 0; i < a.size(); ++i) b[i] += a[i];
    const Configuration x(w, a), y(w, b);
    EXPECT_NEAR(accept_prob(base, x, y), accept_prob(shifted, x, y), 1e-12);
    EXPECT_NE(hamiltonian(base, x), hamiltonian(shifted, x));
  }
}

TEST(Step, ZeroTauAlwaysAcceptsWithZeroJump) {
  const auto m = InteractionModel::gff(1, 1.0, 1.0);
  const auto w = share(build_box(m, 3));
  const auto x = init_state(m, w, ExactGaussianInit{}, CounterRng(2, 0)).state;
  for (std::uint64_t t = 0; t < 20; ++t) {
    const auto [y, rec] = step(m, x, {0.0, IncrementFamily::standard_normal, w->size()}, CounterRng(2, 0), t);
    EXPECT_TRUE(rec.accepted);
    EXPECT_EQ(rec.jump_sq_first_coord, 0.0);
    EXPECT_EQ(rec.delta_h, 0.0);
    EXPECT_EQ(y.values, x.values);
  }
}

TEST(Step, ForcedUnitUniformAlwaysRejectsAndKeepsState) {
  const auto m = InteractionModel::gaussian_product(1);
  const auto w = share(build_cube(m, 10));
  const auto x = init_state(m, w, ExactGaussianInit{}, CounterRng(2, 0)).state;
  for (std::uint64_t t = 0; t < 50; ++t) {
    const auto [y, rec] = step(m, x, {0.5, IncrementFamily::standard_normal, 10}, CounterRng(2, 0), t, {1.0});
    EXPECT_FALSE(rec.accepted);
    EXPECT_EQ(rec.jump_sq_first_coord, 0.0);
    EXPECT_EQ(y.values, x.values);
  }
}

TEST(RunChain, OneStepEqualsStep) {
  const auto m = InteractionModel::gaussian_product(1);
  const auto w = share(build_cube(m, 5));
  const ProposalSpec p{1.5, IncrementFamily::standard_normal, 5};
  const auto run = run_chain(m, w, p, 1, 99);
  const CounterRng rng(99, 0);
  const auto x0 = init_state(m, w, ExactGaussianInit{}, rng).state;
  const auto [x1, rec] = step(m, x0, p, rng, 0);
  ASSERT_EQ(run.records.size(), 1u);
  EXPECT_EQ(run.records[0], rec);
  EXPECT_EQ(run.final_state.values, x1.values);
}

TEST(RunChain, SameSeedIdenticalRun) {
  const auto m = InteractionModel::gff(2, 1.0, 1.0);
  const auto w = share(build_cube(m, 5));
  const ProposalSpec p{1.0, IncrementFamily::uniform, w->size()};
  Recording rec = Recording::full();
  rec.trace_coords = 2;
  rec.snapshot_every = 10;
  const auto a = run_chain(m, w, p, 500, 7, rec), b = run_chain(m, w, p, 500, 7, rec);
  EXPECT_EQ(a.records, b.records);
  EXPECT_EQ(a.head_trace, b.head_trace);
  EXPECT_EQ(a.snapshots, b.snapshots);
  EXPECT_EQ(a.final_state.values, b.final_state.values);
  const auto c = run_chain(m, w, p, 500, 8, rec);
  EXPECT_NE(a.records, c.records);
}

TEST(RunChain, RecordsSatisfyAcceptanceInvariant) {
  const auto m = InteractionModel::gaussian_product(1);
  const auto w = share(build_cube(m, 20));
  const auto run = run_chain(m, w, {2.0, IncrementFamily::standard_normal, 20}, 5000, 3);
  std::size_t acc = 0;
  for (const auto& r : run.records) {
    EXPECT_EQ(r.accepted, r.u < std::min(1.0, std::exp(-r.delta_h)));
    EXPECT_GE(r.jump_sq_first_coord, 0.0);
    if (!r.accepted) {
      EXPECT_EQ(r.jump_sq_first_coord, 0.0);
    }
    acc += r.accepted;
  }
  const auto est = acceptance_rate(run.records);
  EXPECT_DOUBLE_EQ(est.value, static_cast<double>(acc) / 5000.0);
  EXPECT_GE(est.value, 0.0);
  EXPECT_LE(est.value, 1.0);
}

TEST(RunChain, RejectionLeavesTraceBitIdentical) {
  const auto m = InteractionModel::gaussian_product(1);
  const auto w = share(build_cube(m, 4));
  Recording rec = Recording::full();
  rec.trace_coords = 4;
  const auto run = run_chain(m, w, {6.0, IncrementFamily::standard_normal, 4}, 2000, 5, rec);
  for (std::size_t t = 0; t < run.records.size(); ++t) {
    const auto a = run.trace_row(t), b = run.trace_row(t + 1);
    if (!run.records[t].accepted) {
      EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin()));
    }
  }
}

TEST(RunChain, OptimalScaleAcceptanceNearQuarter) {
  const auto m = InteractionModel::gaussian_product(1);
  const auto w = share(build_cube(m, 100));
  const auto run = run_chain(m, w, {2.38, IncrementFamily::standard_normal, 100}, 200000, 2024, Recording::summary());
  const auto acc = acceptance_rate(std::span<const ChainRun>(&run, 1));
  EXPECT_GE(acc.value, 0.21);
  EXPECT_LE(acc.value, 0.26);
}

TEST(RunChain, RecordingModes) {
  const auto m = InteractionModel::gaussian_product(1);
  const auto w = share(build_cube(m, 4));
  const ProposalSpec p{1.0, IncrementFamily::standard_normal, 4};
  const auto full = run_chain(m, w, p, 100, 1);
  const auto thin = run_chain(m, w, p, 100, 1, Recording::thinned(10));
  const auto summ = run_chain(m, w, p, 100, 1, Recording::summary());
  ASSERT_EQ(thin.records.size(), 10u);
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_EQ(thin.record_steps[i], 10 * i + 9);
    EXPECT_EQ(thin.records[i], full.records[10 * i + 9]);
  }
  EXPECT_TRUE(summ.records.empty());
  EXPECT_EQ(summ.final_state.values, full.final_state.values);
  EXPECT_DOUBLE_EQ(acceptance_rate(std::span<const ChainRun>(&summ, 1)).value, acceptance_rate(full.records).value);
  EXPECT_THROW(run_chain(m, w, p, 0, 1), std::invalid_argument);
}

TEST(Trajectory, CsvRoundTrip) {
  const auto m = InteractionModel::gff(1, 1.0, 1.0);
  const auto w = share(build_box(m, 5));
  const auto run = run_chain(m, w, {1.7, IncrementFamily::standard_normal, w->size()}, 300, 11);
  const auto csv = trajectory_csv(run);
  EXPECT_EQ(csv.header, (std::vector<std::string>{"t", "delta_h", "accepted", "jump_sq_first_coord"}));
  const auto back = parse_trajectory(CsvTable::parse(csv.to_string()));
  ASSERT_EQ(back.size(), run.records.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].first, i);
    EXPECT_EQ(back[i].second.delta_h, run.records[i].delta_h);
    EXPECT_EQ(back[i].second.accepted, run.records[i].accepted);
    EXPECT_EQ(back[i].second.jump_sq_first_coord, run.records[i].jump_sq_first_coord);
  }
}
