#include <gtest/gtest.h>

#include <random>
#include <set>

#include "gibbsmh/graph_lattice.hpp"

using namespace gibbsmh;

namespace {

Neighborhood line3() { return Neighborhood({VertexId{-1}, VertexId{0}, VertexId{1}}); }

// Brute-force boundary: every vertex with some neighbor outside the set.
std::set<VertexId> brute_boundary(std::span<const VertexId> vs, const Neighborhood& nb) {
  std::set<VertexId> all(vs.begin(), vs.end()), out;
  for (const auto& v : vs)
    for (const auto& o : nb.offsets())
      if (!all.count(v + o)) out.insert(v);
  return out;
}

}  // namespace

TEST(Neighborhood, RejectsMissingOriginAndAsymmetry) {
  EXPECT_THROW(Neighborhood({VertexId{1}, VertexId{-1}}), std::invalid_argument);
  EXPECT_THROW(Neighborhood({VertexId{0}, VertexId{1}}), std::invalid_argument);
  EXPECT_THROW(Neighborhood({VertexId{0}, VertexId{0}}), std::invalid_argument);
}

TEST(Neighborhood, CanonicalizeIsIdempotentAndSymmetricClosed) {
  std::mt19937 gen(7);
  std::uniform_int_distribution<int> coord(-3, 3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<VertexId> offs;
    for (int i = 0; i < 5; ++i) offs.push_back(VertexId{coord(gen), coord(gen)});
    const auto a = Neighborhood::canonicalize(offs, 2);
    const auto b = Neighborhood::canonicalize({a.offsets().begin(), a.offsets().end()}, 2);
    EXPECT_EQ(a, b);
    for (const auto& v : a.offsets()) EXPECT_TRUE(a.contains(-v));
    EXPECT_TRUE(a.contains(VertexId{0, 0}));
    EXPECT_TRUE(std::is_sorted(a.offsets().begin(), a.offsets().end()));
  }
}

TEST(Neighborhood, NearestHasTwoDPlusOneOffsets) {
  EXPECT_EQ(Neighborhood::nearest(1).size(), 3u);
  EXPECT_EQ(Neighborhood::nearest(2).size(), 5u);
  EXPECT_EQ(Neighborhood::nearest(3).size(), 7u);
}

TEST(BuildBox, OneDimensionalUnitBox) {
  const Window w = build_box(1, 1, line3());
  ASSERT_EQ(w.size(), 3u);
  EXPECT_EQ(w.vertex(0), (VertexId{-1}));
  EXPECT_EQ(w.vertex(2), (VertexId{1}));
  const auto bd = w.boundary_vertices();
  EXPECT_EQ(bd, (std::vector<VertexId>{VertexId{-1}, VertexId{1}}));
}

TEST(BuildBox, SingleVertexWithOriginOnlyNeighborhood) {
  const Window w = build_box(2, 0, Neighborhood::origin_only(2));
  EXPECT_EQ(w.size(), 1u);
  EXPECT_TRUE(w.boundary().empty());
}

TEST(BuildBox, TwoDimensionalBoundaryCount) {
  const Window w = build_box(2, 8, Neighborhood::nearest(2));
  EXPECT_EQ(w.size(), 289u);
  EXPECT_EQ(w.boundary().size(), 64u);
  EXPECT_EQ(brute_boundary(w.vertices(), w.neighborhood()).size(), 64u);
}

TEST(BuildBox, IndexOfIsABijection) {
  const Window w = build_box(2, 3, Neighborhood::nearest(2));
  for (std::size_t i = 0; i < w.size(); ++i) EXPECT_EQ(w.index_of(w.vertex(i)), i);
  EXPECT_FALSE(w.index_of(VertexId{4, 0}).has_value());
}

TEST(BuildBox, BoundaryValuesFollowMode) {
  const Window z = build_box(1, 2, line3());
  for (double v : z.boundary_values()) EXPECT_EQ(v, 0.0);
  const Window c = build_box(1, 2, line3(), BoundaryCondition::constant_value(1.5));
  ASSERT_FALSE(c.boundary_values().empty());
  for (double v : c.boundary_values()) EXPECT_EQ(v, 1.5);
  const Window f = build_box(1, 2, line3(), BoundaryCondition::free());
  EXPECT_TRUE(f.boundary_values().empty());
  EXPECT_TRUE(z.is_complete());
}

TEST(BuildBox, RejectsNegativeHalfWidth) { EXPECT_THROW(build_box(1, -1, line3()), std::invalid_argument); }

TEST(BoundaryOf, SmallExamples) {
  const std::vector<VertexId> single{VertexId{0}};
  EXPECT_TRUE(boundary_of(single, Neighborhood::origin_only(1)).empty());
  const std::vector<VertexId> three{VertexId{-1}, VertexId{0}, VertexId{1}};
  EXPECT_EQ(boundary_of(three, line3()), (std::vector<VertexId>{VertexId{-1}, VertexId{1}}));
}

TEST(BoundaryOf, ThreeByThreeBoxHasEightEdgeCells) {
  const Window w = build_box(2, 1, Neighborhood::nearest(2));
  const auto bd = boundary_of(w.vertices(), w.neighborhood());
  EXPECT_EQ(bd.size(), 8u);
  EXPECT_EQ(std::set<VertexId>(bd.begin(), bd.end()), brute_boundary(w.vertices(), w.neighborhood()));
  EXPECT_EQ(std::find(bd.begin(), bd.end(), VertexId{0, 0}), bd.end());
}

TEST(BoundaryOf, IdempotentSubsetAndMatchesStoredBoundary) {
  std::mt19937 gen(11);
  std::bernoulli_distribution keep(0.7);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<VertexId> vs;
    for (int x = -4; x <= 4; ++x)
      for (int y = -4; y <= 4; ++y)
        if (keep(gen)) vs.push_back(VertexId{x, y});
    if (vs.empty()) continue;
    const auto nb = Neighborhood::nearest(2);
    const Window w = Window::from_vertices(vs, nb, BoundaryCondition::free());
    const auto bd = boundary_of(w.vertices(), nb);
    EXPECT_EQ(bd, w.boundary_vertices());
    EXPECT_EQ(std::set<VertexId>(bd.begin(), bd.end()), brute_boundary(w.vertices(), nb));
    for (const auto& b : bd) EXPECT_TRUE(w.index_of(b).has_value());
    // Recomputing on the same vertex set gives the same answer.
    EXPECT_EQ(boundary_of(w.vertices(), nb), bd);
  }
}

TEST(H2Diagnostics, OneDimensionalBoundaryRatios) {
  const std::vector<std::int64_t> Ls{1, 2, 4};
  const auto rep = h2_diagnostics(1, Ls, line3());
  ASSERT_EQ(rep.rows.size(), 3u);
  EXPECT_DOUBLE_EQ(rep.rows[0].boundary_ratio, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(rep.rows[1].boundary_ratio, 2.0 / 5.0);
  EXPECT_DOUBLE_EQ(rep.rows[2].boundary_ratio, 2.0 / 9.0);
}

TEST(H2Diagnostics, OriginOnlyHasNoBoundary) {
  const std::vector<std::int64_t> Ls{1};
  const auto rep = h2_diagnostics(1, Ls, Neighborhood::origin_only(1));
  EXPECT_EQ(rep.rows[0].boundary_ratio, 0.0);
}

TEST(H2Diagnostics, InradiusOfBoxes) {
  const std::vector<std::int64_t> Ls{4, 8};
  const auto rep = h2_diagnostics(2, Ls, Neighborhood::nearest(2));
  EXPECT_DOUBLE_EQ(rep.rows[0].inradius, 4.0);
  EXPECT_DOUBLE_EQ(rep.rows[1].inradius, 8.0);
}

TEST(H2Diagnostics, BoxesHaveUnitHullRatioAndDecayingBoundary) {
  const std::vector<std::int64_t> Ls{2, 4, 8, 16};
  for (std::size_t d : {1u, 2u}) {
    const auto rep = h2_diagnostics(d, Ls, Neighborhood::nearest(d));
    for (std::size_t i = 0; i < rep.rows.size(); ++i) {
      EXPECT_DOUBLE_EQ(rep.rows[i].hull_ratio, 1.0);
      EXPECT_GE(rep.rows[i].boundary_ratio, 0.0);
      if (i) {
        EXPECT_GT(rep.rows[i].n, rep.rows[i - 1].n);
        EXPECT_LE(rep.rows[i].boundary_ratio, rep.rows[i - 1].boundary_ratio);
      }
    }
    EXPECT_LE(rep.boundary_loglog_slope(), -1.0 / static_cast<double>(d) + 0.05);
  }
}

TEST(H2Diagnostics, RejectsNonIncreasingList) {
  const std::vector<std::int64_t> Ls{4, 4};
  EXPECT_THROW(h2_diagnostics(2, Ls, Neighborhood::nearest(2)), std::invalid_argument);
}

TEST(HullCount, LShapeIsNotConvex) {
  std::vector<VertexId> vs;
  for (int x = 0; x < 4; ++x) vs.push_back(VertexId{x, 0});
  for (int y = 1; y < 4; ++y) vs.push_back(VertexId{0, y});
  // Hull is the triangle (0,0),(3,0),(0,3): 10 lattice points.
  EXPECT_EQ(hull_lattice_count(vs), 10u);
}

TEST(Adjacency, FromNeighborLists) {
  // Path graph 0-1-2-3, window {1, 2}.
  const std::vector<std::vector<std::size_t>> adj{{1}, {0, 2}, {1, 3}, {2}};
  const Window w = Window::from_adjacency(adj, {1, 2});
  EXPECT_EQ(w.size(), 2u);
  EXPECT_FALSE(w.is_lattice());
  EXPECT_EQ(w.boundary().size(), 2u);
}

TEST(Serialization, WindowRoundTrip) {
  const Window w = build_box(2, 3, Neighborhood::nearest(2), BoundaryCondition::constant_value(0.25));
  const Window r = window_from_json(to_json(w));
  EXPECT_EQ(r.size(), w.size());
  EXPECT_EQ(std::vector<VertexId>(r.vertices().begin(), r.vertices().end()),
            std::vector<VertexId>(w.vertices().begin(), w.vertices().end()));
  EXPECT_EQ(r.boundary_vertices(), w.boundary_vertices());
  EXPECT_EQ(r.boundary_condition().constant, 0.25);
  EXPECT_EQ(to_json(r), to_json(w));

  std::vector<VertexId> vs{VertexId{0, 0}, VertexId{1, 0}, VertexId{1, 1}};
  const Window irregular = Window::from_vertices(vs, Neighborhood::nearest(2));
  EXPECT_EQ(to_json(window_from_json(to_json(irregular))), to_json(irregular));
}
