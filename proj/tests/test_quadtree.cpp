#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "vfmm/quadtree.hpp"

using namespace vfmm;

namespace {

// Brute-force interaction list straight from the definition: same level,
// parent adjacent to (or equal to) A's parent, and not adjacent to A.
std::vector<CellId> brute_interaction_list(const CellId& a) {
  std::vector<CellId> out;
  if (a.level < 2) return out;
  const int n = cells_per_side(a.level);
  const CellId pa = parent(a);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      const CellId b{a.level, x, y};
      const CellId pb = parent(b);
      const bool parents_near = std::abs(pa.ix - pb.ix) <= 1 && std::abs(pa.iy - pb.iy) <= 1;
      const bool far = std::max(std::abs(b.ix - a.ix), std::abs(b.iy - a.iy)) >= 2;
      if (parents_near && far) out.push_back(b);
    }
  }
  return out;
}

}  // namespace

TEST(CellIndex, GridArithmetic) {
  const auto d = Domain::unit();
  EXPECT_EQ(cell_index({0.3, 0.7}, 2, d), (CellId{2, 1, 2}));
  EXPECT_EQ(cell_index({1.0, 1.0}, 3, d), (CellId{3, 7, 7}));
  EXPECT_EQ(cell_index({0.0, 0.0}, 3, d), (CellId{3, 0, 0}));
  for (Point p : {Point{0.1, 0.9}, Point{1.0, 0.0}, Point{0.5, 0.5}}) EXPECT_EQ(cell_index(p, 0, d), (CellId{0, 0, 0}));
}

TEST(CellIndex, BoundaryBelongsToUpperCell) {
  EXPECT_EQ(cell_index({0.5, 0.25}, 2, Domain::unit()).ix, 2);
  EXPECT_EQ(cell_index({0.5, 0.25}, 2, Domain::unit()).iy, 1);
}

TEST(CellIndex, OutsideDomainThrows) {
  EXPECT_THROW(cell_index({1.0000001, 0.5}, 2, Domain::unit()), OutOfDomain);
  EXPECT_THROW(cell_index({0.5, -1e-12}, 2, Domain::unit()), OutOfDomain);
}

TEST(CellIndex, OffsetDomain) {
  const Domain d{-1.0, 2.0, 4.0};
  EXPECT_EQ(cell_index({-1.0, 2.0}, 2, d), (CellId{2, 0, 0}));
  EXPECT_EQ(cell_index({2.9, 5.5}, 2, d), (CellId{2, 3, 3}));
}

TEST(Geometry, DyadicCentersAndWidths) {
  const auto d = Domain::unit();
  EXPECT_DOUBLE_EQ(half_width(0, d), 0.5);
  EXPECT_DOUBLE_EQ(half_width(3, d), 1.0 / 16.0);
  const Point c = cell_center({3, 2, 5}, d);
  EXPECT_DOUBLE_EQ(c.x, 2.5 / 8.0);
  EXPECT_DOUBLE_EQ(c.y, 5.5 / 8.0);
}

TEST(BuildTree, SingleParticle) {
  const std::vector<Particle> ps{{0.1, 0.1, 1, 0}};
  const Tree t = build_tree(ps, 2, Domain::unit());
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 4; ++x) {
      const auto in = t.particles_in({2, x, y});
      if (x == 0 && y == 0) {
        ASSERT_EQ(in.size(), 1u);
        EXPECT_EQ(in[0], 0u);
      } else {
        EXPECT_TRUE(in.empty());
      }
    }
  }
  EXPECT_EQ(t.count({0, 0, 0}), 1u);
  EXPECT_EQ(t.count({1, 0, 0}), 1u);
  EXPECT_EQ(t.count({1, 1, 0}), 0u);
}

TEST(BuildTree, AssignmentMatchesIndependentLoop) {
  const auto ps = generate_particles(Distribution::uniform_random, 1000, 1, Domain::unit(), 0.01);
  const Tree t = build_tree(ps, 4, Domain::unit());
  std::size_t total = 0;
  std::vector<int> seen(ps.size(), 0);
  for (int y = 0; y < 16; ++y) {
    for (int x = 0; x < 16; ++x) {
      for (auto i : t.particles_in({4, x, y})) {
        ++seen[i];
        ++total;
        // independent recomputation
        const int ix = std::min(15, static_cast<int>(std::floor(ps[i].x * 16)));
        const int iy = std::min(15, static_cast<int>(std::floor(ps[i].y * 16)));
        EXPECT_EQ(ix, x);
        EXPECT_EQ(iy, y);
        // closed cell square
        EXPECT_GE(ps[i].x, x / 16.0);
        EXPECT_LE(ps[i].x, (x + 1) / 16.0);
      }
    }
  }
  EXPECT_EQ(total, 1000u);
  for (std::size_t i = 0; i < ps.size(); ++i) {
    EXPECT_EQ(seen[i], 1);
    EXPECT_EQ(t.leaf_of(i), cell_index({ps[i].x, ps[i].y}, 4, Domain::unit()));
  }
  for (int lev = 0; lev <= 4; ++lev) {
    std::size_t s = 0;
    for (std::size_t k = 0; k < cells_at_level(lev); ++k) s += t.count(cell_from_linear(lev, k));
    EXPECT_EQ(s, 1000u);
  }
}

TEST(BuildTree, ParticlesOnCellBoundary) {
  std::vector<Particle> ps;
  for (double y : {0.1, 0.3, 0.6, 0.9}) ps.push_back({0.5, y, 1, 0});
  const Tree t = build_tree(ps, 2, Domain::unit());
  for (std::size_t i = 0; i < ps.size(); ++i) EXPECT_EQ(t.leaf_of(i).ix, 2);
}

TEST(BuildTree, Errors) {
  const std::vector<Particle> ok{{0.5, 0.5, 1, 0}};
  EXPECT_THROW(build_tree(ok, 1, Domain::unit()), InvalidArgument);
  const std::vector<Particle> bad{{0.5, 0.5, 1, 0}, {0.2, 1.5, 1, 0}};
  try {
    build_tree(bad, 3, Domain::unit());
    FAIL();
  } catch (const OutOfDomain& e) {
    EXPECT_EQ(e.index(), 1u);
    EXPECT_NE(std::string(e.what()).find("particle 1"), std::string::npos);
  }
}

TEST(Neighbors, CornerEdgeInterior) {
  const auto c = neighbors({2, 0, 0});
  EXPECT_EQ(c, (std::vector<CellId>{{2, 1, 0}, {2, 0, 1}, {2, 1, 1}}));
  EXPECT_EQ(neighbors({3, 4, 4}).size(), 8u);
  EXPECT_EQ(neighbors({2, 0, 2}).size(), 5u);
  EXPECT_TRUE(neighbors({0, 0, 0}).empty());
}

TEST(InteractionList, KnownCounts) {
  const auto corner = interaction_list({2, 0, 0});
  EXPECT_EQ(corner.size(), 12u);
  for (const auto& b : corner) EXPECT_FALSE(adjacent(b, {2, 0, 0}));
  EXPECT_EQ(interaction_list({3, 3, 3}).size(), 27u);
  EXPECT_TRUE(interaction_list({1, 0, 0}).empty());
  EXPECT_TRUE(interaction_list({0, 0, 0}).empty());
}

TEST(InteractionList, MatchesExhaustiveEnumeration) {
  for (int lev = 2; lev <= 4; ++lev) {
    for (std::size_t k = 0; k < cells_at_level(lev); ++k) {
      const CellId a = cell_from_linear(lev, k);
      EXPECT_EQ(interaction_list(a), brute_interaction_list(a));
    }
  }
}

TEST(InteractionList, RowMajorOrder) {
  const auto il = interaction_list({4, 7, 9});
  EXPECT_TRUE(std::is_sorted(il.begin(), il.end()));
  const auto nb = neighbors({4, 7, 9});
  EXPECT_TRUE(std::is_sorted(nb.begin(), nb.end()));
}

TEST(InteractionList, SymmetryAndSeparation) {
  const auto d = Domain::unit();
  for (int lev = 2; lev <= 4; ++lev) {
    const double width = 2.0 * half_width(lev, d);
    for (std::size_t k = 0; k < cells_at_level(lev); ++k) {
      const CellId a = cell_from_linear(lev, k);
      for (const auto& b : neighbors(a)) {
        const auto back = neighbors(b);
        EXPECT_NE(std::find(back.begin(), back.end(), a), back.end());
      }
      const Point ca = cell_center(a, d);
      for (const auto& b : interaction_list(a)) {
        const auto back = interaction_list(b);
        EXPECT_NE(std::find(back.begin(), back.end(), a), back.end());
        const Point cb = cell_center(b, d);
        EXPECT_GE(std::max(std::abs(ca.x - cb.x), std::abs(ca.y - cb.y)), 2.0 * width - 1e-15);
      }
    }
  }
}

// Every pair of distinct leaves is either adjacent or handled by exactly one
// M2L, at exactly one level.
TEST(InteractionList, PartitionOfLeafPairs) {
  for (int l = 2; l <= 4; ++l) {
    const std::size_t nleaf = cells_at_level(l);
    for (std::size_t i = 0; i < nleaf; ++i) {
      const CellId a = cell_from_linear(l, i);
      for (std::size_t j = 0; j < nleaf; ++j) {
        if (i == j) continue;
        const CellId b = cell_from_linear(l, j);
        int hits = 0;
        for (int lev = 2; lev <= l; ++lev) {
          const auto il = interaction_list(ancestor(a, lev));
          hits += static_cast<int>(std::count(il.begin(), il.end(), ancestor(b, lev)));
        }
        if (adjacent(a, b)) {
          EXPECT_EQ(hits, 0);
        } else {
          EXPECT_EQ(hits, 1) << "l=" << l << " a=(" << a.ix << "," << a.iy << ") b=(" << b.ix << "," << b.iy << ")";
        }
      }
    }
  }
}

TEST(CellIds, ParentChildrenLinear) {
  const CellId id{3, 5, 2};
  for (const auto& c : children(id)) EXPECT_EQ(parent(c), id);
  EXPECT_EQ(ancestor({4, 13, 6}, 2), (CellId{2, 3, 1}));
  for (std::size_t k = 0; k < cells_at_level(3); ++k) EXPECT_EQ(linear_index(cell_from_linear(3, k)), k);
}
