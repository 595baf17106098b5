#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "vfmm/errorlab.hpp"
#include "vfmm/fmm.hpp"

using namespace vfmm;

namespace {

struct Case {
  std::vector<Particle> particles;
  std::vector<Point> pos;
  std::vector<Velocity> fmm, direct;
  std::vector<double> budgets;
};

Case fmm_case(std::size_t n, int l, int p, std::uint64_t seed, Distribution d = Distribution::uniform_random) {
  Case c;
  c.particles = generate_particles(d, n, seed, Domain::unit(), 0.01);
  c.pos = positions(c.particles);
  const FmmConfig cfg{l, p};
  c.fmm = evaluate(c.particles, Domain::unit(), cfg).velocities;
  c.direct = velocity_direct(c.particles, KernelKind::point_vortex);
  c.budgets = error_budgets(build_tree(c.particles, l, Domain::unit()), c.particles, cfg);
  return c;
}

}  // namespace

TEST(Compare, IdenticalInputsGiveZero) {
  const std::vector<Velocity> v{{1, 2}, {-3, 0.5}};
  const std::vector<Point> pos{{0.1, 0.1}, {0.9, 0.9}};
  const auto r = compare(v, v, pos);
  EXPECT_EQ(r.max_abs, 0.0);
  EXPECT_EQ(r.rms_abs, 0.0);
  EXPECT_EQ(r.max_rel, 0.0);
  EXPECT_EQ(r.rms_rel, 0.0);
}

TEST(Compare, SingleTargetArithmetic) {
  const std::vector<Velocity> f{{0, 1}}, d{{0, 0.9}};
  const std::vector<Point> pos{{0.5, 0.5}};
  const auto r = compare(f, d, pos);
  EXPECT_NEAR(r.max_abs, 0.1, 1e-15);
  ASSERT_TRUE(r.max_rel.has_value());
  EXPECT_NEAR(*r.max_rel, 0.1 / 0.9, 1e-15);
  EXPECT_NEAR(*r.max_rel, 0.1111, 1e-4);
  EXPECT_NEAR(r.per_target[0].f_error, 2 * std::numbers::pi * 0.1, 1e-14);
}

TEST(Compare, ZeroDirectFieldHasNoRelativeMetrics) {
  const std::vector<Velocity> f{{0, 1}}, d{{0, 0}};
  const std::vector<Point> pos{{0.5, 0.5}};
  const auto r = compare(f, d, pos);
  EXPECT_EQ(r.max_abs, 1.0);
  EXPECT_FALSE(r.max_rel.has_value());
  EXPECT_FALSE(r.rms_rel.has_value());
  EXPECT_EQ(format_optional(r.max_rel), "NA");
}

TEST(Compare, LengthErrors) {
  const std::vector<Velocity> a{{0, 1}}, b{{0, 1}, {1, 0}};
  const std::vector<Point> p1{{0.5, 0.5}};
  EXPECT_THROW(compare(a, b, p1), InvalidArgument);
  EXPECT_THROW(compare({}, {}, {}), InvalidArgument);
  const std::vector<double> budgets{1.0, 2.0};
  EXPECT_THROW(compare(a, a, p1, budgets), InvalidArgument);
}

TEST(Compare, MatchesIndependentLoop) {
  std::mt19937_64 rng(100);
  std::uniform_real_distribution<double> u(-1, 1), w(0, 1);
  std::vector<Velocity> f(100), d(100);
  std::vector<Point> pos(100);
  for (std::size_t i = 0; i < 100; ++i) {
    d[i] = {u(rng), u(rng)};
    f[i] = {d[i].u + 1e-3 * u(rng), d[i].v + 1e-3 * u(rng)};
    pos[i] = {w(rng), w(rng)};
  }
  const auto r = compare(f, d, pos);

  double mx = 0, ss = 0, vmax = 0;
  std::size_t worst = 0;
  for (std::size_t i = 0; i < 100; ++i) {
    const double du = f[i].u - d[i].u, dv = f[i].v - d[i].v;
    const double e = std::sqrt(du * du + dv * dv);
    if (e > mx) {
      mx = e;
      worst = i;
    }
    ss += e * e;
    vmax = std::max(vmax, std::sqrt(d[i].u * d[i].u + d[i].v * d[i].v));
  }
  const double rms = std::sqrt(ss / 100.0);
  EXPECT_DOUBLE_EQ(r.max_abs, mx);
  EXPECT_DOUBLE_EQ(r.rms_abs, rms);
  EXPECT_DOUBLE_EQ(*r.max_rel, mx / vmax);
  EXPECT_DOUBLE_EQ(*r.rms_rel, rms / vmax);
  EXPECT_EQ(r.worst_index, worst);
  EXPECT_LE(r.rms_abs, r.max_abs);
}

TEST(Compare, PermutationInvariance) {
  const auto c = fmm_case(300, 3, 4, 2);
  const auto r0 = compare(c.fmm, c.direct, c.pos);
  std::vector<std::size_t> perm(c.pos.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 rng(3);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<Velocity> f, d;
  std::vector<Point> p;
  for (auto i : perm) {
    f.push_back(c.fmm[i]);
    d.push_back(c.direct[i]);
    p.push_back(c.pos[i]);
  }
  const auto r1 = compare(f, d, p);
  EXPECT_EQ(r0.max_abs, r1.max_abs);
  EXPECT_EQ(r0.max_rel, r1.max_rel);
  EXPECT_EQ(r0.max_direct_speed, r1.max_direct_speed);
  // summation order differs
  EXPECT_NEAR(r0.rms_abs, r1.rms_abs, 1e-14 * r0.rms_abs);
  EXPECT_EQ(perm[r1.worst_index], r0.worst_index);
}

TEST(SpatialMap, AllTargetsInOneBin) {
  const std::vector<Velocity> f{{0, 1}, {0, 2}, {1, 1}}, d{{0, 0}, {0, 0}, {0, 0}};
  const std::vector<Point> pos{{0.1, 0.1}, {0.2, 0.05}, {0.15, 0.2}};
  const auto r = compare(f, d, pos);
  const auto m = spatial_map(r, Domain::unit(), 4);
  EXPECT_EQ(m.at(0, 0).count, 3u);
  EXPECT_EQ(m.at(0, 0).max_err, r.max_abs);
  for (int iy = 0; iy < 4; ++iy)
    for (int ix = 0; ix < 4; ++ix)
      if (ix || iy) {
        EXPECT_TRUE(m.at(ix, iy).empty());
      }
}

TEST(SpatialMap, SingleBinIsGlobal) {
  const auto c = fmm_case(200, 3, 4, 5);
  const auto r = compare(c.fmm, c.direct, c.pos);
  const auto m = spatial_map(r, Domain::unit(), 1);
  ASSERT_EQ(m.bins.size(), 1u);
  EXPECT_EQ(m.bins[0].count, 200u);
  EXPECT_EQ(m.bins[0].max_err, r.max_abs);
  double mean = 0;
  for (const auto& t : r.per_target) mean += t.abs_error;
  EXPECT_DOUBLE_EQ(m.bins[0].mean_err, mean / 200.0);
}

TEST(SpatialMap, MatchesBruteForceFiltering) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto c = fmm_case(400, 3, 5, seed, seed == 2 ? Distribution::gaussian_patch : Distribution::uniform_random);
    const auto r = compare(c.fmm, c.direct, c.pos);
    for (int g : {3, 8}) {
      const auto m = spatial_map(r, Domain::unit(), g);
      for (int iy = 0; iy < g; ++iy) {
        for (int ix = 0; ix < g; ++ix) {
          std::size_t cnt = 0;
          double mx = 0, sum = 0;
          for (const auto& t : r.per_target) {
            const int bx = std::min(g - 1, static_cast<int>(std::floor(t.position.x * g)));
            const int by = std::min(g - 1, static_cast<int>(std::floor(t.position.y * g)));
            if (bx != ix || by != iy) continue;
            ++cnt;
            mx = std::max(mx, t.abs_error);
            sum += t.abs_error;
          }
          const auto& b = m.at(ix, iy);
          EXPECT_EQ(b.count, cnt);
          EXPECT_EQ(b.max_err, mx);
          if (cnt) {
            EXPECT_DOUBLE_EQ(b.mean_err, sum / static_cast<double>(cnt));
          }
        }
      }
      EXPECT_EQ(m.max(), r.max_abs);
    }
  }
}

TEST(SpatialMap, RefinementKeepsMax) {
  const auto c = fmm_case(500, 4, 3, 9, Distribution::two_patches);
  const auto r = compare(c.fmm, c.direct, c.pos);
  for (int g : {1, 2, 4, 8, 16}) {
    EXPECT_EQ(spatial_map(r, Domain::unit(), g).max(), spatial_map(r, Domain::unit(), 2 * g).max());
    EXPECT_EQ(spatial_map(r, Domain::unit(), g).max(), r.max_abs);
  }
  EXPECT_THROW(spatial_map(r, Domain::unit(), 0), InvalidArgument);
}

TEST(SpatialMap, CsvMarksEmptyBins) {
  const std::vector<Velocity> f{{0, 1}}, d{{0, 0.5}};
  const std::vector<Point> pos{{0.9, 0.1}};
  const auto m = spatial_map(compare(f, d, pos), Domain::unit(), 2);
  std::ostringstream os;
  write_error_map(os, m);
  EXPECT_EQ(os.str(),
            "bin_ix,bin_iy,count,max_err,mean_err\n"
            "0,0,0,NA,NA\n"
            "1,0,1,0.5,0.5\n"
            "0,1,0,NA,NA\n"
            "1,1,0,NA,NA\n");
}

TEST(BoundCheck, TrivialCases) {
  const auto c = fmm_case(100, 3, 2, 1);
  const auto r = compare(c.fmm, c.direct, c.pos);
  const std::vector<double> inf(100, std::numeric_limits<double>::infinity());
  EXPECT_TRUE(bound_check(r, inf).empty());
  const auto zero = compare(c.direct, c.direct, c.pos);
  EXPECT_TRUE(bound_check(zero, std::vector<double>(100, 0.0)).empty());
  EXPECT_THROW(bound_check(r, std::vector<double>(99, 1.0)), InvalidArgument);
}

TEST(BoundCheck, ReportsEveryExceedingTarget) {
  const std::vector<Velocity> f{{0, 1}, {0, 1}, {0, 1}}, d{{0, 0.9}, {0, 0}, {0, 1}};
  const std::vector<Point> pos{{0.1, 0.1}, {0.5, 0.5}, {0.9, 0.9}};
  const auto r = compare(f, d, pos);
  const std::vector<double> budgets{1.0, 1.0, 0.0};
  const auto v = bound_check(r, budgets);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].index, 1u);
  EXPECT_DOUBLE_EQ(v[0].observed, 2 * std::numbers::pi);
  EXPECT_EQ(v[0].budget, 1.0);
}

TEST(BoundCheck, FullRunHasNoViolations) {
  const auto c = fmm_case(500, 3, 6, 1);
  const auto r = compare(c.fmm, c.direct, c.pos, c.budgets);
  EXPECT_TRUE(bound_check(r, c.budgets).empty());
  EXPECT_GT(r.max_abs, 0.0);
}
