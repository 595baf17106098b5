#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "vfmm/kernels.hpp"

using namespace vfmm;

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

TEST(KernelEval, PointVortexUnitDistance) {
  const auto v = kernel_eval({1.0, 0.0}, Particle{0, 0, kTwoPi, 0}, KernelKind::point_vortex);
  EXPECT_DOUBLE_EQ(v.u, 0.0);
  EXPECT_DOUBLE_EQ(v.v, 1.0);
}

TEST(KernelEval, CoincidentTargetIsZero) {
  const Particle s{0, 0, 5.0, 0.1};
  EXPECT_EQ(kernel_eval({0.0, 0.0}, s, KernelKind::gaussian_blob), Velocity{});
  EXPECT_EQ(kernel_eval({0.0, 0.0}, s, KernelKind::point_vortex), Velocity{});
}

TEST(KernelEval, GaussianBlobUnitDistance) {
  // 1 - exp(-1/2) to 40 digits: 0.39346934028736657639...
  const auto v = kernel_eval({1.0, 0.0}, Particle{0, 0, kTwoPi, 1.0}, KernelKind::gaussian_blob);
  EXPECT_DOUBLE_EQ(v.u, 0.0);
  EXPECT_NEAR(v.v, 0.3934693402873665764, 1e-16);
}

TEST(KernelEval, BlobMatchesPointFarFromCore) {
  const Particle s{0.2, -0.1, 1.7, 0.01};
  // r = 10 sigma along a diagonal
  const double r = 0.1;
  const Point t{0.2 + r / std::sqrt(2.0), -0.1 + r / std::sqrt(2.0)};
  const auto b = kernel_eval(t, s, KernelKind::gaussian_blob);
  const auto p = kernel_eval(t, s, KernelKind::point_vortex);
  const double bound = std::abs(s.gamma) / (kTwoPi * r) * std::exp(-50.0);
  EXPECT_LE((b - p).norm(), bound + 1e-20 * p.norm());
  EXPECT_LE((b - p).norm() / p.norm(), 1e-20);
}

TEST(KernelEval, BlobNeverExceedsPoint) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 200; ++i) {
    const Particle s{u(rng), u(rng), u(rng), 0.05};
    const Point t{u(rng), u(rng)};
    EXPECT_LE(kernel_eval(t, s, KernelKind::gaussian_blob).norm(), kernel_eval(t, s, KernelKind::point_vortex).norm());
  }
}

TEST(VelocityDirect, SymmetricPairCancelsAtMidpoint) {
  const std::vector<Particle> src{{-1, 0, 1, 0}, {1, 0, 1, 0}};
  const std::vector<Point> tgt{{0, 0}};
  const auto v = velocity_direct(tgt, src, KernelKind::point_vortex);
  EXPECT_DOUBLE_EQ(v[0].u, 0.0);
  EXPECT_DOUBLE_EQ(v[0].v, 0.0);
}

TEST(VelocityDirect, SingleSourceEqualsKernel) {
  const std::vector<Particle> src{{0.3, 0.4, -0.7, 0.02}};
  const std::vector<Point> tgt{{0.1, 0.9}, {0.5, 0.5}};
  for (auto kind : {KernelKind::point_vortex, KernelKind::gaussian_blob}) {
    const auto v = velocity_direct(tgt, src, kind);
    for (std::size_t i = 0; i < tgt.size(); ++i) EXPECT_EQ(v[i], kernel_eval(tgt[i], src[0], kind));
  }
}

TEST(VelocityDirect, MatchesIndependentDoubleLoopBitForBit) {
  const auto ps = generate_particles(Distribution::uniform_random, 100, 42, Domain::unit(), 0.01);
  const auto v = velocity_direct(ps, KernelKind::point_vortex);
  for (std::size_t i = 0; i < ps.size(); ++i) {
    double u = 0.0, w = 0.0;
    for (std::size_t j = 0; j < ps.size(); ++j) {
      const double dx = ps[i].x - ps[j].x;
      const double dy = ps[i].y - ps[j].y;
      const double r2 = dx * dx + dy * dy;
      if (r2 == 0.0) continue;
      const double f = ps[j].gamma / (2.0 * std::numbers::pi * r2);
      u += -dy * f;
      w += dx * f;
    }
    EXPECT_EQ(v[i].u, u);
    EXPECT_EQ(v[i].v, w);
  }
}

TEST(VelocityDirect, PairInducesOppositeMotion) {
  const Particle a{0.2, 0.3, 1.3, 0};
  const Particle b{0.7, 0.1, 1.3, 0};
  const auto va = kernel_eval({a.x, a.y}, b, KernelKind::point_vortex);
  const auto vb = kernel_eval({b.x, b.y}, a, KernelKind::point_vortex);
  EXPECT_DOUBLE_EQ(va.u, -vb.u);
  EXPECT_DOUBLE_EQ(va.v, -vb.v);
}

TEST(VelocityDirect, SourcePermutationChangesLittle) {
  auto ps = generate_particles(Distribution::uniform_random, 64, 5, Domain::unit(), 0.01);
  const auto tg = positions(ps);
  const auto v0 = velocity_direct(tg, ps, KernelKind::point_vortex);
  std::mt19937_64 rng(1);
  std::shuffle(ps.begin(), ps.end(), rng);
  const auto v1 = velocity_direct(tg, ps, KernelKind::point_vortex);
  double scale = 0.0;
  for (const auto& v : v0) scale = std::max(scale, v.norm());
  for (std::size_t i = 0; i < tg.size(); ++i) EXPECT_LE((v0[i] - v1[i]).norm(), 1e-13 * scale);
}

TEST(VelocityDirect, LinearInCirculation) {
  const auto ps = generate_particles(Distribution::uniform_random, 50, 9, Domain::unit(), 0.02);
  auto scaled = ps;
  const double c = 4.0;  // power of two: scaling is exact
  for (auto& p : scaled) p.gamma *= c;
  for (auto kind : {KernelKind::point_vortex, KernelKind::gaussian_blob}) {
    const auto a = velocity_direct(ps, kind);
    const auto b = velocity_direct(scaled, kind);
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_EQ(b[i].u, c * a[i].u);
      EXPECT_EQ(b[i].v, c * a[i].v);
    }
  }
  // non-power-of-two scale: within an ulp-level tolerance
  auto s3 = ps;
  for (auto& p : s3) p.gamma *= 3.0;
  const auto a = velocity_direct(ps, KernelKind::point_vortex);
  const auto b = velocity_direct(s3, KernelKind::point_vortex);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_LE((b[i] - Velocity{3 * a[i].u, 3 * a[i].v}).norm(), 1e-13 * b[i].norm());
}

TEST(Kernel, ParseNames) {
  EXPECT_EQ(parse_kernel("point"), KernelKind::point_vortex);
  EXPECT_EQ(parse_kernel("gaussian"), KernelKind::gaussian_blob);
  EXPECT_THROW(parse_kernel("algebraic"), InvalidArgument);
}
