#pragma once

// Biot-Savart kernels for 2D vortex particles and the O(N^2) direct sum.
// The direct sum is both the near-field kernel of the FMM and the reference
// every error measurement is taken against.

#include <cmath>
#include <concepts>
#include <numbers>
#include <span>
#include <string_view>
#include <vector>

#include "vfmm/model.hpp"

namespace vfmm {

enum class KernelKind { point_vortex, gaussian_blob };

inline std::string to_string(KernelKind k) {
  return k == KernelKind::point_vortex ? "point" : "gaussian";
}

/// Accepts the CLI spellings `point` / `gaussian` as well as the enum names.
inline KernelKind parse_kernel(std::string_view s) {
  if (s == "point" || s == "point_vortex") return KernelKind::point_vortex;
  if (s == "gaussian" || s == "gaussian_blob") return KernelKind::gaussian_blob;
  throw InvalidArgument("unknown kernel '" + std::string(s) + "'");
}

/// Core smoothing for the Gaussian blob: 1 - exp(-r^2 / (2 sigma^2)).
/// Kept in one place so a different cutoff can be dropped in.
template <std::floating_point Real>
Real gaussian_cutoff(Real r2, Real sigma) {
  return -std::expm1(-r2 / (Real(2) * sigma * sigma));
}

/// Velocity induced at (x, y) by one particle. A target exactly on the source
/// gets zero for both kernels.
template <std::floating_point Real>
BasicVelocity<Real> kernel_eval(Real x, Real y, const BasicParticle<Real>& src, KernelKind kind) {
  const Real dx = x - src.x;
  const Real dy = y - src.y;
  const Real r2 = dx * dx + dy * dy;
  if (r2 == Real(0)) return {};
  Real factor = src.gamma / (Real(2) * std::numbers::pi_v<Real> * r2);
  if (kind == KernelKind::gaussian_blob) factor *= gaussian_cutoff(r2, src.sigma);
  return {-dy * factor, dx * factor};
}

inline Velocity kernel_eval(Point target, const Particle& src, KernelKind kind) {
  return kernel_eval(target.x, target.y, src, kind);
}

/// result[i] = sum over sources, in source order, of kernel_eval(targets[i], .).
inline std::vector<Velocity> velocity_direct(std::span<const Point> targets,
                                             std::span<const Particle> sources, KernelKind kind) {
  std::vector<Velocity> out(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    Velocity acc;
    for (const auto& s : sources) acc += kernel_eval(targets[i].x, targets[i].y, s, kind);
    out[i] = acc;
  }
  return out;
}

inline std::vector<Point> positions(std::span<const Particle> particles) {
  std::vector<Point> out;
  out.reserve(particles.size());
  for (const auto& p : particles) out.push_back({p.x, p.y});
  return out;
}

/// Velocities at the particles themselves.
inline std::vector<Velocity> velocity_direct(std::span<const Particle> particles, KernelKind kind) {
  const auto targets = positions(particles);
  return velocity_direct(targets, particles, kind);
}

}  // namespace vfmm
