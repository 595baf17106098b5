#pragma once

// Multipole and local expansions of the complex velocity kernel
//
//   f(z) = sum_j gamma_j / (z - z_j),     u - i v = f(z) / (2 pi i).
//
// A multipole about c represents f(z) = sum_k a_k / (z - c)^(k+1) outside the
// source disk; a local about c represents f(z) = sum_m L_m (z - c)^m inside
// the target disk. Working with f directly (rather than the log potential)
// leaves no a_0 log term, so every translation is a binomial convolution.

#include <algorithm>
#include <cmath>
#include <complex>
#include <concepts>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "vfmm/errors.hpp"
#include "vfmm/model.hpp"

namespace vfmm {

/// Largest supported truncation order. Binomials up to C(2p+1, k) and the
/// scaled powers in m2l stay well inside double range at this cap.
inline constexpr int kMaxOrder = 60;

enum class ExpansionKind { multipole, local };

template <std::floating_point Real>
struct BasicExpansion {
  using complex_type = std::complex<Real>;

  ExpansionKind kind{ExpansionKind::multipole};
  complex_type center{};
  std::vector<complex_type> coeffs;  ///< length p + 1

  static BasicExpansion zero(ExpansionKind kind, complex_type center, int p) {
    return {kind, center, std::vector<complex_type>(static_cast<std::size_t>(p) + 1)};
  }

  int order() const { return static_cast<int>(coeffs.size()) - 1; }

  /// Coefficient-wise sum; both sides must share kind, center and order.
  BasicExpansion& operator+=(const BasicExpansion& o) {
    if (o.kind != kind || o.center != center || o.coeffs.size() != coeffs.size()) {
      throw InvalidArgument("expansion sum requires matching kind, center and order");
    }
    for (std::size_t k = 0; k < coeffs.size(); ++k) coeffs[k] += o.coeffs[k];
    return *this;
  }
};

using Expansion = BasicExpansion<double>;
using Complex = std::complex<double>;

namespace detail {

inline void check_order(int p) {
  if (p < 0 || p > kMaxOrder) {
    throw InvalidArgument("expansion order p must be in [0, " + std::to_string(kMaxOrder) +
                          "], got " + std::to_string(p));
  }
}

template <std::floating_point Real>
struct PascalTable {
  static constexpr int kRows = 2 * kMaxOrder + 2;
  std::vector<Real> values;  // row-major, kRows x kRows

  PascalTable() : values(static_cast<std::size_t>(kRows) * kRows, Real(0)) {
    for (int n = 0; n < kRows; ++n) {
      at(n, 0) = Real(1);
      for (int k = 1; k <= n; ++k) at(n, k) = at(n - 1, k - 1) + (k < n ? at(n - 1, k) : Real(0));
    }
  }
  Real& at(int n, int k) { return values[static_cast<std::size_t>(n) * kRows + k]; }
  Real at(int n, int k) const { return values[static_cast<std::size_t>(n) * kRows + k]; }
};

}  // namespace detail

namespace detail {

template <std::floating_point Real>
const PascalTable<Real>& pascal() {
  static const PascalTable<Real> table;
  return table;
}

}  // namespace detail

/// C(n, k) for 0 <= k <= n <= 2 * kMaxOrder + 1, from a table built once.
template <std::floating_point Real = double>
Real binomial(int n, int k) {
  return detail::pascal<Real>().at(n, k);
}

template <std::floating_point Real>
std::complex<Real> to_complex(Real x, Real y) {
  return {x, y};
}

/// a_k = sum_j gamma_j (z_j - center)^k over the listed particles.
template <std::floating_point Real, typename IndexRange>
BasicExpansion<Real> p2m(std::span<const BasicParticle<Real>> particles, const IndexRange& indices,
                         std::complex<Real> center, int p) {
  detail::check_order(p);
  auto out = BasicExpansion<Real>::zero(ExpansionKind::multipole, center, p);
  for (auto idx : indices) {
    const auto& s = particles[static_cast<std::size_t>(idx)];
    const std::complex<Real> w = std::complex<Real>(s.x, s.y) - center;
    std::complex<Real> term(s.gamma, Real(0));
    for (int k = 0; k <= p; ++k) {
      out.coeffs[k] += term;
      term *= w;
    }
  }
  return out;
}

template <std::floating_point Real>
BasicExpansion<Real> p2m(std::span<const BasicParticle<Real>> particles, std::complex<Real> center,
                         int p) {
  detail::check_order(p);
  auto out = BasicExpansion<Real>::zero(ExpansionKind::multipole, center, p);
  for (const auto& s : particles) {
    const std::complex<Real> w = std::complex<Real>(s.x, s.y) - center;
    std::complex<Real> term(s.gamma, Real(0));
    for (int k = 0; k <= p; ++k) {
      out.coeffs[k] += term;
      term *= w;
    }
  }
  return out;
}

inline Expansion p2m(std::span<const Particle> particles, Complex center, int p) {
  return p2m<double>(particles, center, p);
}

/// Re-centers a multipole: b_m = sum_{k<=m} C(m,k) a_k d^(m-k), with
/// d = child.center - new_center. Coefficients up to p are exact moments.
template <std::floating_point Real>
BasicExpansion<Real> m2m(const BasicExpansion<Real>& child, std::complex<Real> new_center, int p) {
  detail::check_order(p);
  if (child.kind != ExpansionKind::multipole) throw InvalidArgument("m2m: input must be a multipole");
  auto out = BasicExpansion<Real>::zero(ExpansionKind::multipole, new_center, p);
  const std::complex<Real> d = child.center - new_center;
  std::vector<std::complex<Real>> dpow(static_cast<std::size_t>(p) + 1);
  dpow[0] = Real(1);
  for (int k = 1; k <= p; ++k) dpow[k] = dpow[k - 1] * d;
  const int kmax = std::min(p, child.order());
  for (int m = 0; m <= p; ++m) {
    std::complex<Real> acc{};
    for (int k = 0; k <= std::min(m, kmax); ++k) acc += binomial<Real>(m, k) * child.coeffs[k] * dpow[m - k];
    out.coeffs[m] = acc;
  }
  return out;
}

/// Multipole about source.center -> local about local_center:
///   L_m = (-1)^m sum_k C(k+m, k) a_k / t^(k+m+1),  t = local_center - source.center.
/// Evaluated in the scaled form alpha_k = a_k / t^k to keep powers of 1/t in
/// range for small cells.
template <std::floating_point Real>
BasicExpansion<Real> m2l(const BasicExpansion<Real>& source, std::complex<Real> local_center, int p) {
  detail::check_order(p);
  if (source.kind != ExpansionKind::multipole) throw InvalidArgument("m2l: input must be a multipole");
  const std::complex<Real> t = local_center - source.center;
  if (t == std::complex<Real>{}) throw CoincidentCenters("m2l: source and local centers coincide");
  const std::complex<Real> inv_t = Real(1) / t;
  const int kmax = std::min(p, source.order());

  std::vector<std::complex<Real>> alpha(static_cast<std::size_t>(kmax) + 1);
  std::complex<Real> ip(Real(1));
  for (int k = 0; k <= kmax; ++k) {
    alpha[k] = source.coeffs[k] * ip;
    ip *= inv_t;
  }

  auto out = BasicExpansion<Real>::zero(ExpansionKind::local, local_center, p);
  // C(k+m, k) sits at stride kRows + 1 from C(m, 0)
  const auto& pascal = detail::pascal<Real>();
  constexpr std::size_t stride = detail::PascalTable<Real>::kRows + 1;
  std::complex<Real> scale = inv_t;  // (1/t)^(m+1)
  for (int m = 0; m <= p; ++m) {
    const Real* c = &pascal.values[static_cast<std::size_t>(m) * detail::PascalTable<Real>::kRows];
    Real re = 0, im = 0;
    for (int k = 0; k <= kmax; ++k) {
      re += c[k * stride] * alpha[k].real();
      im += c[k * stride] * alpha[k].imag();
    }
    const std::complex<Real> acc(m % 2 == 0 ? re : -re, m % 2 == 0 ? im : -im);
    out.coeffs[m] = acc * scale;
    scale *= inv_t;
  }
  return out;
}

/// Re-centers a local polynomial: L'_n = sum_{m>=n} C(m,n) L_m s^(m-n),
/// s = new_center - parent.center. Exact up to round-off.
template <std::floating_point Real>
BasicExpansion<Real> l2l(const BasicExpansion<Real>& parent_local, std::complex<Real> new_center, int p) {
  detail::check_order(p);
  if (parent_local.kind != ExpansionKind::local) throw InvalidArgument("l2l: input must be a local expansion");
  const int mmax = std::min(p, parent_local.order());
  const std::complex<Real> s = new_center - parent_local.center;
  std::vector<std::complex<Real>> spow(static_cast<std::size_t>(mmax) + 1);
  spow[0] = Real(1);
  for (int k = 1; k <= mmax; ++k) spow[k] = spow[k - 1] * s;
  auto out = BasicExpansion<Real>::zero(ExpansionKind::local, new_center, p);
  for (int n = 0; n <= mmax; ++n) {
    std::complex<Real> acc{};
    for (int m = n; m <= mmax; ++m) acc += binomial<Real>(m, n) * parent_local.coeffs[m] * spow[m - n];
    out.coeffs[n] = acc;
  }
  return out;
}

/// sum_k a_k / (z - c)^(k+1), Horner in w = 1/(z - c).
template <std::floating_point Real>
std::complex<Real> eval_multipole(const BasicExpansion<Real>& e, std::complex<Real> z) {
  const std::complex<Real> dz = z - e.center;
  if (dz == std::complex<Real>{}) throw SingularEvaluation("eval_multipole: z equals the expansion center");
  const std::complex<Real> w = Real(1) / dz;
  std::complex<Real> acc{};
  for (auto it = e.coeffs.rbegin(); it != e.coeffs.rend(); ++it) acc = acc * w + *it;
  return acc * w;
}

/// sum_m L_m (z - c)^m, Horner.
template <std::floating_point Real>
std::complex<Real> eval_local(const BasicExpansion<Real>& e, std::complex<Real> z) {
  const std::complex<Real> dz = z - e.center;
  std::complex<Real> acc{};
  for (auto it = e.coeffs.rbegin(); it != e.coeffs.rend(); ++it) acc = acc * dz + *it;
  return acc;
}

/// u - i v = f / (2 pi i), i.e. (u, v) = (Im f, Re f) / (2 pi).
template <std::floating_point Real>
BasicVelocity<Real> f_to_velocity(std::complex<Real> f) {
  const Real inv = Real(1) / (Real(2) * std::numbers::pi_v<Real>);
  return {f.imag() * inv, f.real() * inv};
}

/// Inverse of f_to_velocity; |f| = 2 pi |velocity|.
template <std::floating_point Real>
std::complex<Real> velocity_to_f(const BasicVelocity<Real>& v) {
  const Real s = Real(2) * std::numbers::pi_v<Real>;
  return {v.v * s, v.u * s};
}

// ---------------------------------------------------------------------------
// Truncation error bounds.

struct BoundParams {
  double amplitude{};  ///< sum of |gamma| over the source cell
  double rho{};        ///< source-disk radius / distance to nearest evaluation point
};

/// Geometric tail A rho^(p+1) / (1 - rho).
inline double truncation_bound(const BoundParams& params, int p) {
  if (!(params.rho > 0.0 && params.rho < 1.0)) {
    throw InvalidArgument("truncation_bound: rho must lie in (0, 1), got " + format_double(params.rho));
  }
  if (params.amplitude < 0.0) throw InvalidArgument("truncation_bound: amplitude must be >= 0");
  if (p < 0) throw InvalidArgument("truncation_bound: p must be >= 0");
  return params.amplitude * std::pow(params.rho, p + 1) / (1.0 - params.rho);
}

/// Bound on |f - eval_multipole| at distance `distance` from the center of a
/// source disk of radius `radius`. The tail of sum_k a_k / (z - c)^(k+1) adds a
/// 1/distance factor to the geometric tail.
inline double multipole_error_bound(double amplitude, double radius, double distance, int p) {
  if (!(distance > radius)) throw InvalidArgument("multipole_error_bound: distance must exceed radius");
  if (radius <= 0.0) return 0.0;
  return truncation_bound({amplitude, radius / distance}, p) / distance;
}

/// Bound on |f - eval_local(m2l(multipole))| for sources within
/// `source_radius` of one center and targets within `target_radius` of the
/// other, centers `distance` apart. Dropped terms are those with k > p
/// (multipole side) or m > p (local side); summing the two tails exactly:
///
///   sum_{k>p} r_s^k / (D - r_t)^(k+1)  +  sum_{m>p} r_t^m / (D - r_s)^(m+1).
inline double m2l_error_bound(double amplitude, double source_radius, double target_radius,
                              double distance, int p) {
  if (!(distance > source_radius + target_radius)) {
    throw InvalidArgument("m2l_error_bound: disks overlap");
  }
  double total = 0.0;
  if (source_radius > 0.0) {
    const double d = distance - target_radius;
    total += truncation_bound({amplitude, source_radius / d}, p) / d;
  }
  if (target_radius > 0.0) {
    const double d = distance - source_radius;
    total += truncation_bound({amplitude, target_radius / d}, p) / d;
  }
  return total;
}

}  // namespace vfmm
