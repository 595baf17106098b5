#pragma once

// Particle, domain and velocity value types; seeded particle generators;
// particle CSV I/O.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "vfmm/errors.hpp"

namespace vfmm {

template <std::floating_point Real>
struct BasicParticle {
  Real x{};
  Real y{};
  Real gamma{};  ///< signed circulation
  Real sigma{};  ///< core radius; only read by the regularized kernel

  friend bool operator==(const BasicParticle&, const BasicParticle&) = default;
};

/// Square [xmin, xmin + side] x [ymin, ymin + side].
template <std::floating_point Real>
struct BasicDomain {
  Real xmin{0};
  Real ymin{0};
  Real side{1};

  Real xmax() const { return xmin + side; }
  Real ymax() const { return ymin + side; }

  bool contains(Real x, Real y) const {
    return x >= xmin && x <= xmax() && y >= ymin && y <= ymax();
  }

  static BasicDomain unit() { return {0, 0, 1}; }
};

/// Velocity (u, v). The complex form used by the expansions is u - i v.
template <std::floating_point Real>
struct BasicVelocity {
  Real u{};
  Real v{};

  BasicVelocity& operator+=(const BasicVelocity& o) {
    u += o.u;
    v += o.v;
    return *this;
  }
  friend BasicVelocity operator+(BasicVelocity a, const BasicVelocity& b) { return a += b; }
  friend BasicVelocity operator-(const BasicVelocity& a, const BasicVelocity& b) {
    return {a.u - b.u, a.v - b.v};
  }
  friend bool operator==(const BasicVelocity&, const BasicVelocity&) = default;

  Real norm() const { return std::hypot(u, v); }
};

using Particle = BasicParticle<double>;
using Domain = BasicDomain<double>;
using Velocity = BasicVelocity<double>;

struct Point {
  double x{};
  double y{};
  friend bool operator==(const Point&, const Point&) = default;
};

enum class Distribution { uniform_random, gaussian_patch, two_patches };

inline std::string to_string(Distribution d) {
  switch (d) {
    case Distribution::uniform_random: return "uniform_random";
    case Distribution::gaussian_patch: return "gaussian_patch";
    case Distribution::two_patches: return "two_patches";
  }
  return "?";
}

inline Distribution parse_distribution(std::string_view s) {
  if (s == "uniform_random") return Distribution::uniform_random;
  if (s == "gaussian_patch") return Distribution::gaussian_patch;
  if (s == "two_patches") return Distribution::two_patches;
  throw InvalidArgument("unknown distribution '" + std::string(s) + "'");
}

/// Identifies the pseudo-random stream behind generate_particles. Recorded in
/// sweep output so results can be traced to the generator that made them.
inline constexpr std::string_view kGeneratorId = "mt19937_64-u53";

namespace detail {

// Top 53 bits of a 64-bit draw scaled into [0, 1). Avoids the
// implementation-defined std::uniform_real_distribution.
inline double unit_draw(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double gaussian_weight(double x, double y, double cx, double cy, double s) {
  const double r2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
  return std::exp(-r2 / (2.0 * s * s));
}

}  // namespace detail

/// Draws `n` particles inside `domain`. The stream is fully determined by
/// `seed`: positions are drawn first (x then y per particle), then, for
/// uniform_random only, the circulations.
///
/// gaussian_patch weights each particle by a Gaussian of width side/8 about
/// the domain center; two_patches subtracts a second patch so that the
/// circulation is positive around (1/4, 1/2) and negative around (3/4, 1/2).
inline std::vector<Particle> generate_particles(Distribution distribution, std::size_t n,
                                                std::uint64_t seed, const Domain& domain,
                                                double sigma) {
  if (n == 0) throw InvalidArgument("generate_particles: n must be >= 1");
  if (!(domain.side > 0)) throw InvalidArgument("generate_particles: domain side must be > 0");

  std::mt19937_64 rng(seed);
  std::vector<Particle> out(n);
  for (auto& p : out) {
    p.x = domain.xmin + detail::unit_draw(rng) * domain.side;
    p.y = domain.ymin + detail::unit_draw(rng) * domain.side;
    p.sigma = sigma;
  }

  const double s = domain.side / 8.0;
  const double scale = domain.side * domain.side / static_cast<double>(n);
  switch (distribution) {
    case Distribution::uniform_random:
      for (auto& p : out) p.gamma = 2.0 * detail::unit_draw(rng) - 1.0;
      break;
    case Distribution::gaussian_patch: {
      const double cx = domain.xmin + 0.5 * domain.side;
      const double cy = domain.ymin + 0.5 * domain.side;
      for (auto& p : out) p.gamma = scale * detail::gaussian_weight(p.x, p.y, cx, cy, s);
      break;
    }
    case Distribution::two_patches: {
      const double cy = domain.ymin + 0.5 * domain.side;
      const double cx_pos = domain.xmin + 0.25 * domain.side;
      const double cx_neg = domain.xmin + 0.75 * domain.side;
      for (auto& p : out) {
        p.gamma = scale * (detail::gaussian_weight(p.x, p.y, cx_pos, cy, s) -
                           detail::gaussian_weight(p.x, p.y, cx_neg, cy, s));
      }
      break;
    }
  }
  return out;
}

/// Smallest axis-aligned square around the particles, padded by a relative
/// `margin` so no particle lies on the max edges.
inline Domain bounding_domain(std::span<const Particle> particles, double margin = 1e-6) {
  if (particles.empty()) return Domain::unit();
  auto [xlo, xhi] = std::minmax_element(particles.begin(), particles.end(),
                                        [](auto& a, auto& b) { return a.x < b.x; });
  auto [ylo, yhi] = std::minmax_element(particles.begin(), particles.end(),
                                        [](auto& a, auto& b) { return a.y < b.y; });
  double side = std::max(xhi->x - xlo->x, yhi->y - ylo->y);
  if (side <= 0) side = 1.0;
  const double pad = side * margin;
  return {xlo->x - pad, ylo->y - pad, side + 2 * pad};
}

// ---------------------------------------------------------------------------
// Particle CSV: header `x,y,gamma,sigma`, one particle per row.

inline constexpr std::string_view kParticleHeader = "x,y,gamma,sigma";

/// Shortest-safe decimal form: 17 significant digits, locale independent.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

/// Strict locale-independent parse of the whole field. Returns false on any
/// leftover characters.
inline bool parse_double(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline void write_particles(std::ostream& os, std::span<const Particle> particles) {
  os << kParticleHeader << '\n';
  for (const auto& p : particles) {
    os << format_double(p.x) << ',' << format_double(p.y) << ',' << format_double(p.gamma) << ','
       << format_double(p.sigma) << '\n';
  }
}

inline std::vector<Particle> read_particles(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || trim(line) != kParticleHeader) {
    throw FormatError("particle file must start with header '" + std::string(kParticleHeader) + "'");
  }
  std::vector<Particle> out;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    auto row = trim(line);
    if (row.empty()) continue;
    auto fields = split(row, ',');
    if (fields.size() != 4) throw ParseError("expected 4 fields, got " + std::to_string(fields.size()), lineno);
    double v[4];
    for (int k = 0; k < 4; ++k) {
      if (!parse_double(trim(fields[k]), v[k])) {
        throw ParseError("cannot parse '" + std::string(fields[k]) + "' as a number", lineno);
      }
    }
    out.push_back({v[0], v[1], v[2], v[3]});
  }
  return out;
}

inline void write_particles(const std::string& path, std::span<const Particle> particles) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  write_particles(os, particles);
  if (!os) throw IoError("write failed for '" + path + "'");
}

inline std::vector<Particle> read_particles(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path + "'");
  return read_particles(is);
}

}  // namespace vfmm
