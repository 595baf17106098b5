#pragma once

// Uniform-tree FMM for the 2D vortex kernel.
//
//   upward:    P2M at leaves, M2M up to level 2
//   translate: M2L from every non-empty interaction-list member, levels 2..l
//   downward:  L2L from parent, levels 3..l
//   evaluate:  L2P at each target + direct sum over the 3x3 leaf block
//
// Levels 0 and 1 carry no expansions since their interaction lists are empty.
// Regularization is applied only in the near field; beyond a leaf neighbor a
// Gaussian blob is indistinguishable from a point vortex as long as sigma is
// small against the leaf size (see kSigmaGuard).

#include <chrono>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "vfmm/expansions.hpp"
#include "vfmm/kernels.hpp"
#include "vfmm/model.hpp"
#include "vfmm/quadtree.hpp"

namespace vfmm {

struct FmmConfig {
  int levels{3};
  int order{8};
  KernelKind kernel{KernelKind::point_vortex};
};

/// Phase timings in milliseconds from a monotonic clock, plus exact
/// operation counts.
struct FmmRunStats {
  std::size_t n{0};
  int levels{0};
  int order{0};
  double t_build{0}, t_upward{0}, t_m2l{0}, t_downward{0}, t_far{0}, t_near{0}, t_total{0};
  std::size_t near_pair_count{0};
  std::size_t m2l_count{0};
  bool sigma_guard_exceeded{false};
  std::vector<std::string> warnings;
};

/// Largest sigma / leaf-half-width ratio for which the far field may ignore
/// the blob core.
inline constexpr double kSigmaGuard = 0.5;

/// One expansion per cell for levels 2..l, indexed [level][linear_index].
class ExpansionField {
public:
  ExpansionField() = default;
  ExpansionField(const Tree& tree, ExpansionKind kind, int p) : levels_(tree.levels() + 1) {
    for (int lev = 2; lev <= tree.levels(); ++lev) {
      auto& row = levels_[lev];
      row.reserve(cells_at_level(lev));
      for (std::size_t k = 0; k < cells_at_level(lev); ++k) {
        const Point c = cell_center(cell_from_linear(lev, k), tree.domain());
        row.push_back(Expansion::zero(kind, {c.x, c.y}, p));
      }
    }
  }

  Expansion& at(const CellId& id) { return levels_[id.level][linear_index(id)]; }
  const Expansion& at(const CellId& id) const { return levels_[id.level][linear_index(id)]; }

private:
  std::vector<std::vector<Expansion>> levels_;
};

namespace detail {

using Clock = std::chrono::steady_clock;

inline double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

inline Complex center_of(const CellId& id, const Domain& domain) {
  const Point c = cell_center(id, domain);
  return {c.x, c.y};
}

inline void check_config(const FmmConfig& config) {
  if (config.levels < 2) throw InvalidArgument("fmm: levels must be >= 2");
  if (config.order < 0 || config.order > kMaxOrder) {
    throw InvalidArgument("fmm: order must be in [0, " + std::to_string(kMaxOrder) + "]");
  }
}

}  // namespace detail

/// Multipoles for every cell at levels 2..l. Empty cells keep the zero
/// expansion; parents sum m2m of their non-empty children in row-major order.
inline ExpansionField upward_pass(const Tree& tree, std::span<const Particle> particles, int p) {
  detail::check_order(p);
  ExpansionField field(tree, ExpansionKind::multipole, p);
  const Domain& dom = tree.domain();
  const int l = tree.levels();
  for (std::size_t k = 0; k < cells_at_level(l); ++k) {
    const CellId leaf = cell_from_linear(l, k);
    if (tree.count(leaf) == 0) continue;
    field.at(leaf) = p2m<double>(particles, tree.particles_in(leaf), detail::center_of(leaf, dom), p);
  }
  for (int lev = l - 1; lev >= 2; --lev) {
    for (std::size_t k = 0; k < cells_at_level(lev); ++k) {
      const CellId id = cell_from_linear(lev, k);
      if (tree.count(id) == 0) continue;
      auto& dst = field.at(id);
      for (const auto& child : children(id)) {
        if (tree.count(child) == 0) continue;
        dst += m2m(field.at(child), dst.center, p);
      }
    }
  }
  return field;
}

/// Locals for every cell at levels 2..l holding only the M2L contributions
/// from its own interaction list (non-empty members, row-major).
inline ExpansionField translate_pass(const Tree& tree, const ExpansionField& multipoles, int p,
                                     FmmRunStats* stats = nullptr) {
  detail::check_order(p);
  ExpansionField locals(tree, ExpansionKind::local, p);
  std::size_t count = 0;
  for (int lev = 2; lev <= tree.levels(); ++lev) {
    for (std::size_t k = 0; k < cells_at_level(lev); ++k) {
      const CellId id = cell_from_linear(lev, k);
      auto& dst = locals.at(id);
      for (const auto& src : interaction_list(id)) {
        if (tree.count(src) == 0) continue;
        dst += m2l(multipoles.at(src), dst.center, p);
        ++count;
      }
    }
  }
  if (stats) stats->m2l_count = count;
  return locals;
}

/// Adds each parent's completed local into its children, top-down from
/// level 3. Afterwards a leaf's local covers every source outside its 3x3
/// neighborhood.
inline void downward_pass(const Tree& tree, ExpansionField& locals, int p) {
  detail::check_order(p);
  for (int lev = 3; lev <= tree.levels(); ++lev) {
    for (std::size_t k = 0; k < cells_at_level(lev); ++k) {
      const CellId id = cell_from_linear(lev, k);
      auto& dst = locals.at(id);
      dst += l2l(locals.at(parent(id)), dst.center, p);
    }
  }
}

namespace detail {

// Direct sum over the sources in the 3x3 leaf block around `leaf`, leaves in
// row-major order, ascending particle index inside a leaf. `skip` is the
// target's own index when targets are the particles themselves.
inline Velocity near_sum(const Tree& tree, std::span<const Particle> particles, Point target,
                         const CellId& leaf, std::size_t skip, KernelKind kind, std::size_t& pairs) {
  const int n = cells_per_side(leaf.level);
  Velocity acc;
  for (int y = leaf.iy - 1; y <= leaf.iy + 1; ++y) {
    if (y < 0 || y >= n) continue;
    for (int x = leaf.ix - 1; x <= leaf.ix + 1; ++x) {
      if (x < 0 || x >= n) continue;
      for (auto j : tree.particles_in({leaf.level, x, y})) {
        if (j == skip) continue;
        acc += kernel_eval(target.x, target.y, particles[j], kind);
        ++pairs;
      }
    }
  }
  return acc;
}

}  // namespace detail

/// Near-field velocity at each particle: direct interactions with every other
/// particle in its own leaf and the adjacent leaves.
inline std::vector<Velocity> near_field(const Tree& tree, std::span<const Particle> particles,
                                        KernelKind kind, FmmRunStats* stats = nullptr) {
  std::vector<Velocity> out(particles.size());
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < particles.size(); ++i) {
    out[i] = detail::near_sum(tree, particles, {particles[i].x, particles[i].y}, tree.leaf_of(i), i,
                              kind, pairs);
  }
  if (stats) stats->near_pair_count = pairs;
  return out;
}

/// L2P: the leaf local evaluated at each particle, converted to velocity.
inline std::vector<Velocity> far_field(const Tree& tree, std::span<const Particle> particles,
                                       const ExpansionField& locals) {
  std::vector<Velocity> out(particles.size());
  for (std::size_t i = 0; i < particles.size(); ++i) {
    out[i] = f_to_velocity(eval_local(locals.at(tree.leaf_of(i)), Complex(particles[i].x, particles[i].y)));
  }
  return out;
}

/// Leaf local f-values at each particle (before the velocity conversion).
inline std::vector<Complex> far_field_f(const Tree& tree, std::span<const Particle> particles,
                                        const ExpansionField& locals) {
  std::vector<Complex> out(particles.size());
  for (std::size_t i = 0; i < particles.size(); ++i) {
    out[i] = eval_local(locals.at(tree.leaf_of(i)), Complex(particles[i].x, particles[i].y));
  }
  return out;
}

struct FmmResult {
  std::vector<Velocity> velocities;
  FmmRunStats stats;
};

namespace detail {

inline void check_sources(std::span<const Particle> particles, const Tree& tree, const FmmConfig& config,
                          FmmRunStats& stats) {
  if (config.kernel != KernelKind::gaussian_blob) return;
  double smax = 0.0;
  for (std::size_t i = 0; i < particles.size(); ++i) {
    if (!(particles[i].sigma > 0.0)) {
      throw InvalidArgument("gaussian kernel requires sigma > 0 (particle " + std::to_string(i) + ")");
    }
    smax = std::max(smax, particles[i].sigma);
  }
  const double hw = half_width(tree.levels(), tree.domain());
  if (smax > kSigmaGuard * hw) {
    stats.sigma_guard_exceeded = true;
    stats.warnings.push_back("sigma " + format_double(smax) + " exceeds leaf half-width/2 (" +
                             format_double(kSigmaGuard * hw) +
                             "); far-field blob correction is not negligible");
  }
}

}  // namespace detail

/// Velocities induced at the particles themselves.
inline FmmResult evaluate(std::span<const Particle> particles, const Domain& domain, const FmmConfig& config) {
  detail::check_config(config);
  if (particles.empty()) throw InvalidArgument("fmm: no particles");

  FmmResult res;
  auto& st = res.stats;
  st.n = particles.size();
  st.levels = config.levels;
  st.order = config.order;
  const auto t0 = detail::Clock::now();

  auto t = detail::Clock::now();
  const Tree tree = build_tree(particles, config.levels, domain);
  st.t_build = detail::elapsed_ms(t);
  detail::check_sources(particles, tree, config, st);

  t = detail::Clock::now();
  const ExpansionField multipoles = upward_pass(tree, particles, config.order);
  st.t_upward = detail::elapsed_ms(t);

  t = detail::Clock::now();
  ExpansionField locals = translate_pass(tree, multipoles, config.order, &st);
  st.t_m2l = detail::elapsed_ms(t);

  t = detail::Clock::now();
  downward_pass(tree, locals, config.order);
  st.t_downward = detail::elapsed_ms(t);

  t = detail::Clock::now();
  res.velocities = far_field(tree, particles, locals);
  st.t_far = detail::elapsed_ms(t);

  t = detail::Clock::now();
  const auto near = near_field(tree, particles, config.kernel, &st);
  for (std::size_t i = 0; i < near.size(); ++i) res.velocities[i] += near[i];
  st.t_near = detail::elapsed_ms(t);

  st.t_total = detail::elapsed_ms(t0);
  return res;
}

/// Velocities at arbitrary targets inside the domain. A target that coincides
/// with a source receives no contribution from it.
inline FmmResult evaluate_at(std::span<const Point> targets, std::span<const Particle> particles,
                             const Domain& domain, const FmmConfig& config) {
  detail::check_config(config);
  if (particles.empty()) throw InvalidArgument("fmm: no particles");
  FmmResult res;
  auto& st = res.stats;
  st.n = particles.size();
  st.levels = config.levels;
  st.order = config.order;
  const auto t0 = detail::Clock::now();

  const Tree tree = build_tree(particles, config.levels, domain);
  detail::check_sources(particles, tree, config, st);
  const ExpansionField multipoles = upward_pass(tree, particles, config.order);
  ExpansionField locals = translate_pass(tree, multipoles, config.order, &st);
  downward_pass(tree, locals, config.order);

  res.velocities.resize(targets.size());
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const CellId leaf = cell_index(targets[i], config.levels, domain);
    Velocity v = f_to_velocity(eval_local(locals.at(leaf), Complex(targets[i].x, targets[i].y)));
    v += detail::near_sum(tree, particles, targets[i], leaf, static_cast<std::size_t>(-1), config.kernel, pairs);
    res.velocities[i] = v;
  }
  st.near_pair_count = pairs;
  st.t_total = detail::elapsed_ms(t0);
  return res;
}

// ---------------------------------------------------------------------------
// Per-target error budgets.

/// Relative floating-point allowance added to every M2L budget term.
inline constexpr double kRoundoffAllowance = 1e-12;

/// Upper bound on |f_fmm - f_direct| at each particle: the sum, over every
/// M2L translation that reaches the particle's leaf, of m2l_error_bound for
/// that cell pair (radius = half-diagonal of the cells, amplitude = sum of
/// |gamma| in the source cell). With the Gaussian kernel the far-field
/// point-vortex approximation adds A exp(-g^2 / 2 sigma^2) / g per pair,
/// g being the gap between the two cell squares.
inline std::vector<double> error_budgets(const Tree& tree, std::span<const Particle> particles,
                                         const FmmConfig& config) {
  detail::check_config(config);
  const int l = tree.levels();
  const Domain& dom = tree.domain();

  // sum |gamma| per cell, leaves up
  std::vector<std::vector<double>> amp(static_cast<std::size_t>(l) + 1);
  amp[l].assign(cells_at_level(l), 0.0);
  for (std::size_t i = 0; i < particles.size(); ++i) amp[l][linear_index(tree.leaf_of(i))] += std::abs(particles[i].gamma);
  for (int lev = l - 1; lev >= 2; --lev) {
    amp[lev].assign(cells_at_level(lev), 0.0);
    for (std::size_t k = 0; k < cells_at_level(lev + 1); ++k) {
      amp[lev][linear_index(parent(cell_from_linear(lev + 1, k)))] += amp[lev + 1][k];
    }
  }
  double smax = 0.0;
  if (config.kernel == KernelKind::gaussian_blob) {
    for (const auto& p : particles) smax = std::max(smax, p.sigma);
  }

  // Budget contributed at each cell by its own interaction list.
  std::vector<std::vector<double>> own(static_cast<std::size_t>(l) + 1);
  for (int lev = 2; lev <= l; ++lev) {
    own[lev].assign(cells_at_level(lev), 0.0);
    const double hw = half_width(lev, dom);
    const double radius = std::sqrt(2.0) * hw;
    for (std::size_t k = 0; k < cells_at_level(lev); ++k) {
      const CellId id = cell_from_linear(lev, k);
      const Point c = cell_center(id, dom);
      double sum = 0.0;
      for (const auto& src : interaction_list(id)) {
        const double a = amp[lev][linear_index(src)];
        if (a == 0.0) continue;
        const Point s = cell_center(src, dom);
        const double dx = std::abs(c.x - s.x);
        const double dy = std::abs(c.y - s.y);
        const double dist = std::hypot(dx, dy);
        sum += m2l_error_bound(a, radius, radius, dist, config.order);
        sum += kRoundoffAllowance * a / (dist - 2.0 * radius);
        if (smax > 0.0) {
          const double gap = std::hypot(std::max(0.0, dx - 2 * hw), std::max(0.0, dy - 2 * hw));
          sum += a * std::exp(-gap * gap / (2.0 * smax * smax)) / gap;
        }
      }
      own[lev][k] = sum;
    }
  }

  std::vector<double> out(particles.size());
  for (std::size_t i = 0; i < particles.size(); ++i) {
    double b = 0.0;
    CellId id = tree.leaf_of(i);
    for (; id.level >= 2; id = parent(id)) b += own[id.level][linear_index(id)];
    out[i] = b;
  }
  return out;
}

}  // namespace vfmm
