#pragma once

// Uniform quadtree over a square domain. Level k has 2^k x 2^k cells, all
// logically present; cells are enumerated row-major (iy-major) per level.

#include <algorithm>
#include <array>
#include <cmath>
#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vfmm/errors.hpp"
#include "vfmm/model.hpp"

namespace vfmm {

struct CellId {
  int level{0};
  int ix{0};
  int iy{0};

  friend bool operator==(const CellId&, const CellId&) = default;
  // Row-major within a level.
  friend std::strong_ordering operator<=>(const CellId& a, const CellId& b) {
    if (auto c = a.level <=> b.level; c != 0) return c;
    if (auto c = a.iy <=> b.iy; c != 0) return c;
    return a.ix <=> b.ix;
  }
};

inline int cells_per_side(int level) { return 1 << level; }

inline std::size_t cells_at_level(int level) {
  return std::size_t{1} << (2 * level);
}

/// Row-major position of `id` within its level.
inline std::size_t linear_index(const CellId& id) {
  return static_cast<std::size_t>(id.iy) * static_cast<std::size_t>(cells_per_side(id.level)) +
         static_cast<std::size_t>(id.ix);
}

inline CellId cell_from_linear(int level, std::size_t linear) {
  const auto n = static_cast<std::size_t>(cells_per_side(level));
  return {level, static_cast<int>(linear % n), static_cast<int>(linear / n)};
}

inline bool is_valid(const CellId& id) {
  const int n = cells_per_side(id.level);
  return id.level >= 0 && id.ix >= 0 && id.ix < n && id.iy >= 0 && id.iy < n;
}

inline CellId parent(const CellId& id) { return {id.level - 1, id.ix / 2, id.iy / 2}; }

inline CellId ancestor(CellId id, int level) {
  while (id.level > level) id = parent(id);
  return id;
}

/// The four children in row-major order.
inline std::array<CellId, 4> children(const CellId& id) {
  const int l = id.level + 1;
  const int x = 2 * id.ix;
  const int y = 2 * id.iy;
  return {CellId{l, x, y}, CellId{l, x + 1, y}, CellId{l, x, y + 1}, CellId{l, x + 1, y + 1}};
}

/// Same level and Chebyshev index distance exactly 1.
inline bool adjacent(const CellId& a, const CellId& b) {
  if (a.level != b.level || a == b) return false;
  return std::abs(a.ix - b.ix) <= 1 && std::abs(a.iy - b.iy) <= 1;
}

/// Leaf-or-any-level index of a position. Cells are half-open [low, high)
/// except at the domain's max edges, which clamp into the last cell.
inline CellId cell_index(Point pos, int level, const Domain& domain) {
  if (!domain.contains(pos.x, pos.y)) {
    throw OutOfDomain("position (" + format_double(pos.x) + ", " + format_double(pos.y) +
                      ") outside domain");
  }
  const int n = cells_per_side(level);
  const double scale = static_cast<double>(n);
  auto axis = [&](double v, double lo) {
    int i = static_cast<int>(std::floor((v - lo) / domain.side * scale));
    return std::clamp(i, 0, n - 1);
  };
  return {level, axis(pos.x, domain.xmin), axis(pos.y, domain.ymin)};
}

inline double half_width(int level, const Domain& domain) {
  return domain.side / static_cast<double>(cells_per_side(level + 1));
}

inline Point cell_center(const CellId& id, const Domain& domain) {
  const double w = domain.side / static_cast<double>(cells_per_side(id.level));
  return {domain.xmin + (id.ix + 0.5) * w, domain.ymin + (id.iy + 0.5) * w};
}

/// Same-level cells at index distance <= 1 (excluding `id`), row-major.
inline std::vector<CellId> neighbors(const CellId& id) {
  std::vector<CellId> out;
  out.reserve(8);
  const int n = cells_per_side(id.level);
  for (int y = id.iy - 1; y <= id.iy + 1; ++y) {
    for (int x = id.ix - 1; x <= id.ix + 1; ++x) {
      if (x < 0 || y < 0 || x >= n || y >= n || (x == id.ix && y == id.iy)) continue;
      out.push_back({id.level, x, y});
    }
  }
  return out;
}

/// Children of the parent's neighbors that are not adjacent to `id`,
/// row-major. Empty for levels below 2.
inline std::vector<CellId> interaction_list(const CellId& id) {
  std::vector<CellId> out;
  if (id.level < 2) return out;
  const CellId par = parent(id);
  const int n = cells_per_side(id.level);
  // Children of the parent's 3x3 block form a 6x6 block; scan it row-major.
  const int x0 = 2 * (par.ix - 1);
  const int y0 = 2 * (par.iy - 1);
  out.reserve(27);
  for (int y = y0; y < y0 + 6; ++y) {
    for (int x = x0; x < x0 + 6; ++x) {
      if (x < 0 || y < 0 || x >= n || y >= n) continue;
      if (std::abs(x - id.ix) <= 1 && std::abs(y - id.iy) <= 1) continue;
      out.push_back({id.level, x, y});
    }
  }
  return out;
}

/// Geometry and contents of one cell. Expansions live in the FMM engine's
/// per-level fields, keyed by linear_index.
struct Cell {
  CellId id;
  Point center;
  double half_width{};
  std::span<const std::uint32_t> particle_indices;  ///< empty for non-leaf cells
};

/// Immutable after build_tree. Particles are grouped by leaf (row-major),
/// ascending particle index within a leaf.
class Tree {
public:
  static constexpr int kMaxLevels = 10;

  const Domain& domain() const { return domain_; }
  int levels() const { return levels_; }
  std::size_t size() const { return leaf_of_.size(); }

  const CellId& leaf_of(std::size_t particle) const { return leaf_of_[particle]; }
  const std::vector<CellId>& leaf_assignment() const { return leaf_of_; }

  /// Particle indices in a leaf (level == levels()).
  std::span<const std::uint32_t> particles_in(const CellId& leaf) const {
    const auto k = linear_index(leaf);
    return {sorted_.data() + offsets_[k], offsets_[k + 1] - offsets_[k]};
  }

  /// Number of particles in the subtree under `id`.
  std::size_t count(const CellId& id) const { return counts_[id.level][linear_index(id)]; }

  std::size_t max_leaf_occupancy() const {
    std::size_t m = 0;
    for (auto c : counts_[levels_]) m = std::max(m, c);
    return m;
  }

  Cell cell(const CellId& id) const {
    Cell c{id, cell_center(id, domain_), half_width(id.level, domain_), {}};
    if (id.level == levels_) c.particle_indices = particles_in(id);
    return c;
  }

  friend Tree build_tree(std::span<const Particle> particles, int levels, const Domain& domain);

private:
  Domain domain_;
  int levels_{0};
  std::vector<CellId> leaf_of_;
  std::vector<std::size_t> offsets_;
  std::vector<std::uint32_t> sorted_;
  std::vector<std::vector<std::size_t>> counts_;  // [level][linear]
};

inline Tree build_tree(std::span<const Particle> particles, int levels, const Domain& domain) {
  if (levels < 2) throw InvalidArgument("build_tree: levels must be >= 2, got " + std::to_string(levels));
  if (levels > Tree::kMaxLevels) {
    throw InvalidArgument("build_tree: levels must be <= " + std::to_string(Tree::kMaxLevels));
  }
  if (!(domain.side > 0)) throw InvalidArgument("build_tree: domain side must be > 0");

  Tree t;
  t.domain_ = domain;
  t.levels_ = levels;
  t.leaf_of_.resize(particles.size());
  for (std::size_t i = 0; i < particles.size(); ++i) {
    const Point pos{particles[i].x, particles[i].y};
    if (!domain.contains(pos.x, pos.y)) {
      throw OutOfDomain("particle " + std::to_string(i) + " lies outside the domain", i);
    }
    t.leaf_of_[i] = cell_index(pos, levels, domain);
  }

  const std::size_t nleaf = cells_at_level(levels);
  t.offsets_.assign(nleaf + 1, 0);
  for (const auto& leaf : t.leaf_of_) ++t.offsets_[linear_index(leaf) + 1];
  for (std::size_t k = 0; k < nleaf; ++k) t.offsets_[k + 1] += t.offsets_[k];
  t.sorted_.resize(particles.size());
  std::vector<std::size_t> cursor(t.offsets_.begin(), t.offsets_.end() - 1);
  for (std::size_t i = 0; i < particles.size(); ++i) {
    t.sorted_[cursor[linear_index(t.leaf_of_[i])]++] = static_cast<std::uint32_t>(i);
  }

  t.counts_.resize(static_cast<std::size_t>(levels) + 1);
  t.counts_[levels].resize(nleaf);
  for (std::size_t k = 0; k < nleaf; ++k) t.counts_[levels][k] = t.offsets_[k + 1] - t.offsets_[k];
  for (int lev = levels - 1; lev >= 0; --lev) {
    t.counts_[lev].assign(cells_at_level(lev), 0);
    const std::size_t nchild = cells_at_level(lev + 1);
    for (std::size_t k = 0; k < nchild; ++k) {
      t.counts_[lev][linear_index(parent(cell_from_linear(lev + 1, k)))] += t.counts_[lev + 1][k];
    }
  }
  return t;
}

}  // namespace vfmm
