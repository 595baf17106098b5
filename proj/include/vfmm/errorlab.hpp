#pragma once

// Observed-error measurement: FMM velocities against the direct sum, binned
// spatial maps, and per-target comparison with the truncation budgets.

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vfmm/errors.hpp"
#include "vfmm/model.hpp"
#include "vfmm/quadtree.hpp"

namespace vfmm {

struct TargetError {
  std::size_t index{};
  Point position;
  double abs_error{};  ///< |v_fmm - v_direct|
  double f_error{};    ///< same difference on f = 2 pi i (u - i v), i.e. 2 pi abs_error
};

struct ErrorReport {
  double max_abs{0};
  double rms_abs{0};
  // Relative metrics divide by the largest direct speed over all targets;
  // absent when the direct field is identically zero.
  std::optional<double> max_rel;
  std::optional<double> rms_rel;
  double max_direct_speed{0};
  std::size_t worst_index{0};
  std::vector<TargetError> per_target;
  std::vector<double> bound_budget;  ///< per target, f units; may be empty
};

inline ErrorReport compare(std::span<const Velocity> fmm, std::span<const Velocity> direct,
                           std::span<const Point> positions, std::span<const double> bound_budget = {}) {
  if (fmm.size() != direct.size() || fmm.size() != positions.size()) {
    throw InvalidArgument("compare: fmm, direct and positions must have equal length");
  }
  if (fmm.empty()) throw InvalidArgument("compare: at least one target required");
  if (!bound_budget.empty() && bound_budget.size() != fmm.size()) {
    throw InvalidArgument("compare: bound budget length mismatch");
  }

  ErrorReport r;
  r.per_target.reserve(fmm.size());
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < fmm.size(); ++i) {
    const double e = (fmm[i] - direct[i]).norm();
    r.per_target.push_back({i, positions[i], e, 2.0 * std::numbers::pi * e});
    if (e > r.max_abs) {
      r.max_abs = e;
      r.worst_index = i;
    }
    sum_sq += e * e;
    r.max_direct_speed = std::max(r.max_direct_speed, direct[i].norm());
  }
  r.rms_abs = std::sqrt(sum_sq / static_cast<double>(fmm.size()));
  if (r.max_direct_speed > 0.0) {
    r.max_rel = r.max_abs / r.max_direct_speed;
    r.rms_rel = r.rms_abs / r.max_direct_speed;
  }
  r.bound_budget.assign(bound_budget.begin(), bound_budget.end());
  return r;
}

struct ErrorBin {
  std::size_t count{0};
  double max_err{0};
  double mean_err{0};

  bool empty() const { return count == 0; }
};

struct ErrorMap {
  int grid_dim{1};
  std::vector<ErrorBin> bins;  ///< row-major, grid_dim x grid_dim

  const ErrorBin& at(int ix, int iy) const { return bins[static_cast<std::size_t>(iy) * grid_dim + ix]; }

  /// Largest bin max over non-empty bins (0 if all are empty).
  double max() const {
    double m = 0.0;
    for (const auto& b : bins)
      if (!b.empty()) m = std::max(m, b.max_err);
    return m;
  }
};

/// Bin index of a position on a g x g grid; identical to cell_index when g is
/// a power of two.
inline std::pair<int, int> bin_index(Point pos, const Domain& domain, int g) {
  const auto ug = static_cast<unsigned>(g);
  if (std::has_single_bit(ug)) {
    const CellId id = cell_index(pos, std::countr_zero(ug), domain);
    return {id.ix, id.iy};
  }
  if (!domain.contains(pos.x, pos.y)) throw OutOfDomain("bin_index: position outside domain");
  auto axis = [&](double v, double lo) {
    int i = static_cast<int>(std::floor((v - lo) / domain.side * static_cast<double>(g)));
    return std::clamp(i, 0, g - 1);
  };
  return {axis(pos.x, domain.xmin), axis(pos.y, domain.ymin)};
}

inline ErrorMap spatial_map(const ErrorReport& report, const Domain& domain, int g) {
  if (g < 1) throw InvalidArgument("spatial_map: grid dimension must be >= 1");
  ErrorMap map{g, std::vector<ErrorBin>(static_cast<std::size_t>(g) * g)};
  std::vector<double> sums(map.bins.size(), 0.0);
  for (const auto& t : report.per_target) {
    auto [ix, iy] = bin_index(t.position, domain, g);
    const std::size_t k = static_cast<std::size_t>(iy) * g + ix;
    auto& b = map.bins[k];
    ++b.count;
    b.max_err = std::max(b.max_err, t.abs_error);
    sums[k] += t.abs_error;
  }
  for (std::size_t k = 0; k < map.bins.size(); ++k) {
    if (map.bins[k].count > 0) map.bins[k].mean_err = sums[k] / static_cast<double>(map.bins[k].count);
  }
  return map;
}

struct BoundViolation {
  std::size_t index{};
  double observed{};  ///< f error
  double budget{};
};

/// Targets whose observed f error exceeds their budget.
inline std::vector<BoundViolation> bound_check(const ErrorReport& report, std::span<const double> budgets) {
  if (budgets.size() != report.per_target.size()) {
    throw InvalidArgument("bound_check: budgets must align with per-target errors");
  }
  std::vector<BoundViolation> out;
  for (std::size_t k = 0; k < budgets.size(); ++k) {
    const auto& t = report.per_target[k];
    if (t.f_error > budgets[k]) out.push_back({t.index, t.f_error, budgets[k]});
  }
  return out;
}

inline constexpr std::string_view kErrorMapHeader = "bin_ix,bin_iy,count,max_err,mean_err";

/// Row-major; empty bins carry `NA` in both error columns.
inline void write_error_map(std::ostream& os, const ErrorMap& map) {
  os << kErrorMapHeader << '\n';
  for (int iy = 0; iy < map.grid_dim; ++iy) {
    for (int ix = 0; ix < map.grid_dim; ++ix) {
      const auto& b = map.at(ix, iy);
      os << ix << ',' << iy << ',' << b.count << ',';
      if (b.empty()) {
        os << "NA,NA\n";
      } else {
        os << format_double(b.max_err) << ',' << format_double(b.mean_err) << '\n';
      }
    }
  }
}

inline std::string format_optional(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string("NA");
}

}  // namespace vfmm
