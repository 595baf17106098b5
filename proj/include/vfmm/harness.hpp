#pragma once

// Experiment driver: single evaluations, (N, l, p, seed) sweeps with a direct
// oracle, and FMM-vs-direct timing studies. All outputs are CSV.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "vfmm/errorlab.hpp"
#include "vfmm/fmm.hpp"
#include "vfmm/kernels.hpp"
#include "vfmm/model.hpp"

namespace vfmm {

// ---------------------------------------------------------------------------
// Small I/O helpers

/// Writes via a sibling temporary and renames it into place.
inline void write_atomically(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open '" + tmp.string() + "' for writing");
    body(os);
    os.flush();
    if (!os) throw IoError("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
}

/// Fixed six-significant-digit form for timing columns.
inline std::string format_ms(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 6);
  return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------
// Sweep configuration

struct OraclePolicy {
  std::size_t sampled{0};  ///< 0 = compare every target
  bool is_sampled() const { return sampled > 0; }
  friend bool operator==(const OraclePolicy&, const OraclePolicy&) = default;
};

inline constexpr std::size_t kDefaultOracleSamples = 200;

struct SweepConfig {
  std::vector<std::size_t> n_values;
  std::vector<int> l_values;
  std::vector<int> p_values;
  std::vector<std::uint64_t> seeds;
  Distribution distribution{Distribution::uniform_random};
  KernelKind kernel{KernelKind::point_vortex};
  double sigma{0.001};
  Domain domain{Domain::unit()};
  int map_grid{0};  ///< 0 = no per-run maps
  OraclePolicy oracle{};
  std::string out;

  std::size_t run_count() const { return n_values.size() * l_values.size() * p_values.size() * seeds.size(); }
};

namespace detail {

template <typename Int>
Int parse_int(std::string_view s, const std::string& key) {
  s = trim(s);
  Int v{};
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ConfigError(key, "'" + std::string(s) + "' is not an integer");
  }
  return v;
}

// Comma-separated integers; each item may be `a..b` or `a..b:step`.
template <typename Int>
std::vector<Int> parse_int_list(std::string_view value, const std::string& key) {
  std::vector<Int> out;
  for (auto item : split(value, ',')) {
    item = trim(item);
    if (item.empty()) throw ConfigError(key, "empty list element");
    if (auto dots = item.find(".."); dots != std::string_view::npos) {
      auto rest = item.substr(dots + 2);
      Int step = 1;
      if (auto colon = rest.find(':'); colon != std::string_view::npos) {
        step = parse_int<Int>(rest.substr(colon + 1), key);
        rest = rest.substr(0, colon);
      }
      const Int lo = parse_int<Int>(item.substr(0, dots), key);
      const Int hi = parse_int<Int>(rest, key);
      if (step <= 0 || hi < lo) throw ConfigError(key, "bad range '" + std::string(item) + "'");
      for (Int v = lo; v <= hi; v += step) out.push_back(v);
    } else {
      out.push_back(parse_int<Int>(item, key));
    }
  }
  std::sort(out.begin(), out.end());
  if (std::adjacent_find(out.begin(), out.end()) != out.end()) throw ConfigError(key, "duplicate values");
  return out;
}

inline OraclePolicy parse_oracle(std::string_view v) {
  v = trim(v);
  if (v == "always") return {};
  if (v == "sampled") return {kDefaultOracleSamples};
  for (auto prefix : {std::string_view("sampled("), std::string_view("sampled:")}) {
    if (v.starts_with(prefix)) {
      auto num = v.substr(prefix.size());
      if (prefix.back() == '(') {
        if (!num.ends_with(')')) break;
        num.remove_suffix(1);
      }
      const auto k = parse_int<std::size_t>(num, "oracle");
      if (k == 0) throw ConfigError("oracle", "sample count must be >= 1");
      return {k};
    }
  }
  throw ConfigError("oracle", "expected 'always', 'sampled' or 'sampled(k)', got '" + std::string(v) + "'");
}

}  // namespace detail

/// Flat `key = value` lines; `#` starts a comment. Required keys: n, levels,
/// p, seeds.
inline SweepConfig parse_sweep_config(std::istream& is) {
  SweepConfig cfg;
  std::set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::string_view row = line;
    if (auto hash = row.find('#'); hash != std::string_view::npos) row = row.substr(0, hash);
    row = trim(row);
    if (row.empty()) continue;
    const auto eq = row.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(std::string(row), "line " + std::to_string(lineno) + " is not 'key = value'");
    }
    const std::string key(trim(row.substr(0, eq)));
    const std::string_view value = trim(row.substr(eq + 1));
    if (!seen.insert(key).second) throw ConfigError(key, "given more than once");
    if (value.empty()) throw ConfigError(key, "empty value");

    try {
      if (key == "n") {
        cfg.n_values = detail::parse_int_list<std::size_t>(value, key);
      } else if (key == "levels") {
        cfg.l_values = detail::parse_int_list<int>(value, key);
      } else if (key == "p") {
        cfg.p_values = detail::parse_int_list<int>(value, key);
      } else if (key == "seeds") {
        cfg.seeds = detail::parse_int_list<std::uint64_t>(value, key);
      } else if (key == "distribution") {
        cfg.distribution = parse_distribution(value);
      } else if (key == "kernel") {
        cfg.kernel = parse_kernel(value);
      } else if (key == "sigma") {
        if (!parse_double(value, cfg.sigma) || !(cfg.sigma > 0)) throw ConfigError(key, "must be a positive number");
      } else if (key == "map_grid") {
        cfg.map_grid = detail::parse_int<int>(value, key);
        if (cfg.map_grid < 0) throw ConfigError(key, "must be >= 0");
      } else if (key == "oracle") {
        cfg.oracle = detail::parse_oracle(value);
      } else if (key == "out") {
        cfg.out = std::string(value);
      } else {
        throw ConfigError(key, "unknown key");
      }
    } catch (const InvalidArgument& e) {
      throw ConfigError(key, e.what());
    }
  }

  for (const char* k : {"n", "levels", "p", "seeds"}) {
    if (!seen.count(k)) throw ConfigError(k, "required key missing");
  }
  for (auto n : cfg.n_values)
    if (n == 0) throw ConfigError("n", "particle counts must be >= 1");
  for (auto l : cfg.l_values)
    if (l < 2 || l > Tree::kMaxLevels) throw ConfigError("levels", "levels must lie in [2, " + std::to_string(Tree::kMaxLevels) + "]");
  for (auto p : cfg.p_values)
    if (p < 0 || p > kMaxOrder) throw ConfigError("p", "orders must lie in [0, " + std::to_string(kMaxOrder) + "]");
  return cfg;
}

inline SweepConfig load_sweep_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config '" + path + "'");
  return parse_sweep_config(is);
}

// ---------------------------------------------------------------------------
// One sweep run

inline constexpr std::string_view kSweepHeader =
    "n,l,p,seed,distribution,kernel,max_abs,max_rel,rms_rel,bound_violations,sampled,t_fmm_ms,"
    "t_direct_ms,m2l_count,near_pair_count,generator_id";

struct RunKey {
  std::size_t n{};
  int l{};
  int p{};
  std::uint64_t seed{};
  friend auto operator<=>(const RunKey&, const RunKey&) = default;
};

struct SweepRow {
  RunKey key;
  Distribution distribution{};
  KernelKind kernel{};
  double max_abs{};
  std::optional<double> max_rel;
  std::optional<double> rms_rel;
  std::size_t bound_violations{};
  std::size_t sampled{};  ///< 0 when every target was compared
  double t_fmm_ms{};
  double t_direct_ms{};   ///< full-N direct time; scaled from the sample when sampled > 0
  std::size_t m2l_count{};
  std::size_t near_pair_count{};
  std::string generator_id{kGeneratorId};
};

inline std::string format_row(const SweepRow& r) {
  std::ostringstream os;
  os << r.key.n << ',' << r.key.l << ',' << r.key.p << ',' << r.key.seed << ',' << to_string(r.distribution) << ','
     << to_string(r.kernel) << ',' << format_double(r.max_abs) << ',' << format_optional(r.max_rel) << ','
     << format_optional(r.rms_rel) << ',' << r.bound_violations << ','
     << (r.sampled ? std::to_string(r.sampled) : std::string("NA")) << ',' << format_ms(r.t_fmm_ms) << ','
     << format_ms(r.t_direct_ms) << ',' << r.m2l_count << ',' << r.near_pair_count << ',' << r.generator_id;
  return os.str();
}

/// Seeded choice of k distinct target indices, ascending.
inline std::vector<std::size_t> sample_targets(std::size_t n, std::size_t k, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (k >= n) return idx;
  std::mt19937_64 rng(seed ^ 0x5eed'0ac1'e000'0001ULL);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng() % (n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

struct RunOutcome {
  SweepRow row;
  ErrorReport report;
  std::vector<BoundViolation> violations;
};

/// Generates the particle set for `key`, runs the FMM, evaluates the oracle
/// per policy, and measures error against the analytic budgets.
inline RunOutcome run_tuple(const SweepConfig& cfg, const RunKey& key) {
  const auto particles = generate_particles(cfg.distribution, key.n, key.seed, cfg.domain, cfg.sigma);
  const FmmConfig fc{key.l, key.p, cfg.kernel};
  const FmmResult fmm = evaluate(particles, cfg.domain, fc);

  const auto targets = cfg.oracle.is_sampled() ? sample_targets(key.n, cfg.oracle.sampled, key.seed)
                                               : sample_targets(key.n, key.n, key.seed);
  const bool sampled = targets.size() < key.n;
  std::vector<Point> pos;
  std::vector<Velocity> fv;
  pos.reserve(targets.size());
  fv.reserve(targets.size());
  for (auto i : targets) {
    pos.push_back({particles[i].x, particles[i].y});
    fv.push_back(fmm.velocities[i]);
  }

  const auto t0 = detail::Clock::now();
  std::vector<Velocity> dv(targets.size());
  for (std::size_t k = 0; k < targets.size(); ++k) {
    Velocity acc;
    for (const auto& src : particles) acc += kernel_eval(pos[k].x, pos[k].y, src, cfg.kernel);
    dv[k] = acc;
  }
  double t_direct = detail::elapsed_ms(t0);
  if (sampled) t_direct *= static_cast<double>(key.n) / static_cast<double>(targets.size());

  const Tree tree = build_tree(particles, key.l, cfg.domain);
  const auto all_budgets = error_budgets(tree, particles, fc);
  std::vector<double> budgets;
  budgets.reserve(targets.size());
  for (auto i : targets) budgets.push_back(all_budgets[i]);

  RunOutcome out;
  out.report = compare(fv, dv, pos, budgets);
  out.violations = bound_check(out.report, budgets);

  auto& r = out.row;
  r.key = key;
  r.distribution = cfg.distribution;
  r.kernel = cfg.kernel;
  r.max_abs = out.report.max_abs;
  r.max_rel = out.report.max_rel;
  r.rms_rel = out.report.rms_rel;
  r.bound_violations = out.violations.size();
  r.sampled = sampled ? targets.size() : 0;
  r.t_fmm_ms = fmm.stats.t_total;
  r.t_direct_ms = t_direct;
  r.m2l_count = fmm.stats.m2l_count;
  r.near_pair_count = fmm.stats.near_pair_count;
  return out;
}

/// All tuples in lexicographic (n, l, p, seed) order.
inline std::vector<RunKey> sweep_keys(const SweepConfig& cfg) {
  std::vector<RunKey> keys;
  keys.reserve(cfg.run_count());
  for (auto n : cfg.n_values)
    for (auto l : cfg.l_values)
      for (auto p : cfg.p_values)
        for (auto s : cfg.seeds) keys.push_back({n, l, p, s});
  std::sort(keys.begin(), keys.end());
  return keys;
}

struct SweepOptions {
  std::string out;      ///< overrides cfg.out when non-empty
  bool resume{false};
  std::string map_dir;  ///< per-run error maps written here when non-empty and map_grid > 0
  unsigned jobs{1};
  std::ostream* progress{nullptr};
};

struct SweepSummary {
  std::size_t total{0};
  std::size_t computed{0};
  std::size_t skipped{0};
  std::size_t violations{0};
  std::filesystem::path out;
};

class ResumeMismatch : public ConfigError {
public:
  explicit ResumeMismatch(const std::string& what) : ConfigError("resume", what) {}
};

namespace detail {

// Reads an existing sweep file and returns how many leading canonical rows it
// already holds. Any partial trailing line is dropped from the file.
inline std::size_t existing_prefix(const std::filesystem::path& path, const SweepConfig& cfg,
                                   const std::vector<RunKey>& keys) {
  std::ifstream is(path, std::ios::binary);
  if (!is) return 0;
  std::string content((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  is.close();
  if (content.empty()) return 0;

  std::size_t complete = content.rfind('\n');
  complete = complete == std::string::npos ? 0 : complete + 1;
  std::istringstream lines(content.substr(0, complete));
  std::string line;
  if (!std::getline(lines, line)) {
    // only a partial header
    std::filesystem::resize_file(path, 0);
    return 0;
  }
  if (line != kSweepHeader) throw ResumeMismatch("existing file '" + path.string() + "' has a different header");
  std::size_t rows = 0;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    auto f = split(line, ',');
    if (f.size() != 16) throw ResumeMismatch("malformed row " + std::to_string(rows + 1) + " in resume file");
    if (rows >= keys.size()) throw ResumeMismatch("resume file has more rows than the config defines");
    const RunKey& k = keys[rows];
    const bool same = f[0] == std::to_string(k.n) && f[1] == std::to_string(k.l) && f[2] == std::to_string(k.p) &&
                      f[3] == std::to_string(k.seed) && f[4] == to_string(cfg.distribution) &&
                      f[5] == to_string(cfg.kernel);
    if (!same) {
      throw ResumeMismatch("row " + std::to_string(rows + 1) + " of resume file does not match the config's run " +
                           std::to_string(rows + 1));
    }
    ++rows;
  }
  if (complete < content.size()) std::filesystem::resize_file(path, complete);
  return rows;
}

}  // namespace detail

inline std::filesystem::path map_path(const std::string& dir, const RunKey& k) {
  return std::filesystem::path(dir) /
         ("map_n" + std::to_string(k.n) + "_l" + std::to_string(k.l) + "_p" + std::to_string(k.p) + "_s" +
          std::to_string(k.seed) + ".csv");
}

/// Runs every tuple not already present in the output, appending rows in
/// canonical order and flushing after each. Workers may finish out of order;
/// rows are still written in order.
inline SweepSummary run_sweep(const SweepConfig& cfg, const SweepOptions& opt = {}) {
  SweepSummary sum;
  sum.out = opt.out.empty() ? std::filesystem::path(cfg.out) : std::filesystem::path(opt.out);
  if (sum.out.empty()) throw ConfigError("out", "no output path given");
  const auto keys = sweep_keys(cfg);
  sum.total = keys.size();

  std::size_t done = 0;
  if (opt.resume) done = detail::existing_prefix(sum.out, cfg, keys);
  sum.skipped = done;

  if (sum.out.has_parent_path()) std::filesystem::create_directories(sum.out.parent_path());
  const bool want_maps = cfg.map_grid > 0 && !opt.map_dir.empty();
  if (want_maps) std::filesystem::create_directories(opt.map_dir);

  std::ofstream os(sum.out, std::ios::binary | (done > 0 ? std::ios::app : std::ios::trunc));
  if (!os) throw IoError("cannot open '" + sum.out.string() + "' for writing");
  if (done == 0) {
    std::error_code ec;
    if (std::filesystem::file_size(sum.out, ec) == 0 || ec) os << kSweepHeader << '\n';
    os.flush();
  }

  const std::size_t todo = keys.size() - done;
  std::vector<std::optional<SweepRow>> rows(todo);
  std::mutex mu;
  std::condition_variable cv;
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;

  auto worker = [&] {
    while (true) {
      const std::size_t k = next.fetch_add(1);
      if (k >= todo) return;
      try {
        const RunKey& key = keys[done + k];
        RunOutcome res = run_tuple(cfg, key);
        if (want_maps) {
          const auto map = spatial_map(res.report, cfg.domain, cfg.map_grid);
          write_atomically(map_path(opt.map_dir, key), [&](std::ostream& o) { write_error_map(o, map); });
        }
        std::lock_guard lk(mu);
        rows[k] = std::move(res.row);
      } catch (...) {
        std::lock_guard lk(mu);
        if (!failure) failure = std::current_exception();
        next = todo;
      }
      cv.notify_all();
    }
  };

  const unsigned nthreads = std::max(1u, std::min<unsigned>(opt.jobs, static_cast<unsigned>(std::max<std::size_t>(todo, 1))));
  std::vector<std::jthread> pool;
  for (unsigned t = 0; t < nthreads; ++t) pool.emplace_back(worker);

  for (std::size_t k = 0; k < todo; ++k) {
    std::unique_lock lk(mu);
    cv.wait(lk, [&] { return rows[k].has_value() || failure; });
    if (!rows[k]) break;
    const SweepRow row = *rows[k];
    rows[k].reset();
    lk.unlock();
    os << format_row(row) << '\n';
    os.flush();
    if (!os) throw IoError("write failed for '" + sum.out.string() + "'");
    ++sum.computed;
    sum.violations += row.bound_violations;
    if (opt.progress) {
      *opt.progress << "[" << (done + k + 1) << "/" << keys.size() << "] n=" << row.key.n << " l=" << row.key.l
                    << " p=" << row.key.p << " seed=" << row.key.seed << " max_rel=" << format_optional(row.max_rel)
                    << '\n';
    }
  }
  pool.clear();
  if (failure) std::rethrow_exception(failure);
  return sum;
}

// ---------------------------------------------------------------------------
// Timing study

struct LevelPolicy {
  int fixed_levels{0};       ///< used when > 0
  double target_per_leaf{0}; ///< otherwise l = round(log4(n / target)), clamped to >= 2

  int levels_for(std::size_t n) const {
    if (fixed_levels > 0) return fixed_levels;
    const double l = std::round(std::log(static_cast<double>(n) / target_per_leaf) / std::log(4.0));
    return std::clamp(static_cast<int>(l), 2, Tree::kMaxLevels);
  }
};

struct TimingConfig {
  std::vector<std::size_t> n_values;
  LevelPolicy policy{0, 32.0};
  int p{10};
  KernelKind kernel{KernelKind::point_vortex};
  Distribution distribution{Distribution::uniform_random};
  std::uint64_t seed{1};
  int repetitions{3};
  std::size_t direct_cutoff{16384};  ///< direct timing extrapolated above this n
  double sigma{0.001};
  double min_rep_ms{20.0};  ///< each repetition repeats the call until this much time has passed
};

struct TimingRow {
  std::size_t n{};
  int l{};
  double t_fmm_ms{};
  double t_direct_ms{};
  bool direct_extrapolated{false};
};

inline constexpr std::string_view kTimingHeader = "n,l,t_fmm_ms,t_direct_ms,direct_extrapolated";

namespace detail {

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// Mean wall time of fn() in ms, repeating until at least min_ms has passed.
// One untimed call first so allocation and cache warm-up stay out of it.
template <typename Fn>
double time_per_call(double min_ms, Fn&& fn) {
  fn();
  const auto t0 = Clock::now();
  std::size_t calls = 0;
  double elapsed = 0.0;
  do {
    fn();
    ++calls;
    elapsed = elapsed_ms(t0);
  } while (elapsed < min_ms);
  return elapsed / static_cast<double>(calls);
}

}  // namespace detail

/// Median-of-repetitions FMM and direct timings per n, run sequentially.
/// Direct times above the cutoff come from a least-squares fit t = c n^2 to
/// the measured points.
inline std::vector<TimingRow> timing_study(const TimingConfig& cfg) {
  if (cfg.n_values.empty()) throw InvalidArgument("timing_study: no n values");
  if (cfg.repetitions < 1) throw InvalidArgument("timing_study: repetitions must be >= 1");
  if (cfg.policy.fixed_levels <= 0 && !(cfg.policy.target_per_leaf > 0)) {
    throw InvalidArgument("timing_study: level policy needs fixed levels or a positive leaf target");
  }
  const Domain dom = Domain::unit();
  std::vector<TimingRow> rows;
  for (auto n : cfg.n_values) {
    const auto particles = generate_particles(cfg.distribution, n, cfg.seed, dom, cfg.sigma);
    TimingRow row{n, cfg.policy.levels_for(n)};
    const FmmConfig fc{row.l, cfg.p, cfg.kernel};
    std::vector<double> tf, td;
    std::size_t sink = 0;
    for (int r = 0; r < cfg.repetitions; ++r) {
      tf.push_back(detail::time_per_call(cfg.min_rep_ms, [&] { sink += evaluate(particles, dom, fc).velocities.size(); }));
      if (n <= cfg.direct_cutoff) {
        td.push_back(detail::time_per_call(cfg.min_rep_ms, [&] { sink += velocity_direct(particles, cfg.kernel).size(); }));
      }
    }
    // keep the optimizer honest
    if (sink == 0) throw std::logic_error("timing_study: nothing evaluated");
    row.t_fmm_ms = detail::median(tf);
    if (!td.empty()) row.t_direct_ms = detail::median(td);
    row.direct_extrapolated = td.empty();
    rows.push_back(row);
  }

  double num = 0.0, den = 0.0;
  for (const auto& r : rows) {
    if (r.direct_extrapolated) continue;
    const double n2 = static_cast<double>(r.n) * static_cast<double>(r.n);
    num += r.t_direct_ms * n2;
    den += n2 * n2;
  }
  for (auto& r : rows) {
    if (!r.direct_extrapolated) continue;
    if (den == 0.0) throw InvalidArgument("timing_study: no measured direct points to extrapolate from");
    r.t_direct_ms = num / den * static_cast<double>(r.n) * static_cast<double>(r.n);
  }
  return rows;
}

inline void write_timing_csv(std::ostream& os, std::span<const TimingRow> rows) {
  os << kTimingHeader << '\n';
  for (const auto& r : rows) {
    os << r.n << ',' << r.l << ',' << format_ms(r.t_fmm_ms) << ',' << format_ms(r.t_direct_ms) << ','
       << (r.direct_extrapolated ? 1 : 0) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Single run

struct SingleOptions {
  std::size_t n{1000};
  int levels{3};
  int p{8};
  std::uint64_t seed{1};
  Distribution distribution{Distribution::uniform_random};
  KernelKind kernel{KernelKind::point_vortex};
  double sigma{0.001};
  std::string particles_file;  ///< overrides the generator when set
  std::string out_dir{"."};
  int map_grid{8};
};

struct SingleResult {
  FmmRunStats stats;
  ErrorReport report;
  std::vector<BoundViolation> violations;
  double t_direct_ms{0};
  std::filesystem::path velocities_csv, report_csv, map_csv;
  std::string summary;
};

inline constexpr std::string_view kVelocityHeader = "index,x,y,u,v,u_direct,v_direct,abs_err,f_err,budget";

/// One FMM evaluation with the full direct oracle. Writes velocities.csv,
/// error_report.csv and error_map.csv into out_dir.
inline SingleResult run_single(const SingleOptions& o) {
  std::vector<Particle> particles;
  Domain dom = Domain::unit();
  if (!o.particles_file.empty()) {
    particles = read_particles(o.particles_file);
    if (particles.empty()) throw InvalidArgument("particle file '" + o.particles_file + "' holds no particles");
    dom = bounding_domain(particles);
  } else {
    particles = generate_particles(o.distribution, o.n, o.seed, dom, o.sigma);
  }
  if (o.map_grid < 1) throw InvalidArgument("map grid must be >= 1");

  const FmmConfig fc{o.levels, o.p, o.kernel};
  SingleResult res;
  const FmmResult fmm = evaluate(particles, dom, fc);
  res.stats = fmm.stats;

  const auto t0 = detail::Clock::now();
  const auto direct = velocity_direct(particles, o.kernel);
  res.t_direct_ms = detail::elapsed_ms(t0);

  const Tree tree = build_tree(particles, o.levels, dom);
  const auto budgets = error_budgets(tree, particles, fc);
  const auto pos = positions(particles);
  res.report = compare(fmm.velocities, direct, pos, budgets);
  res.violations = bound_check(res.report, budgets);
  const auto map = spatial_map(res.report, dom, o.map_grid);

  const std::filesystem::path dir(o.out_dir);
  std::filesystem::create_directories(dir);
  res.velocities_csv = dir / "velocities.csv";
  res.report_csv = dir / "error_report.csv";
  res.map_csv = dir / "error_map.csv";

  write_atomically(res.velocities_csv, [&](std::ostream& os) {
    os << kVelocityHeader << '\n';
    for (std::size_t i = 0; i < particles.size(); ++i) {
      const auto& t = res.report.per_target[i];
      os << i << ',' << format_double(pos[i].x) << ',' << format_double(pos[i].y) << ','
         << format_double(fmm.velocities[i].u) << ',' << format_double(fmm.velocities[i].v) << ','
         << format_double(direct[i].u) << ',' << format_double(direct[i].v) << ',' << format_double(t.abs_error)
         << ',' << format_double(t.f_error) << ',' << format_double(budgets[i]) << '\n';
    }
  });
  write_atomically(res.report_csv, [&](std::ostream& os) {
    os << "metric,value\n";
    os << "n," << particles.size() << '\n';
    os << "levels," << o.levels << '\n';
    os << "p," << o.p << '\n';
    os << "kernel," << to_string(o.kernel) << '\n';
    os << "max_abs," << format_double(res.report.max_abs) << '\n';
    os << "max_rel," << format_optional(res.report.max_rel) << '\n';
    os << "rms_abs," << format_double(res.report.rms_abs) << '\n';
    os << "rms_rel," << format_optional(res.report.rms_rel) << '\n';
    os << "worst_index," << res.report.worst_index << '\n';
    os << "bound_violations," << res.violations.size() << '\n';
    os << "m2l_count," << res.stats.m2l_count << '\n';
    os << "near_pair_count," << res.stats.near_pair_count << '\n';
    os << "t_fmm_ms," << format_ms(res.stats.t_total) << '\n';
    os << "t_direct_ms," << format_ms(res.t_direct_ms) << '\n';
  });
  write_atomically(res.map_csv, [&](std::ostream& os) { write_error_map(os, map); });

  std::ostringstream s;
  s << "n=" << particles.size() << " l=" << o.levels << " p=" << o.p << " kernel=" << to_string(o.kernel)
    << " max_rel=" << format_optional(res.report.max_rel) << " max_abs=" << format_double(res.report.max_abs)
    << " bound_violations=" << res.violations.size() << " t_fmm_ms=" << format_ms(res.stats.t_total)
    << " t_direct_ms=" << format_ms(res.t_direct_ms)
    << " fmm/direct=" << format_ms(res.t_direct_ms > 0 ? res.stats.t_total / res.t_direct_ms : 0.0);
  res.summary = s.str();
  return res;
}

}  // namespace vfmm
