// vfmm: run single FMM evaluations, parameter sweeps, timing studies, and
// generate particle files.
//
// Exit codes: 0 success, 1 unexpected failure, 2 usage/config error, 3 I/O error.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "vfmm/vfmm.hpp"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;

const std::map<std::string, vfmm::Distribution> kDistributions{
    {"uniform_random", vfmm::Distribution::uniform_random},
    {"gaussian_patch", vfmm::Distribution::gaussian_patch},
    {"two_patches", vfmm::Distribution::two_patches},
};

const std::map<std::string, vfmm::KernelKind> kKernels{
    {"point", vfmm::KernelKind::point_vortex},
    {"gaussian", vfmm::KernelKind::gaussian_blob},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vortex-particle FMM: evaluation, error sweeps and timing"};
  app.require_subcommand(1);

  // single
  vfmm::SingleOptions single;
  auto* cmd_single = app.add_subcommand("single", "one FMM evaluation against the direct sum");
  cmd_single->add_option("--n", single.n, "particle count")->check(CLI::PositiveNumber);
  cmd_single->add_option("--levels", single.levels, "tree levels (leaves at this level)")
      ->check(CLI::Range(2, vfmm::Tree::kMaxLevels));
  cmd_single->add_option("--p", single.p, "expansion truncation order")->check(CLI::Range(0, vfmm::kMaxOrder));
  cmd_single->add_option("--seed", single.seed, "generator seed");
  cmd_single->add_option("--distribution", single.distribution, "particle distribution")
      ->transform(CLI::CheckedTransformer(kDistributions, CLI::ignore_case));
  cmd_single->add_option("--kernel", single.kernel, "point | gaussian")
      ->transform(CLI::CheckedTransformer(kKernels, CLI::ignore_case));
  cmd_single->add_option("--sigma", single.sigma, "blob core radius")->check(CLI::PositiveNumber);
  cmd_single->add_option("--particles", single.particles_file, "particle CSV (overrides the generator)")
      ->check(CLI::ExistingFile);
  cmd_single->add_option("--out-dir", single.out_dir, "output directory");
  cmd_single->add_option("--map-grid", single.map_grid, "error map grid dimension")->check(CLI::PositiveNumber);

  // sweep
  std::string sweep_config;
  vfmm::SweepOptions sweep_opt;
  bool quiet = false;
  auto* cmd_sweep = app.add_subcommand("sweep", "run an (n, levels, p, seed) grid from a config file");
  cmd_sweep->add_option("config", sweep_config, "key = value config file")->required()->check(CLI::ExistingFile);
  cmd_sweep->add_option("--out", sweep_opt.out, "sweep CSV (overrides the config's out key)");
  cmd_sweep->add_flag("--resume", sweep_opt.resume, "skip runs already present in the output");
  cmd_sweep->add_option("--map-dir", sweep_opt.map_dir, "write per-run error maps here (needs map_grid > 0)");
  cmd_sweep->add_option("--jobs", sweep_opt.jobs, "parallel worker slots")->check(CLI::PositiveNumber);
  cmd_sweep->add_flag("--quiet", quiet, "no per-row progress");

  // timing
  vfmm::TimingConfig timing;
  std::vector<std::size_t> timing_n;
  int fixed_levels = 0;
  std::string timing_out;
  auto* cmd_timing = app.add_subcommand("timing", "FMM vs direct wall-clock over a range of n");
  cmd_timing->add_option("--n", timing_n, "particle counts, comma separated (default 256..32768, doubling)")
      ->delimiter(',');
  cmd_timing->add_option("--levels", fixed_levels, "fixed tree depth (default: occupancy policy)")
      ->check(CLI::Range(2, vfmm::Tree::kMaxLevels));
  cmd_timing->add_option("--per-leaf", timing.policy.target_per_leaf, "target particles per leaf")
      ->check(CLI::PositiveNumber);
  cmd_timing->add_option("--p", timing.p, "expansion order")->check(CLI::Range(0, vfmm::kMaxOrder));
  cmd_timing->add_option("--seed", timing.seed, "generator seed");
  cmd_timing->add_option("--reps", timing.repetitions, "repetitions per point (median)")->check(CLI::PositiveNumber);
  cmd_timing->add_option("--min-rep-ms", timing.min_rep_ms, "repeat each timed call until this many ms have passed")
      ->check(CLI::NonNegativeNumber);
  cmd_timing->add_option("--direct-cutoff", timing.direct_cutoff, "extrapolate direct timing above this n");
  cmd_timing->add_option("--out", timing_out, "timing CSV (default: stdout)");

  // gen
  vfmm::Distribution gen_dist = vfmm::Distribution::uniform_random;
  std::size_t gen_n = 1000;
  std::uint64_t gen_seed = 1;
  double gen_sigma = 0.001;
  std::string gen_out;
  auto* cmd_gen = app.add_subcommand("gen", "write a generated particle set as CSV");
  cmd_gen->add_option("--n", gen_n, "particle count")->check(CLI::PositiveNumber);
  cmd_gen->add_option("--seed", gen_seed, "generator seed");
  cmd_gen->add_option("--distribution", gen_dist, "particle distribution")
      ->transform(CLI::CheckedTransformer(kDistributions, CLI::ignore_case));
  cmd_gen->add_option("--sigma", gen_sigma, "core radius stored with each particle")->check(CLI::PositiveNumber);
  cmd_gen->add_option("--out", gen_out, "output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*cmd_single) {
      const auto res = vfmm::run_single(single);
      for (const auto& w : res.stats.warnings) std::cerr << "warning: " << w << '\n';
      std::cout << res.summary << '\n';
      std::cout << "wrote " << res.velocities_csv.string() << ", " << res.report_csv.string() << ", "
                << res.map_csv.string() << '\n';
    } else if (*cmd_sweep) {
      const auto cfg = vfmm::load_sweep_config(sweep_config);
      if (!quiet) sweep_opt.progress = &std::cerr;
      const auto sum = vfmm::run_sweep(cfg, sweep_opt);
      std::cout << "sweep: " << sum.total << " runs, " << sum.computed << " computed, " << sum.skipped
                << " resumed, " << sum.violations << " bound violations -> " << sum.out.string() << '\n';
    } else if (*cmd_timing) {
      if (timing_n.empty()) {
        for (std::size_t n = 256; n <= 32768; n *= 2) timing_n.push_back(n);
      }
      timing.n_values = timing_n;
      timing.policy.fixed_levels = fixed_levels;
      const auto rows = vfmm::timing_study(timing);
      if (timing_out.empty()) {
        vfmm::write_timing_csv(std::cout, rows);
      } else {
        vfmm::write_atomically(timing_out, [&](std::ostream& os) { vfmm::write_timing_csv(os, rows); });
        std::cout << "wrote " << timing_out << '\n';
      }
    } else if (*cmd_gen) {
      const auto particles = vfmm::generate_particles(gen_dist, gen_n, gen_seed, vfmm::Domain::unit(), gen_sigma);
      vfmm::write_atomically(gen_out, [&](std::ostream& os) { vfmm::write_particles(os, particles); });
      std::cout << "wrote " << particles.size() << " particles to " << gen_out << '\n';
    }
  } catch (const vfmm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const vfmm::InvalidArgument& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return kExitUsage;
  } catch (const vfmm::OutOfDomain& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const vfmm::FormatError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitIo;
  } catch (const vfmm::ParseError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitIo;
  } catch (const vfmm::IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
