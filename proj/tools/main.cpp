#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "hvlab/experiment.hpp"
#include "hvlab/field_io.hpp"

namespace {

void print_report(const hvlab::RunReport& report) {
  for (const auto& row : report.rows) {
    std::printf("[%s] %-45s value=%.6g bound=%.6g\n",
                row.pass ? "PASS" : "FAIL", row.name.c_str(), row.value,
                row.bound);
  }
  for (const auto& e : report.estimates) {
    std::printf("       N=%-4zu t=%.3g lambda=%.3g estimate=%.6g +- %.3g "
                "(envelope %.6g, %zu samples)\n",
                e.n_particles, e.t, e.lambda, e.estimate, e.std_error,
                e.envelope, e.samples);
  }
  std::printf("%s (%.2f s)\n", report.all_pass() ? "all checks passed"
                                                 : "CHECKS FAILED",
              report.wall_seconds);
}

int execute(hvlab::ExperimentConfig config, const std::string& out_dir,
            bool seed_set, std::uint64_t seed, std::size_t threads) {
  if (seed_set) config.entries["seed"] = std::to_string(seed);
  if (threads != 0) config.entries["threads"] = std::to_string(threads);
  const hvlab::RunReport report = hvlab::run_experiment(config);
  std::string out = out_dir;
  if (out.empty()) out = config.get_string("out", ".");
  hvlab::write_report(report, out);
  print_report(report);
  return report.all_pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mean-field kinetic hierarchy laboratory"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  std::size_t threads = 0;
  bool seed_set = false;
  app.add_option("--out", out_dir, "Output directory for reports");
  app.add_option("--seed", seed, "Override the config seed")
      ->each([&](const std::string&) { seed_set = true; });
  app.add_option("--threads", threads, "Parallel width cap (0 = config value)");

  auto* run = app.add_subcommand("run", "Run an experiment from a config file");
  run->add_option("config_file", config_path, "Config file path");
  run->add_option("--config", config_path, "Config file path (flag form)");

  auto* check =
      app.add_subcommand("check", "Run the built-in counting identity suite");

  std::string snapshot_path;
  auto* info = app.add_subcommand("info", "Dump a binary snapshot header");
  info->add_option("snapshot", snapshot_path, "Snapshot file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      if (config_path.empty()) {
        std::fprintf(stderr, "run: missing config file (positional or --config)\n");
        return 2;
      }
      return execute(hvlab::ExperimentConfig::parse_file(config_path), out_dir,
                     seed_set, seed, threads);
    }
    if (check->parsed()) {
      auto config = hvlab::ExperimentConfig::parse_string("kind = identity-suite\n");
      return execute(std::move(config), out_dir, seed_set, seed, threads);
    }
    if (info->parsed()) {
      const auto header = hvlab::read_snapshot_header_file(snapshot_path);
      std::printf("version: %u\n", header.version);
      std::printf("physical dimension: %u\n", header.dim);
      std::printf("coordinates: %s\n",
                  header.kind == hvlab::CoordinateKind::PositionVelocity
                      ? "position-velocity"
                      : "position-xi");
      std::printf("pair state: %s\n", header.pair ? "yes" : "no");
      for (std::size_t a = 0; a < header.counts.size(); ++a) {
        std::printf("axis %zu: %u points on [%.17g, %.17g)\n", a,
                    header.counts[a], -header.extents[a], header.extents[a]);
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
