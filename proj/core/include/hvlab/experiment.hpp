#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "hvlab/grid.hpp"
#include "hvlab/potential.hpp"

namespace hvlab {

// Flat key=value experiment description; '#' starts a comment. One file
// fully describes a run.
struct ExperimentConfig {
  std::string kind;
  std::map<std::string, std::string> entries;

  static ExperimentConfig parse_string(const std::string& text);
  static ExperimentConfig parse_file(const std::filesystem::path& path);

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& def) const;
  double get_double(const std::string& key, double def) const;
  std::size_t get_size(const std::string& key, std::size_t def) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t def) const;
  std::vector<std::size_t> get_size_list(const std::string& key,
                                         std::vector<std::size_t> def) const;

  PotentialSpec potential() const;
};

struct ReportRow {
  std::string name;
  double value = 0.0;
  double bound = 0.0;
  bool pass = false;
};

struct EstimateRow {
  std::size_t n_particles = 0;
  double t = 0.0;
  double lambda = 0.0;
  double estimate = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
  double envelope = 0.0;
};

struct RunReport {
  std::string kind;
  std::uint64_t seed = 0;
  std::vector<ReportRow> rows;
  std::vector<EstimateRow> estimates;
  std::map<std::string, std::string> config_echo;
  double wall_seconds = 0.0;

  bool all_pass() const;
  std::string csv() const;   // deterministic given (config, seed)
  std::string json() const;  // adds timing metadata
};

RunReport run_experiment(const ExperimentConfig& config);

// Writes <kind>.csv and <kind>.json into out_dir (created if needed).
void write_report(const RunReport& report,
                  const std::filesystem::path& out_dir);

// Normalized periodicized Gaussian packet centered at (x0, v0), optionally
// modulated by exp(i k pi x / L); smooth and exactly periodic on the grid box.
ComplexField gaussian_packet(const PhaseGrid& grid, double width, double x0,
                             double v0, int modulation = 0);

}  // namespace hvlab
