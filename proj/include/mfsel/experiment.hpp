#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mfsel/field.hpp"
#include "mfsel/model.hpp"

namespace mfsel {

/// Flat `key = value` configuration with dotted sections. Lines starting
/// with '#' are comments; later keys override earlier ones.
class ScenarioConfig {
 public:
  static ScenarioConfig parse(const std::string& text);
  static ScenarioConfig load(const std::string& path);

  void set(const std::string& key, const std::string& value);
  /// Applies "key=value".
  void set_assignment(const std::string& assignment);
  bool has(const std::string& key) const;
  std::string get(const std::string& key, const std::string& fallback = "") const;
  double get_double(const std::string& key, double fallback) const;
  std::size_t get_size(const std::string& key, std::size_t fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  /// Comma separated numbers; "inf" is accepted.
  std::vector<double> get_list(const std::string& key,
                               const std::vector<double>& fallback) const;

  /// Sorted "key = value" lines.
  std::string canonical() const;
  /// FNV-1a 64 of canonical().
  std::uint64_t hash() const;
  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
};

/// The config with every scenario default filled in; this is what the
/// config hash stamps.
ScenarioConfig effective_config(const ScenarioConfig& cfg);

/// Builds the model described by `model = name(args)` and the `model.*`
/// overrides. Catalogue: quadratic(c[, k]), logcosh(kappa),
/// delarue(delta[, rho]), radial_logcosh(kappa, d).
ModelSpec model_from_config(const ScenarioConfig& cfg);

/// Space grid from grid.L / grid.nodes (default half width when grid.L is
/// absent).
SpaceGrid grid_from_config(const ScenarioConfig& cfg, const ModelSpec& spec);

struct RunOptions {
  std::size_t threads = 1;
};

/// One line of a scenario table. Every row can be recomputed on its own
/// from (config, row spec).
struct ReportRow {
  std::size_t index = 0;
  std::string kind;
  double parameter = 0.0;  ///< N or eps
  double probe = 0.0;      ///< first component of nu0
  std::uint64_t seed = 0;
  std::uint64_t stream_base = 0;
  std::uint64_t config_hash = 0;
  /// Values for the scenario's metric columns (NaN when not applicable).
  std::vector<double> metrics;
};

struct Verdict {
  std::string name;
  bool pass = false;
  /// Monte Carlo verdict (exit code 2 on failure) or deterministic check.
  bool statistical = true;
  std::string detail;
};

struct ScenarioReport {
  std::string scenario;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> columns;  ///< metric column names
  std::vector<ReportRow> rows;
  std::vector<Verdict> verdicts;
  std::vector<std::string> notes;

  double metric(const ReportRow& row, const std::string& column) const;
  bool passed() const;
};

/// Row layout of a scenario: kind, parameter, probe, stream base.
struct RowSpec {
  std::string kind;
  double parameter = 0.0;
  double probe = 0.0;
  std::uint64_t stream_base = 0;
};

std::vector<std::string> scenario_columns(const std::string& scenario);
std::vector<RowSpec> scenario_rows(const ScenarioConfig& cfg);
ReportRow run_row(const ScenarioConfig& cfg, const RowSpec& spec, std::size_t index,
                  const RunOptions& opts = {});
/// Pure function of the rows.
std::vector<Verdict> scenario_verdicts(const ScenarioConfig& cfg,
                                       const ScenarioReport& report);

ScenarioReport run_scenario(const ScenarioConfig& cfg, const RunOptions& opts = {});
ScenarioReport run_E1_unique(const ScenarioConfig& cfg, const RunOptions& opts = {});
ScenarioReport run_E2_symmetric(const ScenarioConfig& cfg, const RunOptions& opts = {});
ScenarioReport run_E3_delarue(const ScenarioConfig& cfg, const RunOptions& opts = {});
ScenarioReport run_E4_sphere(const ScenarioConfig& cfg, const RunOptions& opts = {});
ScenarioReport run_E5_common_noise(const ScenarioConfig& cfg,
                                   const RunOptions& opts = {});
ScenarioReport run_E6_field_convergence(const ScenarioConfig& cfg,
                                        const RunOptions& opts = {});

/// Columns: scenario,row,kind,parameter,probe,seed,stream_base,config_hash,
/// then the scenario's metric columns.
void write_report_csv(const ScenarioReport& report, std::ostream& os);
void write_verdicts_csv(const ScenarioReport& report, std::ostream& os);
/// Line plot of the scenario's headline metric against the row parameter.
void write_report_svg(const ScenarioReport& report, std::ostream& os);

struct ReplayResult {
  ReportRow recorded;
  ReportRow recomputed;
  bool identical = false;
};

/// Re-runs row `row` of a report written by write_report_csv next to its
/// effective config (config.cfg in the same directory).
ReplayResult replay_row(const std::string& report_csv, std::size_t row,
                        const RunOptions& opts = {});

/// Shortest text that reads back to the same double.
std::string format_double(double x);

}  // namespace mfsel
