#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "uqsub/basis.hpp"
#include "uqsub/problems.hpp"
#include "uqsub/rsg.hpp"

namespace uqsub {

enum class ProblemKind { quadratic, mincut };

struct StatsSpec {
  std::size_t samples = 10000;
  std::vector<double> quantiles{0.05, 0.5, 0.95};
  double round_eps = 0.1;  // threshold for rounding cut relaxations
};

struct ExperimentConfig {
  ProblemKind problem = ProblemKind::quadratic;
  double mu = 1.0;
  double L = 50.0;
  // Empty selects the built-in three-node example graph.
  std::filesystem::path graph_path;

  double theta_lower = 0.0;
  double theta_upper = 0.0;
  int quadrature_nodes = ThetaMeasure::kDefaultNodes;

  BasisKind basis = BasisKind::legendre;
  // Overrides the problem's own constraint when set.
  std::optional<ProjectionSpec> projection;

  RsgConfig rsg;
  StatsSpec stats;

  std::filesystem::path output_dir = "uqsub-out";

  // Parses the sectioned key-value format described in docs/formats.md.
  // Relative graph paths resolve against `base_dir`. Unknown keys and bad
  // values raise ConfigError naming "section.key".
  static ExperimentConfig parse(std::istream& in,
                                const std::filesystem::path& base_dir);
  static ExperimentConfig load(const std::filesystem::path& path);

  // Cross-field checks (projection vs basis, schedule monotonicity, ...).
  void validate() const;

  ThetaMeasure measure() const;
  ProblemSpec build_problem() const;
  // Zero start with the schedule's first size; piecewise partitions are
  // sampled from a stream derived from the seed.
  Expansion initial_expansion() const;
};

struct QuantileRow {
  double level;
  Eigen::VectorXd value;
};

struct StatsReport {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
  std::vector<QuantileRow> quantiles;
  std::size_t samples = 0;
  // Rounded cut set (formatted) -> share of samples; empty for non-cut runs.
  std::map<std::string, double> set_frequencies;
};

// Mean and variance by quadrature of the synthesized expansion (cell-split
// for piecewise bases); quantiles (type 7) from n seeded samples; for cut
// problems each sample is threshold-rounded and tallied.
StatsReport compute_statistics(const Expansion& e, std::size_t n,
                               const StatsSpec& spec, RandomState& rng,
                               const CutGraph* graph = nullptr);

void write_stats_json(const StatsReport& r, std::ostream& out);

struct ExperimentResult {
  Expansion expansion;
  RunTrace trace;
  StatsReport stats;
};

// Runs the configured solve and statistics; writes trace.csv,
// expansion.json, stats.json and summary.json into the output directory.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

// Statistics for a saved expansion under cfg's stats spec and seed, written
// to <output_dir>/stats.json.
StatsReport run_statistics(const std::filesystem::path& expansion_file,
                           const ExperimentConfig& cfg);

struct CurvePoint {
  std::size_t call_index;
  std::size_t outer_i;
  double fn_error_pi;
  double fn_error_pi_sq;
};

std::vector<CurvePoint> error_curve(const RunTrace& trace);
void write_error_curve_csv(const std::vector<CurvePoint>& curve,
                           std::ostream& out);

struct OuterLoopSummary {
  std::size_t outer_i;
  double first_error;
  double last_error;
  std::size_t rises;  // stage-to-stage increases inside the loop
  // ln(error before / error after) over the loop's last stage; 0 for a
  // single-stage loop.
  double final_stage_drop;
  // ln(previous loop's last error / this loop's first error); 0 for loop 1.
  double restart_drop;
};

// Smallest change in log-error slope at a restart counted as a kink.
constexpr double kCuspTolerance = 0.01;

struct CuspReport {
  std::vector<OuterLoopSummary> loops;
  // Restarts where the log-error curve kinks: the first stage of a loop
  // changes the log error at a rate differing from the previous loop's
  // final stage by more than kCuspTolerance (a jump up or a sharper drop).
  std::size_t cusps = 0;
  // Least-squares slope of ln(last_error) against the outer index.
  double log_slope = 0.0;
};

CuspReport detect_cusps(const RunTrace& trace);

}  // namespace uqsub
