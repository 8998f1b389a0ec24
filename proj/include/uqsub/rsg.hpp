#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "uqsub/basis.hpp"
#include "uqsub/oracle.hpp"
#include "uqsub/problems.hpp"

namespace uqsub {

// Basis size per global stage index j = 1, 2, ... (stage k of outer loop i
// has j = (i - 1) K + k).
class MSchedule {
 public:
  static MSchedule constant(std::size_t m);
  // round((j + shift)^exponent + offset)
  static MSchedule power(double shift, double exponent, double offset);
  // base + step * (i - 1) for every stage of outer loop i.
  static MSchedule per_outer(std::size_t base, std::size_t step,
                             std::size_t stages_per_outer);

  // "constant:M", "power:shift,exponent,offset", "per_outer:base,step".
  static MSchedule parse(const std::string& text, std::size_t stages_per_outer);

  std::size_t operator()(std::size_t j) const;
  std::string describe() const;

 private:
  enum class Kind { constant, power, per_outer };
  Kind kind_ = Kind::constant;
  double a_ = 1.0;
  double b_ = 0.0;
  double c_ = 0.0;
  std::size_t stages_ = 1;
};

struct RsgConfig {
  double eps0 = 1.0;        // bound on the initial suboptimality
  double eps_target = 0.01;
  double alpha = 2.0;
  std::size_t t = 50;       // SG iterations per stage
  std::size_t K = 20;       // stages per RSG call
  std::size_t outer_loops = 1;
  MSchedule m_schedule = MSchedule::constant(1);
  OracleConfig oracle;
  std::uint64_t seed = 0;
  // When set, replaces eps0 / (alpha (G^2 + V^2)) as the first step size.
  std::optional<double> eta1;
  // Stop after an outer loop whose relative error improvement is below this;
  // 0 disables.
  double stagnation_tol = 1e-4;
  bool record_timing = false;

  void validate() const;
};

struct TraceRow {
  std::size_t call_index = 0;  // cumulative SG calls
  std::size_t outer_i = 0;
  std::size_t stage_k = 0;
  std::size_t m = 0;
  double eta = 0.0;
  double fn_error_pi = 0.0;
  double fn_error_pi_sq = 0.0;
  double elapsed_ms = 0.0;
  std::uint64_t coefficient_hash = 0;
};

struct RunTrace {
  std::vector<TraceRow> rows;
  std::size_t rsg_calls = 0;
  double initial_error_pi = 0.0;
  double eta1 = 0.0;
  GVEstimate gv;
};

// ||f(x(theta), theta) - f*(theta)||_pi on the measure's quadrature grid,
// with f* evaluated once per node and cached.
class ErrorEvaluator {
 public:
  ErrorEvaluator(const ProblemSpec& p, const ThetaMeasure& measure);
  bool available() const noexcept { return !fstar_.empty(); }
  double operator()(const Expansion& e) const;
  double operator()(const BasisFamily& basis, const Eigen::MatrixXd& u) const;

 private:
  const ProblemSpec* p_;
  std::vector<double> nodes_;
  std::vector<double> weights_;
  std::vector<double> fstar_;
};

std::uint64_t coefficient_hash(const Eigen::MatrixXd& u);

// Algorithm-1 subroutine: T projected steps at fixed eta on m terms, then the
// projected coefficient average of the T iterates.
Expansion sg_subroutine(const ProblemSpec& p, const Expansion& start,
                        double eta, std::size_t T, std::size_t m,
                        const OracleConfig& cfg, RandomState& rng);

// Grow an expansion to m terms: zero padding (Legendre) or sampled cell
// splits (piecewise).
Expansion grow_expansion(const Expansion& e, std::size_t m, RandomState& rng);

struct RsgLoopContext {
  RunTrace* trace = nullptr;
  const ErrorEvaluator* error = nullptr;
  std::size_t outer_i = 1;
  bool record_timing = false;
};

// K SG stages with eta_{k+1} = eta_k / alpha, stage k using m_k[k - 1] terms
// and warm-starting from the previous stage.
Expansion rsg_loop(const ProblemSpec& p, const Expansion& start, std::size_t K,
                   std::size_t t, double alpha, double eta1,
                   std::span<const std::size_t> m_k, const OracleConfig& cfg,
                   RandomState& rng, const RsgLoopContext& ctx = {});

double first_step_size(double eps0, double alpha, const GVEstimate& gv);

// Outer loop: one RSG call per outer index with that loop's slice of the
// m schedule. G and V are estimated once at the start point.
std::pair<Expansion, RunTrace> restarted_outer(const ProblemSpec& p,
                                               const Expansion& start,
                                               const RsgConfig& cfg);

enum class RhoMode { rho, B_eps, kappa };

struct StageParams {
  std::size_t t;
  std::size_t K;
};

// K = ceil(log_alpha(eps0 / eps)), t = ceil(alpha^2 (G^2 + V^2) / rho^2) with
// rho given directly, as eps / B, or as kappa.
StageParams derive_stage_params(double eps0, double eps, double alpha,
                                double G_sq, double V_sq, double value,
                                RhoMode mode);

struct RemainderGap {
  double lhs;  // ||f(x_m(theta)) - f(x*(theta))||_pi
  double rhs;  // L ||R_m||_pi
};

RemainderGap measure_remainder_gap(const ProblemSpec& p,
                                   const Expansion& level_m_optimum,
                                   const VectorField& reference, std::size_t m);

void write_trace_csv(const RunTrace& trace, std::ostream& out);
RunTrace read_trace_csv(std::istream& in);

}  // namespace uqsub
