// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit when any
// criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "level_optimum.hpp"
#include "random_graphs.hpp"
#include "uqsub/experiment.hpp"
#include "uqsub/io.hpp"
#include "uqsub/rsg.hpp"

using namespace uqsub;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

const fs::path kSource = UQSUB_SOURCE_DIR;

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Least-squares slope of ln(y) against 1, 2, ...
double log_slope(const std::vector<double>& y) {
  const double n = static_cast<double>(y.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double x = static_cast<double>(i + 1);
    const double ly = std::log(y[i]);
    sx += x;
    sy += ly;
    sxx += x * x;
    sxy += x * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// Squared error at the end of each outer loop.
std::vector<double> loop_end_sq(const RunTrace& t) {
  std::vector<double> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i)
    if (i + 1 == t.rows.size() || t.rows[i + 1].outer_i != t.rows[i].outer_i)
      out.push_back(t.rows[i].fn_error_pi_sq);
  return out;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double std_error(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1) /
                   static_cast<double>(v.size()));
}

const ThetaMeasure& quad_measure() {
  static const ThetaMeasure m(0.0, 2.0 * std::numbers::pi);
  return m;
}

// ---------------------------------------------------------------------------

Outcome quadratic_reproduction() {
  const auto t0 = Clock::now();
  ExperimentConfig cfg = ExperimentConfig::load(kSource / "configs/quadratic.ini");
  const ProblemSpec p = cfg.build_problem();
  int passed = 0;
  double worst_slope = -INFINITY, worst_ratio = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    cfg.rsg.seed = seed;
    const auto [x, trace] = restarted_outer(p, cfg.initial_expansion(), cfg.rsg);
    const std::vector<double> ends = loop_end_sq(trace);
    const double slope = log_slope(ends);
    const double initial_sq = trace.initial_error_pi * trace.initial_error_pi;
    const double ratio = ends.back() / initial_sq;
    passed += ends.size() == 10 && slope <= -0.3 && ratio <= 1e-3;
    worst_slope = std::max(worst_slope, slope);
    worst_ratio = std::max(worst_ratio, ratio);
  }
  const double secs = seconds_since(t0);
  return {passed >= 18 && secs < 120.0,
          fmt("%d/20 seeds pass; worst log-slope %.3f per loop, worst "
              "final/initial %.2e; %.1f s",
              passed, worst_slope, worst_ratio, secs)};
}

struct CutRun {
  ExperimentConfig cfg;
  ProblemSpec problem;
  Expansion x;
  RunTrace trace;
  double seconds;
};

const CutRun& cut_run() {
  static const CutRun run = [] {
    const auto t0 = Clock::now();
    ExperimentConfig cfg = ExperimentConfig::load(kSource / "configs/mincut.ini");
    ProblemSpec p = cfg.build_problem();
    auto [x, trace] = restarted_outer(p, cfg.initial_expansion(), cfg.rsg);
    return CutRun{cfg, std::move(p), std::move(x), std::move(trace),
                  seconds_since(t0)};
  }();
  return run;
}

Outcome mincut_reproduction() {
  const CutRun& r = cut_run();
  const double initial_sq = r.trace.initial_error_pi * r.trace.initial_error_pi;
  const double final_sq = r.trace.rows.back().fn_error_pi_sq;
  const CuspReport cusps = detect_cusps(r.trace);
  const std::size_t restarts = cusps.loops.size() - 1;
  const bool ok = cusps.loops.size() == 10 && final_sq <= 1e-2 * initial_sq &&
                  cusps.cusps == restarts && r.seconds < 120.0;
  return {ok, fmt("squared error %.3e -> %.3e (ratio %.2e); cusps at %zu of "
                  "%zu restarts; %zu cells; %.1f s",
                  initial_sq, final_sq, final_sq / initial_sq, cusps.cusps,
                  restarts, r.x.terms(), r.seconds)};
}

Outcome rounding_correctness() {
  const CutRun& r = cut_run();
  const SetFunctionSpec f = SetFunctionSpec::from_graph(*r.problem.graph);
  RandomState rng(2024);
  int far = 0, far_ok = 0, near = 0, near_ok = 0;
  double worst_near = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double theta = rng.uniform(0.0, 4.0);
    const Eigen::VectorXd x = synthesize(r.x, theta).cwiseMax(0.0).cwiseMin(1.0);
    const double best = brute_force_min(f, theta).value;
    if (std::abs(theta - 2.0) > 0.2) {
      ++far;
      far_ok += cut_value(*r.problem.graph, threshold_round(x, 0.1), theta) == best;
    } else {
      ++near;
      const double gap = phi_round(f, x, theta).value - best;
      worst_near = std::max(worst_near, gap);
      near_ok += gap <= 0.1;
    }
  }
  return {far_ok == far && near_ok == near,
          fmt("threshold rounding exact at %d/%d theta; phi-rounding within "
              "0.1 at %d/%d near the tie (worst gap %.3g)",
              far_ok, far, near_ok, near, worst_near)};
}

Outcome lemma3_bound() {
  const ProblemSpec p = quadratic_problem(1.0, 50.0, quad_measure());
  const BasisFamily b = BasisFamily::legendre(quad_measure());
  const std::size_t m = 8;
  const Expansion start = Expansion::zeros(b, m, 2);
  const Expansion opt = uqsub::testing::level_optimum(p, b, m, 50.0);
  const double f_opt = uqsub::testing::expected_objective(p, opt);
  OracleConfig cfg;
  cfg.noise = NoiseModel::gaussian(0.5);
  const Expansion probes[] = {start};
  const GVEstimate gv = estimate_G_V(p, probes, cfg);
  const double dist_sq = (start.coefficients() - opt.coefficients()).squaredNorm();
  bool ok = true;
  std::string detail;
  for (double eta : {1e-3, 1e-2})
    for (std::size_t T : {100u, 1000u}) {
      std::vector<double> gaps;
      for (int seed = 0; seed < 50; ++seed) {
        RandomState rng(7000 + seed);
        const Expansion x = sg_subroutine(p, start, eta, T, m, cfg, rng);
        gaps.push_back(uqsub::testing::expected_objective(p, x) - f_opt);
      }
      const double bound = (gv.G_sq + gv.V_sq) * eta / 2.0 +
                           dist_sq / (2.0 * eta * static_cast<double>(T));
      const double mean = mean_of(gaps);
      ok = ok && mean <= 1.2 * bound;
      detail += fmt("%s(eta %g, T %zu) %.3g <= %.3g", detail.empty() ? "" : "; ",
                    eta, T, mean, 1.2 * bound);
    }
  return {ok, "mean gap vs 1.2 x bound: " + detail};
}

Outcome theorem2_envelope() {
  const double L = 50.0, eps = 0.05, alpha = 2.0;
  const ProblemSpec p = quadratic_problem(1.0, L, quad_measure());
  const BasisFamily b = BasisFamily::legendre(quad_measure());
  const std::size_t m = 8;
  const Expansion start = Expansion::zeros(b, m, 2);
  const Expansion opt = uqsub::testing::level_optimum(p, b, m, L);
  const double f_opt = uqsub::testing::expected_objective(p, opt);
  const double eps0 = uqsub::testing::expected_objective(p, start) - f_opt;
  const OracleConfig cfg;
  const Expansion probes[] = {start};
  const GVEstimate gv = estimate_G_V(p, probes, cfg);
  const StageParams sp = derive_stage_params(eps0, eps, alpha, gv.G_sq, gv.V_sq,
                                             2.0 * eps / std::sqrt(L),
                                             RhoMode::B_eps);
  const double eta1 = first_step_size(eps0, alpha, gv);
  const std::vector<std::size_t> sizes(sp.K, m);
  std::vector<double> gaps;
  for (int seed = 0; seed < 20; ++seed) {
    RandomState rng(8000 + seed);
    const Expansion x = rsg_loop(p, start, sp.K, sp.t, alpha, eta1, sizes, cfg, rng);
    gaps.push_back(uqsub::testing::expected_objective(p, x) - f_opt);
  }
  const double mean = mean_of(gaps), se = std_error(gaps);
  return {mean <= 2.0 * eps + 3.0 * se,
          fmt("t = %zu, K = %zu from eps0 = %.3f; mean gap %.4g (SE %.2g) vs "
              "2 eps + 3 SE = %.4g",
              sp.t, sp.K, eps0, mean, se, 2.0 * eps + 3.0 * se)};
}

Outcome lemma5_remainder() {
  const ProblemSpec p = quadratic_problem(1.0, 50.0, quad_measure());
  const BasisFamily b = BasisFamily::legendre(quad_measure());
  bool ok = true;
  std::string detail;
  for (std::size_t m : {4u, 8u, 16u}) {
    // Level-m optimum from a long fixed-m solver run.
    RsgConfig cfg;
    cfg.eps0 = 2.75;
    cfg.eps_target = 1e-3;
    cfg.outer_loops = 10;
    cfg.m_schedule = MSchedule::constant(m);
    cfg.oracle.theta_samples_per_call = 128;
    cfg.stagnation_tol = 0.0;
    cfg.seed = 11;
    const auto [x, trace] = restarted_outer(p, Expansion::zeros(b, m, 2), cfg);
    const RemainderGap gap = measure_remainder_gap(p, x, p.reference_optimum, m);
    ok = ok && gap.lhs <= 1.1 * gap.rhs;
    detail += fmt("%sm=%zu: %.3g <= %.3g", detail.empty() ? "" : "; ", m,
                  gap.lhs, 1.1 * gap.rhs);
  }
  return {ok, "lhs vs 1.1 L ||R_m||: " + detail};
}

struct Probe {
  const ProblemSpec* problem;
  Expansion e;
  std::size_t m;
};

Outcome oracle_soundness() {
  const ProblemSpec quad = quadratic_problem(1.0, 50.0, quad_measure());
  const ThetaMeasure cut_measure(0.0, 4.0);
  const ProblemSpec cut = mincut_problem(CutGraph::figure1(0.0, 4.0), cut_measure);
  const BasisFamily lb = BasisFamily::legendre(quad_measure());
  RandomState setup(31);
  Eigen::MatrixXd u(8, 2);
  for (Eigen::Index i = 0; i < u.size(); ++i) u.data()[i] = setup.uniform(-0.2, 0.2);
  const BasisFamily pb =
      BasisFamily::piecewise(cut_measure, sample_partition(cut_measure, 17, setup));
  Eigen::MatrixXd c(17, 2);
  for (Eigen::Index i = 0; i < 17; ++i) {
    const double s = std::sqrt(pb.cell_mass(static_cast<std::size_t>(i)));
    c(i, 0) = setup.uniform(0, 1) * s;
    c(i, 1) = setup.uniform(0, 1) * s;
  }
  const std::vector<Probe> probes{
      {&quad, Expansion::zeros(lb, 8, 2), 8},
      {&quad, Expansion(lb, u), 8},
      {&quad, uqsub::testing::level_optimum(quad, lb, 8, 50.0), 8},
      {&cut, Expansion::zeros(pb, 17, 2), 17},
      {&cut, Expansion(pb, c), 17},
  };
  OracleConfig quad_cfg;
  quad_cfg.noise = NoiseModel::gaussian(0.1);
  const OracleConfig cut_cfg;
  auto cfg_for = [&](const Probe& pr) -> const OracleConfig& {
    return pr.problem == &quad ? quad_cfg : cut_cfg;
  };
  std::vector<Expansion> quad_probes, cut_probes;
  for (const Probe& pr : probes)
    (pr.problem == &quad ? quad_probes : cut_probes).push_back(pr.e);
  const GVEstimate quad_gv = estimate_G_V(quad, quad_probes, quad_cfg);
  const GVEstimate cut_gv = estimate_G_V(cut, cut_probes, cut_cfg);

  bool unbiased = true, bounded = true, halving = true;
  double worst_z = 0.0, worst_moment = 0.0, min_ratio = INFINITY, max_ratio = 0.0;
  const int R = 500;
  for (const Probe& pr : probes) {
    const ProblemSpec& p = *pr.problem;
    const Eigen::MatrixXd exact =
        analyze([&](double t) { return p.subgradient(synthesize(pr.e, t), t); },
                pr.e.basis(), pr.m)
            .coefficients();
    const GVEstimate& gv = &p == &quad ? quad_gv : cut_gv;
    OracleConfig cfg = cfg_for(pr);
    double rms[2] = {0.0, 0.0};
    for (int level = 0; level < 2; ++level) {
      cfg.theta_samples_per_call = level == 0 ? 64 : 256;
      RandomState rng(9000 + 17 * level);
      Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(exact.rows(), exact.cols());
      Eigen::MatrixXd sum_sq = sum;
      double moment = 0.0, err_sq = 0.0;
      for (int r = 0; r < R; ++r) {
        const Eigen::MatrixXd g =
            estimate_truncated_subgradient(p, pr.e, pr.m, cfg, rng);
        sum += g;
        sum_sq += g.cwiseProduct(g);
        moment += g.squaredNorm() / R;
        err_sq += (g - exact).squaredNorm() / R;
      }
      rms[level] = std::sqrt(err_sq);
      if (level == 0) {
        const Eigen::MatrixXd mean = sum / R;
        const Eigen::MatrixXd var =
            (sum_sq / R - mean.cwiseProduct(mean)) * (double(R) / (R - 1));
        for (Eigen::Index i = 0; i < mean.size(); ++i) {
          const double se = std::sqrt(std::max(var.data()[i], 0.0) / R);
          const double diff = std::abs(mean.data()[i] - exact.data()[i]);
          if (se == 0.0) {
            unbiased = unbiased && diff <= 1e-12;
            continue;
          }
          worst_z = std::max(worst_z, diff / se);
          unbiased = unbiased && diff < 4.0 * se;
        }
        const double ratio = moment / (gv.G_sq + gv.V_sq);
        worst_moment = std::max(worst_moment, ratio);
        bounded = bounded && ratio <= 1.0;
      }
    }
    const double ratio = rms[0] / rms[1];
    min_ratio = std::min(min_ratio, ratio);
    max_ratio = std::max(max_ratio, ratio);
    halving = halving && ratio >= 1.5 && ratio <= 2.5;
  }
  return {unbiased && bounded && halving,
          fmt("%zu probes x %d calls: worst |bias|/SE %.2f (< 4); worst "
              "E||g'||^2 / (G^2+V^2) %.3f (<= 1); RMS(N=64)/RMS(N=256) in "
              "[%.3f, %.3f] (2 +- 25%%)",
              probes.size(), R, worst_z, worst_moment, min_ratio, max_ratio)};
}

Outcome submodular_layer() {
  RandomState rng(4242);
  std::vector<CutGraph> graphs;
  bool vertices = true, submodular = true;
  std::size_t vertex_checks = 0, pair_checks = 0;
  for (int i = 0; i < 50; ++i) {
    const std::size_t n = 1 + static_cast<std::size_t>(i) % 8;
    graphs.push_back(uqsub::testing::random_cut_graph(n, 0.0, 4.0, rng));
    const SetFunctionSpec f = SetFunctionSpec::from_graph(graphs.back());
    for (double theta : {0.0, rng.uniform(0.0, 4.0), 4.0}) {
      const std::uint32_t full = 1u << n;
      std::vector<double> val(full);
      for (std::uint32_t mask = 0; mask < full; ++mask) {
        std::vector<bool> in(n);
        Eigen::VectorXd x(static_cast<Eigen::Index>(n));
        for (std::size_t k = 0; k < n; ++k) {
          in[k] = (mask >> k) & 1u;
          x[static_cast<Eigen::Index>(k)] = in[k] ? 1.0 : 0.0;
        }
        val[mask] = f.evaluate(in, theta);
        vertices = vertices && lovasz_eval(f, x, theta) == val[mask];
        ++vertex_checks;
      }
      for (std::uint32_t a = 0; a < full; ++a)
        for (std::uint32_t b = 0; b < full; ++b) {
          submodular = submodular &&
                       val[a] + val[b] >= val[a | b] + val[a & b] - 1e-12;
          ++pair_checks;
        }
    }
  }
  double worst_slack = INFINITY;
  for (int i = 0; i < 1000; ++i) {
    const CutGraph& g = graphs[static_cast<std::size_t>(i) % graphs.size()];
    const SetFunctionSpec f = SetFunctionSpec::from_graph(g);
    const double theta = rng.uniform(0.0, 4.0);
    Eigen::VectorXd x(static_cast<Eigen::Index>(f.ground_size));
    Eigen::VectorXd y(x.size());
    for (Eigen::Index k = 0; k < x.size(); ++k) {
      x[k] = rng.uniform(0.0, 1.0);
      y[k] = rng.uniform(0.0, 1.0);
    }
    const double slack = lovasz_eval(f, y, theta) - lovasz_eval(f, x, theta) -
                         lovasz_subgradient(f, x, theta).dot(y - x);
    worst_slack = std::min(worst_slack, slack);
  }
  return {vertices && submodular && worst_slack >= -1e-9,
          fmt("vertex agreement %s over %zu checks; submodular on %zu pairs: "
              "%s; worst subgradient slack %.2e over 1000 triples",
              vertices ? "exact" : "BROKEN", vertex_checks, pair_checks,
              submodular ? "yes" : "no", worst_slack)};
}

Outcome spacing_rate() {
  const ThetaMeasure unit(0.0, 1.0);
  bool ok = true;
  std::string detail;
  for (std::size_t n : {16u, 64u, 256u}) {
    RandomState rng(500 + n);
    double total = 0.0;
    const int trials = 10000;
    for (int t = 0; t < trials; ++t)
      total += max_gap_measure(sample_partition(unit, n + 1, rng), unit);
    const double ratio = total / trials /
                         (std::log(static_cast<double>(n)) / static_cast<double>(n));
    ok = ok && ratio >= 0.5 && ratio <= 2.0;
    detail += fmt("%sn=%zu: %.3f", detail.empty() ? "" : ", ", n, ratio);
  }
  return {ok, "E[max gap] / (log n / n): " + detail};
}

Outcome projection_algebra() {
  const ThetaMeasure m(0.0, 4.0);
  RandomState rng(77);
  const BasisFamily box_basis = BasisFamily::piecewise(m, sample_partition(m, 16, rng));
  const BasisFamily ball_basis = BasisFamily::legendre(quad_measure());
  bool idempotent = true, nonexpansive = true;
  double worst = 0.0;
  for (int kind = 0; kind < 2; ++kind) {
    const BasisFamily& b = kind == 0 ? box_basis : ball_basis;
    const ProjectionSpec spec =
        kind == 0 ? ProjectionSpec::box(0.0, 1.0) : ProjectionSpec::ball(1.5);
    for (int i = 0; i < 1000; ++i) {
      Eigen::MatrixXd ua(16, 2), ub(16, 2);
      for (Eigen::Index k = 0; k < ua.size(); ++k) {
        ua.data()[k] = rng.uniform(-1.5, 1.5);
        ub.data()[k] = rng.uniform(-1.5, 1.5);
      }
      const Expansion pa = project(Expansion(b, ua), spec);
      const Expansion pb = project(Expansion(b, ub), spec);
      idempotent = idempotent &&
                   project(pa, spec).coefficients() == pa.coefficients() &&
                   project(pb, spec).coefficients() == pb.coefficients();
      const double ratio =
          (pa.coefficients() - pb.coefficients()).norm() / (ua - ub).norm();
      worst = std::max(worst, ratio);
      nonexpansive = nonexpansive && ratio <= 1.0 + 1e-12;
    }
  }
  return {idempotent && nonexpansive,
          fmt("idempotence %s; worst ||P a - P b|| / ||a - b|| = %.6f over "
              "2 x 1000 pairs",
              idempotent ? "exact" : "BROKEN", worst)};
}

Outcome determinism() {
  ExperimentConfig cfg = ExperimentConfig::load(kSource / "configs/quadratic.ini");
  const fs::path base = fs::temp_directory_path() / "uqsub_acceptance_det";
  fs::remove_all(base);
  cfg.output_dir = base / "a";
  run_experiment(cfg);
  cfg.output_dir = base / "b";
  run_experiment(cfg);
  const std::string a = read_text(base / "a/trace.csv");
  const std::string b = read_text(base / "b/trace.csv");
  bool others = true;
  for (const char* f : {"expansion.json", "stats.json", "summary.json"})
    others = others && read_text(base / "a" / f) == read_text(base / "b" / f);
  fs::remove_all(base);
  return {!a.empty() && a == b,
          fmt("trace.csv %s (%zu bytes); other artifacts %s",
              a == b ? "byte-identical" : "DIFFERS", a.size(),
              others ? "identical" : "differ")};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"quadratic experiment reproduction", quadratic_reproduction},
      {"min-cut experiment reproduction", mincut_reproduction},
      {"rounding correctness", rounding_correctness},
      {"constant-step bound", lemma3_bound},
      {"fixed-level restart envelope", theorem2_envelope},
      {"remainder bound", lemma5_remainder},
      {"oracle soundness", oracle_soundness},
      {"submodular layer", submodular_layer},
      {"spacing rate", spacing_rate},
      {"projection algebra", projection_algebra},
      {"determinism", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1,
                criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n",
              static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
