#include "uqsub/rsg.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>
#include <system_error>

#include "uqsub/error.hpp"

namespace uqsub {

// ---------------------------------------------------------------------------
// MSchedule

MSchedule MSchedule::constant(std::size_t m) {
  if (m < 1) throw ConfigError("rsg.m_schedule", "constant size must be >= 1");
  MSchedule s;
  s.kind_ = Kind::constant;
  s.a_ = static_cast<double>(m);
  return s;
}

MSchedule MSchedule::power(double shift, double exponent, double offset) {
  if (!std::isfinite(shift) || !std::isfinite(exponent) ||
      !std::isfinite(offset))
    throw ConfigError("rsg.m_schedule", "power parameters must be finite");
  if (exponent < 0.0)
    throw ConfigError("rsg.m_schedule",
                      "negative exponent makes the schedule decrease");
  if (shift <= -1.0)
    throw ConfigError("rsg.m_schedule", "shift must exceed -1");
  MSchedule s;
  s.kind_ = Kind::power;
  s.a_ = shift;
  s.b_ = exponent;
  s.c_ = offset;
  if (s(1) < 1) throw ConfigError("rsg.m_schedule", "first size is below 1");
  return s;
}

MSchedule MSchedule::per_outer(std::size_t base, std::size_t step,
                               std::size_t stages_per_outer) {
  if (base < 1) throw ConfigError("rsg.m_schedule", "base must be >= 1");
  if (stages_per_outer < 1)
    throw ConfigError("rsg.m_schedule", "stages per outer loop must be >= 1");
  MSchedule s;
  s.kind_ = Kind::per_outer;
  s.a_ = static_cast<double>(base);
  s.b_ = static_cast<double>(step);
  s.stages_ = stages_per_outer;
  return s;
}

namespace {

std::vector<double> parse_numbers(const std::string& text,
                                  const std::string& field) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos)
      throw ConfigError(field, "empty number in '" + text + "'");
    const std::string tok = item.substr(b, e - b + 1);
    double v = 0.0;
    const auto [ptr, ec] =
        std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
      throw ConfigError(field, "not a number: '" + tok + "'");
    out.push_back(v);
  }
  return out;
}

std::size_t as_count(double v, const std::string& field) {
  if (!(v >= 0.0) || v != std::floor(v) || v > 1e9)
    throw ConfigError(field, "expected a nonnegative integer");
  return static_cast<std::size_t>(v);
}

}  // namespace

MSchedule MSchedule::parse(const std::string& text,
                           std::size_t stages_per_outer) {
  const std::string field = "rsg.m_schedule";
  const auto colon = text.find(':');
  if (colon == std::string::npos)
    throw ConfigError(field, "expected kind:parameters, got '" + text + "'");
  const std::string kind = text.substr(0, colon);
  const std::vector<double> v = parse_numbers(text.substr(colon + 1), field);
  if (kind == "constant") {
    if (v.size() != 1) throw ConfigError(field, "constant takes one value");
    return constant(as_count(v[0], field));
  }
  if (kind == "power") {
    if (v.size() != 3)
      throw ConfigError(field, "power takes shift,exponent,offset");
    return power(v[0], v[1], v[2]);
  }
  if (kind == "per_outer") {
    if (v.size() != 2) throw ConfigError(field, "per_outer takes base,step");
    return per_outer(as_count(v[0], field), as_count(v[1], field),
                     stages_per_outer);
  }
  throw ConfigError(field, "unknown schedule kind '" + kind + "'");
}

std::size_t MSchedule::operator()(std::size_t j) const {
  if (j < 1) throw DomainError("m schedule: stage index starts at 1");
  switch (kind_) {
    case Kind::constant:
      return static_cast<std::size_t>(a_);
    case Kind::power: {
      const double v =
          std::round(std::pow(static_cast<double>(j) + a_, b_) + c_);
      return v < 1.0 ? std::size_t{1} : static_cast<std::size_t>(v);
    }
    case Kind::per_outer:
      return static_cast<std::size_t>(a_) +
             static_cast<std::size_t>(b_) * ((j - 1) / stages_);
  }
  return 1;
}

std::string MSchedule::describe() const {
  auto num = [](double v) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
  };
  switch (kind_) {
    case Kind::constant:
      return "constant:" + num(a_);
    case Kind::power:
      return "power:" + num(a_) + "," + num(b_) + "," + num(c_);
    case Kind::per_outer:
      return "per_outer:" + num(a_) + "," + num(b_);
  }
  return "";
}

void RsgConfig::validate() const {
  if (!(alpha > 1.0)) throw ConfigError("rsg.alpha", "must exceed 1");
  if (!(eps_target > 0.0))
    throw ConfigError("rsg.eps_target", "must be positive");
  if (!(eps0 > eps_target))
    throw ConfigError("rsg.eps0", "must exceed eps_target");
  if (t < 1) throw ConfigError("rsg.t", "must be >= 1");
  if (K < 1) throw ConfigError("rsg.K", "must be >= 1");
  if (outer_loops < 1) throw ConfigError("rsg.outer_loops", "must be >= 1");
  if (eta1 && !(*eta1 > 0.0 && std::isfinite(*eta1)))
    throw ConfigError("rsg.eta1", "must be positive");
  if (!(stagnation_tol >= 0.0))
    throw ConfigError("rsg.stagnation_tol", "must be nonnegative");
  if (oracle.theta_samples_per_call < 1)
    throw ConfigError("oracle.samples", "must be >= 1");
  if (oracle.noise.kind == NoiseKind::additive_gaussian &&
      !(oracle.noise.sigma >= 0.0))
    throw ConfigError("oracle.sigma", "must be nonnegative");
}

// ---------------------------------------------------------------------------
// Error evaluation

ErrorEvaluator::ErrorEvaluator(const ProblemSpec& p, const ThetaMeasure& measure)
    : p_(&p) {
  if (!p.optimal_value) return;
  const auto nodes = measure.nodes();
  const auto weights = measure.weights();
  nodes_.assign(nodes.begin(), nodes.end());
  weights_.assign(weights.begin(), weights.end());
  fstar_.reserve(nodes_.size());
  for (double theta : nodes_) fstar_.push_back(p.optimal_value(theta));
}

double ErrorEvaluator::operator()(const Expansion& e) const {
  if (!available()) return std::nan("");
  double acc = 0.0;
  for (std::size_t j = 0; j < nodes_.size(); ++j) {
    const double gap =
        p_->objective(synthesize(e, nodes_[j]), nodes_[j]) - fstar_[j];
    acc += weights_[j] * gap * gap;
  }
  return std::sqrt(acc);
}

double ErrorEvaluator::operator()(const BasisFamily& basis,
                                  const Eigen::MatrixXd& u) const {
  return (*this)(Expansion(basis, u));
}

std::uint64_t coefficient_hash(const Eigen::MatrixXd& u) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* data, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 1099511628211ULL;
    }
  };
  const std::int64_t shape[2] = {u.rows(), u.cols()};
  mix(shape, sizeof shape);
  for (Eigen::Index j = 0; j < u.cols(); ++j)
    for (Eigen::Index i = 0; i < u.rows(); ++i) {
      const double v = u(i, j);
      mix(&v, sizeof v);
    }
  return h;
}

// ---------------------------------------------------------------------------
// Algorithms

Expansion sg_subroutine(const ProblemSpec& p, const Expansion& start,
                        double eta, std::size_t T, std::size_t m,
                        const OracleConfig& cfg, RandomState& rng) {
  if (!(eta > 0.0)) throw DomainError("sg_subroutine: eta must be positive");
  if (T < 1) throw DomainError("sg_subroutine: T must be >= 1");
  if (m < 1 || m > start.terms())
    throw StructureError("sg_subroutine: m must lie in [1, expansion terms]");
  const BasisFamily& basis = start.basis();
  const Eigen::MatrixXd& u0 = start.coefficients();
  Eigen::MatrixXd u = u0;
  // Iterates are summed as offsets from the start so a fixed point averages
  // back to the start exactly.
  Eigen::MatrixXd offset_sum = Eigen::MatrixXd::Zero(u.rows(), u.cols());
  const auto rows = static_cast<Eigen::Index>(m);
  for (std::size_t it = 0; it < T; ++it) {
    const Eigen::MatrixXd g =
        estimate_truncated_subgradient(p, basis, u, m, cfg, rng);
    u.topRows(rows) -= eta * g;
    project_coefficients(u, basis, p.projection);
    offset_sum += u - u0;
  }
  Eigen::MatrixXd avg = u0 + offset_sum / static_cast<double>(T);
  project_coefficients(avg, basis, p.projection);
  return Expansion(basis, std::move(avg));
}

Expansion grow_expansion(const Expansion& e, std::size_t m, RandomState& rng) {
  if (m <= e.terms()) return e;
  if (e.basis().kind() == BasisKind::legendre) return extend(e, m);
  Expansion out = e;
  while (out.terms() < m) out = refine_expansion(out, rng);
  return out;
}

double first_step_size(double eps0, double alpha, const GVEstimate& gv) {
  const double denom = alpha * (gv.G_sq + gv.V_sq);
  if (!(denom > 0.0))
    throw DomainError("first step size: G^2 + V^2 must be positive");
  return eps0 / denom;
}

Expansion rsg_loop(const ProblemSpec& p, const Expansion& start, std::size_t K,
                   std::size_t t, double alpha, double eta1,
                   std::span<const std::size_t> m_k, const OracleConfig& cfg,
                   RandomState& rng, const RsgLoopContext& ctx) {
  if (K < 1) throw DomainError("rsg_loop: K must be >= 1");
  if (!(alpha > 1.0)) throw DomainError("rsg_loop: alpha must exceed 1");
  if (m_k.size() < K)
    throw StructureError("rsg_loop: schedule slice shorter than K");
  using Clock = std::chrono::steady_clock;
  const auto t0 = Clock::now();
  Expansion x = start;
  double eta = eta1;
  for (std::size_t k = 1; k <= K; ++k) {
    const std::size_t m = m_k[k - 1];
    x = grow_expansion(x, m, rng);
    x = sg_subroutine(p, x, eta, t, m, cfg, rng);
    if (ctx.trace) {
      RunTrace& tr = *ctx.trace;
      TraceRow row;
      row.call_index = tr.rows.size() + 1;
      row.outer_i = ctx.outer_i;
      row.stage_k = k;
      row.m = m;
      row.eta = eta;
      row.fn_error_pi = ctx.error ? (*ctx.error)(x) : std::nan("");
      row.fn_error_pi_sq = row.fn_error_pi * row.fn_error_pi;
      if (ctx.record_timing)
        row.elapsed_ms =
            std::chrono::duration<double, std::milli>(Clock::now() - t0)
                .count();
      row.coefficient_hash = coefficient_hash(x.coefficients());
      tr.rows.push_back(row);
    }
    eta /= alpha;
  }
  if (ctx.trace) ++ctx.trace->rsg_calls;
  return x;
}

std::pair<Expansion, RunTrace> restarted_outer(const ProblemSpec& p,
                                               const Expansion& start,
                                               const RsgConfig& cfg) {
  cfg.validate();
  check_compatible(p.projection, start.basis().kind());
  if (start.outputs() != p.dimension)
    throw StructureError("restarted_outer: start has the wrong output count");
  // The schedule must be monotone over every stage this run can reach.
  std::vector<std::size_t> schedule(cfg.K * cfg.outer_loops);
  for (std::size_t j = 1; j <= schedule.size(); ++j)
    schedule[j - 1] = cfg.m_schedule(j);
  for (std::size_t j = 1; j < schedule.size(); ++j)
    if (schedule[j] < schedule[j - 1])
      throw ConfigError("rsg.m_schedule", "sizes must be nondecreasing");
  if (schedule.front() < start.terms())
    throw ConfigError("rsg.m_schedule",
                      "first size is below the start expansion's terms");
  if (start.basis().kind() == BasisKind::legendre &&
      schedule.back() > BasisFamily::kMaxLegendreTerms)
    throw ConfigError("rsg.m_schedule",
                      "exceeds the Legendre family's term limit");
  if (!is_feasible(start.coefficients(), start.basis(), p.projection))
    throw DomainError("restarted_outer: start point is infeasible");

  RandomState rng(cfg.seed);
  RunTrace trace;
  const ErrorEvaluator error(p, start.basis().measure());
  const Expansion probes[] = {start};
  trace.gv = estimate_G_V(p, probes, cfg.oracle);
  trace.eta1 = cfg.eta1 ? *cfg.eta1 : first_step_size(cfg.eps0, cfg.alpha, trace.gv);
  trace.initial_error_pi = error(start);

  Expansion x = start;
  double previous = trace.initial_error_pi;
  for (std::size_t i = 1; i <= cfg.outer_loops; ++i) {
    const std::span<const std::size_t> slice(schedule.data() + (i - 1) * cfg.K,
                                             cfg.K);
    const RsgLoopContext ctx{&trace, &error, i, cfg.record_timing};
    x = rsg_loop(p, x, cfg.K, cfg.t, cfg.alpha, trace.eta1, slice, cfg.oracle,
                 rng, ctx);
    if (cfg.stagnation_tol > 0.0 && error.available()) {
      const double current = trace.rows.back().fn_error_pi;
      if (previous <= 0.0 || (previous - current) / previous < cfg.stagnation_tol)
        break;
      previous = current;
    }
  }
  return {std::move(x), std::move(trace)};
}

namespace {

// ceil that ignores floating noise just above an integer.
double stable_ceil(double v) {
  const double r = std::round(v);
  if (std::abs(v - r) <= 1e-9 * std::max(1.0, std::abs(v))) return r;
  return std::ceil(v);
}

}  // namespace

StageParams derive_stage_params(double eps0, double eps, double alpha,
                                double G_sq, double V_sq, double value,
                                RhoMode mode) {
  if (!(eps0 > 0.0) || !(eps > 0.0) || !(value > 0.0))
    throw DomainError("derive_stage_params: eps0, eps and rho must be positive");
  if (!(alpha > 1.0)) throw DomainError("derive_stage_params: alpha must exceed 1");
  if (G_sq < 0.0 || V_sq < 0.0 || !(G_sq + V_sq > 0.0))
    throw DomainError("derive_stage_params: G^2 + V^2 must be positive");
  double rho = value;
  if (mode == RhoMode::B_eps) rho = eps / value;
  const double K = std::max(1.0, stable_ceil(std::log(eps0 / eps) / std::log(alpha)));
  const double t = std::max(1.0, stable_ceil(alpha * alpha * (G_sq + V_sq) / (rho * rho)));
  return {static_cast<std::size_t>(t), static_cast<std::size_t>(K)};
}

RemainderGap measure_remainder_gap(const ProblemSpec& p,
                                   const Expansion& level_m_optimum,
                                   const VectorField& reference,
                                   std::size_t m) {
  if (!reference) throw StructureError("remainder gap: no reference optimum");
  const BasisFamily& basis = level_m_optimum.basis();
  const ThetaMeasure& measure = basis.measure();
  const Expansion projected = analyze(reference, basis, m);

  auto value_gap_sq = [&](double theta) {
    const double d = p.objective(synthesize(level_m_optimum, theta), theta) -
                     p.objective(reference(theta), theta);
    return d * d;
  };
  auto remainder_sq = [&](double theta) {
    return (reference(theta) - synthesize(projected, theta)).squaredNorm();
  };
  double lhs_sq = 0.0;
  double rem_sq = 0.0;
  if (basis.kind() == BasisKind::piecewise_constant) {
    const auto breaks = basis.partition().breakpoints();
    lhs_sq = measure.integrate_split(value_gap_sq, breaks);
    rem_sq = measure.integrate_split(remainder_sq, breaks);
  } else {
    const auto nodes = measure.nodes();
    const auto weights = measure.weights();
    for (std::size_t j = 0; j < nodes.size(); ++j) {
      lhs_sq += weights[j] * value_gap_sq(nodes[j]);
      rem_sq += weights[j] * remainder_sq(nodes[j]);
    }
  }
  return {std::sqrt(lhs_sq), p.lipschitz * std::sqrt(rem_sq)};
}

// ---------------------------------------------------------------------------
// CSV

namespace {

constexpr const char* kTraceHeader =
    "call_index,outer_i,stage_k,m,eta,fn_error_pi,fn_error_pi_sq,elapsed_ms,"
    "coeff_hash";

template <typename T>
void put(std::ostream& out, T v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  out.write(buf, r.ptr - buf);
}

void put_hex(std::ostream& out, std::uint64_t v) {
  char buf[17];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, 16);
  out.write(buf, r.ptr - buf);
}

template <typename T>
T get(const std::string& s, std::size_t line, int base = 10) {
  T v{};
  std::from_chars_result r;
  if constexpr (std::is_floating_point_v<T>)
    r = std::from_chars(s.data(), s.data() + s.size(), v);
  else
    r = std::from_chars(s.data(), s.data() + s.size(), v, base);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw ConfigError("line " + std::to_string(line),
                      "bad trace field '" + s + "'");
  return v;
}

}  // namespace

void write_trace_csv(const RunTrace& trace, std::ostream& out) {
  out << kTraceHeader << '\n';
  for (const TraceRow& r : trace.rows) {
    put(out, r.call_index); out << ',';
    put(out, r.outer_i); out << ',';
    put(out, r.stage_k); out << ',';
    put(out, r.m); out << ',';
    put(out, r.eta); out << ',';
    put(out, r.fn_error_pi); out << ',';
    put(out, r.fn_error_pi_sq); out << ',';
    put(out, r.elapsed_ms); out << ',';
    put_hex(out, r.coefficient_hash);
    out << '\n';
  }
}

RunTrace read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kTraceHeader)
    throw ConfigError("line 1", "missing or unexpected trace header");
  RunTrace trace;
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 9)
      throw ConfigError("line " + std::to_string(n), "expected 9 fields");
    TraceRow r;
    r.call_index = get<std::size_t>(f[0], n);
    r.outer_i = get<std::size_t>(f[1], n);
    r.stage_k = get<std::size_t>(f[2], n);
    r.m = get<std::size_t>(f[3], n);
    r.eta = get<double>(f[4], n);
    r.fn_error_pi = get<double>(f[5], n);
    r.fn_error_pi_sq = get<double>(f[6], n);
    r.elapsed_ms = get<double>(f[7], n);
    r.coefficient_hash = get<std::uint64_t>(f[8], n, 16);
    trace.rows.push_back(r);
  }
  std::size_t calls = 0;
  std::size_t last_outer = 0;
  for (const TraceRow& r : trace.rows)
    if (r.stage_k == 1 || r.outer_i != last_outer) {
      ++calls;
      last_outer = r.outer_i;
    }
  trace.rsg_calls = calls;
  return trace;
}

}  // namespace uqsub
