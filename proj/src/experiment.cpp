#include "uqsub/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>
#include <system_error>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "json.hpp"
#include "uqsub/error.hpp"
#include "uqsub/io.hpp"

namespace uqsub {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

namespace {

// Stream seeds for the auxiliary random streams, derived from the run seed.
constexpr std::uint64_t kPartitionStream = 0x9e3779b97f4a7c15ULL;
constexpr std::uint64_t kStatsStream = 0xbf58476d1ce4e5b9ULL;

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + stream;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"problem", {"name", "mu", "L", "graph"}},
      {"measure", {"lower", "upper", "nodes"}},
      {"basis", {"kind"}},
      {"projection", {"kind", "radius", "lo", "hi"}},
      {"rsg",
       {"eps0", "eps_target", "alpha", "t", "K", "outer_loops", "m_schedule",
        "eta1", "stagnation_tol", "seed"}},
      {"oracle", {"samples", "noise", "sigma"}},
      {"stats", {"samples", "quantiles", "round_eps"}},
      {"output", {"dir", "timing"}},
  };
  return keys;
}

class Reader {
 public:
  explicit Reader(const pt::ptree& tree) : tree_(tree) {}

  std::optional<std::string> text(const std::string& key) const {
    const auto v = tree_.get_optional<std::string>(pt::ptree::path_type(key, '.'));
    if (!v) return std::nullopt;
    return trim(*v);
  }

  std::optional<double> real(const std::string& key) const {
    const auto v = text(key);
    if (!v) return std::nullopt;
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
    if (ec != std::errc() || ptr != v->data() + v->size() || !std::isfinite(out))
      throw ConfigError(key, "expected a number, got '" + *v + "'");
    return out;
  }

  std::optional<std::uint64_t> count(const std::string& key) const {
    const auto v = text(key);
    if (!v) return std::nullopt;
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
    if (ec != std::errc() || ptr != v->data() + v->size())
      throw ConfigError(key, "expected a nonnegative integer, got '" + *v + "'");
    return out;
  }

  std::optional<bool> flag(const std::string& key) const {
    const auto v = text(key);
    if (!v) return std::nullopt;
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    throw ConfigError(key, "expected true or false, got '" + *v + "'");
  }

 private:
  const pt::ptree& tree_;
};

std::vector<double> parse_list(const std::string& text, const std::string& key) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const std::string tok = trim(item);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (tok.empty() || ec != std::errc() || ptr != tok.data() + tok.size())
      throw ConfigError(key, "bad list entry '" + tok + "'");
    out.push_back(v);
  }
  return out;
}

}  // namespace

ExperimentConfig ExperimentConfig::parse(std::istream& in,
                                         const fs::path& base_dir) {
  // The INI reader only knows ';' comments; blank out '#' lines first so
  // reported line numbers stay correct.
  std::ostringstream cleaned;
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    cleaned << (t.starts_with('#') ? "" : line) << '\n';
  }
  pt::ptree tree;
  try {
    std::istringstream ss(cleaned.str());
    pt::read_ini(ss, tree);
  } catch (const pt::ini_parser_error& ex) {
    throw ConfigError("line " + std::to_string(ex.line()), ex.message());
  }
  for (const auto& [section, body] : tree) {
    const auto it = known_keys().find(section);
    if (it == known_keys().end()) {
      if (body.empty())
        throw ConfigError(section, "key outside of any section");
      throw ConfigError(section, "unknown section");
    }
    for (const auto& [key, value] : body)
      if (!it->second.contains(key))
        throw ConfigError(section + "." + key, "unknown key");
  }
  const Reader r(tree);
  ExperimentConfig c;

  std::string name = r.text("problem.name").value_or("");
  // "mincut:<path>" is shorthand for name = mincut plus problem.graph.
  std::optional<std::string> graph = r.text("problem.graph");
  if (name.starts_with("mincut:")) {
    if (graph)
      throw ConfigError("problem.graph", "given twice (also in problem.name)");
    graph = trim(name.substr(7));
    name = "mincut";
  }
  if (name == "quadratic") {
    c.problem = ProblemKind::quadratic;
  } else if (name == "mincut") {
    c.problem = ProblemKind::mincut;
  } else {
    throw ConfigError("problem.name",
                      name.empty() ? "missing" : "unknown problem '" + name + "'");
  }
  if (c.problem == ProblemKind::quadratic) {
    c.theta_lower = 0.0;
    c.theta_upper = 2.0 * std::numbers::pi;
    c.basis = BasisKind::legendre;
  } else {
    c.theta_lower = 0.0;
    c.theta_upper = 4.0;
    c.basis = BasisKind::piecewise_constant;
  }
  c.mu = r.real("problem.mu").value_or(c.mu);
  c.L = r.real("problem.L").value_or(c.L);
  if (const auto& g = graph) {
    if (c.problem != ProblemKind::mincut)
      throw ConfigError("problem.graph", "only used by the mincut problem");
    if (g->empty()) throw ConfigError("problem.graph", "empty path");
    c.graph_path = fs::path(*g).is_absolute() ? fs::path(*g) : base_dir / *g;
  }

  c.theta_lower = r.real("measure.lower").value_or(c.theta_lower);
  c.theta_upper = r.real("measure.upper").value_or(c.theta_upper);
  if (const auto n = r.count("measure.nodes")) {
    if (*n < 2 || *n > 1u << 20)
      throw ConfigError("measure.nodes", "must lie in [2, 2^20]");
    c.quadrature_nodes = static_cast<int>(*n);
  }

  if (const auto k = r.text("basis.kind")) c.basis = basis_kind_from_string(*k);

  if (const auto k = r.text("projection.kind")) {
    if (*k == "none") {
      c.projection = ProjectionSpec::none();
    } else if (*k == "ball") {
      const auto radius = r.real("projection.radius");
      if (!radius) throw ConfigError("projection.radius", "required for ball");
      c.projection = ProjectionSpec::ball(*radius);
    } else if (*k == "box") {
      c.projection = ProjectionSpec::box(r.real("projection.lo").value_or(0.0),
                                         r.real("projection.hi").value_or(1.0));
    } else {
      throw ConfigError("projection.kind", "unknown kind '" + *k + "'");
    }
  } else if (r.text("projection.radius") || r.text("projection.lo") ||
             r.text("projection.hi")) {
    throw ConfigError("projection.kind", "required when bounds are given");
  }

  RsgConfig& s = c.rsg;
  const auto eps0 = r.real("rsg.eps0");
  if (!eps0) throw ConfigError("rsg.eps0", "missing");
  s.eps0 = *eps0;
  s.eps_target = r.real("rsg.eps_target").value_or(s.eps_target);
  s.alpha = r.real("rsg.alpha").value_or(s.alpha);
  s.t = r.count("rsg.t").value_or(s.t);
  s.K = r.count("rsg.K").value_or(s.K);
  s.outer_loops = r.count("rsg.outer_loops").value_or(s.outer_loops);
  if (s.K < 1) throw ConfigError("rsg.K", "must be >= 1");
  const auto sched = r.text("rsg.m_schedule");
  if (!sched) throw ConfigError("rsg.m_schedule", "missing");
  s.m_schedule = MSchedule::parse(*sched, s.K);
  if (const auto eta = r.real("rsg.eta1")) s.eta1 = *eta;
  s.stagnation_tol = r.real("rsg.stagnation_tol").value_or(s.stagnation_tol);
  s.seed = r.count("rsg.seed").value_or(0);

  s.oracle.theta_samples_per_call =
      r.count("oracle.samples").value_or(s.oracle.theta_samples_per_call);
  const std::string noise = r.text("oracle.noise").value_or("none");
  if (noise == "none") {
    if (r.text("oracle.sigma"))
      throw ConfigError("oracle.sigma", "given without oracle.noise = gaussian");
    s.oracle.noise = NoiseModel::none();
  } else if (noise == "gaussian") {
    const auto sigma = r.real("oracle.sigma");
    if (!sigma) throw ConfigError("oracle.sigma", "required for gaussian noise");
    s.oracle.noise = NoiseModel::gaussian(*sigma);
  } else {
    throw ConfigError("oracle.noise", "unknown noise model '" + noise + "'");
  }

  c.stats.samples = r.count("stats.samples").value_or(c.stats.samples);
  if (const auto q = r.text("stats.quantiles"))
    c.stats.quantiles = q->empty() ? std::vector<double>{}
                                   : parse_list(*q, "stats.quantiles");
  c.stats.round_eps = r.real("stats.round_eps").value_or(c.stats.round_eps);

  if (const auto d = r.text("output.dir")) {
    if (d->empty()) throw ConfigError("output.dir", "empty path");
    c.output_dir = *d;
  }
  s.record_timing = r.flag("output.timing").value_or(false);

  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open " + path.string());
  return parse(in, path.parent_path());
}

void ExperimentConfig::validate() const {
  if (!(theta_lower < theta_upper))
    throw ConfigError("measure.upper", "must exceed measure.lower");
  if (problem == ProblemKind::quadratic) {
    if (!(mu > 0.0)) throw ConfigError("problem.mu", "must be positive");
    if (!(L >= mu)) throw ConfigError("problem.L", "must be at least mu");
  }
  const ProjectionSpec proj = projection.value_or(
      problem == ProblemKind::quadratic ? ProjectionSpec::ball(1.5)
                                        : ProjectionSpec::box(0.0, 1.0));
  try {
    check_compatible(proj, basis);
  } catch (const Error& ex) {
    throw ConfigError("projection.kind", ex.what());
  }
  if (problem == ProblemKind::mincut && proj.kind != ProjectionKind::per_cell_box)
    throw ConfigError("projection.kind",
                      "the cut relaxation needs the per-cell box");
  rsg.validate();
  std::size_t prev = 0;
  for (std::size_t j = 1; j <= rsg.K * rsg.outer_loops; ++j) {
    const std::size_t m = rsg.m_schedule(j);
    if (m < prev)
      throw ConfigError("rsg.m_schedule", "sizes must be nondecreasing");
    prev = m;
  }
  if (basis == BasisKind::legendre && prev > BasisFamily::kMaxLegendreTerms)
    throw ConfigError("rsg.m_schedule",
                      "exceeds the Legendre family's term limit");
  if (stats.samples < 1) throw ConfigError("stats.samples", "must be >= 1");
  for (double q : stats.quantiles)
    if (!(q >= 0.0 && q <= 1.0))
      throw ConfigError("stats.quantiles", "levels must lie in [0, 1]");
  if (!(stats.round_eps >= 0.0 && stats.round_eps < 1.0))
    throw ConfigError("stats.round_eps", "must lie in [0, 1)");
}

ThetaMeasure ExperimentConfig::measure() const {
  return ThetaMeasure(theta_lower, theta_upper, quadrature_nodes);
}

ProblemSpec ExperimentConfig::build_problem() const {
  const ThetaMeasure m = measure();
  ProblemSpec p;
  if (problem == ProblemKind::quadratic) {
    p = quadratic_problem(mu, L, m);
  } else {
    const CutGraph g = graph_path.empty()
                           ? CutGraph::figure1(theta_lower, theta_upper)
                           : CutGraph::load(graph_path.string(), theta_lower,
                                            theta_upper);
    p = mincut_problem(g, m);
  }
  if (projection) p.projection = *projection;
  return p;
}

Expansion ExperimentConfig::initial_expansion() const {
  const ThetaMeasure m = measure();
  const std::size_t terms = rsg.m_schedule(1);
  const std::size_t q = build_problem().dimension;
  if (basis == BasisKind::legendre)
    return Expansion::zeros(BasisFamily::legendre(m), terms, q);
  RandomState rng(derive_seed(rsg.seed, kPartitionStream));
  return Expansion::zeros(
      BasisFamily::piecewise(m, sample_partition(m, terms, rng)), terms, q);
}

// ---------------------------------------------------------------------------
// Statistics

namespace {

double quantile_type7(std::vector<double>& sorted_values, double level) {
  const double h = (static_cast<double>(sorted_values.size()) - 1.0) * level;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted_values.size() - 1);
  return sorted_values[lo] + (h - static_cast<double>(lo)) *
                                 (sorted_values[hi] - sorted_values[lo]);
}

}  // namespace

StatsReport compute_statistics(const Expansion& e, std::size_t n,
                               const StatsSpec& spec, RandomState& rng,
                               const CutGraph* graph) {
  if (n < 1) throw DomainError("statistics: need at least one sample");
  const BasisFamily& basis = e.basis();
  const ThetaMeasure& measure = basis.measure();
  const auto q = static_cast<Eigen::Index>(e.outputs());
  StatsReport r;
  r.samples = n;
  r.mean = Eigen::VectorXd::Zero(q);
  r.variance = Eigen::VectorXd::Zero(q);

  for (Eigen::Index k = 0; k < q; ++k) {
    const ScalarField comp = [&](double th) { return synthesize(e, th)[k]; };
    if (basis.kind() == BasisKind::piecewise_constant) {
      const auto breaks = basis.partition().breakpoints();
      const double mean = measure.integrate_split(comp, breaks);
      r.mean[k] = mean;
      r.variance[k] = measure.integrate_split(
          [&](double th) {
            const double d = comp(th) - mean;
            return d * d;
          },
          breaks);
    } else {
      const auto nodes = measure.nodes();
      const auto weights = measure.weights();
      double mean = 0.0;
      for (std::size_t j = 0; j < nodes.size(); ++j)
        mean += weights[j] * comp(nodes[j]);
      double var = 0.0;
      for (std::size_t j = 0; j < nodes.size(); ++j) {
        const double d = comp(nodes[j]) - mean;
        var += weights[j] * d * d;
      }
      r.mean[k] = mean;
      r.variance[k] = var;
    }
  }

  std::vector<Eigen::VectorXd> draws(n);
  std::map<std::string, std::size_t> tally;
  std::vector<std::string> names;
  if (graph)
    for (std::size_t i = 0; i < graph->ground_size(); ++i)
      names.push_back(graph->ground_name(i));
  for (std::size_t s = 0; s < n; ++s) {
    const double theta = measure.sample(rng);
    draws[s] = synthesize(e, theta);
    if (graph) {
      const Eigen::VectorXd x = draws[s].cwiseMax(0.0).cwiseMin(1.0);
      ++tally[format_subset(threshold_round(x, spec.round_eps), &names)];
    }
  }
  std::vector<double> column(n);
  for (double level : spec.quantiles) {
    QuantileRow row{level, Eigen::VectorXd(q)};
    for (Eigen::Index k = 0; k < q; ++k) {
      for (std::size_t s = 0; s < n; ++s) column[s] = draws[s][k];
      std::sort(column.begin(), column.end());
      row.value[k] = quantile_type7(column, level);
    }
    r.quantiles.push_back(std::move(row));
  }
  for (const auto& [set, count] : tally)
    r.set_frequencies[set] =
        static_cast<double>(count) / static_cast<double>(n);
  return r;
}

namespace {

std::vector<double> to_vector(const Eigen::VectorXd& v) {
  return {v.data(), v.data() + v.size()};
}

}  // namespace

void write_stats_json(const StatsReport& r, std::ostream& out) {
  nlohmann::ordered_json j;
  j["samples"] = r.samples;
  j["mean"] = to_vector(r.mean);
  j["variance"] = to_vector(r.variance);
  nlohmann::ordered_json qs = nlohmann::ordered_json::array();
  for (const QuantileRow& row : r.quantiles)
    qs.push_back({{"level", row.level}, {"value", to_vector(row.value)}});
  j["quantiles"] = std::move(qs);
  if (!r.set_frequencies.empty()) {
    nlohmann::ordered_json f = nlohmann::ordered_json::object();
    for (const auto& [set, share] : r.set_frequencies) f[set] = share;
    j["rounded_set_frequencies"] = std::move(f);
  }
  out << j.dump(1) << '\n';
}

// ---------------------------------------------------------------------------
// Experiment runs

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const ProblemSpec p = cfg.build_problem();
  const Expansion start = cfg.initial_expansion();
  auto [x, trace] = restarted_outer(p, start, cfg.rsg);

  RandomState stats_rng(derive_seed(cfg.rsg.seed, kStatsStream));
  StatsReport stats =
      compute_statistics(x, cfg.stats.samples, cfg.stats, stats_rng,
                         p.graph ? &*p.graph : nullptr);

  std::error_code ec;
  fs::create_directories(cfg.output_dir, ec);
  if (ec)
    throw IoError("cannot create output directory " + cfg.output_dir.string());
  write_atomic(cfg.output_dir / "trace.csv",
               [&](std::ostream& out) { write_trace_csv(trace, out); });
  save_expansion(x, cfg.output_dir / "expansion.json");
  write_atomic(cfg.output_dir / "stats.json",
               [&](std::ostream& out) { write_stats_json(stats, out); });

  nlohmann::ordered_json summary;
  summary["problem"] = p.name;
  summary["seed"] = cfg.rsg.seed;
  summary["initial_error_pi"] = trace.initial_error_pi;
  summary["final_error_pi"] =
      trace.rows.empty() ? trace.initial_error_pi : trace.rows.back().fn_error_pi;
  summary["sg_calls"] = trace.rows.size();
  summary["rsg_calls"] = trace.rsg_calls;
  summary["G_sq"] = trace.gv.G_sq;
  summary["V_sq"] = trace.gv.V_sq;
  summary["eta1"] = trace.eta1;
  summary["final_terms"] = x.terms();
  summary["m_schedule"] = cfg.rsg.m_schedule.describe();
  write_atomic(cfg.output_dir / "summary.json",
               [&](std::ostream& out) { out << summary.dump(1) << '\n'; });
  return {std::move(x), std::move(trace), std::move(stats)};
}

StatsReport run_statistics(const fs::path& expansion_file,
                           const ExperimentConfig& cfg) {
  const Expansion e = load_expansion(expansion_file);
  const ProblemSpec p = cfg.build_problem();
  if (e.outputs() != p.dimension)
    throw StructureError("expansion output count does not match the problem");
  RandomState rng(derive_seed(cfg.rsg.seed, kStatsStream));
  StatsReport stats = compute_statistics(e, cfg.stats.samples, cfg.stats, rng,
                                         p.graph ? &*p.graph : nullptr);
  std::error_code ec;
  fs::create_directories(cfg.output_dir, ec);
  if (ec)
    throw IoError("cannot create output directory " + cfg.output_dir.string());
  write_atomic(cfg.output_dir / "stats.json",
               [&](std::ostream& out) { write_stats_json(stats, out); });
  return stats;
}

// ---------------------------------------------------------------------------
// Curves

std::vector<CurvePoint> error_curve(const RunTrace& trace) {
  if (trace.rows.empty()) throw DomainError("error curve: empty trace");
  std::vector<CurvePoint> out;
  out.reserve(trace.rows.size());
  for (const TraceRow& r : trace.rows) {
    if (!out.empty() && r.call_index <= out.back().call_index)
      throw StructureError("error curve: call_index must increase");
    out.push_back({r.call_index, r.outer_i, r.fn_error_pi, r.fn_error_pi_sq});
  }
  return out;
}

void write_error_curve_csv(const std::vector<CurvePoint>& curve,
                           std::ostream& out) {
  out << "call_index,outer_i,fn_error_pi,fn_error_pi_sq\n";
  for (const CurvePoint& c : curve)
    out << c.call_index << ',' << c.outer_i << ',' << format_double(c.fn_error_pi)
        << ',' << format_double(c.fn_error_pi_sq) << '\n';
}

CuspReport detect_cusps(const RunTrace& trace) {
  CuspReport rep;
  double prev_error = 0.0;
  for (const TraceRow& r : trace.rows) {
    const double e = r.fn_error_pi;
    if (rep.loops.empty() || rep.loops.back().outer_i != r.outer_i) {
      const double restart = rep.loops.empty() ? 0.0 : std::log(prev_error / e);
      rep.loops.push_back({r.outer_i, e, e, 0, 0.0, restart});
    } else {
      OuterLoopSummary& loop = rep.loops.back();
      if (e > loop.last_error) ++loop.rises;
      loop.final_stage_drop = std::log(loop.last_error / e);
      loop.last_error = e;
    }
    prev_error = e;
  }
  for (std::size_t i = 1; i < rep.loops.size(); ++i) {
    const double kink =
        rep.loops[i].restart_drop - rep.loops[i - 1].final_stage_drop;
    if (std::abs(kink) > kCuspTolerance) ++rep.cusps;
  }
  if (rep.loops.size() >= 2) {
    const double n = static_cast<double>(rep.loops.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < rep.loops.size(); ++i) {
      const double x = static_cast<double>(i + 1);
      const double y = std::log(rep.loops[i].last_error);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    rep.log_slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  }
  return rep;
}

}  // namespace uqsub
