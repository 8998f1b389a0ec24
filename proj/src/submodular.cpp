#include "uqsub/submodular.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include "uqsub/error.hpp"

namespace uqsub {

CutGraph::CutGraph(std::vector<std::string> nodes, std::size_t source,
                   std::size_t sink, std::vector<CutEdge> edges,
                   double support_lo, double support_hi)
    : nodes_(std::move(nodes)),
      source_(source),
      sink_(sink),
      edges_(std::move(edges)),
      lo_(support_lo),
      hi_(support_hi) {
  if (source_ >= nodes_.size() || sink_ >= nodes_.size())
    throw StructureError("CutGraph: source/sink index out of range");
  if (source_ == sink_)
    throw StructureError("CutGraph: source and sink must differ");
  if (!(lo_ < hi_)) throw DomainError("CutGraph: empty support");
  for (const CutEdge& e : edges_) {
    if (e.from >= nodes_.size() || e.to >= nodes_.size())
      throw StructureError("CutGraph: edge endpoint out of range");
    if (e.from == e.to)
      throw StructureError("CutGraph: self-loop at node '" + nodes_[e.from] +
                           "'");
    // Affine weights are nonnegative on [lo, hi] iff they are at both ends.
    if (e.weight.at(lo_) < 0.0 || e.weight.at(hi_) < 0.0)
      throw DomainError("CutGraph: edge " + nodes_[e.from] + "->" +
                        nodes_[e.to] + " has negative weight on the support");
  }
  ground_of_node_.assign(nodes_.size(), -1);
  for (std::size_t v = 0; v < nodes_.size(); ++v) {
    if (v == source_ || v == sink_) continue;
    ground_of_node_[v] = static_cast<long>(ground_.size());
    ground_.push_back(v);
  }
}

CutGraph CutGraph::parse(std::istream& in, double support_lo,
                         double support_hi) {
  std::vector<std::string> names;
  auto index_of = [&names](const std::string& name) {
    auto it = std::find(names.begin(), names.end(), name);
    if (it != names.end()) return static_cast<std::size_t>(it - names.begin());
    names.push_back(name);
    return names.size() - 1;
  };
  std::string source;
  std::string sink;
  struct RawEdge {
    std::string from, to;
    AffineWeight w;
  };
  std::vector<RawEdge> raw;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    const std::string where = "line " + std::to_string(lineno);
    if (tok[0] == "source" || tok[0] == "sink") {
      if (tok.size() != 2)
        throw ConfigError(where, "expected '" + tok[0] + " <node>'");
      (tok[0] == "source" ? source : sink) = tok[1];
      continue;
    }
    if (tok.size() != 4)
      throw ConfigError(where, "expected 'from to base slope'");
    RawEdge e{tok[0], tok[1], {}};
    try {
      std::size_t used = 0;
      e.w.base = std::stod(tok[2], &used);
      if (used != tok[2].size()) throw std::invalid_argument(tok[2]);
      e.w.slope = std::stod(tok[3], &used);
      if (used != tok[3].size()) throw std::invalid_argument(tok[3]);
    } catch (const std::exception&) {
      throw ConfigError(where, "edge weight is not a number");
    }
    raw.push_back(std::move(e));
  }
  if (source.empty()) throw ConfigError("source", "graph names no source");
  if (sink.empty()) throw ConfigError("sink", "graph names no sink");
  index_of(source);
  for (const RawEdge& e : raw) {
    index_of(e.from);
    index_of(e.to);
  }
  index_of(sink);
  std::vector<CutEdge> edges;
  edges.reserve(raw.size());
  for (const RawEdge& e : raw)
    edges.push_back({index_of(e.from), index_of(e.to), e.w});
  const std::size_t s = index_of(source);
  const std::size_t t = index_of(sink);
  return CutGraph(std::move(names), s, t, std::move(edges), support_lo,
                  support_hi);
}

CutGraph CutGraph::load(const std::string& path, double support_lo,
                        double support_hi) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open graph file '" + path + "'");
  return parse(in, support_lo, support_hi);
}

CutGraph CutGraph::figure1(double support_lo, double support_hi) {
  return CutGraph({"s", "1", "2", "t"}, 0, 3,
                  {{0, 1, {0.0, 1.0}}, {1, 2, {2.0, 0.0}}, {2, 3, {3.0, 0.0}}},
                  support_lo, support_hi);
}

double CutGraph::cut(const std::vector<bool>& in_set, double theta) const {
  if (in_set.size() != ground_.size())
    throw StructureError("cut: membership size mismatch");
  if (!(theta >= lo_ && theta <= hi_))
    throw DomainError("cut: theta " + std::to_string(theta) +
                      " outside the support");
  auto on_source_side = [&](std::size_t v) {
    if (v == source_) return true;
    if (v == sink_) return false;
    return static_cast<bool>(in_set[static_cast<std::size_t>(ground_of_node_[v])]);
  };
  double total = 0.0;
  for (const CutEdge& e : edges_)
    if (on_source_side(e.from) && !on_source_side(e.to))
      total += e.weight.at(theta);
  return total;
}

SetFunctionSpec SetFunctionSpec::from_graph(const CutGraph& g) {
  return {g.ground_size(), [g](const std::vector<bool>& in_set, double theta) {
            return g.cut(in_set, theta);
          }};
}

double cut_value(const CutGraph& g, const Subset& s, double theta) {
  return g.cut(to_membership(s, g.ground_size()), theta);
}

namespace {

std::vector<std::size_t> descending_order(const Eigen::VectorXd& x) {
  std::vector<std::size_t> order(static_cast<std::size_t>(x.size()));
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&x](std::size_t a, std::size_t b) {
    return x[static_cast<Eigen::Index>(a)] > x[static_cast<Eigen::Index>(b)];
  });
  return order;
}

void check_unit_box(const Eigen::VectorXd& x, std::size_t n) {
  if (static_cast<std::size_t>(x.size()) != n)
    throw StructureError("lovasz: point dimension does not match ground set");
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (!(x[i] >= 0.0 && x[i] <= 1.0))
      throw DomainError("lovasz: coordinate " + std::to_string(i) + " = " +
                        std::to_string(x[i]) + " outside [0, 1]");
}

}  // namespace

double lovasz_eval_and_subgradient(const SetFunctionSpec& f,
                                   const Eigen::VectorXd& x, double theta,
                                   Eigen::VectorXd* subgradient) {
  check_unit_box(x, f.ground_size);
  const auto order = descending_order(x);
  std::vector<bool> chain(f.ground_size, false);
  double prev = f.evaluate(chain, theta);
  if (subgradient) subgradient->resize(x.size());
  // Value as a convex combination of chain sets: weight 1 - x_(1) on the
  // empty set, x_(k) - x_(k+1) on the k-th chain set. Exact at vertices.
  double upper = 1.0;
  double value = 0.0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const std::size_t i = order[k];
    const double xi = x[static_cast<Eigen::Index>(i)];
    value += (upper - xi) * prev;
    upper = xi;
    chain[i] = true;
    const double cur = f.evaluate(chain, theta);
    if (subgradient) (*subgradient)[static_cast<Eigen::Index>(i)] = cur - prev;
    prev = cur;
  }
  return value + upper * prev;
}

double lovasz_eval(const SetFunctionSpec& f, const Eigen::VectorXd& x,
                   double theta) {
  return lovasz_eval_and_subgradient(f, x, theta, nullptr);
}

Eigen::VectorXd lovasz_subgradient(const SetFunctionSpec& f,
                                   const Eigen::VectorXd& x, double theta) {
  Eigen::VectorXd g;
  lovasz_eval_and_subgradient(f, x, theta, &g);
  return g;
}

Subset threshold_round(const Eigen::VectorXd& x, double eps) {
  Subset s;
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (x[i] >= 1.0 - eps) s.push_back(static_cast<std::size_t>(i));
  return s;
}

DiscreteSolution phi_round(const SetFunctionSpec& f, const Eigen::VectorXd& x,
                           double theta) {
  check_unit_box(x, f.ground_size);
  std::vector<double> phis(x.data(), x.data() + x.size());
  phis.push_back(0.0);
  phis.push_back(1.0);
  std::sort(phis.begin(), phis.end(), std::greater<>());
  phis.erase(std::unique(phis.begin(), phis.end()), phis.end());
  DiscreteSolution best{{}, 0.0};
  bool have = false;
  // Descending phi gives growing sets, so strict improvement keeps the
  // smaller set on ties.
  for (double phi : phis) {
    std::vector<bool> in_set(f.ground_size);
    for (std::size_t i = 0; i < f.ground_size; ++i)
      in_set[i] = x[static_cast<Eigen::Index>(i)] >= phi;
    const double v = f.evaluate(in_set, theta);
    if (!have || v < best.value) {
      best = {from_membership(in_set), v};
      have = true;
    }
  }
  return best;
}

std::vector<Subset> brute_force_minimizers(const SetFunctionSpec& f,
                                           double theta) {
  const std::size_t n = f.ground_size;
  if (n > kBruteForceLimit)
    throw CapacityError("brute_force_min: ground set of size " +
                        std::to_string(n) + " exceeds " +
                        std::to_string(kBruteForceLimit));
  std::vector<Subset> argmins;
  double best = 0.0;
  std::vector<bool> in_set(n);
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    for (std::size_t i = 0; i < n; ++i) in_set[i] = (mask >> i) & 1U;
    const double v = f.evaluate(in_set, theta);
    if (argmins.empty() || v < best) {
      best = v;
      argmins.assign(1, from_membership(in_set));
    } else if (v == best) {
      argmins.push_back(from_membership(in_set));
    }
  }
  std::sort(argmins.begin(), argmins.end());
  return argmins;
}

DiscreteSolution brute_force_min(const SetFunctionSpec& f, double theta) {
  auto argmins = brute_force_minimizers(f, theta);
  const double v = f.evaluate(to_membership(argmins.front(), f.ground_size), theta);
  return {std::move(argmins.front()), v};
}

std::vector<bool> to_membership(const Subset& s, std::size_t n) {
  std::vector<bool> in_set(n, false);
  for (std::size_t i : s) {
    if (i >= n) throw DomainError("subset member out of range");
    in_set[i] = true;
  }
  return in_set;
}

Subset from_membership(const std::vector<bool>& in_set) {
  Subset s;
  for (std::size_t i = 0; i < in_set.size(); ++i)
    if (in_set[i]) s.push_back(i);
  return s;
}

std::string format_subset(const Subset& s,
                          const std::vector<std::string>* names) {
  std::string out = "{";
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (k) out += ",";
    out += names ? names->at(s[k]) : std::to_string(s[k]);
  }
  return out + "}";
}

}  // namespace uqsub
