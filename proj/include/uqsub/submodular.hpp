#pragma once

#include <cstddef>
#include <functional>
#include <istream>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace uqsub {

// Members of a subset of the ground set {0, ..., n-1}, sorted ascending.
using Subset = std::vector<std::size_t>;

struct AffineWeight {
  double base = 0.0;
  double slope = 0.0;
  double at(double theta) const noexcept { return base + slope * theta; }
};

struct CutEdge {
  std::size_t from;
  std::size_t to;
  AffineWeight weight;
};

// Directed graph with distinguished source and sink and theta-affine edge
// weights. The ground set of the cut function is the non-terminal nodes in
// node order; a subset S puts S plus the source on the source side.
class CutGraph {
 public:
  CutGraph(std::vector<std::string> nodes, std::size_t source,
           std::size_t sink, std::vector<CutEdge> edges, double support_lo,
           double support_hi);

  // Builds from a textual edge list; see docs/formats.md.
  static CutGraph parse(std::istream& in, double support_lo, double support_hi);
  static CutGraph load(const std::string& path, double support_lo,
                       double support_hi);

  // The three-node chain s -(theta)-> 1 -(2)-> 2 -(3)-> t.
  static CutGraph figure1(double support_lo, double support_hi);

  const std::vector<std::string>& nodes() const noexcept { return nodes_; }
  const std::vector<CutEdge>& edges() const noexcept { return edges_; }
  std::size_t source() const noexcept { return source_; }
  std::size_t sink() const noexcept { return sink_; }
  double support_lower() const noexcept { return lo_; }
  double support_upper() const noexcept { return hi_; }

  std::size_t ground_size() const noexcept { return ground_.size(); }
  // Node index of ground element i.
  std::size_t ground_node(std::size_t i) const { return ground_.at(i); }
  const std::string& ground_name(std::size_t i) const {
    return nodes_[ground_.at(i)];
  }

  // Cut value with membership given per ground element.
  double cut(const std::vector<bool>& in_set, double theta) const;

 private:
  std::vector<std::string> nodes_;
  std::size_t source_;
  std::size_t sink_;
  std::vector<CutEdge> edges_;
  double lo_;
  double hi_;
  std::vector<std::size_t> ground_;
  std::vector<long> ground_of_node_;  // -1 for terminals
};

// Theta-parametrized set function on {0, ..., n-1}.
struct SetFunctionSpec {
  std::size_t ground_size = 0;
  std::function<double(const std::vector<bool>&, double)> evaluate;

  static SetFunctionSpec from_graph(const CutGraph& g);
};

struct DiscreteSolution {
  Subset members;
  double value;
};

double cut_value(const CutGraph& g, const Subset& s, double theta);

// Lovasz extension by the greedy chain: sort coordinates descending (ties by
// ascending index) and accumulate marginal gains along the induced chain.
double lovasz_eval(const SetFunctionSpec& f, const Eigen::VectorXd& x,
                   double theta);

// Greedy vertex of the base polytope for the same chain; a subgradient of
// the extension at x.
Eigen::VectorXd lovasz_subgradient(const SetFunctionSpec& f,
                                   const Eigen::VectorXd& x, double theta);

// Both at once, sharing the sort and the n + 1 oracle calls.
double lovasz_eval_and_subgradient(const SetFunctionSpec& f,
                                   const Eigen::VectorXd& x, double theta,
                                   Eigen::VectorXd* subgradient);

Subset threshold_round(const Eigen::VectorXd& x, double eps);

// Best superlevel set {i : x_i >= phi} over phi in {0} U {x_i} U {1}; ties go
// to the smaller set.
DiscreteSolution phi_round(const SetFunctionSpec& f, const Eigen::VectorXd& x,
                           double theta);

constexpr std::size_t kBruteForceLimit = 20;

// Exhaustive minimum; ties resolved to the lexicographically smallest member
// list.
DiscreteSolution brute_force_min(const SetFunctionSpec& f, double theta);
std::vector<Subset> brute_force_minimizers(const SetFunctionSpec& f,
                                           double theta);

std::vector<bool> to_membership(const Subset& s, std::size_t n);
Subset from_membership(const std::vector<bool>& in_set);
std::string format_subset(const Subset& s,
                          const std::vector<std::string>* names = nullptr);

}  // namespace uqsub
