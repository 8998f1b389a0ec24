#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "uqsub/basis.hpp"
#include "uqsub/measure.hpp"
#include "uqsub/submodular.hpp"

namespace uqsub {

enum class ProjectionKind { none, coefficient_l2_ball, per_cell_box };

struct ProjectionSpec {
  ProjectionKind kind = ProjectionKind::none;
  double radius = 0.0;  // coefficient_l2_ball
  double lo = 0.0;      // per_cell_box
  double hi = 1.0;

  static ProjectionSpec none() { return {}; }
  static ProjectionSpec ball(double radius) {
    return {ProjectionKind::coefficient_l2_ball, radius, 0.0, 0.0};
  }
  static ProjectionSpec box(double lo, double hi) {
    return {ProjectionKind::per_cell_box, 0.0, lo, hi};
  }
};

const char* to_string(ProjectionKind kind) noexcept;

// Throws StructureError when the projection cannot act on this basis.
void check_compatible(const ProjectionSpec& p, BasisKind kind);

// In-place projection of an m x q coefficient matrix. Exactly idempotent:
// points already feasible are returned bit-for-bit unchanged.
void project_coefficients(Eigen::MatrixXd& u, const BasisFamily& basis,
                          const ProjectionSpec& p);

Expansion project(const Expansion& e, const ProjectionSpec& p);

// Whether u satisfies p (ball within radius * (1 + tol), box exactly).
bool is_feasible(const Eigen::MatrixXd& u, const BasisFamily& basis,
                 const ProjectionSpec& p, double tol = 1e-12);

enum class NoiseKind { none, additive_gaussian };

struct NoiseModel {
  NoiseKind kind = NoiseKind::none;
  double sigma = 0.0;

  static NoiseModel none() { return {}; }
  static NoiseModel gaussian(double sigma) {
    return {NoiseKind::additive_gaussian, sigma};
  }
  // Per-theta variance added to ||g||^2: sigma^2 * q.
  double variance(std::size_t q) const noexcept {
    return kind == NoiseKind::none ? 0.0 : sigma * sigma * static_cast<double>(q);
  }
};

using PointObjective = std::function<double(const Eigen::VectorXd&, double)>;
using PointSubgradient =
    std::function<Eigen::VectorXd(const Eigen::VectorXd&, double)>;

struct ProblemSpec {
  std::string name;
  std::size_t dimension = 0;
  PointObjective objective;
  PointSubgradient subgradient;
  ProjectionSpec projection;
  // Bound on ||g(x, theta)||_2 over the problem's domain.
  double lipschitz = 0.0;
  // Closed-form or enumerated x*(theta) and f*(theta); empty when unknown.
  std::function<Eigen::VectorXd(double)> reference_optimum;
  std::function<double(double)> optimal_value;
  // Present for cut problems; used for rounding.
  std::optional<CutGraph> graph;
};

// |4/5 + exp(sin theta)/4 - cosh(sin^2 theta)| * (1 + sin 2 theta)
double quadratic_target(double theta);

// Pointwise half-width of the region over which the quadratic problem's
// Lipschitz bound is reported: |w(theta) - w*(theta)| <= this, per component.
constexpr double kQuadraticDomainRadius = 2.0;

// Two-component piecewise quadratic with curvature mu/4 or mu/2 in x and
// L/2 or L/4 in y depending on the side of the optimum. Projection is the
// coefficient ball of radius 1.5.
ProblemSpec quadratic_problem(double mu, double L, const ThetaMeasure& measure);

// Lovasz extension of the graph's cut function, projected per cell to [0, 1].
ProblemSpec mincut_problem(const CutGraph& g, const ThetaMeasure& measure);

// The closed form printed for the three-node example:
// 2|x1 - x2| + theta x1 + 3|1 - x2|. Here x_i = 1 puts node i on the sink
// side and edges are treated as undirected.
double figure1_closed_form(double x1, double x2, double theta);

}  // namespace uqsub
