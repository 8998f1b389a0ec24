#include "uqsub/problems.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "uqsub/error.hpp"

namespace uqsub {

const char* to_string(ProjectionKind kind) noexcept {
  switch (kind) {
    case ProjectionKind::none:
      return "none";
    case ProjectionKind::coefficient_l2_ball:
      return "ball";
    case ProjectionKind::per_cell_box:
      return "box";
  }
  return "unknown";
}

void check_compatible(const ProjectionSpec& p, BasisKind kind) {
  if (p.kind == ProjectionKind::per_cell_box &&
      kind != BasisKind::piecewise_constant)
    throw StructureError(
        "projection: per-cell box requires the piecewise-constant basis");
  if (p.kind == ProjectionKind::coefficient_l2_ball && !(p.radius > 0.0))
    throw DomainError("projection: ball radius must be positive");
  if (p.kind == ProjectionKind::per_cell_box && !(p.lo <= p.hi))
    throw DomainError("projection: box needs lo <= hi");
}

void project_coefficients(Eigen::MatrixXd& u, const BasisFamily& basis,
                          const ProjectionSpec& p) {
  check_compatible(p, basis.kind());
  switch (p.kind) {
    case ProjectionKind::none:
      return;
    case ProjectionKind::coefficient_l2_ball: {
      const double norm = u.norm();
      if (norm <= p.radius) return;
      double scale = p.radius / norm;
      Eigen::MatrixXd v = u * scale;
      // Rounding can leave v a hair outside; shrink until the stored result
      // passes the same test, which makes a second projection a no-op.
      while (v.norm() > p.radius) {
        scale = std::nextafter(scale, 0.0);
        v = u * scale;
      }
      u = std::move(v);
      return;
    }
    case ProjectionKind::per_cell_box: {
      for (Eigen::Index i = 0; i < u.rows(); ++i) {
        const double s = std::sqrt(basis.cell_mass(static_cast<std::size_t>(i)));
        const double lo = p.lo * s;
        const double hi = p.hi * s;
        for (Eigen::Index k = 0; k < u.cols(); ++k) {
          if (u(i, k) < lo) u(i, k) = lo;
          else if (u(i, k) > hi) u(i, k) = hi;
        }
      }
      return;
    }
  }
}

Expansion project(const Expansion& e, const ProjectionSpec& p) {
  Eigen::MatrixXd u = e.coefficients();
  project_coefficients(u, e.basis(), p);
  return Expansion(e.basis(), std::move(u));
}

bool is_feasible(const Eigen::MatrixXd& u, const BasisFamily& basis,
                 const ProjectionSpec& p, double tol) {
  switch (p.kind) {
    case ProjectionKind::none:
      return true;
    case ProjectionKind::coefficient_l2_ball:
      return u.norm() <= p.radius * (1.0 + tol);
    case ProjectionKind::per_cell_box:
      for (Eigen::Index i = 0; i < u.rows(); ++i) {
        const double s = std::sqrt(basis.cell_mass(static_cast<std::size_t>(i)));
        for (Eigen::Index k = 0; k < u.cols(); ++k)
          if (u(i, k) < p.lo * s || u(i, k) > p.hi * s) return false;
      }
      return true;
  }
  return false;
}

double quadratic_target(double theta) {
  const double s = std::sin(theta);
  return std::abs(0.8 + 0.25 * std::exp(s) - std::cosh(s * s)) *
         (1.0 + std::sin(2.0 * theta));
}

ProblemSpec quadratic_problem(double mu, double L, const ThetaMeasure& measure) {
  if (!(mu > 0.0)) throw DomainError("quadratic_problem: mu must be positive");
  if (mu > L) throw DomainError("quadratic_problem: mu must not exceed L");
  (void)measure;
  // Curvature per side; at the optimum the smaller one is used (the value and
  // gradient vanish there either way).
  auto cx = [mu](double d) { return d < 0.0 ? mu / 2.0 : mu / 4.0; };
  auto cy = [L](double d) { return d > 0.0 ? L / 2.0 : L / 4.0; };
  ProblemSpec p;
  p.name = "quadratic";
  p.dimension = 2;
  p.objective = [cx, cy](const Eigen::VectorXd& w, double theta) {
    const double target = quadratic_target(theta);
    const double dx = w[0] - target;
    const double dy = w[1] - target;
    return cx(dx) * dx * dx + cy(dy) * dy * dy;
  };
  p.subgradient = [cx, cy](const Eigen::VectorXd& w, double theta) {
    const double target = quadratic_target(theta);
    const double dx = w[0] - target;
    const double dy = w[1] - target;
    Eigen::VectorXd g(2);
    g << 2.0 * cx(dx) * dx, 2.0 * cy(dy) * dy;
    return g;
  };
  p.projection = ProjectionSpec::ball(1.5);
  // Largest gradient over |dx|, |dy| <= R: mu |dx| on the steep x side and
  // L |dy| on the steep y side.
  p.lipschitz = kQuadraticDomainRadius * std::hypot(mu, L);
  p.reference_optimum = [](double theta) {
    const double target = quadratic_target(theta);
    return Eigen::Vector2d(target, target).eval();
  };
  p.optimal_value = [](double) { return 0.0; };
  return p;
}

namespace {

double greedy_vertex_norm_bound(const SetFunctionSpec& f, double lo,
                                double hi) {
  const std::size_t n = f.ground_size;
  double best = 0.0;
  auto visit = [&](const std::vector<std::size_t>& order) {
    for (double theta : {lo, hi}) {
      Eigen::VectorXd x(static_cast<Eigen::Index>(n));
      for (std::size_t k = 0; k < n; ++k)
        x[static_cast<Eigen::Index>(order[k])] =
            1.0 - static_cast<double>(k) / static_cast<double>(n);
      best = std::max(best, lovasz_subgradient(f, x, theta).norm());
    }
  };
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (n <= 8) {
    do visit(order);
    while (std::next_permutation(order.begin(), order.end()));
  } else {
    RandomState rng(0x5eed);
    for (int s = 0; s < 2000; ++s) {
      for (std::size_t i = n; i > 1; --i)
        std::swap(order[i - 1], order[rng.next_u64() % i]);
      visit(order);
    }
  }
  return best;
}

}  // namespace

ProblemSpec mincut_problem(const CutGraph& g, const ThetaMeasure& measure) {
  if (g.support_lower() > measure.lower() ||
      g.support_upper() < measure.upper())
    throw DomainError(
        "mincut_problem: graph was validated on a narrower support");
  if (g.ground_size() == 0)
    throw StructureError("mincut_problem: graph has no non-terminal nodes");
  const SetFunctionSpec f = SetFunctionSpec::from_graph(g);
  ProblemSpec p;
  p.name = "mincut";
  p.dimension = g.ground_size();
  p.objective = [f](const Eigen::VectorXd& x, double theta) {
    return lovasz_eval(f, x, theta);
  };
  p.subgradient = [f](const Eigen::VectorXd& x, double theta) {
    return lovasz_subgradient(f, x, theta);
  };
  p.projection = ProjectionSpec::box(0.0, 1.0);
  // Greedy vertex coordinates are affine in theta, so their norms peak at an
  // end of the support.
  p.lipschitz = greedy_vertex_norm_bound(f, measure.lower(), measure.upper());
  if (g.ground_size() <= kBruteForceLimit) {
    p.reference_optimum = [f](double theta) {
      const DiscreteSolution best = brute_force_min(f, theta);
      Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(f.ground_size));
      for (std::size_t i : best.members) x[static_cast<Eigen::Index>(i)] = 1.0;
      return x;
    };
    p.optimal_value = [f](double theta) {
      return brute_force_min(f, theta).value;
    };
  }
  p.graph = g;
  return p;
}

double figure1_closed_form(double x1, double x2, double theta) {
  return 2.0 * std::abs(x1 - x2) + theta * x1 + 3.0 * std::abs(1.0 - x2);
}

}  // namespace uqsub
