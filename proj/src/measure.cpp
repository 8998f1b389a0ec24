#include "uqsub/measure.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "uqsub/error.hpp"

namespace uqsub {

GaussLegendreRule gauss_legendre(int order) {
  if (order < 1) throw DomainError("gauss_legendre: order must be >= 1");
  GaussLegendreRule rule;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  const int half = (order + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= order; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = order * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[order - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[order - 1 - i] = w;
  }
  if (order % 2 == 1) rule.nodes[order / 2] = 0.0;
  return rule;
}

ThetaMeasure::ThetaMeasure(double a, double b, int quadrature_nodes,
                           MeasureKind kind)
    : kind_(kind), a_(a), b_(b) {
  if (!(a < b) || !std::isfinite(a) || !std::isfinite(b))
    throw DomainError("ThetaMeasure: support must satisfy a < b");
  if (quadrature_nodes < 1)
    throw DomainError("ThetaMeasure: quadrature_nodes must be positive");
  const int order = std::min(quadrature_nodes, kPanelOrder);
  const int panels = (quadrature_nodes + order - 1) / order;
  panel_rule_ = gauss_legendre(order);
  const double h = (b - a) / panels;
  nodes_.reserve(static_cast<std::size_t>(panels) * order);
  weights_.reserve(nodes_.capacity());
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * h;
    for (int i = 0; i < order; ++i) {
      nodes_.push_back(lo + 0.5 * h * (panel_rule_.nodes[i] + 1.0));
      // Panel weights sum to h; dividing by (b - a) makes a probability rule.
      weights_.push_back(0.5 * panel_rule_.weights[i] / panels);
    }
  }
}

double ThetaMeasure::measure_of(double lo, double hi) const noexcept {
  lo = std::max(lo, a_);
  hi = std::min(hi, b_);
  return hi > lo ? (hi - lo) / (b_ - a_) : 0.0;
}

void ThetaMeasure::interval_rule(double lo, double hi,
                                 std::vector<double>& nodes,
                                 std::vector<double>& weights) const {
  nodes.clear();
  weights.clear();
  const double mass = measure_of(lo, hi);
  if (mass == 0.0) return;
  lo = std::max(lo, a_);
  hi = std::min(hi, b_);
  for (std::size_t i = 0; i < panel_rule_.nodes.size(); ++i) {
    nodes.push_back(lo + 0.5 * (hi - lo) * (panel_rule_.nodes[i] + 1.0));
    weights.push_back(0.5 * panel_rule_.weights[i] * mass);
  }
}

double ThetaMeasure::integrate_interval(const ScalarField& f, double lo,
                                        double hi) const {
  std::vector<double> nodes;
  std::vector<double> weights;
  interval_rule(lo, hi, nodes, weights);
  double sum = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) sum += weights[i] * f(nodes[i]);
  return sum;
}

double ThetaMeasure::integrate_split(const ScalarField& f,
                                     std::span<const double> breaks) const {
  double sum = 0.0;
  double lo = a_;
  for (double c : breaks) {
    sum += integrate_interval(f, lo, c);
    lo = c;
  }
  return sum + integrate_interval(f, lo, b_);
}

double inner_product(const ScalarField& f, const ScalarField& g,
                     const ThetaMeasure& m) {
  const auto nodes = m.nodes();
  const auto weights = m.weights();
  double sum = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    sum += weights[i] * f(nodes[i]) * g(nodes[i]);
  return sum;
}

double pi_norm(const ScalarField& f, const ThetaMeasure& m) {
  return std::sqrt(std::max(0.0, inner_product(f, f, m)));
}

double pi_norm(const VectorField& f, const ThetaMeasure& m) {
  const auto nodes = m.nodes();
  const auto weights = m.weights();
  double sum = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    sum += weights[i] * f(nodes[i]).squaredNorm();
  return std::sqrt(sum);
}

double sample_theta(const ThetaMeasure& m, RandomState& rng) {
  return m.sample(rng);
}

}  // namespace uqsub
