#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace uqsub {

using ScalarField = std::function<double(double)>;
using VectorField = std::function<Eigen::VectorXd(double)>;

// Single-owner random stream. Never share one across threads.
class RandomState {
 public:
  explicit RandomState(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  double normal(double sigma) {
    return std::normal_distribution<double>(0.0, sigma)(engine_);
  }
  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

// Fixed Gauss-Legendre rule on [-1, 1].
struct GaussLegendreRule {
  std::vector<double> nodes;
  std::vector<double> weights;  // sum to 2
};

GaussLegendreRule gauss_legendre(int order);

enum class MeasureKind { uniform };

// Distribution of the uncertain parameter, with a composite Gauss-Legendre
// quadrature whose weights sum to one. Immutable after construction.
class ThetaMeasure {
 public:
  static constexpr int kDefaultNodes = 128;
  static constexpr int kPanelOrder = 32;

  // `quadrature_nodes` below kPanelOrder gives a single panel of that order;
  // otherwise it is rounded up to a whole number of 32-point panels.
  ThetaMeasure(double a, double b, int quadrature_nodes = kDefaultNodes,
               MeasureKind kind = MeasureKind::uniform);

  MeasureKind kind() const noexcept { return kind_; }
  double lower() const noexcept { return a_; }
  double upper() const noexcept { return b_; }
  int quadrature_nodes() const noexcept {
    return static_cast<int>(nodes_.size());
  }
  bool contains(double theta) const noexcept {
    return theta >= a_ && theta <= b_;
  }

  std::span<const double> nodes() const noexcept { return nodes_; }
  std::span<const double> weights() const noexcept { return weights_; }

  // pi-measure of [lo, hi] intersected with the support.
  double measure_of(double lo, double hi) const noexcept;

  // Nodes and pi-weights of one panel-order rule mapped onto [lo, hi]; the
  // weights sum to measure_of(lo, hi).
  void interval_rule(double lo, double hi, std::vector<double>& nodes,
                     std::vector<double>& weights) const;

  // Integral of f against pi over [lo, hi] using one panel-order rule.
  double integrate_interval(const ScalarField& f, double lo, double hi) const;

  // Integral of f against pi, splitting the support at `breaks` (sorted,
  // interior) and applying one panel-order rule per piece.
  double integrate_split(const ScalarField& f,
                         std::span<const double> breaks) const;

  double sample(RandomState& rng) const { return rng.uniform(a_, b_); }

 private:
  MeasureKind kind_;
  double a_;
  double b_;
  std::vector<double> nodes_;
  std::vector<double> weights_;
  GaussLegendreRule panel_rule_;
};

double inner_product(const ScalarField& f, const ScalarField& g,
                     const ThetaMeasure& m);
double pi_norm(const ScalarField& f, const ThetaMeasure& m);
// Norm of a vector-valued field: sqrt of E_pi ||f(theta)||_2^2.
double pi_norm(const VectorField& f, const ThetaMeasure& m);
double sample_theta(const ThetaMeasure& m, RandomState& rng);

}  // namespace uqsub
