#include "uqsub/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "uqsub/error.hpp"

namespace uqsub {

namespace {

struct Draw {
  double theta;
  Eigen::VectorXd noise;  // empty when noise-free
};

constexpr std::size_t kLeafSize = 8;

class Accumulator {
 public:
  Accumulator(const ProblemSpec& p, const BasisFamily& basis,
              const Eigen::MatrixXd& u, std::size_t m,
              const std::vector<Draw>& draws)
      : p_(p), basis_(basis), u_(u), m_(m), draws_(draws),
        scratch_(static_cast<std::size_t>(u.rows())) {}

  // Pairwise sum over draws [lo, hi).
  Eigen::MatrixXd sum(std::size_t lo, std::size_t hi) {
    if (hi - lo <= kLeafSize) {
      Eigen::MatrixXd acc =
          Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m_), u_.cols());
      for (std::size_t j = lo; j < hi; ++j) add(draws_[j], acc);
      return acc;
    }
    const std::size_t mid = lo + (hi - lo) / 2;
    Eigen::MatrixXd left = sum(lo, mid);
    left += sum(mid, hi);
    return left;
  }

 private:
  void add(const Draw& d, Eigen::MatrixXd& acc) {
    if (basis_.kind() == BasisKind::piecewise_constant) {
      const std::size_t cell = basis_.partition().cell_index(d.theta);
      const double s = std::sqrt(basis_.cell_mass(cell));
      const Eigen::VectorXd x =
          u_.row(static_cast<Eigen::Index>(cell)).transpose() / s;
      Eigen::VectorXd g = p_.subgradient(x, d.theta);
      if (d.noise.size()) g += d.noise;
      if (cell < m_) acc.row(static_cast<Eigen::Index>(cell)) += g.transpose() / s;
      return;
    }
    basis_.values(d.theta, scratch_);
    const Eigen::Map<const Eigen::VectorXd> b(
        scratch_.data(), static_cast<Eigen::Index>(scratch_.size()));
    const Eigen::VectorXd x = u_.transpose() * b;
    Eigen::VectorXd g = p_.subgradient(x, d.theta);
    if (d.noise.size()) g += d.noise;
    acc.noalias() += b.head(static_cast<Eigen::Index>(m_)) * g.transpose();
  }

  const ProblemSpec& p_;
  const BasisFamily& basis_;
  const Eigen::MatrixXd& u_;
  std::size_t m_;
  const std::vector<Draw>& draws_;
  std::vector<double> scratch_;
};

}  // namespace

Eigen::MatrixXd estimate_truncated_subgradient(const ProblemSpec& p,
                                               const BasisFamily& basis,
                                               const Eigen::MatrixXd& u,
                                               std::size_t m,
                                               const OracleConfig& cfg,
                                               RandomState& rng) {
  if (cfg.theta_samples_per_call < 1)
    throw DomainError("oracle: theta_samples_per_call must be >= 1");
  if (m < 1 || m > static_cast<std::size_t>(u.rows()))
    throw StructureError("oracle: m must lie in [1, expansion terms]");
  if (static_cast<std::size_t>(u.cols()) != p.dimension)
    throw StructureError("oracle: expansion has " + std::to_string(u.cols()) +
                         " outputs, problem expects " +
                         std::to_string(p.dimension));
  const std::size_t n = cfg.theta_samples_per_call;
  std::vector<Draw> draws(n);
  for (Draw& d : draws) {
    d.theta = basis.measure().sample(rng);
    if (cfg.noise.kind == NoiseKind::additive_gaussian) {
      d.noise.resize(static_cast<Eigen::Index>(p.dimension));
      for (Eigen::Index k = 0; k < d.noise.size(); ++k)
        d.noise[k] = rng.normal(cfg.noise.sigma);
    }
  }
  Accumulator acc(p, basis, u, m, draws);
  Eigen::MatrixXd g = acc.sum(0, n);
  g /= static_cast<double>(n);
  return g;
}

Eigen::MatrixXd estimate_truncated_subgradient(const ProblemSpec& p,
                                               const Expansion& e,
                                               std::size_t m,
                                               const OracleConfig& cfg,
                                               RandomState& rng) {
  return estimate_truncated_subgradient(p, e.basis(), e.coefficients(), m, cfg,
                                        rng);
}

GVEstimate estimate_G_V(const ProblemSpec& p, std::span<const Expansion> probes,
                        const OracleConfig& cfg) {
  if (probes.empty()) throw DomainError("estimate_G_V: no probe expansions");
  double worst = 0.0;
  for (const Expansion& e : probes) {
    const ThetaMeasure& m = e.basis().measure();
    const auto nodes = m.nodes();
    const auto weights = m.weights();
    double mean_sq = 0.0;
    for (std::size_t j = 0; j < nodes.size(); ++j)
      mean_sq += weights[j] *
                 p.subgradient(synthesize(e, nodes[j]), nodes[j]).squaredNorm();
    worst = std::max(worst, mean_sq);
  }
  return {kGSafetyFactor * worst, cfg.noise.variance(p.dimension)};
}

}  // namespace uqsub
