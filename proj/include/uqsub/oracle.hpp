#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include <Eigen/Dense>

#include "uqsub/basis.hpp"
#include "uqsub/measure.hpp"
#include "uqsub/problems.hpp"

namespace uqsub {

struct OracleConfig {
  std::size_t theta_samples_per_call = 64;
  NoiseModel noise;
  std::uint64_t seed = 0;
};

struct GVEstimate {
  double G_sq = 0.0;
  double V_sq = 0.0;
};

constexpr double kGSafetyFactor = 1.5;

// Monte Carlo estimate of <g, B_i>_pi for i < m. Draws theta_j from the
// measure, evaluates x(theta_j) from all rows of u, queries the (noisy)
// subgradient and averages g(theta_j) B_i(theta_j). The draws are taken in
// order, then reduced by a fixed pairwise tree.
Eigen::MatrixXd estimate_truncated_subgradient(const ProblemSpec& p,
                                               const BasisFamily& basis,
                                               const Eigen::MatrixXd& u,
                                               std::size_t m,
                                               const OracleConfig& cfg,
                                               RandomState& rng);

Eigen::MatrixXd estimate_truncated_subgradient(const ProblemSpec& p,
                                               const Expansion& e,
                                               std::size_t m,
                                               const OracleConfig& cfg,
                                               RandomState& rng);

// G_sq: 1.5 x the largest E_pi ||g(x(theta), theta)||^2 over the probes
// (noise-free, measure quadrature). V_sq: sigma^2 q for additive noise.
GVEstimate estimate_G_V(const ProblemSpec& p, std::span<const Expansion> probes,
                        const OracleConfig& cfg);

}  // namespace uqsub
