#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "uqsub/measure.hpp"

namespace uqsub {

// Breakpoints of a piecewise-constant representation on [a, b]: strictly
// increasing and strictly interior. n breakpoints induce n + 1 cells
// [a, c1), [c1, c2), ..., [cn, b].
class Partition {
 public:
  Partition() = default;
  Partition(std::vector<double> breakpoints, const ThetaMeasure& measure);

  std::span<const double> breakpoints() const noexcept { return breakpoints_; }
  std::size_t cells() const noexcept { return breakpoints_.size() + 1; }
  std::size_t cell_index(double theta) const noexcept;
  double cell_lower(std::size_t i, const ThetaMeasure& m) const noexcept;
  double cell_upper(std::size_t i, const ThetaMeasure& m) const noexcept;

  // Every cell of *this lies inside a cell of `coarser`.
  bool is_finer_than(const Partition& coarser) const;

  friend bool operator==(const Partition&, const Partition&) = default;

 private:
  std::vector<double> breakpoints_;
};

enum class BasisKind { legendre, piecewise_constant };

const char* to_string(BasisKind kind) noexcept;
BasisKind basis_kind_from_string(const std::string& s);

// Orthonormal family on L^2_pi. Legendre polynomials are shifted to the
// support and renormalized against the measure's quadrature; the piecewise
// family holds indicators of partition cells scaled by 1/sqrt(cell mass).
class BasisFamily {
 public:
  static constexpr std::size_t kMaxLegendreTerms = 256;

  static BasisFamily legendre(const ThetaMeasure& measure);
  static BasisFamily piecewise(const ThetaMeasure& measure,
                               Partition partition);

  BasisKind kind() const noexcept { return kind_; }
  const ThetaMeasure& measure() const noexcept { return measure_; }
  const Partition& partition() const noexcept { return partition_; }

  // Upper bound on the number of usable functions: the cell count for the
  // piecewise family.
  std::size_t max_terms() const noexcept;

  // Values of the first out.size() basis functions at theta.
  void values(double theta, std::span<double> out) const;
  double value(std::size_t i, double theta) const;

  // Piecewise family only: pi-mass of cell i.
  double cell_mass(std::size_t i) const;

  BasisFamily with_partition(Partition p) const;

 private:
  BasisFamily(BasisKind kind, const ThetaMeasure& measure)
      : kind_(kind), measure_(measure) {}

  BasisKind kind_;
  ThetaMeasure measure_;
  Partition partition_;
  std::shared_ptr<const std::vector<double>> legendre_scale_;
};

// x(theta) = sum_i u_i B_i(theta), u stored as an m x q matrix of orthonormal
// coordinates. For the piecewise family the raw per-cell values are
// u_i / sqrt(mass_i); see cell_values().
class Expansion {
 public:
  Expansion(BasisFamily basis, Eigen::MatrixXd coefficients);

  static Expansion zeros(BasisFamily basis, std::size_t m, std::size_t q);

  const BasisFamily& basis() const noexcept { return basis_; }
  const Eigen::MatrixXd& coefficients() const noexcept { return coeffs_; }
  std::size_t terms() const noexcept {
    return static_cast<std::size_t>(coeffs_.rows());
  }
  std::size_t outputs() const noexcept {
    return static_cast<std::size_t>(coeffs_.cols());
  }

  // Replaces the coefficients; the shape must not change.
  void set_coefficients(const Eigen::MatrixXd& u);

  Eigen::MatrixXd cell_values() const;

  // pi-norm of the synthesized function (Parseval).
  double norm() const noexcept { return coeffs_.norm(); }

 private:
  BasisFamily basis_;
  Eigen::MatrixXd coeffs_;
};

Eigen::VectorXd synthesize(const Expansion& e, double theta);

// Coefficients <f, B_i>_pi for i < m. The Legendre family uses the measure's
// composite rule; the piecewise family integrates cell by cell, so m must
// equal the cell count.
Expansion analyze(const VectorField& f, const BasisFamily& basis,
                  std::size_t m);

struct Truncation {
  Expansion expansion;
  double remainder_norm;
};

Truncation truncate(const Expansion& e, std::size_t m_new);

// Zero-pads a Legendre expansion to m_new terms.
Expansion extend(const Expansion& e, std::size_t m_new);

Partition refine_partition(const Partition& p, double theta,
                           const ThetaMeasure& measure);

// Value-preserving move onto a finer partition: each new cell inherits the
// raw value of the old cell containing it.
Expansion transfer_coefficients(const Expansion& e, const Partition& finer);

double max_gap_measure(const Partition& p, const ThetaMeasure& measure);

// One piecewise refinement step: draw theta' from the measure (redrawing on a
// duplicate or boundary hit), split its cell, carry the value to both halves.
Expansion refine_expansion(const Expansion& e, RandomState& rng);

// Partition with `cells` cells built by cells - 1 sampled refinements of the
// trivial partition.
Partition sample_partition(const ThetaMeasure& measure, std::size_t cells,
                           RandomState& rng);

}  // namespace uqsub
