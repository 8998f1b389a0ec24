#include "uqsub/basis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "uqsub/error.hpp"

namespace uqsub {

namespace {

void legendre_raw(double s, std::span<double> out) {
  if (out.empty()) return;
  out[0] = 1.0;
  if (out.size() == 1) return;
  out[1] = s;
  for (std::size_t n = 2; n < out.size(); ++n) {
    const double k = static_cast<double>(n);
    out[n] = ((2.0 * k - 1.0) * s * out[n - 1] - (k - 1.0) * out[n - 2]) / k;
  }
}

double to_reference(double theta, const ThetaMeasure& m) {
  return 2.0 * (theta - m.lower()) / (m.upper() - m.lower()) - 1.0;
}

}  // namespace

// ---------------------------------------------------------------- Partition

Partition::Partition(std::vector<double> breakpoints,
                     const ThetaMeasure& measure)
    : breakpoints_(std::move(breakpoints)) {
  for (std::size_t i = 0; i < breakpoints_.size(); ++i) {
    const double c = breakpoints_[i];
    if (!(c > measure.lower() && c < measure.upper()))
      throw DomainError("Partition: breakpoint " + std::to_string(c) +
                        " is not strictly inside the support");
    if (i > 0 && !(c > breakpoints_[i - 1]))
      throw DomainError("Partition: breakpoints must be strictly increasing");
  }
}

std::size_t Partition::cell_index(double theta) const noexcept {
  return static_cast<std::size_t>(
      std::upper_bound(breakpoints_.begin(), breakpoints_.end(), theta) -
      breakpoints_.begin());
}

double Partition::cell_lower(std::size_t i,
                             const ThetaMeasure& m) const noexcept {
  return i == 0 ? m.lower() : breakpoints_[i - 1];
}

double Partition::cell_upper(std::size_t i,
                             const ThetaMeasure& m) const noexcept {
  return i == breakpoints_.size() ? m.upper() : breakpoints_[i];
}

bool Partition::is_finer_than(const Partition& coarser) const {
  return std::includes(breakpoints_.begin(), breakpoints_.end(),
                       coarser.breakpoints_.begin(),
                       coarser.breakpoints_.end());
}

// -------------------------------------------------------------- BasisFamily

const char* to_string(BasisKind kind) noexcept {
  switch (kind) {
    case BasisKind::legendre:
      return "legendre";
    case BasisKind::piecewise_constant:
      return "piecewise_constant";
  }
  return "unknown";
}

BasisKind basis_kind_from_string(const std::string& s) {
  if (s == "legendre" || s == "legendre_orthonormal") return BasisKind::legendre;
  if (s == "piecewise" || s == "piecewise_constant")
    return BasisKind::piecewise_constant;
  throw ConfigError("basis.kind", "unknown basis kind '" + s + "'");
}

BasisFamily BasisFamily::legendre(const ThetaMeasure& measure) {
  BasisFamily b(BasisKind::legendre, measure);
  std::vector<double> sq(kMaxLegendreTerms, 0.0);
  std::vector<double> vals(kMaxLegendreTerms);
  const auto nodes = measure.nodes();
  const auto weights = measure.weights();
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    legendre_raw(to_reference(nodes[j], measure), vals);
    for (std::size_t n = 0; n < kMaxLegendreTerms; ++n)
      sq[n] += weights[j] * vals[n] * vals[n];
  }
  auto scale = std::make_shared<std::vector<double>>(kMaxLegendreTerms);
  for (std::size_t n = 0; n < kMaxLegendreTerms; ++n)
    (*scale)[n] = 1.0 / std::sqrt(sq[n]);
  b.legendre_scale_ = std::move(scale);
  return b;
}

BasisFamily BasisFamily::piecewise(const ThetaMeasure& measure,
                                   Partition partition) {
  BasisFamily b(BasisKind::piecewise_constant, measure);
  b.partition_ = std::move(partition);
  return b;
}

BasisFamily BasisFamily::with_partition(Partition p) const {
  if (kind_ != BasisKind::piecewise_constant)
    throw StructureError("with_partition: basis is not piecewise constant");
  return piecewise(measure_, std::move(p));
}

std::size_t BasisFamily::max_terms() const noexcept {
  return kind_ == BasisKind::legendre ? kMaxLegendreTerms : partition_.cells();
}

double BasisFamily::cell_mass(std::size_t i) const {
  if (kind_ != BasisKind::piecewise_constant)
    throw StructureError("cell_mass: basis is not piecewise constant");
  return measure_.measure_of(partition_.cell_lower(i, measure_),
                             partition_.cell_upper(i, measure_));
}

void BasisFamily::values(double theta, std::span<double> out) const {
  if (out.size() > max_terms())
    throw StructureError("basis: requested " + std::to_string(out.size()) +
                         " functions, family has " +
                         std::to_string(max_terms()));
  if (kind_ == BasisKind::legendre) {
    legendre_raw(to_reference(theta, measure_), out);
    for (std::size_t n = 0; n < out.size(); ++n)
      out[n] *= (*legendre_scale_)[n];
    return;
  }
  std::fill(out.begin(), out.end(), 0.0);
  const std::size_t cell = partition_.cell_index(theta);
  if (cell < out.size()) out[cell] = 1.0 / std::sqrt(cell_mass(cell));
}

double BasisFamily::value(std::size_t i, double theta) const {
  std::vector<double> v(i + 1);
  values(theta, v);
  return v[i];
}

// ---------------------------------------------------------------- Expansion

Expansion::Expansion(BasisFamily basis, Eigen::MatrixXd coefficients)
    : basis_(std::move(basis)), coeffs_(std::move(coefficients)) {
  if (coeffs_.rows() < 1 || coeffs_.cols() < 1)
    throw StructureError("Expansion: need at least one term and one output");
  if (!coeffs_.allFinite())
    throw DomainError("Expansion: coefficients must be finite");
  const auto m = static_cast<std::size_t>(coeffs_.rows());
  if (m > basis_.max_terms())
    throw StructureError("Expansion: " + std::to_string(m) +
                         " terms exceed the basis size " +
                         std::to_string(basis_.max_terms()));
  if (basis_.kind() == BasisKind::piecewise_constant &&
      m != basis_.partition().cells())
    throw StructureError(
        "Expansion: piecewise coefficients must cover every cell");
}

Expansion Expansion::zeros(BasisFamily basis, std::size_t m, std::size_t q) {
  return Expansion(std::move(basis),
                   Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m),
                                         static_cast<Eigen::Index>(q)));
}

void Expansion::set_coefficients(const Eigen::MatrixXd& u) {
  if (u.rows() != coeffs_.rows() || u.cols() != coeffs_.cols())
    throw StructureError("Expansion: coefficient shape mismatch");
  coeffs_ = u;
}

Eigen::MatrixXd Expansion::cell_values() const {
  if (basis_.kind() != BasisKind::piecewise_constant)
    throw StructureError("cell_values: basis is not piecewise constant");
  Eigen::MatrixXd c = coeffs_;
  for (Eigen::Index i = 0; i < c.rows(); ++i)
    c.row(i) /= std::sqrt(basis_.cell_mass(static_cast<std::size_t>(i)));
  return c;
}

Eigen::VectorXd synthesize(const Expansion& e, double theta) {
  const BasisFamily& basis = e.basis();
  if (!basis.measure().contains(theta))
    throw DomainError("synthesize: theta " + std::to_string(theta) +
                      " outside the support");
  if (basis.kind() == BasisKind::piecewise_constant) {
    // Divide rather than multiply by 1/sqrt(mass) so clamped cell values
    // (u = c * sqrt(mass)) come back bit-exact for c in {0, 1}.
    const std::size_t cell = basis.partition().cell_index(theta);
    return e.coefficients().row(static_cast<Eigen::Index>(cell)).transpose() /
           std::sqrt(basis.cell_mass(cell));
  }
  std::vector<double> b(e.terms());
  basis.values(theta, b);
  const Eigen::Map<const Eigen::VectorXd> bv(b.data(),
                                             static_cast<Eigen::Index>(b.size()));
  return e.coefficients().transpose() * bv;
}

Expansion analyze(const VectorField& f, const BasisFamily& basis,
                  std::size_t m) {
  if (m < 1) throw StructureError("analyze: m must be >= 1");
  const ThetaMeasure& measure = basis.measure();
  if (basis.kind() == BasisKind::piecewise_constant) {
    const Partition& p = basis.partition();
    if (m != p.cells())
      throw StructureError("analyze: piecewise basis needs m == cell count");
    Eigen::MatrixXd u;
    std::vector<double> nodes;
    std::vector<double> weights;
    for (std::size_t i = 0; i < m; ++i) {
      measure.interval_rule(p.cell_lower(i, measure), p.cell_upper(i, measure),
                            nodes, weights);
      Eigen::VectorXd acc;
      for (std::size_t j = 0; j < nodes.size(); ++j) {
        const Eigen::VectorXd v = f(nodes[j]);
        if (acc.size() == 0) acc = Eigen::VectorXd::Zero(v.size());
        acc += weights[j] * v;
      }
      if (u.size() == 0)
        u = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), acc.size());
      u.row(static_cast<Eigen::Index>(i)) =
          acc.transpose() / std::sqrt(basis.cell_mass(i));
    }
    return Expansion(basis, std::move(u));
  }
  if (m > basis.max_terms())
    throw StructureError("analyze: m exceeds the Legendre family size");
  const auto nodes = measure.nodes();
  const auto weights = measure.weights();
  std::vector<double> b(m);
  Eigen::MatrixXd u;
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    const Eigen::VectorXd v = f(nodes[j]);
    if (u.size() == 0)
      u = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), v.size());
    basis.values(nodes[j], b);
    for (std::size_t i = 0; i < m; ++i)
      u.row(static_cast<Eigen::Index>(i)) += (weights[j] * b[i]) * v.transpose();
  }
  return Expansion(basis, std::move(u));
}

Truncation truncate(const Expansion& e, std::size_t m_new) {
  if (m_new < 1 || m_new > e.terms())
    throw DomainError("truncate: m_new must lie in [1, " +
                      std::to_string(e.terms()) + "]");
  if (m_new == e.terms()) return {e, 0.0};
  if (e.basis().kind() == BasisKind::piecewise_constant)
    throw StructureError("truncate: piecewise expansions cannot drop cells");
  const auto keep = static_cast<Eigen::Index>(m_new);
  const Eigen::MatrixXd& u = e.coefficients();
  const double tail = u.bottomRows(u.rows() - keep).norm();
  return {Expansion(e.basis(), u.topRows(keep)), tail};
}

Expansion extend(const Expansion& e, std::size_t m_new) {
  if (m_new < e.terms())
    throw DomainError("extend: cannot shrink, use truncate");
  if (m_new == e.terms()) return e;
  if (e.basis().kind() != BasisKind::legendre)
    throw StructureError("extend: only Legendre expansions are zero-padded");
  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m_new),
                                            e.coefficients().cols());
  u.topRows(e.coefficients().rows()) = e.coefficients();
  return Expansion(e.basis(), std::move(u));
}

Partition refine_partition(const Partition& p, double theta,
                           const ThetaMeasure& measure) {
  if (!(theta > measure.lower() && theta < measure.upper()))
    throw DomainError("refine_partition: theta on or outside the boundary");
  const auto bp = p.breakpoints();
  auto it = std::lower_bound(bp.begin(), bp.end(), theta);
  if (it != bp.end() && *it == theta)
    throw DomainError("refine_partition: theta is already a breakpoint");
  std::vector<double> next(bp.begin(), bp.end());
  next.insert(next.begin() + (it - bp.begin()), theta);
  return Partition(std::move(next), measure);
}

Expansion transfer_coefficients(const Expansion& e, const Partition& finer) {
  const BasisFamily& basis = e.basis();
  if (basis.kind() != BasisKind::piecewise_constant)
    throw StructureError("transfer_coefficients: basis is not piecewise");
  const Partition& coarse = basis.partition();
  if (!finer.is_finer_than(coarse))
    throw StructureError("transfer_coefficients: target is not a refinement");
  const ThetaMeasure& m = basis.measure();
  BasisFamily next = basis.with_partition(finer);
  const Eigen::MatrixXd c = e.cell_values();
  Eigen::MatrixXd u(static_cast<Eigen::Index>(finer.cells()), c.cols());
  for (std::size_t j = 0; j < finer.cells(); ++j) {
    const double lo = finer.cell_lower(j, m);
    const double hi = finer.cell_upper(j, m);
    const std::size_t parent = coarse.cell_index(0.5 * (lo + hi));
    u.row(static_cast<Eigen::Index>(j)) =
        c.row(static_cast<Eigen::Index>(parent)) * std::sqrt(next.cell_mass(j));
  }
  return Expansion(std::move(next), std::move(u));
}

double max_gap_measure(const Partition& p, const ThetaMeasure& measure) {
  double best = 0.0;
  for (std::size_t i = 0; i < p.cells(); ++i)
    best = std::max(best, measure.measure_of(p.cell_lower(i, measure),
                                             p.cell_upper(i, measure)));
  return best;
}

namespace {

Partition refine_sampled(const Partition& p, const ThetaMeasure& measure,
                         RandomState& rng) {
  for (;;) {
    const double theta = measure.sample(rng);
    try {
      return refine_partition(p, theta, measure);
    } catch (const DomainError&) {
      // duplicate or boundary draw: resample
    }
  }
}

}  // namespace

Expansion refine_expansion(const Expansion& e, RandomState& rng) {
  const BasisFamily& basis = e.basis();
  if (basis.kind() != BasisKind::piecewise_constant)
    throw StructureError("refine_expansion: basis is not piecewise");
  return transfer_coefficients(
      e, refine_sampled(basis.partition(), basis.measure(), rng));
}

Partition sample_partition(const ThetaMeasure& measure, std::size_t cells,
                           RandomState& rng) {
  if (cells < 1) throw DomainError("sample_partition: need at least one cell");
  Partition p;
  for (std::size_t i = 1; i < cells; ++i) p = refine_sampled(p, measure, rng);
  return p;
}

}  // namespace uqsub
