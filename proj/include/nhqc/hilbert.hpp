#pragma once

// Qudit operator algebra and tensor-product bookkeeping.
//
// Site ordering: the first declared site is the most significant digit of the
// composite basis index, so |l_0 l_1 ... l_{n-1}> has index
// sum_s l_s * prod_{r>s} dims[r] (standard Kronecker ordering).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "nhqc/linalg.hpp"

namespace nhqc::hilbert {

class SubsystemLayout {
 public:
  SubsystemLayout() = default;

  SubsystemLayout(std::vector<std::string> labels, std::vector<int> dims)
      : labels_(std::move(labels)), dims_(std::move(dims)) {
    if (labels_.size() != dims_.size())
      throw std::invalid_argument("SubsystemLayout: labels and dims differ in length");
    total_ = 1;
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      if (dims_[i] < 2)
        throw std::invalid_argument("SubsystemLayout: site '" + labels_[i] +
                                    "' needs at least 2 levels");
      for (std::size_t j = 0; j < i; ++j)
        if (labels_[j] == labels_[i])
          throw std::invalid_argument("SubsystemLayout: duplicate label '" + labels_[i] + "'");
      total_ *= dims_[i];
    }
  }

  /// Every site with the same local dimension (3 by default).
  static SubsystemLayout uniform(std::vector<std::string> labels, int levels = 3) {
    std::vector<int> dims(labels.size(), levels);
    return {std::move(labels), std::move(dims)};
  }

  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const std::vector<int>& dims() const noexcept { return dims_; }
  std::size_t size() const noexcept { return labels_.size(); }
  Eigen::Index total_dim() const noexcept { return total_; }

  bool contains(const std::string& label) const {
    return std::find(labels_.begin(), labels_.end(), label) != labels_.end();
  }

  std::size_t index_of(const std::string& label) const {
    auto it = std::find(labels_.begin(), labels_.end(), label);
    if (it == labels_.end()) throw std::invalid_argument("unknown site label '" + label + "'");
    return static_cast<std::size_t>(it - labels_.begin());
  }

  int dim_of(const std::string& label) const { return dims_[index_of(label)]; }

  /// Stride of a site in the composite index.
  Eigen::Index stride(std::size_t site) const {
    Eigen::Index s = 1;
    for (std::size_t r = site + 1; r < dims_.size(); ++r) s *= dims_[r];
    return s;
  }

  /// Per-site levels of a composite basis index.
  std::vector<int> digits(Eigen::Index index) const {
    std::vector<int> out(dims_.size());
    for (std::size_t s = dims_.size(); s-- > 0;) {
      out[s] = static_cast<int>(index % dims_[s]);
      index /= dims_[s];
    }
    return out;
  }

  Eigen::Index index(const std::vector<int>& levels) const {
    if (levels.size() != dims_.size())
      throw std::invalid_argument("SubsystemLayout::index: wrong number of levels");
    Eigen::Index idx = 0;
    for (std::size_t s = 0; s < dims_.size(); ++s) {
      if (levels[s] < 0 || levels[s] >= dims_[s])
        throw std::invalid_argument("SubsystemLayout::index: level out of range on site '" +
                                    labels_[s] + "'");
      idx = idx * dims_[s] + levels[s];
    }
    return idx;
  }

  friend bool operator==(const SubsystemLayout&, const SubsystemLayout&) = default;

 private:
  std::vector<std::string> labels_;
  std::vector<int> dims_;
  Eigen::Index total_ = 1;
};

inline Operator lowering_op(int k, int d) {
  if (d < 2 || k < 1 || k > d - 1)
    throw std::invalid_argument("lowering_op: need 1 <= k <= d-1, got k=" + std::to_string(k) +
                                ", d=" + std::to_string(d));
  Operator m = Operator::Zero(d, d);
  m(k - 1, k) = 1.0;
  return m;
}

inline Operator projector_op(int k, int d) {
  if (d < 1 || k < 0 || k > d - 1)
    throw std::invalid_argument("projector_op: need 0 <= k <= d-1, got k=" + std::to_string(k) +
                                ", d=" + std::to_string(d));
  Operator m = Operator::Zero(d, d);
  m(k, k) = 1.0;
  return m;
}

/// Weighted lowering operator sum_k sqrt(k) |k-1><k|.
inline Operator weighted_lowering(int d) {
  Operator m = Operator::Zero(d, d);
  for (int k = 1; k < d; ++k) m(k - 1, k) = std::sqrt(static_cast<double>(k));
  return m;
}

/// Places a local operator on one site, identity elsewhere.
inline Operator embed(const Operator& op, const std::string& site, const SubsystemLayout& layout) {
  const std::size_t s = layout.index_of(site);
  const int d = layout.dims()[s];
  if (op.rows() != d || op.cols() != d)
    throw std::invalid_argument("embed: operator dimension " + std::to_string(op.rows()) +
                                " does not match site '" + site + "' (" + std::to_string(d) + ")");
  Eigen::Index left = 1;
  for (std::size_t r = 0; r < s; ++r) left *= layout.dims()[r];
  const Eigen::Index right = layout.stride(s);
  const Eigen::Index n = layout.total_dim();
  Operator out = Operator::Zero(n, n);
  for (Eigen::Index l = 0; l < left; ++l)
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) {
        const Complex v = op(a, b);
        if (v == Complex{}) continue;
        const Eigen::Index row0 = (l * d + a) * right;
        const Eigen::Index col0 = (l * d + b) * right;
        for (Eigen::Index r = 0; r < right; ++r) out(row0 + r, col0 + r) = v;
      }
  return out;
}

/// Basis state with the listed sites excited, every other site in |0>.
inline StateVector basis_state(const SubsystemLayout& layout,
                               const std::map<std::string, int>& levels) {
  std::vector<int> digits(layout.size(), 0);
  for (const auto& [label, level] : levels) digits[layout.index_of(label)] = level;
  StateVector v = StateVector::Zero(layout.total_dim());
  v[layout.index(digits)] = 1.0;
  return v;
}

enum class Encoding { S1, S2 };

/// Site roles for the two encodings. S1 uses (q1, q2) for the logical pair;
/// S2 uses (q1, q2) for the first logical qubit and (q3, q4) for the second.
struct EncodingSites {
  std::string q1 = "T1";
  std::string q2 = "T2";
  std::string q3 = "T3";
  std::string q4 = "T4";
};

/// Ordered logical basis. S1: [|10>_12, |01>_12]; S2: [|1010>, |1001>, |0110>, |0101>]
/// over (q1, q2, q3, q4). Every other site is in its ground state.
inline std::vector<StateVector> logical_basis(Encoding encoding, const SubsystemLayout& layout,
                                              const EncodingSites& sites = {}) {
  auto require = [&](const std::string& label) {
    if (!layout.contains(label))
      throw std::invalid_argument("logical_basis: layout lacks transmon '" + label + "'");
  };
  require(sites.q1);
  require(sites.q2);
  if (encoding == Encoding::S1) {
    return {basis_state(layout, {{sites.q1, 1}}), basis_state(layout, {{sites.q2, 1}})};
  }
  require(sites.q3);
  require(sites.q4);
  return {basis_state(layout, {{sites.q1, 1}, {sites.q3, 1}}),
          basis_state(layout, {{sites.q1, 1}, {sites.q4, 1}}),
          basis_state(layout, {{sites.q2, 1}, {sites.q3, 1}}),
          basis_state(layout, {{sites.q2, 1}, {sites.q4, 1}})};
}

inline Operator projector_onto(const std::vector<StateVector>& states) {
  if (states.empty()) throw std::invalid_argument("projector_onto: empty state list");
  Operator p = Operator::Zero(states.front().size(), states.front().size());
  for (const auto& s : states) p += s * s.adjoint();
  return p;
}

inline Operator gram_matrix(const std::vector<StateVector>& states) {
  const auto n = static_cast<Eigen::Index>(states.size());
  Operator g(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) g(i, j) = states[i].dot(states[j]);
  return g;
}

inline bool is_orthonormal(const std::vector<StateVector>& states, double tol = 1e-10) {
  if (states.empty()) return false;
  for (const auto& s : states)
    if (s.size() != states.front().size()) return false;
  const auto g = gram_matrix(states);
  return max_abs(g - Operator::Identity(g.rows(), g.cols())) <= tol;
}

/// Throws unless rho is Hermitian, unit-trace and positive semidefinite.
inline void validate_density_matrix(const DensityMatrix& rho, double tol = 1e-10) {
  if (rho.rows() != rho.cols() || rho.rows() == 0)
    throw std::invalid_argument("density matrix must be square and non-empty");
  if (hermiticity_error(rho) > tol) throw std::invalid_argument("density matrix is not Hermitian");
  if (std::abs(rho.trace() - Complex{1.0}) > tol)
    throw std::invalid_argument("density matrix trace differs from 1");
  Eigen::SelfAdjointEigenSolver<Operator> es(rho, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -tol)
    throw std::invalid_argument("density matrix has a negative eigenvalue");
}

inline DensityMatrix pure_density(const StateVector& psi) { return psi * psi.adjoint(); }

}  // namespace nhqc::hilbert
