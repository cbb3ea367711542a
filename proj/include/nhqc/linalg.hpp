#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace nhqc {

using Complex = std::complex<double>;
using Operator = Eigen::MatrixXcd;
using StateVector = Eigen::VectorXcd;
using DensityMatrix = Eigen::MatrixXcd;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr Complex kI{0.0, 1.0};

/// Converts an ordinary frequency in MHz to an angular frequency in rad/ns.
constexpr double angular(double mhz) noexcept { return kTwoPi * mhz * 1e-3; }

inline double max_abs(const Eigen::MatrixXcd& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline double hermiticity_error(const Operator& m) { return max_abs(m - m.adjoint()); }

inline bool is_hermitian(const Operator& m, double tol = 1e-12) {
  return m.rows() == m.cols() && hermiticity_error(m) <= tol;
}

inline double unitarity_error(const Operator& u) {
  return max_abs(u.adjoint() * u - Operator::Identity(u.rows(), u.cols()));
}

/// exp(-i H t) for Hermitian H via eigendecomposition.
inline Operator unitary_propagator(const Operator& h, double t) {
  Eigen::SelfAdjointEigenSolver<Operator> es(h);
  const Eigen::VectorXd& w = es.eigenvalues();
  Eigen::VectorXcd phases(w.size());
  for (Eigen::Index k = 0; k < w.size(); ++k) phases[k] = std::exp(-kI * w[k] * t);
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

/// 1 - |tr(A^dagger B)| / dim. Zero iff A and B agree up to a global phase.
inline double phase_insensitive_distance(const Operator& a, const Operator& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("phase_insensitive_distance: dimension mismatch");
  return 1.0 - std::abs((a.adjoint() * b).trace()) / static_cast<double>(a.rows());
}

/// Hamiltonian with a fixed sparsity pattern stored as explicit entries.
///
/// Used by the integrators as a fast path: every coupling Hamiltonian in scope
/// has O(dim) nonzeros, so products cost O(nnz * dim) instead of O(dim^3).
struct SparseHamiltonian {
  struct Entry {
    Eigen::Index row;
    Eigen::Index col;
    Complex value;
  };

  Eigen::Index dim = 0;
  std::vector<Entry> entries;

  Operator to_dense() const {
    Operator m = Operator::Zero(dim, dim);
    for (const auto& e : entries) m(e.row, e.col) += e.value;
    return m;
  }
};

// out = H * x
inline void apply_left(const Operator& h, const Eigen::MatrixXcd& x, Eigen::MatrixXcd& out) {
  out.noalias() = h * x;
}

inline void apply_left(const SparseHamiltonian& h, const Eigen::MatrixXcd& x,
                       Eigen::MatrixXcd& out) {
  out.setZero(x.rows(), x.cols());
  const Eigen::Index ncol = x.cols();
  for (const auto& e : h.entries) {
    const Complex v = e.value;
    for (Eigen::Index j = 0; j < ncol; ++j) out(e.row, j) += v * x(e.col, j);
  }
}

// out = x * H
inline void apply_right(const Eigen::MatrixXcd& x, const Operator& h, Eigen::MatrixXcd& out) {
  out.noalias() = x * h;
}

inline void apply_right(const Eigen::MatrixXcd& x, const SparseHamiltonian& h,
                        Eigen::MatrixXcd& out) {
  out.setZero(x.rows(), x.cols());
  for (const auto& e : h.entries) out.col(e.col) += e.value * x.col(e.row);
}

inline Operator to_dense(const Operator& h) { return h; }
inline Operator to_dense(const SparseHamiltonian& h) { return h.to_dense(); }

}  // namespace nhqc
