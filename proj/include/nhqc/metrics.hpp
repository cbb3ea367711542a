#pragma once

// Fidelity and population observables.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "nhqc/dynamics.hpp"
#include "nhqc/hilbert.hpp"
#include "nhqc/holonomy.hpp"
#include "nhqc/linalg.hpp"

namespace nhqc::metrics {

struct FidelityReport {
  double gate_fidelity = 0.0;
  std::optional<double> state_fidelity;
  double leakage = 0.0;
  std::vector<double> per_state_values;
};

/// <psi|rho|psi>, clipped to [0, 1].
inline double state_fidelity(const DensityMatrix& rho, const StateVector& target) {
  if (rho.rows() != target.size() || rho.cols() != target.size())
    throw std::invalid_argument("state_fidelity: dimension mismatch");
  const double f = target.dot(rho * target).real();
  return std::clamp(f, 0.0, 1.0);
}

inline double leakage(const DensityMatrix& rho, const Operator& logical_projector) {
  if (rho.rows() != logical_projector.rows())
    throw std::invalid_argument("leakage: dimension mismatch");
  const double inside = (logical_projector * rho * logical_projector).trace().real();
  return std::max(0.0, rho.trace().real() - inside);
}

/// Uniform periodic grid on [0, 2 pi): theta_k = 2 pi k / n.
inline std::vector<double> angle_grid(int n) {
  if (n < 2) throw std::invalid_argument("fidelity grid needs at least 2 points");
  std::vector<double> out(n);
  for (int k = 0; k < n; ++k) out[k] = 2.0 * std::numbers::pi * k / n;
  return out;
}

namespace detail {

inline void require_dim(const holonomy::LogicalGate& target, int dim) {
  if (target.matrix.rows() != dim || target.matrix.cols() != dim)
    throw std::invalid_argument("target gate has the wrong dimension");
}

inline double overlap(const Eigen::VectorXcd& out_state, const Eigen::MatrixXcd& rho) {
  return out_state.dot(rho * out_state).real();
}

}  // namespace detail

/// Mean of <psi_f|rho|psi_f> over inputs cos(t)|0_L> + sin(t)|1_L> on the periodic grid,
/// with psi_f = U_target psi_in. `evolve` maps a logical 2 x 2 density matrix to the
/// logical block of the output.
template <class Evolve>
double gate_fidelity_1q(Evolve&& evolve, const holonomy::LogicalGate& target, int n_states = 1001,
                        std::vector<double>* per_state = nullptr) {
  detail::require_dim(target, 2);
  double sum = 0.0;
  for (double t : angle_grid(n_states)) {
    Eigen::VectorXcd in(2);
    in << std::cos(t), std::sin(t);
    const Eigen::VectorXcd out = target.matrix * in;
    const double f = detail::overlap(out, evolve(Eigen::MatrixXcd(in * in.adjoint())));
    if (per_state) per_state->push_back(f);
    sum += f;
  }
  return std::clamp(sum / n_states, 0.0, 1.0);
}

inline double gate_fidelity_1q(const dynamics::LogicalChannel& channel,
                               const holonomy::LogicalGate& target, int n_states = 1001) {
  return gate_fidelity_1q([&](const Eigen::MatrixXcd& r) { return channel.apply(r); }, target,
                          n_states);
}

/// Mean over a grid x grid tensor grid of product inputs
/// (cos a|0> + sin a|1>) (x) (cos b|0> + sin b|1>) in the basis [00, 01, 10, 11].
template <class Evolve>
double gate_fidelity_2q(Evolve&& evolve, const holonomy::LogicalGate& target, int grid = 101) {
  detail::require_dim(target, 4);
  const auto angles = angle_grid(grid);
  double sum = 0.0;
  for (double a : angles)
    for (double b : angles) {
      Eigen::VectorXcd in(4);
      in << std::cos(a) * std::cos(b), std::cos(a) * std::sin(b), std::sin(a) * std::cos(b),
          std::sin(a) * std::sin(b);
      const Eigen::VectorXcd out = target.matrix * in;
      sum += detail::overlap(out, evolve(Eigen::MatrixXcd(in * in.adjoint())));
    }
  return std::clamp(sum / (double(grid) * grid), 0.0, 1.0);
}

inline double gate_fidelity_2q(const dynamics::LogicalChannel& channel,
                               const holonomy::LogicalGate& target, int grid = 101) {
  return gate_fidelity_2q([&](const Eigen::MatrixXcd& r) { return channel.apply(r); }, target,
                          grid);
}

/// Haar-average gate fidelity from the channel, (d F_e + 1)/(d + 1) with F_e the entanglement
/// fidelity against the target. Diagnostic only.
inline double average_gate_fidelity(const dynamics::LogicalChannel& channel,
                                    const holonomy::LogicalGate& target) {
  const int d = channel.dim;
  detail::require_dim(target, d);
  // entanglement fidelity = (1/d^2) sum_ij <i|U^dag Phi(|i><j|) U|j>
  Complex fe{};
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i) {
      Eigen::MatrixXcd e = Eigen::MatrixXcd::Zero(d, d);
      e(i, j) = 1.0;
      const Eigen::MatrixXcd img = target.matrix.adjoint() * channel.apply(e) * target.matrix;
      fe += img(i, j);
    }
  const double f_e = fe.real() / (double(d) * d);
  return (d * f_e + 1.0) / (d + 1.0);
}

/// Populations <b|rho(t)|b> per basis state (outer index) and sample (inner index).
/// States may be pure vectors or density matrices.
template <class State>
std::vector<std::vector<double>> populations(const dynamics::EvolutionResult<State>& result,
                                             const std::vector<StateVector>& basis) {
  std::vector<std::vector<double>> out(basis.size());
  for (std::size_t b = 0; b < basis.size(); ++b) {
    for (const auto& s : result.states) {
      if (basis[b].size() != s.rows())
        throw std::invalid_argument("populations: dimension mismatch");
      double p;
      if (s.cols() == 1)
        p = std::norm(basis[b].dot(s.col(0)));
      else
        p = basis[b].dot(s * basis[b]).real();
      out[b].push_back(std::clamp(p, 0.0, 1.0));
    }
  }
  return out;
}

}  // namespace nhqc::metrics
