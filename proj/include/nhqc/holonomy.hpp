#pragma once

// Holonomic gate constructions: the K = X Y Z^dagger decomposition, the
// single-loop propagator, target logical gates, holonomy-condition checks and
// compilation of abstract gates into drive schedules.

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "nhqc/bessel.hpp"
#include "nhqc/device.hpp"
#include "nhqc/hilbert.hpp"
#include "nhqc/linalg.hpp"
#include "nhqc/model.hpp"

namespace nhqc::holonomy {

using std::numbers::pi;

struct SingleQubit {
  double theta = pi / 2;
  double gamma = pi;
  double phi = 0.0;
  friend bool operator==(const SingleQubit&, const SingleQubit&) = default;
};

struct TwoQubitRot {
  double vartheta = pi / 2;
  double varphi = 0.0;
  friend bool operator==(const TwoQubitRot&, const TwoQubitRot&) = default;
};

struct ControlledPhase {
  double xi = pi / 2;
  friend bool operator==(const ControlledPhase&, const ControlledPhase&) = default;
};

struct GateRecipe {
  std::variant<SingleQubit, TwoQubitRot, ControlledPhase> gate;
  model::GateSites sites;

  bool is_single_qubit() const { return std::holds_alternative<SingleQubit>(gate); }
  hilbert::Encoding encoding() const {
    return is_single_qubit() ? hilbert::Encoding::S1 : hilbert::Encoding::S2;
  }
  model::EffectiveConfig effective_config() const {
    if (std::holds_alternative<SingleQubit>(gate)) return model::EffectiveConfig::SingleQubit;
    if (std::holds_alternative<TwoQubitRot>(gate)) return model::EffectiveConfig::Cnot;
    return model::EffectiveConfig::ControlledPhase;
  }
  std::string kind() const {
    if (std::holds_alternative<SingleQubit>(gate)) return "single_qubit";
    if (std::holds_alternative<TwoQubitRot>(gate)) return "two_qubit_rot";
    return "controlled_phase";
  }

  friend bool operator==(const GateRecipe&, const GateRecipe&) = default;
};

struct LogicalGate {
  int dim = 2;
  Operator matrix;
};

struct KDecomposition {
  Operator x;
  Operator y;
  Operator z;
};

/// K in the basis {|00>_12, |1>_L, |0>_L, |11>_12}.
inline Operator k_matrix(double theta, double phi) {
  const double s = std::sin(theta / 2);
  const double c = std::cos(theta / 2);
  const Complex e = std::polar(1.0, -phi);
  Operator k = Operator::Zero(4, 4);
  k(1, 0) = s * e;
  k(2, 0) = c;
  k(3, 1) = c;
  k(3, 2) = s * e;
  return k;
}

inline KDecomposition decompose_K(double theta, double phi) {
  const double s = std::sin(theta / 2);
  const double c = std::cos(theta / 2);
  const Complex em = std::polar(1.0, -phi);
  const Complex ep = std::polar(1.0, phi);
  KDecomposition d{Operator::Zero(4, 4), Operator::Zero(4, 4), Operator::Zero(4, 4)};
  d.x(0, 0) = 1;
  d.x(1, 1) = c;
  d.x(1, 3) = s * em;
  d.x(2, 1) = -s * ep;
  d.x(2, 3) = c;
  d.x(3, 2) = 1;
  d.y(2, 2) = 1;
  d.y(3, 3) = 1;
  d.z(0, 3) = 1;
  d.z(1, 1) = s * em;
  d.z(1, 2) = c;
  d.z(2, 1) = -c;
  d.z(2, 2) = s * ep;
  d.z(3, 0) = 1;
  return d;
}

/// Ancilla-resolved single-loop propagator, 8x8.
///
/// Basis: |0>_a (x) {|00>, |01>, |10>, |11>}_12 followed by |1>_a (x) {same}, so that
/// |01>_12 = |1>_L sits at index 1 and |10>_12 = |0>_L at index 2 of each block.
/// phi is the relative phase inside K; phi1 the common phase; area = g t.
inline Operator single_loop_propagator(double theta, double phi, double phi1, double area) {
  const auto d = decompose_K(theta, phi);
  Eigen::VectorXcd cy(4), sy(4);
  for (int i = 0; i < 4; ++i) {
    const double yi = d.y(i, i).real();
    cy[i] = std::cos(area * yi);
    sy[i] = std::sin(area * yi);
  }
  Operator u(8, 8);
  u.topLeftCorner(4, 4) = d.x * cy.asDiagonal() * d.x.adjoint();
  u.topRightCorner(4, 4) = -kI * std::polar(1.0, -phi1) * (d.x * sy.asDiagonal() * d.z.adjoint());
  u.bottomLeftCorner(4, 4) = -kI * std::polar(1.0, phi1) * (d.z * sy.asDiagonal() * d.x.adjoint());
  u.bottomRightCorner(4, 4) = d.z * cy.asDiagonal() * d.z.adjoint();
  return u;
}

/// The Hamiltonian whose evolution single_loop_propagator describes, per unit g.
inline Operator single_loop_hamiltonian(double theta, double phi, double phi1) {
  const Operator k = k_matrix(theta, phi);
  Operator h = Operator::Zero(8, 8);
  h.topRightCorner(4, 4) = k * std::polar(1.0, -phi1);
  h.bottomLeftCorner(4, 4) = k.adjoint() * std::polar(1.0, phi1);
  return h;
}

inline LogicalGate single_qubit_unitary(double theta, double gamma, double phi) {
  Operator p(2, 2);
  p << std::cos(theta), std::sin(theta) * std::polar(1.0, -phi),
      std::sin(theta) * std::polar(1.0, phi), -std::cos(theta);
  Operator u = std::cos(gamma / 2) * Operator::Identity(2, 2) - kI * std::sin(gamma / 2) * p;
  return {2, u};
}

inline LogicalGate two_qubit_unitary(double vartheta, double varphi) {
  Operator u = Operator::Identity(4, 4);
  u(2, 2) = std::cos(vartheta);
  u(2, 3) = std::sin(vartheta) * std::polar(1.0, varphi);
  u(3, 2) = std::sin(vartheta) * std::polar(1.0, -varphi);
  u(3, 3) = -std::cos(vartheta);
  return {4, u};
}

inline LogicalGate controlled_phase_unitary(double xi) {
  Operator u = Operator::Identity(4, 4);
  u(3, 3) = std::polar(1.0, xi);
  return {4, u};
}

inline LogicalGate target_gate(const GateRecipe& recipe) {
  return std::visit(
      [](const auto& g) -> LogicalGate {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, SingleQubit>)
          return single_qubit_unitary(g.theta, g.gamma, g.phi);
        else if constexpr (std::is_same_v<T, TwoQubitRot>)
          return two_qubit_unitary(g.vartheta, g.varphi);
        else
          return controlled_phase_unitary(g.xi);
      },
      recipe.gate);
}

namespace detail {

inline double wrap_phase(double x) { return std::remainder(x, 2.0 * pi); }

// Modulation depths (b1, b2) for arms with relative amplitude a2/a1 = ratio, with the
// stronger arm at beta_ref. Coupling strengths g1, g2 enter the J_1 ratio.
inline std::pair<double, double> arm_betas(double amp1, double amp2, double g1, double g2,
                                           double beta_ref) {
  if (amp1 == 0.0 && amp2 == 0.0) throw std::invalid_argument("both drive arms vanish");
  if (amp2 == 0.0) return {beta_ref, 0.0};
  if (amp1 == 0.0) return {0.0, beta_ref};
  // J1(b2) g2 / (J1(b1) g1) = amp2 / amp1
  const double r = (amp2 * g1) / (amp1 * g2);
  if (r <= 1.0) return {beta_ref, model::solve_beta_for_ratio(r, beta_ref)};
  return {model::solve_beta_for_ratio(1.0 / r, beta_ref), beta_ref};
}

inline double coupling_or_throw(const model::DeviceSpec& device, const std::string& a,
                                const std::string& b) {
  const auto* c = device.find_coupling(a, b);
  if (!c || !(c->g > 0.0))
    throw std::invalid_argument("gate needs a nonzero coupling " + a + "-" + b);
  return c->g;
}

inline double positive_frequency(double nu, const std::string& target) {
  if (!(nu > 0.0))
    throw std::invalid_argument("resonant drive on '" + target +
                                "' would need a non-positive frequency (" + std::to_string(nu) +
                                " MHz); check the detuning signs");
  return nu;
}

}  // namespace detail

/// Compiles a gate recipe into a piecewise-constant drive schedule.
///
/// SingleQubit: tones on q1 and q2 at nu_l = omega_l - omega_aux; relative phase
/// phi_2 = phi_1 - phi; both phases advance by pi + gamma at the midpoint, which keeps
/// the dark state fixed and imprints gamma on the bright state.
/// TwoQubitRot: tones on q3 and q4 at nu_l = omega_q2 - omega_l - alpha_q2, one segment
/// of area pi. ControlledPhase: one tone on q2 at omega_q2 - omega_q4 - alpha_q2 whose
/// phase advances by pi + xi at the midpoint.
inline model::PulseSchedule synth_schedule(const GateRecipe& recipe,
                                           const model::DeviceSpec& device, double beta_ref) {
  if (!(beta_ref > 0.0) || beta_ref > model::kBesselJ1Peak + 1e-12)
    throw std::invalid_argument("synth_schedule: beta_ref must lie in (0, 1.8412]");
  device.validate();
  const auto& s = recipe.sites;
  auto require = [&](const std::string& label) {
    if (!device.find(label))
      throw std::invalid_argument(recipe.kind() + " gate needs transmon '" + label +
                                  "', absent from the device");
  };
  using model::DriveTone;
  using model::Segment;

  if (const auto* g = std::get_if<SingleQubit>(&recipe.gate)) {
    require(s.q1);
    require(s.q2);
    require(s.aux);
    const double g1 = detail::coupling_or_throw(device, s.q1, s.aux);
    const double g2 = detail::coupling_or_throw(device, s.q2, s.aux);
    const double c = std::cos(g->theta / 2);
    const double sn = std::sin(g->theta / 2);
    const auto [b1, b2] = detail::arm_betas(std::abs(c), std::abs(sn), g1, g2, beta_ref);
    const double nu1 = detail::positive_frequency(
        model::resonant_drive_frequency(model::EffectiveConfig::SingleQubit, device, s, s.q1), s.q1);
    const double nu2 = detail::positive_frequency(
        model::resonant_drive_frequency(model::EffectiveConfig::SingleQubit, device, s, s.q2), s.q2);
    const double phi1 = c < 0 ? pi : 0.0;
    const double phi2 = -g->phi + (sn < 0 ? pi : 0.0);
    const double gp1 = model::bessel_j(1, b1) * g1;
    const double gp2 = model::bessel_j(1, b2) * g2;
    const double tau = 1000.0 / (2.0 * std::hypot(gp1, gp2));
    const double jump = pi + g->gamma;
    auto tones = [&](double shift) {
      return std::vector<DriveTone>{
          {s.q1, b1 * nu1, nu1, detail::wrap_phase(phi1 + shift)},
          {s.q2, b2 * nu2, nu2, detail::wrap_phase(phi2 + shift)}};
    };
    return model::PulseSchedule({Segment{0.0, tau / 2, tones(0.0)},
                                 Segment{tau / 2, tau, tones(jump)}});
  }

  if (const auto* g = std::get_if<TwoQubitRot>(&recipe.gate)) {
    require(s.q2);
    require(s.q3);
    require(s.q4);
    const double g23 = detail::coupling_or_throw(device, s.q2, s.q3);
    const double g24 = detail::coupling_or_throw(device, s.q2, s.q4);
    const double sn = std::sin(g->vartheta / 2);  // arm q3
    const double c = std::cos(g->vartheta / 2);   // arm q4
    const auto [b4, b3] = detail::arm_betas(std::abs(c), std::abs(sn), g24, g23, beta_ref);
    const double nu3 = detail::positive_frequency(
        model::resonant_drive_frequency(model::EffectiveConfig::Cnot, device, s, s.q3), s.q3);
    const double nu4 = detail::positive_frequency(
        model::resonant_drive_frequency(model::EffectiveConfig::Cnot, device, s, s.q4), s.q4);
    const double phi3 = g->varphi + pi / 2 + (sn < 0 ? pi : 0.0);
    const double phi4 = -pi / 2 + (c < 0 ? pi : 0.0);
    const double gp3 = std::sqrt(2.0) * model::bessel_j(1, b3) * g23;
    const double gp4 = std::sqrt(2.0) * model::bessel_j(1, b4) * g24;
    const double total = 1000.0 / (2.0 * std::hypot(gp3, gp4));
    return model::PulseSchedule({Segment{0.0,
                                         total,
                                         {{s.q3, b3 * nu3, nu3, detail::wrap_phase(phi3)},
                                          {s.q4, b4 * nu4, nu4, detail::wrap_phase(phi4)}}}});
  }

  const auto& g = std::get<ControlledPhase>(recipe.gate);
  require(s.q2);
  require(s.q4);
  const double g24 = detail::coupling_or_throw(device, s.q2, s.q4);
  const double nu = detail::positive_frequency(
      model::resonant_drive_frequency(model::EffectiveConfig::ControlledPhase, device, s, s.q2),
      s.q2);
  const double gp = std::sqrt(2.0) * model::bessel_j(1, beta_ref) * g24;
  const double total = 1000.0 / (2.0 * gp);
  const double phi2 = 0.0;
  return model::PulseSchedule(
      {Segment{0.0, total / 2, {{s.q2, beta_ref * nu, nu, phi2}}},
       Segment{total / 2, total, {{s.q2, beta_ref * nu, nu, detail::wrap_phase(phi2 + pi + g.xi)}}}});
}

/// Product of exp(-i H_seg dt_seg) over the schedule's segments up to time t, where
/// H_seg is the configuration's effective Hamiltonian for that segment's tones.
inline Operator effective_propagator(const GateRecipe& recipe, const model::DeviceSpec& device,
                                     const model::PulseSchedule& schedule,
                                     const hilbert::SubsystemLayout& layout, double t) {
  Operator u = Operator::Identity(layout.total_dim(), layout.total_dim());
  for (const auto& seg : schedule.segments()) {
    if (t <= seg.t_start) break;
    const double dt = std::min(t, seg.t_end) - seg.t_start;
    const Operator h =
        model::effective_hamiltonian(recipe.effective_config(), device, seg.tones, layout, recipe.sites);
    u = unitary_propagator(h, dt) * u;
  }
  return u;
}

/// Restriction of a full-space operator to the span of an orthonormal state list.
inline Operator restrict_to(const Operator& u, const std::vector<StateVector>& states) {
  const auto n = static_cast<Eigen::Index>(states.size());
  Operator r(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) r(i, j) = states[i].dot(u * states[j]);
  return r;
}

inline void require_projector(const Operator& l) {
  if (l.rows() != l.cols() || max_abs(l * l - l) > 1e-10 || hermiticity_error(l) > 1e-10)
    throw std::invalid_argument("operator is not an orthogonal projector");
}

/// max over sampled t of max(|L H(t) L|, |L U^dagger(t) H(t) U(t) L|), in max-norm.
template <class HamiltonianFn, class PropagatorFn>
double check_parallel_transport(HamiltonianFn&& h, const Operator& l, PropagatorFn&& u,
                                const std::vector<double>& times) {
  require_projector(l);
  double worst = 0.0;
  for (double t : times) {
    const Operator ht = h(t);
    const Operator ut = u(t);
    worst = std::max(worst, max_abs(l * ht * l));
    worst = std::max(worst, max_abs(l * ut.adjoint() * ht * ut * l));
  }
  return worst;
}

/// max-norm of (I - P) U P for P the projector onto the logical states.
inline double check_cyclicity(const Operator& u_final, const std::vector<StateVector>& logical) {
  if (!hilbert::is_orthonormal(logical))
    throw std::invalid_argument("check_cyclicity: logical states are not orthonormal");
  const Operator p = hilbert::projector_onto(logical);
  const Operator q = Operator::Identity(p.rows(), p.cols()) - p;
  return max_abs(q * u_final * p);
}

}  // namespace nhqc::holonomy
