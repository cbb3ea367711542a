#include <gtest/gtest.h>

#include <random>
#include <unsupported/Eigen/MatrixFunctions>

#include "nhqc/holonomy.hpp"
#include "nhqc/serialization.hpp"

using namespace nhqc;
using namespace nhqc::holonomy;

namespace {

constexpr double kPi = std::numbers::pi;

model::DeviceSpec single_device() {
  model::DeviceSpec d;
  d.transmons = {{"T1", 5335.0, 220.0, 3, 0, 0}, {"T2", 5335.0, 180.0, 3, 0, 0},
                 {"Ta", 5000.0, 210.0, 3, 0, 0}};
  d.couplings = {{"T1", "Ta", 12.0}, {"T2", "Ta", 12.0}};
  return d;
}

model::DeviceSpec cnot_device() {
  model::DeviceSpec d;
  d.transmons = {{"T1", 5335.0, 220.0, 3, 0, 0}, {"T2", 5400.0, 180.0, 3, 0, 0},
                 {"T3", 5008.0, 220.0, 3, 0, 0}, {"T4", 4975.0, 200.0, 3, 0, 0}};
  d.couplings = {{"T2", "T3", 7.0}, {"T2", "T4", 7.0}};
  return d;
}

model::DeviceSpec cp_device() {
  model::DeviceSpec d;
  d.transmons = {{"T1", 5335.0, 220.0, 3, 0, 0}, {"T2", 5400.0, 180.0, 3, 0, 0},
                 {"T3", 5008.0, 220.0, 3, 0, 0}, {"T4", 4980.0, 200.0, 3, 0, 0}};
  d.couplings = {{"T2", "T4", 7.0}};
  return d;
}

model::DeviceSpec device_for(const GateRecipe& r) {
  if (r.is_single_qubit()) return single_device();
  if (std::holds_alternative<TwoQubitRot>(r.gate)) return cnot_device();
  return cp_device();
}

Operator expm_hermitian(const Operator& h, double t) {
  const Operator a = (-kI * t) * h;
  return a.exp();
}

// Logical restriction of the effective-Hamiltonian evolution over a synthesized schedule.
Operator effective_logical(const GateRecipe& r, double beta_ref = 1.2) {
  const auto d = device_for(r);
  const auto s = synth_schedule(r, d, beta_ref);
  const auto l = d.layout();
  const auto logical = hilbert::logical_basis(r.encoding(), l, r.sites.encoding());
  return restrict_to(effective_propagator(r, d, s, l, s.total_time()), logical);
}

}  // namespace

TEST(KMatrix, DecompositionReconstructsK) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-2 * kPi, 2 * kPi);
  for (int i = 0; i < 50; ++i) {
    const double th = u(rng), ph = u(rng);
    const auto d = decompose_K(th, ph);
    EXPECT_LT(max_abs(d.x * d.y * d.z.adjoint() - k_matrix(th, ph)), 1e-12);
    EXPECT_LT(unitarity_error(d.x), 1e-12);
    EXPECT_LT(unitarity_error(d.z), 1e-12);
    EXPECT_EQ(d.y * d.y, d.y);
  }
}

TEST(KMatrix, EntriesAtQuarterTurn) {
  const auto d = decompose_K(kPi / 2, 0.0);
  const Operator k = d.x * d.y * d.z.adjoint();
  const double r = std::sin(kPi / 4);
  EXPECT_NEAR(std::abs(k(1, 0) - r), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(k(2, 0) - r), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(k(3, 1) - r), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(k(3, 2) - r), 0.0, 1e-12);
  EXPECT_NEAR(k.cwiseAbs().sum(), 4 * r, 1e-12);
}

TEST(SingleLoop, IdentityAtZeroArea) {
  EXPECT_LT(max_abs(single_loop_propagator(0.7, 0.2, 1.1, 0.0) - Operator::Identity(8, 8)), 1e-15);
}

TEST(SingleLoop, BlockDiagonalAtAreaPi) {
  const Operator u = single_loop_propagator(1.3, -0.4, 2.2, kPi);
  EXPECT_LT(max_abs(u.topRightCorner(4, 4)), 1e-12);
  EXPECT_LT(max_abs(u.bottomLeftCorner(4, 4)), 1e-12);
  EXPECT_LT(unitarity_error(u), 1e-12);
}

TEST(SingleLoop, MatchesMatrixExponential) {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> ang(-kPi, kPi), area(0.0, 2 * kPi);
  for (int i = 0; i < 20; ++i) {
    const double th = ang(rng), ph = ang(rng), p1 = ang(rng), a = area(rng);
    EXPECT_LT(max_abs(single_loop_propagator(th, ph, p1, a) -
                      expm_hermitian(single_loop_hamiltonian(th, ph, p1), a)),
              1e-10);
  }
}

TEST(SingleLoop, TwoSegmentCompositionGivesHolonomy) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> ang(-kPi, kPi);
  for (int i = 0; i < 25; ++i) {
    const double th = ang(rng), phk = ang(rng), p1 = ang(rng), gamma = ang(rng);
    const Operator u = single_loop_propagator(th, phk, p1 + kPi + gamma, kPi / 2) *
                       single_loop_propagator(th, phk, p1, kPi / 2);
    // logical order [|0>_L, |1>_L] = ancilla-ground indices [2, 1]
    Operator r(2, 2);
    r << u(2, 2), u(2, 1), u(1, 2), u(1, 1);
    const Operator want = single_qubit_unitary(th, gamma, -phk).matrix;
    EXPECT_LT(max_abs(r - std::polar(1.0, -gamma / 2) * want), 1e-10);
    std::vector<StateVector> logical(2, StateVector::Zero(8));
    logical[0][2] = 1.0;
    logical[1][1] = 1.0;
    EXPECT_LT(check_cyclicity(u, logical), 1e-10);
  }
}

TEST(SingleLoop, HalfLoopIsNotCyclic) {
  std::vector<StateVector> logical(2, StateVector::Zero(8));
  logical[0][2] = 1.0;
  logical[1][1] = 1.0;
  EXPECT_GT(check_cyclicity(single_loop_propagator(1.0, 0.3, 0.0, kPi / 2), logical), 0.1);
  EXPECT_EQ(check_cyclicity(Operator::Identity(8, 8), logical), 0.0);
}

TEST(TargetGates, SingleQubitExamples) {
  Operator x(2, 2), h(2, 2);
  x << 0, 1, 1, 0;
  h << 1, 1, 1, -1;
  h /= std::sqrt(2.0);
  EXPECT_LT(max_abs(single_qubit_unitary(kPi / 2, kPi, 0).matrix - (-kI) * x), 1e-15);
  EXPECT_LT(max_abs(single_qubit_unitary(kPi / 4, kPi, 0).matrix - (-kI) * h), 1e-15);
  EXPECT_LT(max_abs(single_qubit_unitary(0.8, 0.0, 2.1).matrix - Operator::Identity(2, 2)), 1e-15);
}

TEST(TargetGates, SingleQubitEigenvalues) {
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> ang(-kPi, kPi);
  for (int i = 0; i < 20; ++i) {
    const double g = ang(rng);
    const Operator u = single_qubit_unitary(ang(rng), g, ang(rng)).matrix;
    EXPECT_LT(unitarity_error(u), 1e-12);
    Eigen::ComplexEigenSolver<Operator> es(u);
    const auto ev = es.eigenvalues();
    const Complex a = std::polar(1.0, g / 2), b = std::polar(1.0, -g / 2);
    EXPECT_LT(std::min(std::abs(ev[0] - a) + std::abs(ev[1] - b),
                       std::abs(ev[0] - b) + std::abs(ev[1] - a)),
              1e-10);
  }
}

TEST(TargetGates, TwoQubitExamples) {
  Operator cnot = Operator::Identity(4, 4);
  cnot(2, 2) = cnot(3, 3) = 0;
  cnot(2, 3) = cnot(3, 2) = 1;
  EXPECT_LT(max_abs(two_qubit_unitary(kPi / 2, 0).matrix - cnot), 1e-15);
  Operator z = Operator::Identity(4, 4);
  z(3, 3) = -1;
  EXPECT_LT(max_abs(two_qubit_unitary(0.0, 1.3).matrix - z), 1e-15);
  const Operator u = two_qubit_unitary(0.9, -2.0).matrix;
  EXPECT_LT(max_abs(u * u - Operator::Identity(4, 4)), 1e-12);
  EXPECT_EQ(u.topLeftCorner(2, 2), Operator::Identity(2, 2));
  EXPECT_EQ(max_abs(u.topRightCorner(2, 2)), 0.0);
}

TEST(TargetGates, ControlledPhaseExamples) {
  EXPECT_EQ(controlled_phase_unitary(0.0).matrix, Operator::Identity(4, 4));
  EXPECT_LT(std::abs(controlled_phase_unitary(kPi).matrix(3, 3) + 1.0), 1e-15);
  EXPECT_LT(std::abs(controlled_phase_unitary(kPi / 2).matrix(3, 3) - kI), 1e-15);
}

TEST(Synthesis, NotGateSchedule) {
  const GateRecipe r{SingleQubit{kPi / 2, kPi, 0.0}, {}};
  const auto s = synth_schedule(r, single_device(), 1.2);
  ASSERT_EQ(s.segments().size(), 2u);
  EXPECT_NEAR(s.total_time(), 59.1278939443, 1e-8);
  EXPECT_DOUBLE_EQ(s.segments()[0].t_end, s.total_time() / 2);
  for (const auto& seg : s.segments()) {
    EXPECT_NEAR(seg.tone_for("T1")->beta(), 1.2, 1e-14);
    EXPECT_NEAR(seg.tone_for("T2")->beta(), 1.2, 1e-14);
    EXPECT_NEAR(seg.tone_for("T1")->nu, 335.0, 1e-12);
  }
  // a jump of pi + pi leaves the wrapped phase unchanged
  const double jump = s.segments()[1].tone_for("T1")->phi - s.segments()[0].tone_for("T1")->phi;
  EXPECT_NEAR(std::remainder(jump - 2 * kPi, 2 * kPi), 0.0, 1e-12);
}

TEST(Synthesis, HadamardAmplitudeRatio) {
  const GateRecipe r{SingleQubit{kPi / 4, kPi, 0.0}, {}};
  const auto s = synth_schedule(r, single_device(), 1.2);
  const auto& seg = s.segments()[0];
  const double ratio = model::bessel_j(1, seg.tone_for("T2")->beta()) /
                       model::bessel_j(1, seg.tone_for("T1")->beta());
  EXPECT_NEAR(ratio, std::tan(kPi / 8), 1e-10);
  EXPECT_NEAR(ratio, 0.41421, 1e-5);
}

TEST(Synthesis, CnotScheduleFrequenciesAndPhases) {
  const GateRecipe r{TwoQubitRot{kPi / 2, 0.0}, {}};
  const auto s = synth_schedule(r, cnot_device(), 1.2);
  ASSERT_EQ(s.segments().size(), 1u);
  const auto& seg = s.segments()[0];
  EXPECT_NEAR(seg.tone_for("T3")->nu, 212.0, 1e-9);
  EXPECT_NEAR(seg.tone_for("T4")->nu, 245.0, 1e-9);
  EXPECT_NEAR(seg.tone_for("T3")->phi, kPi / 2, 1e-12);
  EXPECT_NEAR(seg.tone_for("T4")->phi, -kPi / 2, 1e-12);
}

TEST(Synthesis, ControlledPhaseJump) {
  const double xi = kPi / 2;
  GateRecipe r{ControlledPhase{xi}, {}};
  const auto s = synth_schedule(r, cp_device(), 1.2);
  ASSERT_EQ(s.segments().size(), 2u);
  const double jump = s.segments()[1].tone_for("T2")->phi - s.segments()[0].tone_for("T2")->phi;
  EXPECT_NEAR(std::remainder(jump - (kPi + xi), 2 * kPi), 0.0, 1e-12);
  EXPECT_NEAR(s.segments()[0].tone_for("T2")->nu, 5400.0 - 4980.0 - 180.0, 1e-9);
}

TEST(Synthesis, EffectiveEvolutionReproducesTargetGates) {
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> ang(-kPi, kPi);
  std::vector<GateRecipe> recipes{{SingleQubit{kPi / 2, kPi, 0.0}, {}},
                                  {SingleQubit{kPi / 4, kPi, 0.0}, {}},
                                  {TwoQubitRot{kPi / 2, 0.0}, {}},
                                  {ControlledPhase{kPi / 2}, {}}};
  for (int i = 0; i < 10; ++i) {
    recipes.push_back({SingleQubit{ang(rng), ang(rng), ang(rng)}, {}});
    recipes.push_back({TwoQubitRot{ang(rng), ang(rng)}, {}});
    recipes.push_back({ControlledPhase{ang(rng)}, {}});
  }
  for (const auto& r : recipes)
    EXPECT_LT(phase_insensitive_distance(effective_logical(r), target_gate(r).matrix), 1e-8)
        << r.kind();
}

TEST(Synthesis, HolonomyConditionsOnEffectiveHamiltonians) {
  const std::vector<GateRecipe> recipes{{SingleQubit{kPi / 4, kPi, 0.3}, {}},
                                        {TwoQubitRot{kPi / 2, 0.0}, {}},
                                        {ControlledPhase{kPi / 2}, {}}};
  for (const auto& r : recipes) {
    const auto d = device_for(r);
    const auto s = synth_schedule(r, d, 1.2);
    const auto l = d.layout();
    const auto logical = hilbert::logical_basis(r.encoding(), l, r.sites.encoding());
    const Operator p = hilbert::projector_onto(logical);
    auto h = [&](double t) {
      return model::effective_hamiltonian(r.effective_config(), d, s.segment_at(t).tones, l,
                                          r.sites);
    };
    auto u = [&](double t) { return effective_propagator(r, d, s, l, t); };
    std::vector<double> times;
    for (int k = 0; k <= 40; ++k)
      times.push_back(std::min(s.total_time() * k / 40.0, s.total_time()));
    EXPECT_LT(check_parallel_transport(h, p, u, times), 1e-10) << r.kind();
    EXPECT_LT(check_cyclicity(u(s.total_time()), logical), 1e-10) << r.kind();
  }
}

TEST(Synthesis, DetunedHamiltonianBreaksParallelTransport) {
  const GateRecipe r{SingleQubit{kPi / 2, kPi, 0.0}, {}};
  const auto d = single_device();
  const auto s = synth_schedule(r, d, 1.2);
  const auto l = d.layout();
  const auto logical = hilbert::logical_basis(r.encoding(), l);
  const double eps = 0.05;
  auto h = [&](double t) {
    Operator m = model::effective_hamiltonian(r.effective_config(), d, s.segment_at(t).tones, l);
    return Operator(m + eps * logical[0] * logical[0].adjoint());
  };
  auto u = [&](double t) { return unitary_propagator(h(0.0), t); };
  EXPECT_GE(check_parallel_transport(h, hilbert::projector_onto(logical), u, {0.0, 10.0}),
            eps / 2);
  EXPECT_THROW(check_parallel_transport(h, Operator::Identity(27, 27) * 2.0, u, {0.0}),
               std::invalid_argument);
}

TEST(Synthesis, ScheduleRoundTripsThroughJson) {
  const GateRecipe r{SingleQubit{0.77, 1.9, -0.4}, {}};
  const auto d = single_device();
  const auto s = synth_schedule(r, d, 1.37);
  const json j = json::parse(serialization::encode(d, s).dump());
  EXPECT_EQ(serialization::decode_schedule(j), s);
  EXPECT_EQ(serialization::decode_device(j), d);
  EXPECT_EQ(synth_schedule(r, d, 1.37), s);
  const json jr = json::parse(json(r).dump());
  EXPECT_EQ(jr.get<GateRecipe>(), r);
}

TEST(Synthesis, DescriptiveErrors) {
  const GateRecipe cnot{TwoQubitRot{kPi / 2, 0.0}, {}};
  EXPECT_THROW(synth_schedule(cnot, single_device(), 1.2), std::invalid_argument);
  auto d = single_device();
  d.couplings.pop_back();
  EXPECT_THROW(synth_schedule({SingleQubit{}, {}}, d, 1.2), std::invalid_argument);
  EXPECT_THROW(synth_schedule({SingleQubit{}, {}}, single_device(), 2.0), std::invalid_argument);
  EXPECT_THROW(synth_schedule({SingleQubit{}, {}}, single_device(), 0.0), std::invalid_argument);
}
