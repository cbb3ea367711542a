#pragma once

// Reproduction harness: preset configurations, beta calibration, concurrent
// sweeps and CSV / SVG output.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "nhqc/dynamics.hpp"
#include "nhqc/holonomy.hpp"
#include "nhqc/metrics.hpp"
#include "nhqc/model.hpp"
#include "nhqc/serialization.hpp"

namespace nhqc::experiments {

using std::numbers::pi;

enum class InitialState { None, Logical0, Bell };

struct GateCase {
  std::string label;
  model::DeviceSpec device;
  holonomy::GateRecipe gate;
  InitialState initial = InitialState::None;
};

/// One sweep axis. `count` values evenly spaced over [min, max]; count == 1 gives the center.
struct SweepAxis {
  std::string path;
  double min = 0.0;
  double max = 0.0;
  int count = 1;

  std::vector<double> values() const {
    if (count < 1) throw std::invalid_argument("sweep axis '" + path + "' needs count >= 1");
    if (count == 1) return {0.5 * (min + max)};
    std::vector<double> v(count);
    for (int i = 0; i < count; ++i) v[i] = min + (max - min) * i / (count - 1);
    return v;
  }
};

struct MetricsRequest {
  bool gate_fidelity = true;
  bool dynamics = false;
  int n_states = 1001;
  int grid_2q = 101;
  int dynamics_samples = 400;
};

struct ExperimentConfig {
  std::string name;
  std::vector<GateCase> cases;
  std::vector<SweepAxis> sweep;
  dynamics::IntegratorConfig integrator;
  MetricsRequest metrics;
  std::optional<double> beta_ref;  // empty: calibrate per case
  model::PhaseConvention convention = model::PhaseConvention::Literal;
  /// Adds an idle, uncoupled auxiliary transmon to two-qubit cases (off: it never
  /// interacts, so leaving it out only saves a factor 3 in dimension).
  bool include_idle_aux = false;

  void validate() const;
};

struct ResultRow {
  std::string case_label;
  std::vector<double> coords;
  std::optional<double> gate_fidelity;
  std::optional<double> state_fidelity;
  std::optional<double> leakage;
  double beta_ref = 0.0;
  double wall_time = 0.0;
  bool failed = false;
  std::string error;
};

struct DynamicsTrace {
  std::string case_label;
  std::vector<double> coords;
  std::vector<std::string> names;
  std::vector<double> times;
  std::vector<std::vector<double>> series;  // series[k][sample]
};

struct RunResult {
  std::vector<ResultRow> rows;
  std::vector<DynamicsTrace> traces;
  std::vector<double> calibrated_beta;  // per case

  bool any_failed() const {
    return std::any_of(rows.begin(), rows.end(), [](const auto& r) { return r.failed; });
  }
};

// ---------------------------------------------------------------------------
// Parameter paths

namespace detail {

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline std::pair<std::string, std::string> split_pair(const std::string& s,
                                                      const std::string& path) {
  const auto p = s.find('-');
  if (p == std::string::npos || p == 0 || p + 1 == s.size())
    throw std::invalid_argument("sweep path '" + path + "': expected <A>-<B>");
  return {s.substr(0, p), s.substr(p + 1)};
}

}  // namespace detail

/// Applies one sweep coordinate to a case. Paths:
///   transmons.<L>.<omega|alpha|kappa_minus|kappa_z>   (MHz)
///   couplings.<A>-<B>.g                               (MHz)
///   detuning.<M>:<A>-<B>   sets omega_A - omega_B = value by moving transmon M
///   kappa                  uniform kappa_minus = kappa_z, value in kHz
///   gate.<param>           theta, gamma, phi, vartheta, varphi or xi
///   beta_ref               modulation depth of the reference arm
inline void apply_path(GateCase& c, double& beta_ref, const std::string& path, double value) {
  auto bad = [&](const std::string& why) {
    return std::invalid_argument("sweep path '" + path + "': " + why);
  };
  if (path == "beta_ref") {
    beta_ref = value;
    return;
  }
  if (path == "kappa") {
    if (value < 0.0) throw bad("negative decoherence rate");
    c.device.set_uniform_decoherence(value * 1e-3);
    return;
  }
  const auto dot = path.find('.');
  if (dot == std::string::npos) throw bad("unknown parameter");
  const std::string head = path.substr(0, dot);
  const std::string rest = path.substr(dot + 1);
  if (head == "transmons") {
    const auto parts = detail::split(rest, '.');
    if (parts.size() != 2) throw bad("expected transmons.<label>.<field>");
    auto& t = c.device.at(parts[0]);
    if (parts[1] == "omega")
      t.omega = value;
    else if (parts[1] == "alpha")
      t.alpha = value;
    else if (parts[1] == "kappa_minus")
      t.kappa_minus = value;
    else if (parts[1] == "kappa_z")
      t.kappa_z = value;
    else
      throw bad("unknown transmon field '" + parts[1] + "'");
    return;
  }
  if (head == "couplings") {
    const auto parts = detail::split(rest, '.');
    if (parts.size() != 2 || parts[1] != "g") throw bad("expected couplings.<A>-<B>.g");
    const auto [a, b] = detail::split_pair(parts[0], path);
    c.device.coupling(a, b).g = value;
    return;
  }
  if (head == "detuning") {
    const auto colon = rest.find(':');
    if (colon == std::string::npos) throw bad("expected detuning.<moved>:<A>-<B>");
    const std::string moved = rest.substr(0, colon);
    const auto [a, b] = detail::split_pair(rest.substr(colon + 1), path);
    if (moved == a)
      c.device.at(a).omega = c.device.at(b).omega + value;
    else if (moved == b)
      c.device.at(b).omega = c.device.at(a).omega - value;
    else
      throw bad("moved transmon must be one of the pair");
    return;
  }
  if (head == "gate") {
    auto set = [&](double& field) { field = value; };
    bool done = false;
    std::visit(
        [&](auto& g) {
          using T = std::decay_t<decltype(g)>;
          if constexpr (std::is_same_v<T, holonomy::SingleQubit>) {
            if (rest == "theta") set(g.theta), done = true;
            if (rest == "gamma") set(g.gamma), done = true;
            if (rest == "phi") set(g.phi), done = true;
          } else if constexpr (std::is_same_v<T, holonomy::TwoQubitRot>) {
            if (rest == "vartheta") set(g.vartheta), done = true;
            if (rest == "varphi") set(g.varphi), done = true;
          } else {
            if (rest == "xi") set(g.xi), done = true;
          }
        },
        c.gate.gate);
    if (!done) throw bad("gate " + c.gate.kind() + " has no parameter '" + rest + "'");
    return;
  }
  throw bad("unknown parameter group '" + head + "'");
}

inline void ExperimentConfig::validate() const {
  if (cases.empty()) throw std::invalid_argument("experiment has no gate cases");
  integrator.validate();
  if (metrics.n_states < 2 || metrics.grid_2q < 2)
    throw std::invalid_argument("fidelity grids need at least 2 points");
  if (metrics.dynamics_samples < 2)
    throw std::invalid_argument("dynamics needs at least 2 samples");
  for (const auto& c : cases) {
    c.device.validate();
    if (c.initial == InitialState::Bell && c.gate.is_single_qubit())
      throw std::invalid_argument("case '" + c.label + "': Bell input needs a two-qubit gate");
    for (const auto& ax : sweep) {
      if (ax.count < 1)
        throw std::invalid_argument("sweep axis '" + ax.path + "' needs count >= 1");
      GateCase probe = c;
      double b = 1.0;
      apply_path(probe, b, ax.path, ax.min);
    }
  }
  if (beta_ref && (!(*beta_ref > 0.0) || *beta_ref > model::kBesselJ1Peak))
    throw std::invalid_argument("beta_ref must lie in (0, 1.8412]");
}

// ---------------------------------------------------------------------------
// Per-point pipeline

/// Case with the idle auxiliary added when requested and the sweep coordinates applied.
inline GateCase resolve_case(const ExperimentConfig& cfg, const GateCase& base,
                             const std::vector<double>& coords, double& beta_ref) {
  GateCase c = base;
  const auto& aux = c.gate.sites.aux;
  if (cfg.include_idle_aux && !c.gate.is_single_qubit() && !c.device.find(aux)) {
    const auto& ref = c.device.at(c.gate.sites.q2);
    c.device.transmons.push_back({aux, 5000.0, 210.0, 3, ref.kappa_minus, ref.kappa_z});
  }
  for (std::size_t k = 0; k < cfg.sweep.size() && k < coords.size(); ++k)
    apply_path(c, beta_ref, cfg.sweep[k].path, coords[k]);
  return c;
}

/// Logical input state for a case, as coefficients over the logical basis.
inline Eigen::VectorXcd initial_logical(const GateCase& c) {
  const int d = c.gate.is_single_qubit() ? 2 : 4;
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(d);
  if (c.initial == InitialState::Bell) {
    v[0] = v[3] = 1.0 / std::sqrt(2.0);
  } else {
    v[0] = 1.0;
  }
  return v;
}

struct PointSetup {
  model::PulseSchedule schedule;
  hilbert::SubsystemLayout layout;
  std::vector<StateVector> logical;
  Eigen::MatrixXcd basis;  // logical states as columns
};

inline PointSetup setup_point(const GateCase& c, double beta_ref) {
  PointSetup s{holonomy::synth_schedule(c.gate, c.device, beta_ref), c.device.layout(), {}, {}};
  s.logical = hilbert::logical_basis(c.gate.encoding(), s.layout, c.gate.sites.encoding());
  s.basis.resize(s.layout.total_dim(), static_cast<Eigen::Index>(s.logical.size()));
  for (std::size_t i = 0; i < s.logical.size(); ++i) s.basis.col(i) = s.logical[i];
  return s;
}

/// Logical channel of the full simulation: unitary fast path without decoherence,
/// Lindblad channel reconstruction otherwise.
inline dynamics::LogicalChannel simulate_channel(const GateCase& c, const PointSetup& s,
                                                 const ExperimentConfig& cfg, unsigned threads) {
  const model::InteractionFrame frame(c.device, s.schedule, s.layout, {cfg.convention, -1});
  const double tau = s.schedule.total_time();
  const auto bps = s.schedule.breakpoints();
  if (c.device.decoherence_free()) {
    const auto res = dynamics::propagate_states(frame, s.basis, 0.0, tau, cfg.integrator, bps);
    return dynamics::LogicalChannel::from_operator(s.basis.adjoint() * res.final);
  }
  const dynamics::Dissipator diss(dynamics::collapse_operators(c.device, s.layout),
                                  s.layout.total_dim());
  return dynamics::reconstruct_channel(
      [&](const DensityMatrix& rho) {
        return dynamics::propagate_operator(frame, rho, diss, 0.0, tau, cfg.integrator, bps).final;
      },
      s.logical, threads);
}

inline double channel_gate_fidelity(const GateCase& c, const dynamics::LogicalChannel& ch,
                                    const MetricsRequest& m) {
  const auto target = holonomy::target_gate(c.gate);
  return c.gate.is_single_qubit() ? metrics::gate_fidelity_1q(ch, target, m.n_states)
                                  : metrics::gate_fidelity_2q(ch, target, m.grid_2q);
}

/// Time-resolved run from the case's initial state with `samples` equally spaced samples.
inline DynamicsTrace simulate_dynamics(const GateCase& c, const PointSetup& s,
                                       const ExperimentConfig& cfg, int samples) {
  const model::InteractionFrame frame(c.device, s.schedule, s.layout, {cfg.convention, -1});
  const dynamics::Dissipator diss(dynamics::collapse_operators(c.device, s.layout),
                                  s.layout.total_dim());
  const double tau = s.schedule.total_time();
  const auto bps = s.schedule.breakpoints();
  const Eigen::VectorXcd in = initial_logical(c);
  const StateVector psi0 = s.basis * in;
  const StateVector target = s.basis * (holonomy::target_gate(c.gate).matrix * in);
  const Operator proj = hilbert::projector_onto(s.logical);

  DynamicsTrace tr;
  tr.case_label = c.label;
  const bool one_q = c.gate.is_single_qubit();
  const std::vector<std::string> lnames =
      one_q ? std::vector<std::string>{"P_0L", "P_1L"}
            : std::vector<std::string>{"P_00L", "P_01L", "P_10L", "P_11L"};
  tr.names = lnames;
  std::vector<Eigen::Index> aux_excited;
  if (one_q) {
    tr.names.push_back("aux_excited");
    const auto site = s.layout.index_of(c.gate.sites.aux);
    for (Eigen::Index i = 0; i < s.layout.total_dim(); ++i)
      if (s.layout.digits(i)[site] > 0) aux_excited.push_back(i);
  }
  tr.names.push_back("leakage");
  tr.names.push_back("state_fidelity");
  tr.series.assign(tr.names.size(), {});

  auto record = [&](double t, const DensityMatrix& rho) {
    tr.times.push_back(t);
    std::size_t k = 0;
    for (const auto& l : s.logical) tr.series[k++].push_back(metrics::state_fidelity(rho, l));
    if (one_q) {
      double p = 0.0;
      for (auto i : aux_excited) p += rho(i, i).real();
      tr.series[k++].push_back(std::clamp(p, 0.0, 1.0));
    }
    tr.series[k++].push_back(metrics::leakage(rho, proj));
    tr.series[k++].push_back(metrics::state_fidelity(rho, target));
  };

  DensityMatrix rho = hilbert::pure_density(psi0);
  record(0.0, rho);
  for (int i = 1; i < samples; ++i) {
    const double a = tau * (i - 1) / (samples - 1);
    const double b = i + 1 == samples ? tau : tau * i / (samples - 1);
    rho = dynamics::propagate_operator(frame, rho, diss, a, b, cfg.integrator, bps).final;
    record(b, rho);
  }
  return tr;
}

// ---------------------------------------------------------------------------
// Calibration

inline constexpr double kCalibrationMin = 0.4;
inline constexpr double kCalibrationMax = 1.8;
inline constexpr int kCalibrationPoints = 13;

/// Decoherence-free gate fidelity of a case at a given reference modulation depth.
inline double coherent_fidelity(const GateCase& c, double beta_ref, const ExperimentConfig& cfg) {
  GateCase clean = c;
  clean.device.set_uniform_decoherence(0.0);
  const auto s = setup_point(clean, beta_ref);
  return channel_gate_fidelity(clean, simulate_channel(clean, s, cfg, 1), cfg.metrics);
}

/// Scans beta_ref over [0.4, 1.8] in 13 points and refines the best bracket by
/// golden-section search, maximizing the decoherence-free gate fidelity. A flat objective
/// (spread below 1e-12) returns the midpoint of the scan range.
template <class Objective>
double maximize_beta(Objective&& f) {
  std::vector<double> xs(kCalibrationPoints), fs(kCalibrationPoints);
  for (int i = 0; i < kCalibrationPoints; ++i) {
    xs[i] = kCalibrationMin + (kCalibrationMax - kCalibrationMin) * i / (kCalibrationPoints - 1);
    fs[i] = f(xs[i]);
  }
  const auto [lo_it, hi_it] = std::minmax_element(fs.begin(), fs.end());
  if (*hi_it - *lo_it < 1e-12) return 0.5 * (kCalibrationMin + kCalibrationMax);
  const auto best = static_cast<int>(hi_it - fs.begin());
  double a = xs[std::max(0, best - 1)];
  double b = xs[std::min(kCalibrationPoints - 1, best + 1)];
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - r * (b - a), x2 = a + r * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > 1e-3) {
    if (f1 >= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - r * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + r * (b - a);
      f2 = f(x2);
    }
  }
  double x_best = xs[best], f_best = fs[best];
  if (f1 > f_best) x_best = x1, f_best = f1;
  if (f2 > f_best) x_best = x2, f_best = f2;
  return x_best;
}

/// Calibrated beta_ref for one case of the config, evaluated at the sweep center.
inline double calibrate_beta(const ExperimentConfig& cfg, std::size_t case_index = 0) {
  std::vector<double> center;
  for (const auto& ax : cfg.sweep) center.push_back(0.5 * (ax.min + ax.max));
  double unused = 1.0;
  const GateCase c = resolve_case(cfg, cfg.cases.at(case_index), center, unused);
  return maximize_beta([&](double b) { return coherent_fidelity(c, b, cfg); });
}

// ---------------------------------------------------------------------------
// Sweeps

inline std::vector<std::vector<double>> sweep_points(const std::vector<SweepAxis>& sweep) {
  std::vector<std::vector<double>> pts{{}};
  for (const auto& ax : sweep) {
    std::vector<std::vector<double>> next;
    for (const auto& p : pts)
      for (double v : ax.values()) {
        auto q = p;
        q.push_back(v);
        next.push_back(std::move(q));
      }
    pts = std::move(next);
  }
  return pts;
}

struct PointOutput {
  ResultRow row;
  std::optional<DynamicsTrace> trace;
};

inline PointOutput evaluate_point(const ExperimentConfig& cfg, const GateCase& base,
                                  const std::vector<double>& coords, double beta_ref,
                                  unsigned threads) {
  PointOutput out;
  auto& row = out.row;
  row.case_label = base.label;
  row.coords = coords;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    double beta = beta_ref;
    const GateCase c = resolve_case(cfg, base, coords, beta);
    row.beta_ref = beta;
    const auto s = setup_point(c, beta);
    if (cfg.metrics.gate_fidelity) {
      const auto ch = simulate_channel(c, s, cfg, threads);
      row.gate_fidelity = channel_gate_fidelity(c, ch, cfg.metrics);
      const int d = ch.dim;
      const Eigen::MatrixXcd mixed = Eigen::MatrixXcd::Identity(d, d) / double(d);
      row.leakage = std::max(0.0, 1.0 - ch.apply(mixed).trace().real());
      if (c.initial != InitialState::None) {
        const Eigen::VectorXcd in = initial_logical(c);
        const Eigen::VectorXcd tgt = holonomy::target_gate(c.gate).matrix * in;
        const Eigen::MatrixXcd r = ch.apply(in * in.adjoint());
        row.state_fidelity = std::clamp(tgt.dot(r * tgt).real(), 0.0, 1.0);
      }
    }
    if (cfg.metrics.dynamics && c.initial != InitialState::None) {
      auto tr = simulate_dynamics(c, s, cfg, cfg.metrics.dynamics_samples);
      tr.coords = coords;
      if (!row.state_fidelity) row.state_fidelity = tr.series.back().back();
      if (!row.leakage) row.leakage = tr.series[tr.series.size() - 2].back();
      out.trace = std::move(tr);
    }
    for (const auto* v : {&row.gate_fidelity, &row.state_fidelity, &row.leakage})
      if (*v && !std::isfinite(**v)) throw std::runtime_error("non-finite observable");
  } catch (const std::exception& e) {
    row.failed = true;
    row.error = e.what();
    row.gate_fidelity.reset();
    row.state_fidelity.reset();
    row.leakage.reset();
    out.trace.reset();
  }
  row.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

/// Runs every case over the sweep grid on `threads` workers. Rows come out case-major, then
/// row-major over the sweep axes, independent of the worker count.
inline RunResult run(const ExperimentConfig& cfg, unsigned threads = 1) {
  cfg.validate();
  threads = std::max(1u, threads);
  RunResult result;
  for (std::size_t i = 0; i < cfg.cases.size(); ++i)
    result.calibrated_beta.push_back(cfg.beta_ref ? *cfg.beta_ref : calibrate_beta(cfg, i));

  struct Item {
    std::size_t case_index;
    std::vector<double> coords;
  };
  std::vector<Item> items;
  const auto pts = sweep_points(cfg.sweep);
  for (std::size_t i = 0; i < cfg.cases.size(); ++i)
    for (const auto& p : pts) items.push_back({i, p});

  std::vector<PointOutput> outputs(items.size());
  const unsigned workers = std::min<unsigned>(threads, static_cast<unsigned>(items.size()));
  const unsigned inner = std::max(1u, threads / std::max(1u, workers));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t k = next++; k < items.size(); k = next++) {
      const auto& it = items[k];
      outputs[k] = evaluate_point(cfg, cfg.cases[it.case_index], it.coords,
                                  result.calibrated_beta[it.case_index], inner);
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (auto& o : outputs) {
    result.rows.push_back(std::move(o.row));
    if (o.trace) result.traces.push_back(std::move(*o.trace));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Presets

inline constexpr double kDefaultKappaMHz = 0.004;

inline model::DeviceSpec single_qubit_device(double delta1 = 335.0, double delta2 = 335.0,
                                             double kappa = kDefaultKappaMHz) {
  model::DeviceSpec d;
  d.transmons = {{"T1", 5000.0 + delta1, 220.0, 3, kappa, kappa},
                 {"T2", 5000.0 + delta2, 180.0, 3, kappa, kappa},
                 {"Ta", 5000.0, 210.0, 3, kappa, kappa}};
  d.couplings = {{"T1", "Ta", 12.0}, {"T2", "Ta", 12.0}};
  return d;
}

/// T1 is an uncoupled spectator; its frequency does not enter the dynamics.
inline model::DeviceSpec cnot_device(double delta3 = 392.0, double delta4 = 425.0,
                                     double kappa = kDefaultKappaMHz) {
  model::DeviceSpec d;
  d.transmons = {{"T1", 5335.0, 220.0, 3, kappa, kappa},
                 {"T2", 5400.0, 180.0, 3, kappa, kappa},
                 {"T3", 5400.0 - delta3, 220.0, 3, kappa, kappa},
                 {"T4", 5400.0 - delta4, 200.0, 3, kappa, kappa}};
  d.couplings = {{"T2", "T3", 7.0}, {"T2", "T4", 7.0}};
  return d;
}

inline model::DeviceSpec controlled_phase_device(double delta4 = 420.0,
                                                 double kappa = kDefaultKappaMHz) {
  model::DeviceSpec d;
  d.transmons = {{"T1", 5335.0, 220.0, 3, kappa, kappa},
                 {"T2", 5400.0, 180.0, 3, kappa, kappa},
                 {"T3p", 5400.0 - 392.0, 220.0, 3, kappa, kappa},
                 {"T4p", 5400.0 - delta4, 200.0, 3, kappa, kappa}};
  d.couplings = {{"T2", "T4p", 7.0}};
  return d;
}

inline GateCase not_case() {
  return {"NOT", single_qubit_device(), {holonomy::SingleQubit{pi / 2, pi, 0.0}, {}},
          InitialState::None};
}

inline GateCase hadamard_case() {
  return {"Hadamard", single_qubit_device(), {holonomy::SingleQubit{pi / 4, pi, 0.0}, {}},
          InitialState::None};
}

inline GateCase cnot_case() {
  return {"CNOT", cnot_device(), {holonomy::TwoQubitRot{pi / 2, 0.0}, {}}, InitialState::None};
}

inline GateCase controlled_phase_case(double xi = pi / 2) {
  model::GateSites sites;
  sites.q3 = "T3p";
  sites.q4 = "T4p";
  return {"CP", controlled_phase_device(), {holonomy::ControlledPhase{xi}, sites},
          InitialState::None};
}

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"fig2a", "fig2b", "fig2cd", "fig3a",
                                              "fig3b", "fig3c", "fig4"};
  return names;
}

inline ExperimentConfig preset(const std::string& name, int grid = 21) {
  ExperimentConfig cfg;
  cfg.name = name;
  const SweepAxis d1{"detuning.T1:T1-Ta", 333.0, 337.0, grid};
  const SweepAxis d2{"detuning.T2:T2-Ta", 333.0, 337.0, grid};
  if (name == "fig2a") {
    cfg.cases = {not_case()};
    cfg.sweep = {d1, d2};
  } else if (name == "fig2b") {
    cfg.cases = {hadamard_case()};
    cfg.sweep = {d1, d2};
  } else if (name == "fig2cd") {
    cfg.cases = {not_case(), hadamard_case()};
    for (auto& c : cfg.cases) c.initial = InitialState::Logical0;
    cfg.metrics.dynamics = true;
  } else if (name == "fig3a") {
    cfg.cases = {cnot_case()};
    cfg.sweep = {{"detuning.T3:T2-T3", 390.0, 394.0, grid},
                 {"detuning.T4:T2-T4", 423.0, 427.0, grid}};
  } else if (name == "fig3b") {
    cfg.cases = {cnot_case()};
    cfg.cases[0].initial = InitialState::Bell;
    cfg.metrics.gate_fidelity = false;
    cfg.metrics.dynamics = true;
  } else if (name == "fig3c") {
    cfg.cases = {controlled_phase_case()};
    cfg.cases[0].initial = InitialState::Bell;
    cfg.metrics.dynamics = true;
  } else if (name == "fig4") {
    cfg.cases = {not_case(), hadamard_case(), cnot_case(), controlled_phase_case()};
    cfg.sweep = {{"kappa", 0.0, 8.0, 9}};
  } else {
    std::string list;
    for (const auto& n : preset_names()) list += (list.empty() ? "" : ", ") + n;
    throw std::invalid_argument("unknown preset '" + name + "'; available: " + list);
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// Config JSON

inline json config_to_json(const ExperimentConfig& cfg) {
  json cases = json::array();
  for (const auto& c : cfg.cases) {
    json jc{{"label", c.label}, {"device", c.device}, {"gate", c.gate}};
    if (c.initial == InitialState::Logical0) jc["initial_state"] = "logical0";
    if (c.initial == InitialState::Bell) jc["initial_state"] = "bell";
    cases.push_back(jc);
  }
  json sweep = json::array();
  for (const auto& ax : cfg.sweep)
    sweep.push_back({{"path", ax.path}, {"min", ax.min}, {"max", ax.max}, {"count", ax.count}});
  const auto& in = cfg.integrator;
  return json{
      {"name", cfg.name},
      {"cases", cases},
      {"sweep", sweep},
      {"integrator",
       {{"method", in.method == dynamics::Method::Rk4 ? "rk4" : "dopri5"},
        {"dt", in.dt},
        {"rel_tol", in.rel_tol},
        {"abs_tol", in.abs_tol}}},
      {"metrics",
       {{"gate_fidelity", cfg.metrics.gate_fidelity},
        {"dynamics", cfg.metrics.dynamics},
        {"n_states", cfg.metrics.n_states},
        {"grid_2q", cfg.metrics.grid_2q},
        {"dynamics_samples", cfg.metrics.dynamics_samples}}},
      {"beta_ref", cfg.beta_ref ? json(*cfg.beta_ref) : json("auto")},
      {"phase_convention",
       cfg.convention == model::PhaseConvention::Literal ? "literal" : "integrated"},
      {"include_idle_aux", cfg.include_idle_aux}};
}

inline ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig cfg;
  cfg.name = j.value("name", std::string("custom"));
  auto parse_case = [](const json& jc, const std::string& fallback) {
    GateCase c;
    c.label = jc.value("label", fallback);
    c.device = jc.at("device").get<model::DeviceSpec>();
    c.gate = jc.at("gate").get<holonomy::GateRecipe>();
    const auto init = jc.value("initial_state", std::string("none"));
    if (init == "logical0")
      c.initial = InitialState::Logical0;
    else if (init == "bell")
      c.initial = InitialState::Bell;
    else if (init != "none")
      throw std::invalid_argument("unknown initial_state '" + init + "' (none, logical0, bell)");
    return c;
  };
  if (j.contains("cases")) {
    for (std::size_t i = 0; i < j["cases"].size(); ++i)
      cfg.cases.push_back(parse_case(j["cases"][i], "case" + std::to_string(i)));
  } else {
    cfg.cases.push_back(parse_case(j, "gate"));
  }
  for (const auto& ax : j.value("sweep", json::array()))
    cfg.sweep.push_back({ax.at("path").get<std::string>(), ax.at("min").get<double>(),
                         ax.at("max").get<double>(), ax.value("count", 1)});
  if (j.contains("integrator")) {
    const auto& ji = j["integrator"];
    const auto method = ji.value("method", std::string("rk4"));
    if (method == "rk4")
      cfg.integrator.method = dynamics::Method::Rk4;
    else if (method == "dopri5")
      cfg.integrator.method = dynamics::Method::DormandPrince;
    else
      throw std::invalid_argument("unknown integrator method '" + method + "' (rk4, dopri5)");
    cfg.integrator.dt = ji.value("dt", cfg.integrator.dt);
    cfg.integrator.rel_tol = ji.value("rel_tol", cfg.integrator.rel_tol);
    cfg.integrator.abs_tol = ji.value("abs_tol", cfg.integrator.abs_tol);
  }
  if (j.contains("metrics")) {
    const auto& jm = j["metrics"];
    cfg.metrics.gate_fidelity = jm.value("gate_fidelity", cfg.metrics.gate_fidelity);
    cfg.metrics.dynamics = jm.value("dynamics", cfg.metrics.dynamics);
    cfg.metrics.n_states = jm.value("n_states", cfg.metrics.n_states);
    cfg.metrics.grid_2q = jm.value("grid_2q", cfg.metrics.grid_2q);
    cfg.metrics.dynamics_samples = jm.value("dynamics_samples", cfg.metrics.dynamics_samples);
  }
  if (j.contains("beta_ref")) {
    const auto& b = j["beta_ref"];
    if (b.is_string()) {
      if (b.get<std::string>() != "auto")
        throw std::invalid_argument("beta_ref must be a number or \"auto\"");
    } else {
      cfg.beta_ref = b.get<double>();
    }
  }
  cfg.include_idle_aux = j.value("include_idle_aux", false);
  const auto conv = j.value("phase_convention", std::string("literal"));
  if (conv == "integrated")
    cfg.convention = model::PhaseConvention::Integrated;
  else if (conv != "literal")
    throw std::invalid_argument("unknown phase_convention '" + conv + "'");
  cfg.validate();
  return cfg;
}

// ---------------------------------------------------------------------------
// Output

inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline std::string format_optional(const std::optional<double>& v, bool failed) {
  if (failed) return "nan";
  return v ? format_number(*v) : std::string();
}

/// `# nhqc-sim v1`, then a header and one line per row. A leading `gate` column appears
/// when rows span several cases. Failed points print `nan`; absent observables are empty.
inline std::string csv_string(const RunResult& res, const ExperimentConfig& cfg) {
  if (res.rows.empty()) throw std::invalid_argument("no rows to emit");
  std::ostringstream out;
  const bool multi = cfg.cases.size() > 1;
  out << "# nhqc-sim v1\n";
  if (multi) out << "gate,";
  for (const auto& ax : cfg.sweep) out << ax.path << ',';
  out << "gate_fidelity,state_fidelity,leakage\n";
  for (const auto& r : res.rows) {
    if (multi) out << r.case_label << ',';
    for (double c : r.coords) out << format_number(c) << ',';
    out << format_optional(r.gate_fidelity, r.failed) << ','
        << format_optional(r.state_fidelity, r.failed) << ','
        << format_optional(r.leakage, r.failed) << '\n';
  }
  return out.str();
}

inline void write_text(const std::string& text, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + path + "'");
  f << text;
  if (!f) throw std::runtime_error("error while writing '" + path + "'");
}

inline void emit_csv(const RunResult& res, const ExperimentConfig& cfg, const std::string& path) {
  write_text(csv_string(res, cfg), path);
}

inline std::string dynamics_csv_string(const std::vector<DynamicsTrace>& traces) {
  if (traces.empty()) throw std::invalid_argument("no dynamics traces to emit");
  std::ostringstream out;
  out << "# nhqc-sim v1\n";
  // union of series names in first-seen order
  std::vector<std::string> names;
  for (const auto& tr : traces)
    for (const auto& n : tr.names)
      if (std::find(names.begin(), names.end(), n) == names.end()) names.push_back(n);
  out << "gate,t_ns";
  for (const auto& n : names) out << ',' << n;
  out << '\n';
  for (const auto& tr : traces) {
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
      out << tr.case_label << ',' << format_number(tr.times[i]);
      for (const auto& n : names) {
        out << ',';
        const auto it = std::find(tr.names.begin(), tr.names.end(), n);
        if (it != tr.names.end()) out << format_number(tr.series[it - tr.names.begin()][i]);
      }
      out << '\n';
    }
  }
  return out.str();
}

inline void emit_dynamics_csv(const std::vector<DynamicsTrace>& traces, const std::string& path) {
  write_text(dynamics_csv_string(traces), path);
}

/// Heatmap of gate fidelity (state fidelity when no gate fidelity was computed).
/// Two sweep axes: rows follow the first axis, columns the second. Otherwise rows are
/// cases and columns the points of the single (or empty) sweep.
inline std::string heatmap_svg_string(const RunResult& res, const ExperimentConfig& cfg) {
  if (res.rows.empty()) throw std::invalid_argument("no rows to render");
  const bool use_gate = std::any_of(res.rows.begin(), res.rows.end(),
                                    [](const auto& r) { return r.gate_fidelity.has_value(); });
  auto value = [&](const ResultRow& r) {
    const auto& v = use_gate ? r.gate_fidelity : r.state_fidelity;
    return v ? *v : std::numeric_limits<double>::quiet_NaN();
  };
  std::size_t nrows, ncols;
  std::string xlabel, ylabel;
  if (cfg.sweep.size() == 2 && cfg.cases.size() == 1) {
    nrows = static_cast<std::size_t>(cfg.sweep[0].count);
    ncols = static_cast<std::size_t>(cfg.sweep[1].count);
    ylabel = cfg.sweep[0].path;
    xlabel = cfg.sweep[1].path;
  } else {
    nrows = cfg.cases.size();
    ncols = res.rows.size() / nrows;
    ylabel = "gate";
    xlabel = cfg.sweep.empty() ? "" : cfg.sweep[0].path;
  }
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& r : res.rows) {
    const double v = value(r);
    if (std::isfinite(v)) lo = std::min(lo, v), hi = std::max(hi, v);
  }
  if (!std::isfinite(lo)) lo = hi = 0.0;

  const double cell = std::max(8.0, 420.0 / std::max(nrows, ncols));
  const double left = 90, top = 40;
  const double width = left + cell * ncols + 120, height = top + cell * nrows + 60;
  std::ostringstream svg;
  auto color = [&](double v) {
    if (!std::isfinite(v)) return std::string("#808080");
    const double x = hi > lo ? (v - lo) / (hi - lo) : 0.5;
    // linear blend from dark blue to yellow
    const int r = static_cast<int>(std::lround(30 + x * (250 - 30)));
    const int g = static_cast<int>(std::lround(30 + x * (230 - 30)));
    const int b = static_cast<int>(std::lround(120 + x * (40 - 120)));
    char buf[16];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
    return std::string(buf);
  };
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg << "<text x=\"" << left << "\" y=\"20\">" << cfg.name << ": "
      << (use_gate ? "gate_fidelity" : "state_fidelity") << "</text>\n";
  for (std::size_t i = 0; i < nrows; ++i)
    for (std::size_t j = 0; j < ncols && i * ncols + j < res.rows.size(); ++j) {
      // first axis increases upwards
      const double y = top + cell * (nrows - 1 - i);
      svg << "<rect x=\"" << left + cell * j << "\" y=\"" << y << "\" width=\"" << cell
          << "\" height=\"" << cell << "\" fill=\"" << color(value(res.rows[i * ncols + j]))
          << "\"/>\n";
    }
  if (ylabel == "gate")
    for (std::size_t i = 0; i < nrows; ++i)
      svg << "<text x=\"4\" y=\"" << top + cell * (nrows - 1 - i) + cell / 2 + 4 << "\">"
          << cfg.cases[i].label << "</text>\n";
  else
    svg << "<text x=\"4\" y=\"" << top + cell * nrows / 2 << "\">" << ylabel << "</text>\n";
  svg << "<text x=\"" << left << "\" y=\"" << top + cell * nrows + 20 << "\">" << xlabel
      << "</text>\n";
  const double lx = left + cell * ncols + 20;
  svg << "<rect x=\"" << lx << "\" y=\"" << top << "\" width=\"16\" height=\"16\" fill=\""
      << color(hi) << "\"/>\n<text x=\"" << lx + 22 << "\" y=\"" << top + 12 << "\">max "
      << format_number(hi) << "</text>\n";
  svg << "<rect x=\"" << lx << "\" y=\"" << top + 24 << "\" width=\"16\" height=\"16\" fill=\""
      << color(lo) << "\"/>\n<text x=\"" << lx + 22 << "\" y=\"" << top + 36 << "\">min "
      << format_number(lo) << "</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

inline void emit_heatmap_svg(const RunResult& res, const ExperimentConfig& cfg,
                             const std::string& path) {
  write_text(heatmap_svg_string(res, cfg), path);
}

}  // namespace nhqc::experiments
