#pragma once

// Coupled-transmon device model: the static Hamiltonian, the driven
// interaction-picture Hamiltonian (exact and Jacobi-Anger truncated), and the
// resonant effective Hamiltonians obtained by keeping a single sideband.
//
// All Hamiltonians are returned in rad/ns.

#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "nhqc/bessel.hpp"
#include "nhqc/device.hpp"
#include "nhqc/hilbert.hpp"
#include "nhqc/linalg.hpp"

namespace nhqc::model {

enum class PhaseConvention {
  /// Level-k phase of a driven site is -k beta cos(2 pi nu t + phi) with the active
  /// segment's phase; no t=0 constant, and phase jumps act on the factor directly.
  Literal,
  /// Phase is the running integral of the modulation from t=0, continuous across segments.
  Integrated,
};

struct FrameOptions {
  PhaseConvention convention = PhaseConvention::Literal;
  /// Negative: exact phase factors. Otherwise Jacobi-Anger series truncated at |n| <= order.
  int jacobi_anger_order = -1;
};

inline void check_layout(const DeviceSpec& device, const hilbert::SubsystemLayout& layout) {
  device.validate();
  if (layout.size() != device.transmons.size())
    throw std::invalid_argument("layout has " + std::to_string(layout.size()) +
                                " sites but device has " +
                                std::to_string(device.transmons.size()) + " transmons");
  for (const auto& t : device.transmons) {
    if (!layout.contains(t.label))
      throw std::invalid_argument("layout lacks transmon '" + t.label + "'");
    if (layout.dim_of(t.label) != t.levels)
      throw std::invalid_argument("layout dimension for '" + t.label +
                                  "' differs from its level count");
  }
}

/// Energy of level k of a transmon, k omega - (k-1) alpha, in MHz.
inline double level_energy(const TransmonSpec& t, int k) {
  return k == 0 ? 0.0 : k * t.omega - (k - 1) * t.alpha;
}

/// Bare diagonal energies of every composite basis state, rad/ns.
inline Eigen::VectorXd bare_energies(const DeviceSpec& device,
                                     const hilbert::SubsystemLayout& layout) {
  const Eigen::Index n = layout.total_dim();
  Eigen::VectorXd e(n);
  std::vector<const TransmonSpec*> specs;
  for (const auto& label : layout.labels()) specs.push_back(&device.at(label));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto levels = layout.digits(i);
    double mhz = 0.0;
    for (std::size_t s = 0; s < levels.size(); ++s) mhz += level_energy(*specs[s], levels[s]);
    e[i] = angular(mhz);
  }
  return e;
}

/// One matrix element of the coupling term, with the level changes it causes.
struct CouplingElement {
  Eigen::Index row;
  Eigen::Index col;
  Complex value;  // rad/ns
  std::size_t site_a;
  int dlevel_a;  // level(row) - level(col) on site_a
  std::size_t site_b;
  int dlevel_b;
};

/// Matrix elements of g (sum_k sqrt(k) sigma^k)_a (sum_k sqrt(k) sigma^k)^dagger_b + H.c.
/// Only the upper triangle (row < col) is listed; the lower triangle is its conjugate.
inline std::vector<CouplingElement> coupling_elements(const DeviceSpec& device,
                                                      const hilbert::SubsystemLayout& layout) {
  std::vector<CouplingElement> out;
  const Eigen::Index n = layout.total_dim();
  for (const auto& c : device.couplings) {
    const std::size_t sa = layout.index_of(c.a);
    const std::size_t sb = layout.index_of(c.b);
    const Eigen::Index stride_a = layout.stride(sa);
    const Eigen::Index stride_b = layout.stride(sb);
    const double g = angular(c.g);
    for (Eigen::Index col = 0; col < n; ++col) {
      const auto lv = layout.digits(col);
      const int la = lv[sa];
      const int lb = lv[sb];
      // lower a, raise b: amplitude sqrt(la) sqrt(lb+1)
      if (la >= 1 && lb + 1 < layout.dims()[sb]) {
        const Eigen::Index row = col - stride_a + stride_b;
        const double amp = g * std::sqrt(static_cast<double>(la)) *
                           std::sqrt(static_cast<double>(lb + 1));
        if (row < col)
          out.push_back({row, col, amp, sa, -1, sb, +1});
        else
          out.push_back({col, row, amp, sa, +1, sb, -1});
      }
    }
  }
  return out;
}

inline Operator static_hamiltonian(const DeviceSpec& device,
                                   const hilbert::SubsystemLayout& layout) {
  check_layout(device, layout);
  const Eigen::VectorXd e = bare_energies(device, layout);
  Operator h = e.cast<Complex>().asDiagonal();
  for (const auto& el : coupling_elements(device, layout)) {
    h(el.row, el.col) += el.value;
    h(el.col, el.row) += std::conj(el.value);
  }
  return h;
}

/// Truncated Jacobi-Anger series for exp(-i b cos x).
inline Complex jacobi_anger_series(double b, double x, int order) {
  Complex sum{};
  static const Complex minus_i_pow[4] = {{1, 0}, {0, -1}, {-1, 0}, {0, 1}};
  for (int k = -order; k <= order; ++k) {
    const Complex pw = minus_i_pow[((k % 4) + 4) % 4];
    sum += pw * bessel_j_signed(k, b) * std::polar(1.0, -k * x);
  }
  return sum;
}

/// Interaction picture of the driven device with respect to its diagonal part.
///
/// Element (m, n) of the coupling acquires exp(i [theta_m(t) - theta_n(t)]), where
/// theta integrates the instantaneous diagonal energy including frequency modulation.
class InteractionFrame {
 public:
  InteractionFrame(const DeviceSpec& device, PulseSchedule schedule,
                   hilbert::SubsystemLayout layout, FrameOptions options = {})
      : schedule_(std::move(schedule)), layout_(std::move(layout)), options_(options) {
    check_layout(device, layout_);
    schedule_.validate();
    for (const auto& seg : schedule_.segments())
      for (const auto& tone : seg.tones)
        if (!layout_.contains(tone.target))
          throw std::invalid_argument("drive tone targets unknown transmon '" + tone.target + "'");
    energies_ = bare_energies(device, layout_);
    elements_ = coupling_elements(device, layout_);
    for (const auto& el : elements_) detuning_.push_back(energies_[el.row] - energies_[el.col]);
    // running modulation integral at each segment start (Integrated convention)
    const std::size_t ns = layout_.size();
    offsets_.assign(schedule_.segments().size(), std::vector<double>(ns, 0.0));
    std::vector<double> acc(ns, 0.0);
    for (std::size_t k = 0; k < schedule_.segments().size(); ++k) {
      const auto& seg = schedule_.segments()[k];
      offsets_[k] = acc;
      for (std::size_t s = 0; s < ns; ++s) {
        if (const auto* tone = seg.tone_for(layout_.labels()[s])) {
          acc[s] += -tone->beta() * (std::cos(tone_arg(*tone, seg.t_end)) -
                                     std::cos(tone_arg(*tone, seg.t_start)));
        }
      }
    }
  }

  const hilbert::SubsystemLayout& layout() const noexcept { return layout_; }
  const PulseSchedule& schedule() const noexcept { return schedule_; }
  const FrameOptions& options() const noexcept { return options_; }
  Eigen::Index dim() const noexcept { return layout_.total_dim(); }

  /// Modulation phase Phi_s(t) of each site: theta_n(t) = E_n t + sum_s level_s(n) Phi_s(t).
  std::vector<double> modulation_phases(double t) const {
    std::vector<double> phi(layout_.size(), 0.0);
    if (schedule_.empty()) return phi;
    const std::size_t k = schedule_.segment_index(t);
    const auto& seg = schedule_.segments()[k];
    for (std::size_t s = 0; s < layout_.size(); ++s) {
      const auto* tone = seg.tone_for(layout_.labels()[s]);
      if (options_.convention == PhaseConvention::Literal) {
        if (tone) phi[s] = -tone->beta() * std::cos(tone_arg(*tone, t));
      } else {
        phi[s] = offsets_[k][s];
        if (tone)
          phi[s] += -tone->beta() *
                    (std::cos(tone_arg(*tone, t)) - std::cos(tone_arg(*tone, seg.t_start)));
      }
    }
    return phi;
  }

  /// Frame phases theta_n(t); the lab-frame state is diag(exp(-i theta)) times the frame state.
  Eigen::VectorXd basis_phases(double t) const {
    const auto phi = modulation_phases(t);
    Eigen::VectorXd theta = energies_ * t;
    for (Eigen::Index i = 0; i < dim(); ++i) {
      const auto lv = layout_.digits(i);
      for (std::size_t s = 0; s < lv.size(); ++s) theta[i] += lv[s] * phi[s];
    }
    return theta;
  }

  SparseHamiltonian sparse(double t) const {
    SparseHamiltonian h;
    h.dim = dim();
    h.entries.reserve(2 * elements_.size());
    const auto factors = site_factors(t);
    for (std::size_t k = 0; k < elements_.size(); ++k) {
      const auto& el = elements_[k];
      const Complex f = std::polar(1.0, detuning_[k] * t) * factor(factors, el.site_a, el.dlevel_a) *
                        factor(factors, el.site_b, el.dlevel_b);
      const Complex v = el.value * f;
      h.entries.push_back({el.row, el.col, v});
      h.entries.push_back({el.col, el.row, std::conj(v)});
    }
    return h;
  }

  SparseHamiltonian operator()(double t) const { return sparse(t); }

  Operator dense(double t) const { return sparse(t).to_dense(); }

  /// Lab-frame Hamiltonian: modulated diagonal energies plus the static coupling.
  Operator lab_hamiltonian(double t) const {
    Operator h = Operator::Zero(dim(), dim());
    std::vector<double> shift(layout_.size(), 0.0);
    if (!schedule_.empty()) {
      const auto& seg = schedule_.segment_at(t);
      for (std::size_t s = 0; s < layout_.size(); ++s)
        if (const auto* tone = seg.tone_for(layout_.labels()[s]))
          shift[s] = angular(tone->eps) * std::sin(tone_arg(*tone, t));
    }
    for (Eigen::Index i = 0; i < dim(); ++i) {
      const auto lv = layout_.digits(i);
      double e = energies_[i];
      for (std::size_t s = 0; s < lv.size(); ++s) e += lv[s] * shift[s];
      h(i, i) = e;
    }
    for (const auto& el : elements_) {
      h(el.row, el.col) += el.value;
      h(el.col, el.row) += std::conj(el.value);
    }
    return h;
  }

 private:
  struct SiteFactor {
    Complex up{1.0};    // level change +1
    Complex down{1.0};  // level change -1
  };

  static double tone_arg(const DriveTone& tone, double t) { return angular(tone.nu) * t + tone.phi; }

  static Complex factor(const std::vector<SiteFactor>& f, std::size_t site, int dl) {
    return dl > 0 ? f[site].up : f[site].down;
  }

  std::vector<SiteFactor> site_factors(double t) const {
    std::vector<SiteFactor> f(layout_.size());
    if (schedule_.empty()) return f;
    if (options_.jacobi_anger_order < 0) {
      const auto phi = modulation_phases(t);
      for (std::size_t s = 0; s < f.size(); ++s) {
        f[s].up = std::polar(1.0, phi[s]);
        f[s].down = std::conj(f[s].up);
      }
      return f;
    }
    const std::size_t k = schedule_.segment_index(t);
    const auto& seg = schedule_.segments()[k];
    const int order = options_.jacobi_anger_order;
    for (std::size_t s = 0; s < f.size(); ++s) {
      const auto* tone = seg.tone_for(layout_.labels()[s]);
      Complex offset{1.0};
      if (options_.convention == PhaseConvention::Integrated) {
        double c = offsets_[k][s];
        if (tone) c += tone->beta() * std::cos(tone_arg(*tone, seg.t_start));
        offset = std::polar(1.0, c);
      }
      if (!tone) {
        f[s].up = offset;
        f[s].down = std::conj(offset);
        continue;
      }
      const double x = tone_arg(*tone, t);
      // exp(+i Phi) = exp(-i beta cos x), exp(-i Phi) = exp(-i (-beta) cos x)
      f[s].up = offset * jacobi_anger_series(tone->beta(), x, order);
      f[s].down = std::conj(offset) * jacobi_anger_series(-tone->beta(), x, order);
    }
    return f;
  }

  PulseSchedule schedule_;
  hilbert::SubsystemLayout layout_;
  FrameOptions options_;
  Eigen::VectorXd energies_;
  std::vector<CouplingElement> elements_;
  std::vector<double> detuning_;
  std::vector<std::vector<double>> offsets_;
};

inline Operator interaction_hamiltonian(const DeviceSpec& device, const PulseSchedule& schedule,
                                        double t, const hilbert::SubsystemLayout& layout,
                                        PhaseConvention convention = PhaseConvention::Literal) {
  return InteractionFrame(device, schedule, layout, {convention, -1}).dense(t);
}

inline Operator jacobi_anger_hamiltonian(const DeviceSpec& device, const PulseSchedule& schedule,
                                         double t, const hilbert::SubsystemLayout& layout,
                                         int n_max,
                                         PhaseConvention convention = PhaseConvention::Literal) {
  if (n_max < 0) throw std::invalid_argument("jacobi_anger_hamiltonian: n_max must be >= 0");
  return InteractionFrame(device, schedule, layout, {convention, n_max}).dense(t);
}

// ---------------------------------------------------------------------------
// Resonant effective Hamiltonians

enum class EffectiveConfig { SingleQubit, Cnot, ControlledPhase };

/// Transmon roles. SingleQubit: drives on q1 and q2, both coupled to aux.
/// Cnot: drives on q3 and q4, both coupled to q2. ControlledPhase: drive on q2, coupled to q4.
struct GateSites {
  std::string q1 = "T1";
  std::string q2 = "T2";
  std::string q3 = "T3";
  std::string q4 = "T4";
  std::string aux = "Ta";

  hilbert::EncodingSites encoding() const { return {q1, q2, q3, q4}; }

  friend bool operator==(const GateSites&, const GateSites&) = default;
};

inline constexpr double kResonanceToleranceMHz = 0.01;

/// Drive frequency (MHz) that makes the configuration's sideband resonant for `target`.
inline double resonant_drive_frequency(EffectiveConfig config, const DeviceSpec& device,
                                       const GateSites& sites, const std::string& target) {
  switch (config) {
    case EffectiveConfig::SingleQubit:
      return device.at(target).omega - device.at(sites.aux).omega;
    case EffectiveConfig::Cnot:
      return device.at(sites.q2).omega - device.at(target).omega - device.at(sites.q2).alpha;
    case EffectiveConfig::ControlledPhase:
      return device.at(sites.q2).omega - device.at(sites.q4).omega - device.at(sites.q2).alpha;
  }
  throw std::logic_error("unreachable");
}

/// Coefficient of the resonant sideband of one coupling element.
///
/// An element with bare coupling v, level change dl on the driven site and bare
/// detuning dE picks harmonic n = dE / nu from exp(-i dl beta cos x), giving
/// v (-i)^n J_n(dl beta) exp(-i n phi).
inline Complex sideband_coefficient(Complex v, int dl, double detuning_mhz, const DriveTone& tone) {
  if (!(tone.nu > 0.0)) throw std::invalid_argument("sideband requires nu > 0");
  const long n = std::lround(detuning_mhz / tone.nu);
  static const Complex minus_i_pow[4] = {{1, 0}, {0, -1}, {-1, 0}, {0, 1}};
  const Complex pw = minus_i_pow[((n % 4) + 4) % 4];
  return v * pw * bessel_j_signed(static_cast<int>(n), dl * tone.beta()) *
         std::polar(1.0, -static_cast<double>(n) * tone.phi);
}

namespace detail {

// Two-site transition |to_x to_y><from_x from_y| embedded with identity elsewhere.
inline Operator pair_transition(const hilbert::SubsystemLayout& layout, const std::string& x,
                                int to_x, int from_x, const std::string& y, int to_y, int from_y) {
  const std::size_t sx = layout.index_of(x);
  const std::size_t sy = layout.index_of(y);
  const Eigen::Index n = layout.total_dim();
  Operator m = Operator::Zero(n, n);
  for (Eigen::Index col = 0; col < n; ++col) {
    auto lv = layout.digits(col);
    if (lv[sx] != from_x || lv[sy] != from_y) continue;
    lv[sx] = to_x;
    lv[sy] = to_y;
    m(layout.index(lv), col) = 1.0;
  }
  return m;
}

inline const DriveTone& require_tone(const std::vector<DriveTone>& drives,
                                     const std::string& target) {
  for (const auto& t : drives)
    if (t.target == target) return t;
  throw std::invalid_argument("effective_hamiltonian: no drive tone on '" + target + "'");
}

inline void require_resonance(EffectiveConfig config, const DeviceSpec& device,
                              const GateSites& sites, const DriveTone& tone) {
  const double want = resonant_drive_frequency(config, device, sites, tone.target);
  if (std::abs(tone.nu - want) > kResonanceToleranceMHz)
    throw std::invalid_argument("tone on '" + tone.target + "' at nu=" + std::to_string(tone.nu) +
                                " MHz violates its resonance condition (needs " +
                                std::to_string(want) + " MHz)");
}

}  // namespace detail

/// Resonant single-sideband Hamiltonian for one gate configuration (rad/ns), as an operator
/// on the full layout. Support: SingleQubit acts on |10>_{l,aux} <-> |01>_{l,aux} for
/// l in {q1, q2}; Cnot on |11>_{q2,l} <-> |20>_{q2,l} for l in {q3, q4}; ControlledPhase on
/// |11>_{q2,q4} <-> |20>_{q2,q4}.
inline Operator effective_hamiltonian(EffectiveConfig config, const DeviceSpec& device,
                                      const std::vector<DriveTone>& drives,
                                      const hilbert::SubsystemLayout& layout,
                                      const GateSites& sites = {}) {
  check_layout(device, layout);
  const Eigen::Index n = layout.total_dim();
  Operator h = Operator::Zero(n, n);
  auto coupling_g = [&](const std::string& x, const std::string& y) {
    const auto* c = device.find_coupling(x, y);
    if (!c) throw std::invalid_argument("effective_hamiltonian: no coupling " + x + "-" + y);
    return angular(c->g);
  };
  auto add = [&](const Operator& term, Complex coeff) {
    h += coeff * term;
    h += std::conj(coeff) * term.adjoint();
  };

  switch (config) {
    case EffectiveConfig::SingleQubit: {
      for (const auto* l : {&sites.q1, &sites.q2}) {
        const auto& tone = detail::require_tone(drives, *l);
        detail::require_resonance(config, device, sites, tone);
        const double det = device.at(*l).omega - device.at(sites.aux).omega;
        const Complex c = sideband_coefficient(coupling_g(*l, sites.aux), +1, det, tone);
        add(detail::pair_transition(layout, *l, 1, 0, sites.aux, 0, 1), c);
      }
      break;
    }
    case EffectiveConfig::Cnot: {
      const auto& c2 = device.at(sites.q2);
      for (const auto* l : {&sites.q3, &sites.q4}) {
        const auto& tone = detail::require_tone(drives, *l);
        detail::require_resonance(config, device, sites, tone);
        // |11> -> energy omega2 + omega_l ; |20> -> 2 omega2 - alpha2
        const double det = (c2.omega + device.at(*l).omega) - (2.0 * c2.omega - c2.alpha);
        const Complex c =
            sideband_coefficient(std::sqrt(2.0) * coupling_g(sites.q2, *l), +1, det, tone);
        add(detail::pair_transition(layout, sites.q2, 1, 2, *l, 1, 0), c);
      }
      break;
    }
    case EffectiveConfig::ControlledPhase: {
      const auto& tone = detail::require_tone(drives, sites.q2);
      detail::require_resonance(config, device, sites, tone);
      const auto& c2 = device.at(sites.q2);
      const double det = (2.0 * c2.omega - c2.alpha) - (c2.omega + device.at(sites.q4).omega);
      const Complex c =
          sideband_coefficient(std::sqrt(2.0) * coupling_g(sites.q2, sites.q4), +1, det, tone);
      add(detail::pair_transition(layout, sites.q2, 2, 1, sites.q4, 0, 1), c);
      break;
    }
  }
  return h;
}

}  // namespace nhqc::model
