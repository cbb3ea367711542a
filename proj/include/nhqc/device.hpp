#pragma once

// Device description and drive schedules. Frequencies and rates are ordinary
// frequencies in MHz, times in ns, phases in radians.

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nhqc/hilbert.hpp"

namespace nhqc::model {

struct TransmonSpec {
  std::string label;
  double omega = 5000.0;
  double alpha = 200.0;
  int levels = 3;
  double kappa_minus = 0.0;
  double kappa_z = 0.0;

  friend bool operator==(const TransmonSpec&, const TransmonSpec&) = default;
};

struct Coupling {
  std::string a;
  std::string b;
  double g = 0.0;

  friend bool operator==(const Coupling&, const Coupling&) = default;
};

struct DeviceSpec {
  std::vector<TransmonSpec> transmons;
  std::vector<Coupling> couplings;

  const TransmonSpec* find(const std::string& label) const {
    for (const auto& t : transmons)
      if (t.label == label) return &t;
    return nullptr;
  }

  TransmonSpec& at(const std::string& label) {
    for (auto& t : transmons)
      if (t.label == label) return t;
    throw std::invalid_argument("device has no transmon '" + label + "'");
  }

  const TransmonSpec& at(const std::string& label) const {
    if (const auto* t = find(label)) return *t;
    throw std::invalid_argument("device has no transmon '" + label + "'");
  }

  const Coupling* find_coupling(const std::string& x, const std::string& y) const {
    for (const auto& c : couplings)
      if ((c.a == x && c.b == y) || (c.a == y && c.b == x)) return &c;
    return nullptr;
  }

  Coupling& coupling(const std::string& x, const std::string& y) {
    for (auto& c : couplings)
      if ((c.a == x && c.b == y) || (c.a == y && c.b == x)) return c;
    throw std::invalid_argument("device has no coupling " + x + "-" + y);
  }

  /// Sets kappa_minus = kappa_z = rate on every transmon.
  void set_uniform_decoherence(double rate_mhz) {
    for (auto& t : transmons) t.kappa_minus = t.kappa_z = rate_mhz;
  }

  bool decoherence_free() const {
    return std::all_of(transmons.begin(), transmons.end(),
                       [](const auto& t) { return t.kappa_minus == 0.0 && t.kappa_z == 0.0; });
  }

  void validate() const {
    for (std::size_t i = 0; i < transmons.size(); ++i) {
      const auto& t = transmons[i];
      if (t.label.empty()) throw std::invalid_argument("transmon with empty label");
      if (!(t.omega > 0.0)) throw std::invalid_argument("transmon '" + t.label + "': omega <= 0");
      if (!(t.alpha > 0.0)) throw std::invalid_argument("transmon '" + t.label + "': alpha <= 0");
      if (t.levels < 2) throw std::invalid_argument("transmon '" + t.label + "': levels < 2");
      if (t.kappa_minus < 0.0 || t.kappa_z < 0.0)
        throw std::invalid_argument("transmon '" + t.label + "': negative decoherence rate");
      for (std::size_t j = 0; j < i; ++j)
        if (transmons[j].label == t.label)
          throw std::invalid_argument("duplicate transmon label '" + t.label + "'");
    }
    for (std::size_t i = 0; i < couplings.size(); ++i) {
      const auto& c = couplings[i];
      if (c.a == c.b) throw std::invalid_argument("coupling of '" + c.a + "' to itself");
      if (!find(c.a) || !find(c.b))
        throw std::invalid_argument("coupling " + c.a + "-" + c.b + " names an unknown transmon");
      if (c.g < 0.0) throw std::invalid_argument("coupling " + c.a + "-" + c.b + ": g < 0");
      for (std::size_t j = 0; j < i; ++j) {
        const auto& o = couplings[j];
        if ((o.a == c.a && o.b == c.b) || (o.a == c.b && o.b == c.a))
          throw std::invalid_argument("duplicate coupling " + c.a + "-" + c.b);
      }
    }
  }

  /// Layout over every declared transmon in declaration order.
  hilbert::SubsystemLayout layout() const {
    std::vector<std::string> labels;
    std::vector<int> dims;
    for (const auto& t : transmons) {
      labels.push_back(t.label);
      dims.push_back(t.levels);
    }
    return {labels, dims};
  }

  friend bool operator==(const DeviceSpec&, const DeviceSpec&) = default;
};

/// Frequency modulation omega(t) = omega + eps sin(2 pi nu t + phi) on one transmon.
struct DriveTone {
  std::string target;
  double eps = 0.0;
  double nu = 0.0;
  double phi = 0.0;

  double beta() const { return eps == 0.0 ? 0.0 : eps / nu; }

  friend bool operator==(const DriveTone&, const DriveTone&) = default;
};

struct Segment {
  double t_start = 0.0;
  double t_end = 0.0;
  std::vector<DriveTone> tones;

  const DriveTone* tone_for(const std::string& label) const {
    for (const auto& t : tones)
      if (t.target == label) return &t;
    return nullptr;
  }

  friend bool operator==(const Segment&, const Segment&) = default;
};

class PulseSchedule {
 public:
  PulseSchedule() = default;
  explicit PulseSchedule(std::vector<Segment> segments) : segments_(std::move(segments)) {
    validate();
  }

  const std::vector<Segment>& segments() const noexcept { return segments_; }
  bool empty() const noexcept { return segments_.empty(); }
  double total_time() const noexcept { return segments_.empty() ? 0.0 : segments_.back().t_end; }

  /// Segment boundaries including 0 and total_time.
  std::vector<double> breakpoints() const {
    std::vector<double> out;
    if (segments_.empty()) return out;
    out.push_back(segments_.front().t_start);
    for (const auto& s : segments_) out.push_back(s.t_end);
    return out;
  }

  /// Index of the segment active at t; segments are half-open except the last.
  std::size_t segment_index(double t) const {
    if (segments_.empty()) throw std::invalid_argument("empty schedule has no segments");
    if (t < segments_.front().t_start || t > total_time())
      throw std::invalid_argument("time " + std::to_string(t) + " ns outside schedule [0, " +
                                  std::to_string(total_time()) + "]");
    auto it = std::upper_bound(segments_.begin(), segments_.end(), t,
                               [](double x, const Segment& s) { return x < s.t_end; });
    if (it == segments_.end()) return segments_.size() - 1;
    return static_cast<std::size_t>(it - segments_.begin());
  }

  const Segment& segment_at(double t) const { return segments_[segment_index(t)]; }

  void validate() const {
    double expected = 0.0;
    for (std::size_t i = 0; i < segments_.size(); ++i) {
      const auto& s = segments_[i];
      if (std::abs(s.t_start - expected) > 1e-9 * std::max(1.0, expected))
        throw std::invalid_argument("schedule segments must be contiguous from t=0 (segment " +
                                    std::to_string(i) + ")");
      if (!(s.t_end > s.t_start))
        throw std::invalid_argument("schedule segment " + std::to_string(i) + " has no duration");
      for (std::size_t a = 0; a < s.tones.size(); ++a) {
        const auto& tone = s.tones[a];
        if (tone.eps != 0.0 && !(tone.nu > 0.0))
          throw std::invalid_argument("tone on '" + tone.target + "' has eps != 0 but nu <= 0");
        if (!std::isfinite(tone.beta()) || !std::isfinite(tone.phi))
          throw std::invalid_argument("tone on '" + tone.target + "' has non-finite parameters");
        for (std::size_t b = 0; b < a; ++b)
          if (s.tones[b].target == tone.target)
            throw std::invalid_argument("segment " + std::to_string(i) +
                                        " has two tones on '" + tone.target + "'");
      }
      expected = s.t_end;
    }
  }

  friend bool operator==(const PulseSchedule&, const PulseSchedule&) = default;

 private:
  std::vector<Segment> segments_;
};

}  // namespace nhqc::model
