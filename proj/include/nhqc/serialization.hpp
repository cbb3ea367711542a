#pragma once

// JSON encoding of devices, schedules and gate recipes. Doubles are written in
// shortest round-trip form, so decode(encode(x)) == x exactly.

#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "nhqc/device.hpp"
#include "nhqc/holonomy.hpp"

namespace nhqc {

using json = nlohmann::json;

namespace model {

inline void to_json(json& j, const TransmonSpec& t) {
  j = json{{"label", t.label},         {"omega", t.omega},    {"alpha", t.alpha},
           {"levels", t.levels},       {"kappa_minus", t.kappa_minus},
           {"kappa_z", t.kappa_z}};
}

inline void from_json(const json& j, TransmonSpec& t) {
  TransmonSpec d;
  t.label = j.at("label").get<std::string>();
  t.omega = j.value("omega", d.omega);
  t.alpha = j.value("alpha", d.alpha);
  t.levels = j.value("levels", d.levels);
  t.kappa_minus = j.value("kappa_minus", d.kappa_minus);
  t.kappa_z = j.value("kappa_z", d.kappa_z);
}

inline void to_json(json& j, const Coupling& c) { j = json{{"a", c.a}, {"b", c.b}, {"g", c.g}}; }

inline void from_json(const json& j, Coupling& c) {
  c.a = j.at("a").get<std::string>();
  c.b = j.at("b").get<std::string>();
  c.g = j.at("g").get<double>();
}

inline void to_json(json& j, const DeviceSpec& d) {
  j = json{{"transmons", d.transmons}, {"couplings", d.couplings}};
}

inline void from_json(const json& j, DeviceSpec& d) {
  d.transmons = j.at("transmons").get<std::vector<TransmonSpec>>();
  d.couplings = j.value("couplings", std::vector<Coupling>{});
  d.validate();
}

inline void to_json(json& j, const DriveTone& t) {
  j = json{{"target", t.target}, {"eps", t.eps}, {"nu", t.nu}, {"phi", t.phi}};
}

inline void from_json(const json& j, DriveTone& t) {
  t.target = j.at("target").get<std::string>();
  t.eps = j.at("eps").get<double>();
  t.nu = j.at("nu").get<double>();
  t.phi = j.value("phi", 0.0);
}

inline void to_json(json& j, const Segment& s) {
  j = json{{"t_start", s.t_start}, {"t_end", s.t_end}, {"tones", s.tones}};
}

inline void from_json(const json& j, Segment& s) {
  s.t_start = j.at("t_start").get<double>();
  s.t_end = j.at("t_end").get<double>();
  s.tones = j.value("tones", std::vector<DriveTone>{});
}

inline void to_json(json& j, const PulseSchedule& p) { j = p.segments(); }

inline void from_json(const json& j, PulseSchedule& p) {
  p = PulseSchedule(j.get<std::vector<Segment>>());
}

inline void to_json(json& j, const GateSites& s) {
  j = json{{"q1", s.q1}, {"q2", s.q2}, {"q3", s.q3}, {"q4", s.q4}, {"aux", s.aux}};
}

inline void from_json(const json& j, GateSites& s) {
  GateSites d;
  s.q1 = j.value("q1", d.q1);
  s.q2 = j.value("q2", d.q2);
  s.q3 = j.value("q3", d.q3);
  s.q4 = j.value("q4", d.q4);
  s.aux = j.value("aux", d.aux);
}

}  // namespace model

namespace holonomy {

inline void to_json(json& j, const GateRecipe& r) {
  json params;
  if (const auto* g = std::get_if<SingleQubit>(&r.gate))
    params = {{"theta", g->theta}, {"gamma", g->gamma}, {"phi", g->phi}};
  else if (const auto* g = std::get_if<TwoQubitRot>(&r.gate))
    params = {{"vartheta", g->vartheta}, {"varphi", g->varphi}};
  else
    params = {{"xi", std::get<ControlledPhase>(r.gate).xi}};
  j = json{{"kind", r.kind()}, {"params", params}, {"sites", r.sites}};
}

inline void from_json(const json& j, GateRecipe& r) {
  const auto kind = j.at("kind").get<std::string>();
  const json params = j.value("params", json::object());
  if (kind == "single_qubit") {
    SingleQubit g;
    r.gate = SingleQubit{params.value("theta", g.theta), params.value("gamma", g.gamma),
                         params.value("phi", g.phi)};
  } else if (kind == "two_qubit_rot") {
    TwoQubitRot g;
    r.gate = TwoQubitRot{params.value("vartheta", g.vartheta), params.value("varphi", g.varphi)};
  } else if (kind == "controlled_phase") {
    r.gate = ControlledPhase{params.value("xi", ControlledPhase{}.xi)};
  } else {
    throw std::invalid_argument("unknown gate kind '" + kind +
                                "' (expected single_qubit, two_qubit_rot or controlled_phase)");
  }
  r.sites = j.value("sites", model::GateSites{});
}

}  // namespace holonomy

namespace serialization {

/// {"transmons": ..., "couplings": ..., "segments": ...}
inline json encode(const model::DeviceSpec& device, const model::PulseSchedule& schedule) {
  json j = device;
  j["segments"] = schedule;
  return j;
}

inline model::DeviceSpec decode_device(const json& j) { return j.get<model::DeviceSpec>(); }

inline model::PulseSchedule decode_schedule(const json& j) {
  return j.value("segments", json::array()).get<model::PulseSchedule>();
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("'" + path + "' is not valid JSON: " + e.what());
  }
}

inline void write_json_file(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("error while writing '" + path + "'");
}

}  // namespace serialization
}  // namespace nhqc
