#include "kerrsel/io.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

#include "kerrsel/units.hpp"

namespace kerrsel::io {

using nlohmann::json;

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

void write_dynamics_csv(std::ostream& os, const SimResult& result) {
  os << "# kerrsel-csv v1 dynamics\n";
  os << "time_us";
  for (const auto& k : result.tracked) os << ",pop_" << k.n1 << "_" << k.n2;
  if (!result.fidelity.empty()) os << ",fidelity";
  for (const auto& [name, series] : result.extra) os << "," << name;
  os << "\n";
  for (size_t i = 0; i < result.times.size(); ++i) {
    os << format_double(result.times[i]);
    for (Eigen::Index c = 0; c < result.populations.cols(); ++c) {
      os << "," << format_double(result.populations(Eigen::Index(i), c));
    }
    if (!result.fidelity.empty()) os << "," << format_double(result.fidelity[i]);
    for (const auto& [name, series] : result.extra) {
      os << "," << format_double(series[i]);
    }
    os << "\n";
  }
}

void write_degeneracy_csv(std::ostream& os, const DegeneracyMap& map) {
  os << "# kerrsel-csv v1 spectrum-map\n";
  os << "n_prime,m_prime,delta_rel_MHz,rabi_MHz,ratio\n";
  for (const auto& c : map.cells) {
    const double ratio = c.rabi > 0.0 ? std::abs(c.delta_rel) / c.rabi
                                      : std::numeric_limits<double>::infinity();
    os << c.n_prime << "," << c.m_prime << "," << format_double(to_mhz(c.delta_rel)) << ","
       << format_double(to_mhz(c.rabi)) << "," << format_double(ratio) << "\n";
  }
}

void write_wigner_csv(std::ostream& os, const WignerGrid& grid) {
  os << "# kerrsel-csv v1 wigner\n";
  os << "re_alpha,im_alpha,w\n";
  for (Eigen::Index i = 0; i < grid.im_axis.size(); ++i) {
    for (Eigen::Index j = 0; j < grid.re_axis.size(); ++j) {
      os << format_double(grid.re_axis(j)) << "," << format_double(grid.im_axis(i)) << ","
         << format_double(grid.w(i, j)) << "\n";
    }
  }
}

namespace {

std::string kind_name(StepKind kind) {
  switch (kind) {
    case StepKind::BS: return "BS";
    case StepKind::TMS: return "TMS";
    case StepKind::ResetAncilla: return "RESET_ANCILLA";
    case StepKind::Wait: return "WAIT";
  }
  throw std::logic_error("unknown step kind");
}

StepKind kind_from_name(const std::string& name) {
  if (name == "BS") return StepKind::BS;
  if (name == "TMS") return StepKind::TMS;
  if (name == "RESET_ANCILLA") return StepKind::ResetAncilla;
  if (name == "WAIT") return StepKind::Wait;
  throw std::domain_error("protocol json: unknown step kind '" + name + "'");
}

json ket_to_json(const KetLabel& k) { return json::array({k.n1, k.n2}); }

KetLabel ket_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2) throw std::domain_error("protocol json: ket must be [n1, n2]");
  return {j[0].get<int>(), j[1].get<int>()};
}

constexpr double pi_val = 3.14159265358979323846;

}  // namespace

std::string protocol_to_json(const ProtocolSpec& spec, int indent) {
  json j;
  j["name"] = spec.name;
  j["initial"] = ket_to_json(spec.initial);
  j["steps"] = json::array();
  for (const auto& s : spec.steps) {
    json js;
    js["kind"] = kind_name(s.kind);
    if (s.is_pulse()) {
      js["n0"] = s.target.n0;
      js["m0"] = s.target.m0;
      js["angle_over_pi"] = s.angle / pi_val;
      js["phase_over_pi"] = s.phase / pi_val;
      if (s.drive_frequency) {
        js["drive_frequency_mhz"] = to_mhz(*s.drive_frequency);
      } else {
        js["drive_frequency_mhz"] = "auto";
      }
      if (s.ramp) {
        js["ramp_us"] = *s.ramp;
      } else {
        js["ramp_us"] = "auto";
      }
    }
    if (s.kind != StepKind::ResetAncilla) {
      if (s.duration) {
        js["duration_us"] = *s.duration;
      } else {
        js["duration_us"] = "auto";
      }
    }
    j["steps"].push_back(js);
  }
  j["target"] = json::array();
  for (const auto& ta : spec.target) {
    j["target"].push_back({{"ket", ket_to_json(ta.ket)},
                           {"amp", json::array({ta.amp.real(), ta.amp.imag()})}});
  }
  if (!spec.track_extra.empty()) {
    j["track"] = json::array();
    for (const auto& k : spec.track_extra) j["track"].push_back(ket_to_json(k));
  }
  return j.dump(indent);
}

ProtocolSpec protocol_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::domain_error(std::string("protocol json: ") + e.what());
  }
  ProtocolSpec spec;
  spec.name = j.value("name", "custom");
  spec.initial = ket_from_json(j.at("initial"));
  for (const auto& js : j.at("steps")) {
    PulseStep s;
    s.kind = kind_from_name(js.at("kind").get<std::string>());
    if (s.is_pulse()) {
      s.target.kind = (s.kind == StepKind::BS) ? TransitionKind::BS : TransitionKind::TMS;
      s.target.n0 = js.at("n0").get<int>();
      s.target.m0 = js.at("m0").get<int>();
      s.angle = js.at("angle_over_pi").get<double>() * pi_val;
      s.phase = js.value("phase_over_pi", 0.0) * pi_val;
      if (js.contains("drive_frequency_mhz") && !js["drive_frequency_mhz"].is_string()) {
        s.drive_frequency = from_mhz(js["drive_frequency_mhz"].get<double>());
      }
      if (js.contains("ramp_us") && !js["ramp_us"].is_string()) {
        s.ramp = js["ramp_us"].get<double>();
      }
    }
    if (js.contains("duration_us") && !js["duration_us"].is_string()) {
      s.duration = js["duration_us"].get<double>();
    }
    if (s.kind == StepKind::Wait && !s.duration) {
      throw std::domain_error("protocol json: WAIT step needs duration_us");
    }
    spec.steps.push_back(s);
  }
  for (const auto& jt : j.at("target")) {
    const auto& amp = jt.at("amp");
    spec.target.push_back(
        {ket_from_json(jt.at("ket")), Complex(amp[0].get<double>(), amp[1].get<double>())});
  }
  if (j.contains("track")) {
    for (const auto& jk : j["track"]) spec.track_extra.push_back(ket_from_json(jk));
  }
  return spec;
}

namespace {

json budget_json(const std::vector<BudgetEntry>& budget) {
  json arr = json::array();
  for (const auto& e : budget) {
    json row;
    row["effect"] = e.effect;
    row["scaling"] = e.scaling;
    row["magnus_order"] = e.magnus_order;
    if (e.is_probability) {
      row["magnitude_mhz"] = nullptr;
      row["probability"] = e.magnitude;
    } else {
      row["magnitude_mhz"] = to_mhz(e.magnitude);
      row["probability"] = nullptr;
    }
    arr.push_back(row);
  }
  return arr;
}

}  // namespace

std::string budget_to_json(const std::vector<BudgetEntry>& budget, int indent) {
  return budget_json(budget).dump(indent);
}

std::string effective_report_to_json(const EffectiveReport& report, int indent) {
  json j;
  j["target"] = report.target.str();
  j["rabi_mhz"] = to_mhz(report.rabi);
  j["compensated_frequency_mhz"] = to_mhz(report.compensated_detuning);
  j["leakage_estimate"] = report.leakage_estimate;
  j["stark_shifts"] = json::array();
  for (const auto& [ket, shift] : report.stark_shifts) {
    j["stark_shifts"].push_back({{"ket", ket_to_json(ket)}, {"shift_mhz", to_mhz(shift)}});
  }
  j["budget"] = budget_json(report.budget);
  return j.dump(indent);
}

std::string selectivity_summary_json(const SystemParams& params, const DegeneracyMap& map,
                                     const SelectivityReport& margin,
                                     const std::vector<RationalWitness>& witnesses,
                                     int indent) {
  json j;
  j["target"] = map.target.str();
  j["window"] = {{"dn", map.window.dn}, {"dm", map.window.dm}};
  j["min_offtarget_abs_delta_mhz"] = to_mhz(map.min_offtarget_abs_delta());
  const double zero_tol = 1e-9 * std::max(std::abs(params.k1), std::abs(params.k2));
  j["exact_zeros"] = json::array();
  for (const auto& z : map.exact_zero_offsets(zero_tol)) {
    j["exact_zeros"].push_back(json::array({z[0], z[1]}));
  }
  int crowded = 0;
  for (const auto& c : map.cells) crowded += c.crowded ? 1 : 0;
  j["crowded_cells"] = crowded;
  j["worst_ratio"] = std::isinf(margin.min_ratio) ? json(nullptr) : json(margin.min_ratio);
  j["worst_transition"] = margin.argmin.str();
  j["tms_frame_flagged"] = margin.tms_frame_flagged;
  j["notes"] = margin.notes;
  j["kerr_ratio"] = params.k2 != 0.0 ? json(params.k1 / params.k2) : json(nullptr);
  j["rational_witnesses"] = json::array();
  for (const auto& w : witnesses) {
    j["rational_witnesses"].push_back({{"p", w.p},
                                       {"q", w.q},
                                       {"error", w.error},
                                       {"first_degeneracy", json::array({w.q, w.p})}});
  }
  return j.dump(indent);
}

}  // namespace kerrsel::io
