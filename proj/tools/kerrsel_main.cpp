// kerrsel: selective quantum control in two coupled Kerr-nonlinear
// oscillators. Subcommands: spectrum-map, run, sweep, magnus-report,
// stabilize. All file outputs are deterministic CSV/JSON; frequencies enter
// in MHz (decay rates in kHz) and are converted at this boundary.

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "kerrsel/io.hpp"
#include "kerrsel/units.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace kerrsel;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitDegeneracy = 3;
constexpr int kExitConvergence = 4;

struct RunConfig {
  // MHz / kHz denominated at this layer
  double k1_mhz = 300.0;
  double k2_mhz = 300.0 / std::sqrt(2.0);
  double k12_mhz = 0.0;
  double j_mhz = 20.0;
  double g_mhz = 20.0;
  double omega1_mhz = 0.0;
  double omega2_mhz = 0.0;
  std::vector<int> truncation;  // empty: protocol default
  double kappa1_khz = 0.0;
  double kappa2_khz = 0.0;
  double nth1 = 0.0;
  double nth2 = 0.0;
  std::string protocol = "noon";
  int m = 4;
  std::string out = "out";
  double rtol = 0.0;
  long long seed = 0;  // reserved: all runs are deterministic
  // sweep axes
  std::vector<double> sweep_kappa_khz;
  std::vector<double> sweep_nth;
  std::vector<double> sweep_kerr_scale;
  std::vector<int> sweep_m;

  SystemParams params() const {
    SystemParams p;
    p.omega1 = from_mhz(omega1_mhz);
    p.omega2 = from_mhz(omega2_mhz);
    p.k1 = from_mhz(k1_mhz);
    p.k2 = from_mhz(k2_mhz);
    p.k12 = from_mhz(k12_mhz);
    p.j = from_mhz(j_mhz);
    p.g = from_mhz(g_mhz);
    p.validate();
    return p;
  }
  NoiseParams noise() const {
    NoiseParams n;
    n.kappa1 = from_khz(kappa1_khz);
    n.kappa2 = from_khz(kappa2_khz);
    n.nth1 = nth1;
    n.nth2 = nth2;
    n.validate();
    return n;
  }
};

void load_config_json(const std::string& path, RunConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw std::domain_error("cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::domain_error(std::string("config parse error: ") + e.what());
  }
  if (j.contains("params")) {
    const auto& p = j["params"];
    cfg.k1_mhz = p.value("k1_mhz", cfg.k1_mhz);
    cfg.k2_mhz = p.value("k2_mhz", cfg.k2_mhz);
    cfg.k12_mhz = p.value("k12_mhz", cfg.k12_mhz);
    cfg.j_mhz = p.value("j_mhz", cfg.j_mhz);
    cfg.g_mhz = p.value("g_mhz", cfg.g_mhz);
    cfg.omega1_mhz = p.value("omega1_mhz", cfg.omega1_mhz);
    cfg.omega2_mhz = p.value("omega2_mhz", cfg.omega2_mhz);
  }
  if (j.contains("truncation")) cfg.truncation = j["truncation"].get<std::vector<int>>();
  if (j.contains("noise")) {
    const auto& n = j["noise"];
    cfg.kappa1_khz = n.value("kappa1_khz", cfg.kappa1_khz);
    cfg.kappa2_khz = n.value("kappa2_khz", cfg.kappa2_khz);
    cfg.nth1 = n.value("nth1", cfg.nth1);
    cfg.nth2 = n.value("nth2", cfg.nth2);
  }
  cfg.protocol = j.value("protocol", cfg.protocol);
  cfg.m = j.value("m", cfg.m);
  cfg.out = j.value("out", cfg.out);
  cfg.rtol = j.value("rtol", cfg.rtol);
  cfg.seed = j.value("seed", cfg.seed);
  if (j.contains("sweep")) {
    const auto& s = j["sweep"];
    if (s.contains("kappa_khz")) cfg.sweep_kappa_khz = s["kappa_khz"].get<std::vector<double>>();
    if (s.contains("nth")) cfg.sweep_nth = s["nth"].get<std::vector<double>>();
    if (s.contains("kerr_scale"))
      cfg.sweep_kerr_scale = s["kerr_scale"].get<std::vector<double>>();
    if (s.contains("m")) cfg.sweep_m = s["m"].get<std::vector<int>>();
  }
}

Transition parse_transition(const std::string& text) {
  const auto colon = text.find(':');
  const auto comma = text.find(',');
  if (colon == std::string::npos || comma == std::string::npos || comma < colon) {
    throw std::domain_error("transition must look like bs:1,1 or tms:0,0");
  }
  std::string kind = text.substr(0, colon);
  for (auto& c : kind) c = char(std::tolower(c));
  Transition tr;
  if (kind == "bs") {
    tr.kind = TransitionKind::BS;
  } else if (kind == "tms") {
    tr.kind = TransitionKind::TMS;
  } else {
    throw std::domain_error("unknown transition kind '" + kind + "'");
  }
  tr.n0 = std::stoi(text.substr(colon + 1, comma - colon - 1));
  tr.m0 = std::stoi(text.substr(comma + 1));
  if (!tr.valid()) throw std::domain_error("invalid transition " + text);
  return tr;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stod(item));
  }
  if (out.empty()) throw std::domain_error("empty list '" + text + "'");
  return out;
}

ProtocolSpec make_protocol(const RunConfig& cfg, const SystemParams& p) {
  if (cfg.protocol == "noon") return noon_protocol(p);
  if (cfg.protocol == "fock") return fock_ladder_protocol(p, cfg.m);
  if (cfg.protocol == "binomial") return binomial_example_protocol(p);
  if (fs::exists(cfg.protocol)) {
    std::ifstream in(cfg.protocol);
    std::stringstream buf;
    buf << in.rdbuf();
    return io::protocol_from_json(buf.str());
  }
  throw std::domain_error("unknown protocol '" + cfg.protocol +
                          "' (expected noon, fock, binomial or a JSON file path)");
}

Truncation pick_truncation(const RunConfig& cfg, const ProtocolSpec& spec) {
  if (!cfg.truncation.empty()) {
    if (cfg.truncation.size() != 2 || cfg.truncation[0] < 1 || cfg.truncation[1] < 1) {
      throw std::domain_error("truncation must be two photon numbers >= 1");
    }
    return {cfg.truncation[0], cfg.truncation[1]};
  }
  return spec.default_truncation();
}

int worker_count() {
  if (const char* env = std::getenv("KERRSEL_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : int(hc);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

json run_summary_json(const ProtocolSpec& spec, const ProtocolResult& run,
                      const Truncation& trunc) {
  json j;
  j["protocol"] = spec.name;
  j["truncation"] = {trunc.nmax1, trunc.nmax2};
  j["final_fidelity"] = run.final_fidelity;
  j["phase_fit_fidelity"] = run.phase_fit_fidelity;
  j["peak_phase_fit_fidelity"] = run.peak_phase_fit_fidelity;
  j["measured_phase_rad"] = run.measured_phase;
  j["total_pulse_time_us"] = run.total_pulse_time;
  j["converged"] = run.sim.diag.converged;
  j["max_edge_population"] = run.sim.diag.max_edge_population;
  j["max_norm_drift"] = run.sim.diag.max_norm_drift;
  j["integrator_steps"] = run.sim.diag.steps;
  if (run.sim.is_pure) {
    j["commutator_error_mode1"] =
        commutator_truncation_error(run.sim.final_psi, 1, trunc);
    j["commutator_error_mode2"] =
        commutator_truncation_error(run.sim.final_psi, 2, trunc);
  } else {
    j["commutator_error_mode1"] =
        commutator_truncation_error(run.sim.final_rho, 1, trunc);
    j["commutator_error_mode2"] =
        commutator_truncation_error(run.sim.final_rho, 2, trunc);
  }
  j["warnings"] = run.sim.diag.warnings;
  j["steps"] = json::array();
  for (const auto& s : run.steps) {
    json js;
    switch (s.resolved.kind) {
      case StepKind::BS:
      case StepKind::TMS:
        js["transition"] = s.resolved.target.str();
        js["angle_over_pi"] = s.resolved.angle / 3.14159265358979323846;
        js["drive_frequency_mhz"] = to_mhz(*s.resolved.drive_frequency);
        js["duration_us"] = *s.resolved.duration;
        js["ramp_us"] = s.resolved.ramp.value_or(0.0);
        break;
      case StepKind::ResetAncilla:
        js["transition"] = "RESET_ANCILLA";
        js["discarded_population"] = s.discarded_population;
        break;
      case StepKind::Wait:
        js["transition"] = "WAIT";
        js["duration_us"] = *s.resolved.duration;
        break;
    }
    js["fidelity_after"] = s.fidelity_after;
    j["steps"].push_back(js);
  }
  return j;
}

int cmd_spectrum_map(const RunConfig& cfg, const std::string& target_text, int window) {
  const SystemParams p = cfg.params();
  const Transition target = parse_transition(target_text);
  if (window < 1) throw std::domain_error("window must be >= 1");

  const auto map = degeneracy_map(p, target, {window, window});
  const auto margin = selectivity_margin(p, target, {window, window});
  std::vector<RationalWitness> witnesses;
  if (p.k2 != 0.0 && p.k1 / p.k2 > 0.0) {
    witnesses = best_rational_approximations(p.k1 / p.k2, 64);
  }

  fs::create_directories(cfg.out);
  std::ostringstream csv;
  io::write_degeneracy_csv(csv, map);
  write_text(fs::path(cfg.out) / "degeneracy_map.csv", csv.str());
  write_text(fs::path(cfg.out) / "summary.json",
             io::selectivity_summary_json(p, map, margin, witnesses) + "\n");
  std::cout << "spectrum-map: " << map.cells.size() << " cells, min off-target |delta| = "
            << io::format_double(to_mhz(map.min_offtarget_abs_delta())) << " MHz\n";
  return 0;
}

int cmd_run(const RunConfig& cfg, bool wigner_out, int wigner_points, double wigner_extent,
            const std::string& export_protocol) {
  const SystemParams p = cfg.params();
  const ProtocolSpec spec = make_protocol(cfg, p);
  const Truncation trunc = pick_truncation(cfg, spec);
  const NoiseParams noise = cfg.noise();

  if (!export_protocol.empty()) {
    write_text(export_protocol, io::protocol_to_json(spec) + "\n");
  }

  RunOptions opts;
  opts.ode.rtol = cfg.rtol;
  const ProtocolResult run =
      run_protocol(spec, p, trunc, noise.any() ? &noise : nullptr, opts);

  fs::create_directories(cfg.out);
  std::ostringstream csv;
  io::write_dynamics_csv(csv, run.sim);
  write_text(fs::path(cfg.out) / "dynamics.csv", csv.str());
  write_text(fs::path(cfg.out) / "fidelities.json",
             run_summary_json(spec, run, trunc).dump(2) + "\n");

  if (wigner_out) {
    const Matrix rho1 = run.sim.is_pure ? reduced_state(run.sim.final_psi, 1, trunc)
                                        : reduced_state(run.sim.final_rho, 1, trunc);
    const WignerGrid grid = wigner(rho1, wigner_extent, wigner_points);
    std::ostringstream wcsv;
    io::write_wigner_csv(wcsv, grid);
    write_text(fs::path(cfg.out) / "wigner.csv", wcsv.str());
  }

  std::cout << "run " << spec.name << ": fidelity = " << io::format_double(run.final_fidelity)
            << " (phase-fit " << io::format_double(run.phase_fit_fidelity) << ")\n";
  if (!run.sim.diag.converged) {
    std::cerr << "run: truncation not converged (edge population "
              << io::format_double(run.sim.diag.max_edge_population) << ")\n";
    return kExitConvergence;
  }
  return 0;
}

struct SweepCell {
  double kappa_khz = 0.0;
  double nth = 0.0;
  double kerr_scale = 1.0;
  int m = 0;  // 0: use the configured protocol
};

int cmd_sweep(const RunConfig& cfg) {
  const std::vector<double> kappas =
      cfg.sweep_kappa_khz.empty() ? std::vector<double>{0.0} : cfg.sweep_kappa_khz;
  const std::vector<double> nths =
      cfg.sweep_nth.empty() ? std::vector<double>{0.0} : cfg.sweep_nth;
  const std::vector<double> scales =
      cfg.sweep_kerr_scale.empty() ? std::vector<double>{1.0} : cfg.sweep_kerr_scale;
  std::vector<int> ms = cfg.sweep_m;
  if (ms.empty()) ms = {0};
  if (cfg.sweep_kappa_khz.empty() && cfg.sweep_nth.empty() && cfg.sweep_kerr_scale.empty() &&
      cfg.sweep_m.empty()) {
    throw std::domain_error("sweep needs at least one axis (kappa, nth, kerr-scale or m)");
  }

  std::vector<SweepCell> cells;
  for (const double ks : scales) {
    for (const int m : ms) {
      for (const double ka : kappas) {
        for (const double nth : nths) {
          cells.push_back({ka, nth, ks, m});
        }
      }
    }
  }

  struct Row {
    SweepCell cell;
    double peak_fidelity = 0.0;
    double final_fidelity = 0.0;
    double optimal_time = 0.0;
    double total_time = 0.0;
    bool converged = false;
    std::string status = "ok";
  };
  std::vector<Row> rows(cells.size());

  std::atomic<size_t> next{0};
  auto work = [&]() {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      Row& row = rows[i];
      row.cell = cells[i];
      try {
        RunConfig local = cfg;
        local.kappa1_khz = local.kappa2_khz = cells[i].kappa_khz;
        local.nth1 = local.nth2 = cells[i].nth;
        local.k1_mhz *= cells[i].kerr_scale;
        local.k2_mhz *= cells[i].kerr_scale;
        local.k12_mhz *= cells[i].kerr_scale;
        if (cells[i].m > 0) {
          local.protocol = "fock";
          local.m = cells[i].m;
        }
        const SystemParams p = local.params();
        const ProtocolSpec spec = make_protocol(local, p);
        const Truncation trunc = pick_truncation(local, spec);
        const NoiseParams noise = local.noise();
        RunOptions opts;
        opts.ode.rtol = local.rtol;
        const ProtocolResult run =
            run_protocol(spec, p, trunc, noise.any() ? &noise : nullptr, opts);
        row.peak_fidelity = run.peak_phase_fit_fidelity;
        row.final_fidelity = run.phase_fit_fidelity;
        row.total_time = run.total_pulse_time;
        row.converged = run.sim.diag.converged;
        // time of the fidelity peak
        const auto it = run.sim.extra.find("fidelity_phase_fit");
        const std::vector<double>& series =
            (it != run.sim.extra.end() && !it->second.empty()) ? it->second : run.sim.fidelity;
        if (!series.empty()) {
          const size_t k = std::max_element(series.begin(), series.end()) - series.begin();
          row.optimal_time = run.sim.times[k];
        }
      } catch (const std::exception& e) {
        std::string msg = e.what();
        for (auto& c : msg) {
          if (c == ',' || c == '\n') c = ';';
        }
        row.status = "error: " + msg;
      }
    }
  };

  const int nthreads = std::min<int>(worker_count(), int(cells.size()));
  std::vector<std::thread> pool;
  for (int k = 0; k < nthreads; ++k) pool.emplace_back(work);
  for (auto& th : pool) th.join();

  fs::create_directories(cfg.out);
  std::ostringstream csv;
  csv << "# kerrsel-csv v1 sweep\n";
  csv << "kappa_khz,nth,kerr_scale,m,peak_fidelity,final_fidelity,optimal_time_us,"
         "total_pulse_time_us,converged,status\n";
  for (const auto& row : rows) {
    csv << io::format_double(row.cell.kappa_khz) << "," << io::format_double(row.cell.nth)
        << "," << io::format_double(row.cell.kerr_scale) << "," << row.cell.m << ","
        << io::format_double(row.peak_fidelity) << "," << io::format_double(row.final_fidelity)
        << "," << io::format_double(row.optimal_time) << ","
        << io::format_double(row.total_time) << "," << (row.converged ? 1 : 0) << ","
        << row.status << "\n";
  }
  write_text(fs::path(cfg.out) / "sweep.csv", csv.str());
  std::cout << "sweep: " << rows.size() << " cells -> " << (fs::path(cfg.out) / "sweep.csv")
            << "\n";
  return 0;
}

int cmd_magnus_report(const RunConfig& cfg, const std::string& target_text) {
  const SystemParams p = cfg.params();
  const Transition target = parse_transition(target_text);
  Truncation trunc{6, 6};
  if (!cfg.truncation.empty()) {
    trunc = {cfg.truncation[0], cfg.truncation[1]};
  } else {
    trunc = {std::max(6, target.n0 + 5), std::max(6, target.m0 + 5)};
  }
  const EffectiveReport report = effective_report(p, target, trunc);
  fs::create_directories(cfg.out);
  write_text(fs::path(cfg.out) / "magnus_report.json",
             io::effective_report_to_json(report) + "\n");
  std::cout << "magnus-report " << target.str()
            << ": rabi = " << io::format_double(to_mhz(report.rabi))
            << " MHz, compensated drive = "
            << io::format_double(to_mhz(report.compensated_detuning))
            << " MHz, leakage estimate = " << io::format_double(report.leakage_estimate)
            << "\n";
  return 0;
}

int cmd_stabilize(const RunConfig& cfg, int n0, double epsilon_mhz, double t_final,
                  double pump_j_mhz) {
  const SystemParams p = cfg.params();
  StabilizationConfig config;
  config.n0 = n0;
  config.epsilon = from_mhz(epsilon_mhz);
  config.pump_amplitude = pump_j_mhz > 0.0 ? from_mhz(pump_j_mhz) : 0.0;
  config.cool_amplitude = config.pump_amplitude;
  config.noise = cfg.noise();
  Truncation trunc{n0 + 2, 1};
  if (!cfg.truncation.empty()) trunc = {cfg.truncation[0], cfg.truncation[1]};

  RunOptions opts;
  opts.ode.rtol = cfg.rtol;
  const StabilizationResult out = stabilization_run(config, p, trunc, t_final, opts);

  fs::create_directories(cfg.out);
  std::ostringstream csv;
  io::write_dynamics_csv(csv, out.sim);
  write_text(fs::path(cfg.out) / "stabilize.csv", csv.str());
  json j;
  j["n0"] = n0;
  j["target_population"] = out.target_population;
  j["hierarchy_ok"] = out.hierarchy_ok;
  j["warnings"] = out.warnings;
  j["t_final_us"] = t_final;
  write_text(fs::path(cfg.out) / "stabilize.json", j.dump(2) + "\n");
  std::cout << "stabilize |" << n0 << ">: P(n1=" << n0
            << ") = " << io::format_double(out.target_population)
            << (out.hierarchy_ok ? "" : "  [rate hierarchy violated]") << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Selective quantum control in coupled Kerr-nonlinear oscillators"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string config_path;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file (flags override it)");
    sub->add_option("--k1-mhz", cfg.k1_mhz, "self-Kerr of mode 1 / 2pi");
    sub->add_option("--k2-mhz", cfg.k2_mhz, "self-Kerr of mode 2 / 2pi");
    sub->add_option("--k12-mhz", cfg.k12_mhz, "cross-Kerr / 2pi");
    sub->add_option("--j-mhz", cfg.j_mhz, "beam-splitter strength / 2pi");
    sub->add_option("--g-mhz", cfg.g_mhz, "two-mode-squeezing strength / 2pi");
    sub->add_option("--omega1-mhz", cfg.omega1_mhz, "mode-1 frequency / 2pi (rotating frame)");
    sub->add_option("--omega2-mhz", cfg.omega2_mhz, "mode-2 frequency / 2pi (rotating frame)");
    sub->add_option("--truncation", cfg.truncation, "nmax1,nmax2")->delimiter(',');
    sub->add_option("--rtol", cfg.rtol, "integrator relative tolerance (0 = default)");
    sub->add_option("--out", cfg.out, "output directory");
  };

  // spectrum-map
  auto* sub_map = app.add_subcommand("spectrum-map", "parasitic-detuning map and summary");
  std::string map_target = "bs:1,1";
  int map_window = 6;
  add_common(sub_map);
  sub_map->add_option("--target", map_target, "target transition, e.g. bs:1,1");
  sub_map->add_option("--window", map_window, "half-width of the (n', m') window");

  // run
  auto* sub_run = app.add_subcommand("run", "execute a pulse-sequence protocol");
  bool wigner_flag = false;
  int wigner_points = 61;
  double wigner_extent = 3.5;
  std::string export_protocol;
  double run_kappa_khz = -1.0, run_nth = -1.0;
  add_common(sub_run);
  sub_run->add_option("--protocol", cfg.protocol, "noon | fock | binomial | path to JSON");
  sub_run->add_option("--m", cfg.m, "target photon number for the fock ladder");
  sub_run->add_option("--kappa-khz", run_kappa_khz, "photon loss rate / 2pi, both modes");
  sub_run->add_option("--nth", run_nth, "thermal occupation, both modes");
  sub_run->add_flag("--wigner", wigner_flag, "emit the mode-1 Wigner grid of the final state");
  sub_run->add_option("--wigner-points", wigner_points, "grid points per axis");
  sub_run->add_option("--wigner-extent", wigner_extent, "grid half-extent in alpha");
  sub_run->add_option("--export-protocol", export_protocol, "write the protocol JSON here");

  // sweep
  auto* sub_sweep = app.add_subcommand("sweep", "grid of protocol runs");
  std::string sweep_kappa, sweep_nth_s, sweep_scale, sweep_m_s;
  add_common(sub_sweep);
  sub_sweep->add_option("--protocol", cfg.protocol, "noon | fock | binomial | path to JSON");
  sub_sweep->add_option("--m", cfg.m, "fock target when the m axis is unused");
  sub_sweep->add_option("--kappa-khz", sweep_kappa, "comma list of loss rates (kHz)");
  sub_sweep->add_option("--nth", sweep_nth_s, "comma list of thermal occupations");
  sub_sweep->add_option("--kerr-scale", sweep_scale, "comma list of Kerr scale factors");
  sub_sweep->add_option("--m-list", sweep_m_s, "comma list of fock targets");

  // magnus-report
  auto* sub_magnus = app.add_subcommand("magnus-report", "effective-Hamiltonian error budget");
  std::string magnus_target = "bs:1,1";
  add_common(sub_magnus);
  sub_magnus->add_option("--target", magnus_target, "target transition");

  // stabilize
  auto* sub_stab = app.add_subcommand("stabilize", "dissipative Fock-state stabilization");
  int stab_n0 = 1;
  double stab_eps = 0.5, stab_tfinal = 400.0, stab_pump = -1.0;
  double stab_kappa1_khz = 0.1, stab_kappa2_khz = 2000.0;
  add_common(sub_stab);
  sub_stab->add_option("--n0", stab_n0, "target Fock level of mode 1");
  sub_stab->add_option("--epsilon-mhz", stab_eps, "ancilla drive amplitude / 2pi");
  sub_stab->add_option("--t-final", stab_tfinal, "evolution horizon in us");
  sub_stab->add_option("--pump-j-mhz", stab_pump, "pump/cool tone amplitude (default: J)");
  sub_stab->add_option("--kappa1-khz", stab_kappa1_khz, "mode-1 loss rate");
  sub_stab->add_option("--kappa2-khz", stab_kappa2_khz, "ancilla loss rate");

  CLI11_PARSE(app, argc, argv);

  try {
    // config file first, then the explicitly given flags override it
    if (!config_path.empty()) {
      RunConfig from_file = cfg;
      load_config_json(config_path, from_file);
      const RunConfig flag_values = cfg;
      cfg = from_file;
      for (CLI::App* sub : app.get_subcommands()) {
        if (sub->count("--k1-mhz")) cfg.k1_mhz = flag_values.k1_mhz;
        if (sub->count("--k2-mhz")) cfg.k2_mhz = flag_values.k2_mhz;
        if (sub->count("--k12-mhz")) cfg.k12_mhz = flag_values.k12_mhz;
        if (sub->count("--j-mhz")) cfg.j_mhz = flag_values.j_mhz;
        if (sub->count("--g-mhz")) cfg.g_mhz = flag_values.g_mhz;
        if (sub->count("--omega1-mhz")) cfg.omega1_mhz = flag_values.omega1_mhz;
        if (sub->count("--omega2-mhz")) cfg.omega2_mhz = flag_values.omega2_mhz;
        if (sub->count("--truncation")) cfg.truncation = flag_values.truncation;
        if (sub->count("--rtol")) cfg.rtol = flag_values.rtol;
        if (sub->count("--out")) cfg.out = flag_values.out;
        if (sub->count("--protocol")) cfg.protocol = flag_values.protocol;
        if (sub->count("--m")) cfg.m = flag_values.m;
      }
    }

    if (sub_map->parsed()) return cmd_spectrum_map(cfg, map_target, map_window);
    if (sub_run->parsed()) {
      if (run_kappa_khz >= 0.0) cfg.kappa1_khz = cfg.kappa2_khz = run_kappa_khz;
      if (run_nth >= 0.0) cfg.nth1 = cfg.nth2 = run_nth;
      return cmd_run(cfg, wigner_flag, wigner_points, wigner_extent, export_protocol);
    }
    if (sub_sweep->parsed()) {
      if (!sweep_kappa.empty()) cfg.sweep_kappa_khz = parse_list(sweep_kappa);
      if (!sweep_nth_s.empty()) cfg.sweep_nth = parse_list(sweep_nth_s);
      if (!sweep_scale.empty()) cfg.sweep_kerr_scale = parse_list(sweep_scale);
      if (!sweep_m_s.empty()) {
        cfg.sweep_m.clear();
        for (double v : parse_list(sweep_m_s)) cfg.sweep_m.push_back(int(v));
      }
      return cmd_sweep(cfg);
    }
    if (sub_magnus->parsed()) return cmd_magnus_report(cfg, magnus_target);
    if (sub_stab->parsed()) {
      cfg.kappa1_khz = stab_kappa1_khz;
      cfg.kappa2_khz = stab_kappa2_khz;
      return cmd_stabilize(cfg, stab_n0, stab_eps, stab_tfinal, stab_pump);
    }
    return kExitConfig;
  } catch (const DegeneracyError& e) {
    std::cerr << "degeneracy error: " << e.what() << "\n";
    return kExitDegeneracy;
  } catch (const std::domain_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
