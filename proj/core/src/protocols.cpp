#include "kerrsel/protocols.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <stdexcept>

namespace kerrsel {

namespace {

constexpr double pi = std::numbers::pi;

SystemParams gated(const SystemParams& p, TransitionKind kind) {
  SystemParams q = p;
  if (kind == TransitionKind::BS) {
    q.g = 0.0;
  } else {
    q.j = 0.0;
  }
  return q;
}

CouplingKind coupling_of(TransitionKind kind) {
  return kind == TransitionKind::BS ? CouplingKind::BS : CouplingKind::TMS;
}

double amplitude_of(const SystemParams& p, TransitionKind kind) {
  return kind == TransitionKind::BS ? p.j : p.g;
}

void grow(KetLabel& hi, const KetLabel& k) {
  hi.n1 = std::max(hi.n1, k.n1);
  hi.n2 = std::max(hi.n2, k.n2);
}

}  // namespace

Vector ProtocolSpec::target_state(const Truncation& trunc) const {
  if (target.empty()) throw std::domain_error("ProtocolSpec: empty target");
  Vector v = Vector::Zero(trunc.dim());
  for (const auto& ta : target) v(basis_index(ta.ket, trunc)) += ta.amp;
  const double n = v.norm();
  if (n == 0.0) throw std::domain_error("ProtocolSpec: target has zero norm");
  return v / n;
}

Truncation ProtocolSpec::default_truncation(int guard) const {
  KetLabel hi = initial;
  for (const auto& s : steps) {
    if (!s.is_pulse()) continue;
    grow(hi, s.target.source());
    grow(hi, s.target.destination());
  }
  for (const auto& ta : target) grow(hi, ta.ket);
  return {hi.n1 + guard, hi.n2 + guard};
}

double pulse_ramp_time(const SystemParams& p, const Transition& tr, const Truncation& trunc) {
  const SystemParams q = gated(p, tr.kind);
  const double omega = rabi_frequency(q, tr);
  if (omega <= 0.0) return 0.0;
  const double t_flat = pi / (2.0 * omega);  // pi-pulse scale
  double delta_min = std::numeric_limits<double>::infinity();
  for (const auto& ch :
       offresonant_channels(q, tr, trunc, DriveFrequencies::resonant(q, tr))) {
    delta_min = std::min(delta_min, std::abs(ch.detuning));
  }
  if (!std::isfinite(delta_min) || delta_min <= 0.0) return 0.0;
  // a few periods of the nearest parasitic channel; the envelope keeps a flat
  // top as long as the ramp stays below the pi-pulse area
  return std::min(6.0 / delta_min, 0.75 * t_flat);
}

double pulse_duration(const SystemParams& p, const Transition& tr, double theta,
                      bool calibrate, const std::optional<Truncation>& trunc,
                      std::optional<double> drive_frequency, double start_time, double ramp) {
  if (!(theta > 0.0) || theta > 2.0 * pi + 1e-12) {
    throw std::domain_error("pulse_duration: angle must be in (0, 2pi]");
  }
  const double omega = rabi_frequency(p, tr);
  if (omega <= 0.0) throw std::domain_error("pulse_duration: zero Rabi frequency on " + tr.str());
  // the two cos^2 edges cost one ramp length of pulse area
  const double t_nominal = theta / (2.0 * omega) + ramp;
  if (!calibrate) return t_nominal;
  if (!trunc) throw std::domain_error("pulse_duration: calibration requires a truncation");
  if (theta > pi + 1e-12) return t_nominal;

  const SystemParams q = gated(p, tr.kind);
  const double freq =
      drive_frequency ? *drive_frequency : compensated_drive_frequency(q, tr, *trunc);

  // The +-20% calibration window lives on the pulse area; with cos^2 edges a
  // mid-pulse time d has accumulated area d - ramp/2 while a finished pulse
  // of duration T carries T - ramp.
  const double area_target = theta / (2.0 * omega);
  const double lo_d = 0.8 * area_target + 0.5 * ramp;
  const double hi_d = 1.2 * area_target + 0.5 * ramp;

  const double t0 = start_time;
  const double t1 = start_time + hi_d + 0.5 * ramp;
  RotatingFramePulse h(q, *trunc,
                       {Tone{coupling_of(tr.kind), amplitude_of(q, tr.kind), freq, 0.0, t0,
                             t1 + ramp, ramp}});
  const int nsamp = 1200;
  SampleSpec spec;
  spec.tracked = {tr.source(), tr.destination()};
  spec.trunc = *trunc;
  const SimResult scan =
      evolve_closed(h, basis_state(tr.source(), *trunc), t0, t1, (t1 - t0) / nsamp, spec, {});

  const auto& times = scan.times;
  const Eigen::MatrixXd& pops = scan.populations;  // col 0: source, col 1: destination

  double guess_area = area_target;
  if (theta > pi - 1e-12) {
    // pi pulse: maximize the transfer inside the window
    int best = -1;
    double best_p = -1.0;
    for (size_t k = 0; k < times.size(); ++k) {
      const double d = times[k] - start_time;
      if (d < lo_d || d > hi_d) continue;
      if (pops(int(k), 1) > best_p) {
        best_p = pops(int(k), 1);
        best = int(k);
      }
    }
    if (best > 0 && best + 1 < int(times.size())) {
      const double y0 = pops(best - 1, 1), y1 = pops(best, 1), y2 = pops(best + 1, 1);
      const double denom = y0 - 2.0 * y1 + y2;
      double shift = 0.0;
      if (std::abs(denom) > 1e-300) shift = 0.5 * (y0 - y2) / denom;
      shift = std::clamp(shift, -1.0, 1.0);
      const double dt = times[best + 1] - times[best];
      guess_area = (times[best] - start_time) + shift * dt - 0.5 * ramp;
    }
  } else {
    // partial pulse: match the population ratio P_f/P_i = tan^2(theta/2)
    const double r = std::tan(theta / 2.0);
    const double ratio = r * r;
    double best_cross = -1.0, best_dist = std::numeric_limits<double>::infinity();
    auto g = [&](int k) { return pops(k, 1) - ratio * pops(k, 0); };
    for (size_t k = 0; k + 1 < times.size(); ++k) {
      const double d0 = times[k] - start_time, d1 = times[k + 1] - start_time;
      if (d1 < lo_d || d0 > hi_d) continue;
      const double g0 = g(int(k)), g1 = g(int(k + 1));
      if (g0 == 0.0 || (g0 < 0.0) != (g1 < 0.0)) {
        const double frac = (g1 != g0) ? -g0 / (g1 - g0) : 0.0;
        const double cross = d0 + frac * (d1 - d0);
        const double dist = std::abs(cross - 0.5 * ramp - area_target);
        if (dist < best_dist) {
          best_dist = dist;
          best_cross = cross;
        }
      }
    }
    if (best_cross > 0.0) guess_area = best_cross - 0.5 * ramp;
  }
  if (ramp <= 0.0) return guess_area;

  // with smoothed edges, refine the full pulse around the equivalent duration
  auto figure = [&](double dur) {
    RotatingFramePulse hp(q, *trunc,
                          {Tone{coupling_of(tr.kind), amplitude_of(q, tr.kind), freq, 0.0, t0,
                                t0 + dur, ramp}});
    const auto res = evolve_closed(hp, basis_state(tr.source(), *trunc), t0, t0 + dur, dur,
                                   spec, {});
    const Eigen::Index last = res.populations.rows() - 1;
    const double pi_pop = res.populations(last, 0), pf_pop = res.populations(last, 1);
    if (theta > pi - 1e-12) return pf_pop;
    const double want = std::pow(std::sin(theta / 2.0), 2);
    return -std::abs(pf_pop / std::max(pf_pop + pi_pop, 1e-300) - want);
  };
  const double t_lo = 0.8 * area_target + ramp, t_hi = 1.2 * area_target + ramp;
  const double center = std::clamp(guess_area + ramp, t_lo, t_hi);
  const double width = std::max(0.06 * t_nominal, 0.25 * ramp);
  double a = std::max(t_lo, center - width);
  double b = std::min(t_hi, center + width);
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = figure(x1), f2 = figure(x2);
  for (int it = 0; it < 24; ++it) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = figure(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = figure(x1);
    }
  }
  return 0.5 * (a + b);
}

PulseStep resolve_step(const SystemParams& p, const PulseStep& step, const Truncation& trunc,
                       double start_time) {
  PulseStep out = step;
  if (step.kind == StepKind::Wait) {
    if (!step.duration) throw std::domain_error("resolve_step: WAIT requires a duration");
    return out;
  }
  if (step.kind == StepKind::ResetAncilla) return out;

  if (!step.target.valid()) {
    throw std::domain_error("resolve_step: invalid transition " + step.target.str());
  }
  if ((step.kind == StepKind::BS) != (step.target.kind == TransitionKind::BS)) {
    throw std::domain_error("resolve_step: step kind does not match transition kind");
  }
  basis_index(step.target.source(), trunc);
  basis_index(step.target.destination(), trunc);
  if (!(step.angle > 0.0) || step.angle > 2.0 * pi + 1e-12) {
    throw std::domain_error("resolve_step: angle must be in (0, 2pi]");
  }

  const SystemParams q = gated(p, step.target.kind);
  if (!out.ramp) out.ramp = pulse_ramp_time(p, step.target, trunc);
  if (!out.drive_frequency) {
    out.drive_frequency = compensated_drive_frequency(q, step.target, trunc);
  }
  if (!out.duration) {
    out.duration = pulse_duration(p, step.target, out.angle, true, trunc, out.drive_frequency,
                                  start_time, *out.ramp);
  }
  return out;
}

PulseStep superposition_pulse(const SystemParams& p, const Transition& tr, double theta,
                              double phase) {
  if (!(theta > 0.0) || theta > pi + 1e-12) {
    throw std::domain_error("superposition_pulse: angle must be in (0, pi]");
  }
  if (rabi_frequency(p, tr) <= 0.0) {
    throw std::domain_error("superposition_pulse: zero Rabi frequency");
  }
  PulseStep step;
  step.kind = (tr.kind == TransitionKind::BS) ? StepKind::BS : StepKind::TMS;
  step.target = tr;
  step.angle = theta;
  step.phase = phase;
  return step;
}

ProtocolSpec noon_protocol(const SystemParams& p) {
  p.validate();
  if (p.g <= 0.0 || p.j <= 0.0) throw std::domain_error("noon_protocol: needs J > 0 and G > 0");
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  ProtocolSpec spec;
  spec.name = "noon";
  spec.initial = {0, 0};
  // Entangle, consolidate into |2,0>, reset the ancilla, then move the
  // remaining vacuum branch through |1,1> into |0,2>.
  spec.steps = {
      {StepKind::TMS, {TransitionKind::TMS, 0, 0}, pi / 2.0, {}, {}, {}, 0.0},
      {StepKind::BS, {TransitionKind::BS, 1, 1}, pi, {}, {}, {}, 0.0},
      {StepKind::ResetAncilla, {}, 0.0, {}, {}, {}, 0.0},
      {StepKind::TMS, {TransitionKind::TMS, 0, 0}, pi, {}, {}, {}, 0.0},
      {StepKind::BS, {TransitionKind::BS, 0, 2}, pi, {}, {}, {}, 0.0},
  };
  spec.target = {{{2, 0}, inv_sqrt2}, {{0, 2}, inv_sqrt2}};
  return spec;
}

ProtocolSpec fock4_protocol(const SystemParams& p) { return fock_ladder_protocol(p, 4); }

ProtocolSpec fock_ladder_protocol(const SystemParams& p, int m) {
  p.validate();
  if (m < 1) throw std::domain_error("fock_ladder_protocol: m must be >= 1");
  if (p.g <= 0.0 || (m > 1 && p.j <= 0.0)) {
    throw std::domain_error("fock_ladder_protocol: needs J > 0 and G > 0");
  }
  ProtocolSpec spec;
  spec.name = (m == 4) ? "fock4" : ("fock" + std::to_string(m));
  int n = 0;
  if (m % 2 == 1) {
    // odd ladder: seed the ancilla with one photon and swap it over first
    spec.initial = {0, 1};
    spec.steps.push_back({StepKind::BS, {TransitionKind::BS, 0, 1}, pi, {}, {}, {}, 0.0});
    n = 1;
  } else {
    spec.initial = {0, 0};
  }
  for (; n + 2 <= m; n += 2) {
    spec.steps.push_back({StepKind::TMS, {TransitionKind::TMS, n, 0}, pi, {}, {}, {}, 0.0});
    spec.steps.push_back({StepKind::BS, {TransitionKind::BS, n + 1, 1}, pi, {}, {}, {}, 0.0});
  }
  spec.target = {{{m, 0}, 1.0}};
  return spec;
}

ProtocolSpec binomial_example_protocol(const SystemParams& p) {
  p.validate();
  if (p.j <= 0.0) throw std::domain_error("binomial_example_protocol: needs J > 0");
  ProtocolSpec spec;
  spec.name = "binomial";
  spec.initial = {0, 3};
  spec.steps = {
      {StepKind::BS, {TransitionKind::BS, 0, 3}, pi, {}, {}, {}, 0.0},
      {StepKind::BS, {TransitionKind::BS, 1, 2}, pi / 3.0, {}, {}, {}, pi},
      {StepKind::BS, {TransitionKind::BS, 2, 1}, pi, {}, {}, {}, 0.0},
  };
  spec.target = {{{1, 2}, std::sqrt(3.0) / 2.0}, {{3, 0}, 0.5}};
  return spec;
}

double phase_fit_fidelity(const Vector& psi, const KetLabel& a, const KetLabel& b,
                          const Truncation& trunc, double weight_a) {
  const double ca = std::sqrt(weight_a), cb = std::sqrt(1.0 - weight_a);
  const double pa = std::abs(psi(basis_index(a, trunc)));
  const double pb = std::abs(psi(basis_index(b, trunc)));
  const double amp = ca * pa + cb * pb;
  return amp * amp;
}

double phase_fit_fidelity(const Matrix& rho, const KetLabel& a, const KetLabel& b,
                          const Truncation& trunc, double weight_a) {
  const int ia = basis_index(a, trunc), ib = basis_index(b, trunc);
  const double ca2 = weight_a, cb2 = 1.0 - weight_a;
  return ca2 * std::real(rho(ia, ia)) + cb2 * std::real(rho(ib, ib)) +
         2.0 * std::sqrt(ca2 * cb2) * std::abs(rho(ia, ib));
}

namespace {

// Drops the duplicated boundary sample when concatenating segments.
void drop_first_sample(SimResult& r) {
  if (r.times.empty()) return;
  r.times.erase(r.times.begin());
  if (!r.fidelity.empty()) r.fidelity.erase(r.fidelity.begin());
  for (auto& [k, v] : r.extra) {
    if (!v.empty()) v.erase(v.begin());
  }
  const Eigen::Index rows = r.populations.rows();
  if (rows > 0) {
    Eigen::MatrixXd tail = r.populations.bottomRows(rows - 1);
    r.populations = std::move(tail);
  }
}

struct TwoKetTarget {
  int ia = -1;
  int ib = -1;
  double weight_a = 0.5;
  Complex ca, cb;
  bool active = false;
};

TwoKetTarget two_ket_info(const ProtocolSpec& spec, const Truncation& trunc) {
  TwoKetTarget t;
  if (spec.target.size() != 2) return t;
  const double na = std::norm(spec.target[0].amp), nb = std::norm(spec.target[1].amp);
  if (na + nb == 0.0) return t;
  t.ia = basis_index(spec.target[0].ket, trunc);
  t.ib = basis_index(spec.target[1].ket, trunc);
  t.weight_a = na / (na + nb);
  const double scale = std::sqrt(na + nb);
  t.ca = spec.target[0].amp / scale;
  t.cb = spec.target[1].amp / scale;
  t.active = true;
  return t;
}

}  // namespace

ProtocolResult run_protocol(const ProtocolSpec& spec, const SystemParams& p,
                            const Truncation& trunc, const NoiseParams* noise,
                            const RunOptions& opts) {
  p.validate();
  const bool open = noise != nullptr;
  if (open) noise->validate();

  const Vector target = spec.target_state(trunc);
  const TwoKetTarget two_ket = two_ket_info(spec, trunc);
  const Eigen::VectorXd energies = free_energies(p, trunc);

  // tracked kets: protocol endpoints, the initial state, the target support
  // and any extras the caller asked for
  std::set<KetLabel> tracked_set{spec.initial};
  for (const auto& s : spec.steps) {
    if (!s.is_pulse()) continue;
    tracked_set.insert(s.target.source());
    tracked_set.insert(s.target.destination());
  }
  for (const auto& ta : spec.target) tracked_set.insert(ta.ket);
  for (const auto& k : spec.track_extra) {
    basis_index(k, trunc);  // validate
    tracked_set.insert(k);
  }
  const std::vector<KetLabel> tracked(tracked_set.begin(), tracked_set.end());

  SampleSpec sample;
  sample.tracked = tracked;
  sample.trunc = trunc;
  if (!open) {
    sample.fidelity_target = target;
  } else {
    // the Lindblad path runs in the lab frame; rotate the target along with
    // the free Hamiltonian so the fidelity series stays frame-consistent
    sample.fidelity_target_fn = [target, energies](double t) {
      Vector v = target;
      for (Eigen::Index i = 0; i < v.size(); ++i) {
        v(i) *= std::exp(Complex(0.0, -energies(i) * t));
      }
      return v;
    };
  }
  if (two_ket.active) {
    const int ia = two_ket.ia, ib = two_ket.ib;
    const double wa = two_ket.weight_a;
    sample.probes.push_back(
        {"fidelity_phase_fit", [ia, ib, wa](double, const Vector* psi, const Matrix* rho) {
           const double ca = std::sqrt(wa), cb = std::sqrt(1.0 - wa);
           if (psi) {
             const double amp = ca * std::abs((*psi)(ia)) + cb * std::abs((*psi)(ib));
             return amp * amp;
           }
           return wa * std::real((*rho)(ia, ia)) + (1.0 - wa) * std::real((*rho)(ib, ib)) +
                  2.0 * ca * cb * std::abs((*rho)(ia, ib));
         }});
  }

  ProtocolResult out;
  Vector psi = basis_state(spec.initial, trunc);
  Matrix rho;
  if (open) rho = psi * psi.adjoint();

  double t = 0.0;
  bool first_segment = true;
  bool after_jump = false;

  auto run_segment = [&](const std::vector<Tone>& tones, double duration,
                         const NoiseParams& seg_noise) {
    const double dt_sample =
        opts.sample_dt > 0.0 ? opts.sample_dt : duration / std::max(1, opts.samples_per_step);
    SimResult seg;
    if (!open) {
      RotatingFramePulse h(p, trunc, tones);
      seg = evolve_closed(h, psi, t, t + duration, dt_sample, sample, opts.ode);
      psi = seg.final_psi;
    } else {
      LabFramePulse h(p, trunc, tones);
      seg = evolve_lindblad(h, rho, seg_noise, trunc, t, t + duration, dt_sample, sample,
                            opts.ode);
      rho = seg.final_rho;
    }
    t += duration;
    if (first_segment) {
      out.sim = std::move(seg);
      first_segment = false;
    } else {
      if (!after_jump) drop_first_sample(seg);
      out.sim.append(seg);
    }
    after_jump = false;
  };

  auto current_fidelity = [&]() {
    if (two_ket.active) {
      if (!open) {
        return phase_fit_fidelity(psi, spec.target[0].ket, spec.target[1].ket, trunc,
                                  two_ket.weight_a);
      }
      return phase_fit_fidelity(rho, spec.target[0].ket, spec.target[1].ket, trunc,
                                two_ket.weight_a);
    }
    if (!open) return fidelity(psi, target);
    Vector rotated = target;
    for (Eigen::Index i = 0; i < rotated.size(); ++i) {
      rotated(i) *= std::exp(Complex(0.0, -energies(i) * t));
    }
    return fidelity(rho, rotated);
  };

  const NoiseParams no_noise{};
  for (const auto& raw : spec.steps) {
    StepReport report;
    report.t_begin = t;

    PulseStep step = raw;
    if (step.is_pulse()) {
      if (!opts.smooth_edges && !step.ramp) step.ramp = 0.0;
      if (!opts.calibrate_durations && !step.duration) {
        if (!step.ramp) step.ramp = pulse_ramp_time(p, step.target, trunc);
        step.duration = pulse_duration(p, step.target, step.angle, false, trunc,
                                       step.drive_frequency, t, *step.ramp);
      }
      step = resolve_step(p, step, trunc, t);
      const Tone tone{coupling_of(step.target.kind), amplitude_of(p, step.target.kind),
                      *step.drive_frequency, step.phase,
                      t,         t + *step.duration,
                      *step.ramp};
      run_segment({tone}, *step.duration, open ? *noise : no_noise);
      out.total_pulse_time += *step.duration;
    } else if (step.kind == StepKind::Wait) {
      step = resolve_step(p, step, trunc, t);
      run_segment({}, *step.duration, open ? *noise : no_noise);
      out.total_pulse_time += *step.duration;
    } else {  // ResetAncilla
      if (opts.reset_model == ResetModel::Projective) {
        if (!open) {
          double kept = 0.0, discarded = 0.0;
          Vector next = Vector::Zero(trunc.dim());
          for (int i = 0; i < trunc.dim(); ++i) {
            const KetLabel k = basis_label(i, trunc);
            if (k.n2 == 0) {
              next(i) = psi(i);
              kept += std::norm(psi(i));
            } else {
              discarded += std::norm(psi(i));
            }
          }
          if (kept < 1e-12) {
            throw std::runtime_error("run_protocol: reset would discard the whole state");
          }
          psi = next / std::sqrt(kept);
          report.discarded_population = discarded;
        } else {
          double before = 0.0;
          for (int i = 0; i < trunc.dim(); ++i) {
            if (basis_label(i, trunc).n2 > 0) before += std::real(rho(i, i));
          }
          const Matrix rho1 = reduced_state(rho, 1, trunc);
          rho = Matrix::Zero(trunc.dim(), trunc.dim());
          for (int a = 0; a <= trunc.nmax1; ++a) {
            for (int b = 0; b <= trunc.nmax1; ++b) {
              rho(basis_index({a, 0}, trunc), basis_index({b, 0}, trunc)) = rho1(a, b);
            }
          }
          report.discarded_population = before;
        }
        after_jump = true;
      } else {
        // physical reset: strong kappa_2 burst with every coupling off
        if (!open) {
          throw std::domain_error(
              "run_protocol: DecayWindow reset requires the density-matrix path (set noise)");
        }
        double kappa_reset = opts.reset_kappa2;
        if (kappa_reset <= 0.0) {
          kappa_reset = 50.0 * std::max({std::abs(p.k1), std::abs(p.k2), p.j, p.g, 1.0});
        }
        NoiseParams burst = *noise;
        burst.kappa2 = kappa_reset;
        burst.nth2 = 0.0;
        const double window = 16.0 / kappa_reset;
        run_segment({}, window, burst);
        out.total_pulse_time += window;
      }
    }

    report.resolved = step;
    report.t_end = t;
    report.fidelity_after = current_fidelity();
    out.steps.push_back(report);
  }

  if (first_segment) {
    // no evolving steps at all: emit the single initial sample
    run_segment({}, 0.0, no_noise);
  }

  // final figures of merit (rotating-frame amplitudes)
  if (!open) {
    out.final_fidelity = fidelity(psi, target);
    if (two_ket.active) {
      out.phase_fit_fidelity = phase_fit_fidelity(psi, spec.target[0].ket, spec.target[1].ket,
                                                  trunc, two_ket.weight_a);
      const Complex za = psi(two_ket.ia), zb = psi(two_ket.ib);
      out.measured_phase = std::arg(zb * std::conj(za) * two_ket.ca * std::conj(two_ket.cb));
    } else {
      out.phase_fit_fidelity = out.final_fidelity;
    }
  } else {
    Vector rotated = target;
    for (Eigen::Index i = 0; i < rotated.size(); ++i) {
      rotated(i) *= std::exp(Complex(0.0, -energies(i) * t));
    }
    out.final_fidelity = fidelity(rho, rotated);
    if (two_ket.active) {
      out.phase_fit_fidelity = phase_fit_fidelity(rho, spec.target[0].ket, spec.target[1].ket,
                                                  trunc, two_ket.weight_a);
      const Complex coher = rho(two_ket.ib, two_ket.ia) *
                            std::exp(Complex(0.0, (energies(two_ket.ib) - energies(two_ket.ia)) * t));
      out.measured_phase = std::arg(coher * two_ket.ca * std::conj(two_ket.cb));
    } else {
      out.phase_fit_fidelity = out.final_fidelity;
    }
  }

  const auto it = out.sim.extra.find("fidelity_phase_fit");
  if (it != out.sim.extra.end() && !it->second.empty()) {
    out.peak_phase_fit_fidelity = *std::max_element(it->second.begin(), it->second.end());
  } else if (!out.sim.fidelity.empty()) {
    out.peak_phase_fit_fidelity =
        *std::max_element(out.sim.fidelity.begin(), out.sim.fidelity.end());
  }
  return out;
}

StabilizationResult stabilization_run(const StabilizationConfig& config,
                                      const SystemParams& p, const Truncation& trunc,
                                      double t_final, const RunOptions& opts) {
  p.validate();
  config.noise.validate();
  if (config.n0 < 1) throw std::domain_error("stabilization_run: n0 must be >= 1");
  if (trunc.nmax1 < config.n0 + 1 || trunc.nmax2 < 1) {
    throw std::domain_error("stabilization_run: truncation too small for pump/cool ladder");
  }

  const Transition pump{TransitionKind::BS, config.n0 - 1, 1};
  const Transition cool{TransitionKind::BS, config.n0, 1};
  SystemParams pump_params = p;
  pump_params.j = config.pump_amplitude > 0.0 ? config.pump_amplitude : p.j;
  SystemParams cool_params = p;
  cool_params.j = config.cool_amplitude > 0.0 ? config.cool_amplitude : p.j;

  const double omega_pump = rabi_frequency(pump_params, pump);
  const double omega_cool = rabi_frequency(cool_params, cool);

  StabilizationResult out;
  if (!(config.noise.kappa2 > 10.0 * std::max(omega_pump, omega_cool))) {
    out.hierarchy_ok = false;
    out.warnings.push_back("rate hierarchy violated: kappa2 <= 10 max(pump, cool) Rabi");
  }
  if (!(std::min(omega_pump, omega_cool) > 10.0 * config.noise.kappa1)) {
    out.hierarchy_ok = false;
    out.warnings.push_back("rate hierarchy violated: min Rabi <= 10 kappa1");
  }

  std::vector<Tone> tones;
  if (config.epsilon != 0.0) {
    // ancilla drive resonant with the 0->1 line of mode 2 at n1 = n0-1
    const double omega_d = p.omega2 + p.k12 * double(config.n0 - 1);
    tones.push_back({CouplingKind::Drive2, config.epsilon, omega_d, 0.0});
  }
  tones.push_back({CouplingKind::BS, pump_params.j, transition_detuning(p, pump), 0.0});
  tones.push_back({CouplingKind::BS, cool_params.j, transition_detuning(p, cool), 0.0});

  SystemParams frame = p;
  frame.j = 0.0;
  frame.g = 0.0;
  LabFramePulse h(frame, trunc, tones);

  SampleSpec sample;
  sample.trunc = trunc;
  for (int n = 0; n <= trunc.nmax1; ++n) {
    sample.tracked.push_back({n, 0});
  }
  const int n0 = config.n0;
  const int d2 = trunc.nmax2 + 1;
  sample.probes.push_back({"p_target", [n0, d2](double, const Vector*, const Matrix* rho) {
                             double acc = 0.0;
                             for (int m = 0; m < d2; ++m) {
                               acc += std::real((*rho)(n0 * d2 + m, n0 * d2 + m));
                             }
                             return acc;
                           }});

  const Vector psi0 = basis_state({0, 0}, trunc);
  const Matrix rho0 = psi0 * psi0.adjoint();
  const double dt_sample = opts.sample_dt > 0.0 ? opts.sample_dt : t_final / 400.0;
  out.sim = evolve_lindblad(h, rho0, config.noise, trunc, 0.0, t_final, dt_sample, sample,
                            opts.ode);

  double acc = 0.0;
  for (int m = 0; m < d2; ++m) {
    acc += std::real(out.sim.final_rho(n0 * d2 + m, n0 * d2 + m));
  }
  out.target_population = acc;
  for (const auto& w : out.warnings) out.sim.diag.warnings.push_back(w);
  return out;
}

}  // namespace kerrsel
