#include "kerrsel/magnus.hpp"

#include <algorithm>
#include <cmath>

namespace kerrsel {

DriveFrequencies DriveFrequencies::resonant(const SystemParams& p, const Transition& target) {
  DriveFrequencies d;
  if (target.kind == TransitionKind::BS) {
    d.bs = transition_detuning(p, target);
  } else {
    d.tms = transition_detuning(p, target);
  }
  return d;
}

double resonant_block(const SystemParams& p, const Transition& target) {
  return rabi_frequency(p, target);
}

namespace {

double modulation_of(const DriveFrequencies& drives, TransitionKind kind) {
  const auto& v = (kind == TransitionKind::BS) ? drives.bs : drives.tms;
  return v.value_or(0.0);
}

// Oscillation frequency of one element in the interaction picture of H0,
// given its kind's modulation frequency.
double element_frequency(const SystemParams& p, const Transition& tr,
                         const DriveFrequencies& drives) {
  return transition_detuning(p, tr) - modulation_of(drives, tr.kind);
}

DriveFrequencies with_target_default(const SystemParams& p, const Transition& target,
                                     DriveFrequencies drives) {
  auto& slot = (target.kind == TransitionKind::BS) ? drives.bs : drives.tms;
  if (!slot.has_value()) slot = transition_detuning(p, target);
  return drives;
}

}  // namespace

double parasitic_detuning(const SystemParams& p, const Transition& target,
                          const Transition& parasitic, const DriveFrequencies& drives_in) {
  const DriveFrequencies drives = with_target_default(p, target, drives_in);
  return element_frequency(p, parasitic, drives) - element_frequency(p, target, drives);
}

std::vector<CoupledChannel> offresonant_channels(const SystemParams& p,
                                                 const Transition& target,
                                                 const Truncation& trunc,
                                                 const DriveFrequencies& drives_in) {
  p.validate();
  if (!target.valid()) throw std::domain_error("offresonant_channels: invalid target");
  const DriveFrequencies drives = with_target_default(p, target, drives_in);

  std::vector<CoupledChannel> channels;
  for (int pass = 0; pass < 2; ++pass) {
    const TransitionKind kind = (pass == 0) ? TransitionKind::BS : TransitionKind::TMS;
    const double amp = (kind == TransitionKind::BS) ? p.j : p.g;
    if (amp == 0.0) continue;
    // a coupling participates only while its own tone is active; an undriven
    // coupler is gated off and opens no channel
    const bool driven =
        (kind == TransitionKind::BS) ? drives.bs.has_value() : drives.tms.has_value();
    if (!driven) continue;
    const int min_m = (kind == TransitionKind::BS) ? 1 : 0;
    for (int n = 0; n < trunc.nmax1; ++n) {
      for (int m = min_m; m <= trunc.nmax2; ++m) {
        const Transition tr{kind, n, m};
        const KetLabel dest = tr.destination();
        if (dest.n2 < 0 || dest.n2 > trunc.nmax2) continue;
        if (tr == target) continue;
        channels.push_back({tr, rabi_frequency(p, tr),
                            element_frequency(p, tr, drives) - element_frequency(p, target, drives)});
      }
    }
  }
  return channels;
}

Eigen::VectorXd stark_shifts_from_channels(const std::vector<TwoLevelChannel>& channels,
                                           int dim) {
  Eigen::VectorXd shifts = Eigen::VectorXd::Zero(dim);
  for (const auto& ch : channels) {
    const double s = ch.rabi * ch.rabi / ch.detuning;
    shifts(ch.upper) += s;
    shifts(ch.lower) -= s;
  }
  return shifts;
}

namespace {

void check_degeneracies(const SystemParams& p, const std::vector<CoupledChannel>& channels) {
  const double floor_det = 1e-6 * std::max(p.j, p.g);
  for (const auto& ch : channels) {
    if (std::abs(ch.detuning) < floor_det) throw DegeneracyError(ch.tr, ch.detuning);
  }
}

}  // namespace

std::map<KetLabel, double> stark_shift_second_order(const SystemParams& p,
                                                    const Transition& target,
                                                    const Truncation& trunc,
                                                    const DriveFrequencies& drives) {
  const auto channels = offresonant_channels(p, target, trunc, drives);
  check_degeneracies(p, channels);

  std::map<KetLabel, double> shifts;
  for (const auto& ch : channels) {
    const double s = ch.rabi * ch.rabi / ch.detuning;
    shifts[ch.tr.destination()] += s;
    shifts[ch.tr.source()] -= s;
  }
  return shifts;
}

namespace {

bool touches_target(const Transition& tr, const Transition& target) {
  const KetLabel i = target.source(), f = target.destination();
  const KetLabel s = tr.source(), d = tr.destination();
  return s == i || s == f || d == i || d == f;
}

}  // namespace

double leakage_probability(const SystemParams& p, const Transition& target,
                           const Truncation& trunc, const DriveFrequencies& drives) {
  const auto channels = offresonant_channels(p, target, trunc, drives);
  double total = 0.0;
  for (const auto& ch : channels) {
    if (!touches_target(ch.tr, target)) continue;
    if (ch.detuning == 0.0) throw DegeneracyError(ch.tr, 0.0);
    const double r = ch.rabi / ch.detuning;
    total += r * r;
  }
  if (!channels.empty()) check_degeneracies(p, channels);
  return total;
}

double compensated_drive_frequency(const SystemParams& p, const Transition& target,
                                   const Truncation& trunc) {
  const auto shifts = stark_shift_second_order(p, target, trunc,
                                               DriveFrequencies::resonant(p, target));
  auto shift_of = [&](const KetLabel& k) {
    const auto it = shifts.find(k);
    return it == shifts.end() ? 0.0 : it->second;
  };
  return transition_detuning(p, target) + shift_of(target.destination()) -
         shift_of(target.source());
}

std::vector<BudgetEntry> error_budget(const SystemParams& p, const Transition& target,
                                      const Truncation& trunc) {
  const DriveFrequencies drives = DriveFrequencies::resonant(p, target);
  const double rabi = resonant_block(p, target);

  const auto all_channels = offresonant_channels(p, target, trunc, drives);
  check_degeneracies(p, all_channels);

  const auto shifts = stark_shift_second_order(p, target, trunc, drives);
  auto shift_of = [&](const KetLabel& k) {
    const auto it = shifts.find(k);
    return it == shifts.end() ? 0.0 : it->second;
  };
  const double stark_diff = shift_of(target.destination()) - shift_of(target.source());

  // The gate-local channels set the higher-order error scales.
  double max_ratio2 = 0.0;     // max |Omega_k/Delta_k|^2
  double max_nonlinear = 0.0;  // max |Omega_k|^4/|Delta_k|^3
  double leakage = 0.0;
  for (const auto& ch : all_channels) {
    if (!touches_target(ch.tr, target)) continue;
    const double r2 = (ch.rabi / ch.detuning) * (ch.rabi / ch.detuning);
    max_ratio2 = std::max(max_ratio2, r2);
    max_nonlinear = std::max(max_nonlinear, r2 * ch.rabi * ch.rabi / std::abs(ch.detuning));
    leakage += r2;
  }

  std::vector<BudgetEntry> budget;
  budget.push_back({"Ideal Rabi oscillation", "Omega", 1, rabi, false});
  budget.push_back({"AC Stark shift", "|Omega_k|^2/Delta_k", 2, std::abs(stark_diff), false});
  budget.push_back({"Rabi freq. correction", "Omega |Omega_k|^2/Delta_k^2", 3,
                    rabi * max_ratio2, false});
  budget.push_back({"Nonlinear Stark shift", "|Omega_k|^4/Delta_k^3", 4, max_nonlinear, false});
  budget.push_back({"Coherent leakage", "|Omega_k/Delta_k|^2", 3, leakage, true});
  return budget;
}

EffectiveReport effective_report(const SystemParams& p, const Transition& target,
                                 const Truncation& trunc) {
  EffectiveReport rep;
  rep.target = target;
  rep.rabi = resonant_block(p, target);
  const DriveFrequencies drives = DriveFrequencies::resonant(p, target);
  rep.stark_shifts = stark_shift_second_order(p, target, trunc, drives);
  rep.compensated_detuning = compensated_drive_frequency(p, target, trunc);
  rep.leakage_estimate = leakage_probability(p, target, trunc, drives);
  rep.budget = error_budget(p, target, trunc);
  return rep;
}

}  // namespace kerrsel
