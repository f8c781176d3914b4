#ifndef KERRSEL_MAGNUS_HPP
#define KERRSEL_MAGNUS_HPP

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "kerrsel/spectrum.hpp"

namespace kerrsel {

/// Thrown when a parasitic channel is (near-)degenerate with the target, so
/// the perturbative 1/Delta expressions are meaningless.
class DegeneracyError : public std::runtime_error {
 public:
  DegeneracyError(const Transition& tr, double detuning)
      : std::runtime_error("degenerate parasitic channel " + tr.str() +
                           " (|detuning| = " + std::to_string(detuning) + " rad/us)"),
        transition(tr) {}
  Transition transition;
};

/// Active modulation frequencies (rad/us) of the two couplings. A kind with
/// no entry is treated as statically coupled (zero modulation frequency).
struct DriveFrequencies {
  std::optional<double> bs;
  std::optional<double> tms;

  /// The drive that puts the given target exactly on resonance.
  static DriveFrequencies resonant(const SystemParams& p, const Transition& target);
};

/// First-order Magnus block: the resonant coupling strength. The effective
/// two-level model is H_eff = rabi * (|f><i| + h.c.).
double resonant_block(const SystemParams& p, const Transition& target);

/// Oscillation frequency of a parasitic matrix element in the frame where the
/// target element is static. Same-kind channels reduce to relative_detuning;
/// opposite-kind channels keep the bare frequency offset (plus any modulation
/// of their own drive).
double parasitic_detuning(const SystemParams& p, const Transition& target,
                          const Transition& parasitic, const DriveFrequencies& drives);

/// One off-resonant coupling in the truncated space.
struct CoupledChannel {
  Transition tr;
  double rabi = 0.0;      // rad/us
  double detuning = 0.0;  // rad/us, relative to the static target element
};

/// All off-resonant channels whose endpoints fit in the truncation (the
/// target channel excluded). A coupling kind opens channels only while it is
/// both nonzero and actively driven (its DriveFrequencies entry present); an
/// undriven coupler is gated off. Passing the same tone for both kinds
/// recovers the single-physical-drive picture, where an undriven coupler
/// inherits the frequency offset of the active tone.
std::vector<CoupledChannel> offresonant_channels(const SystemParams& p,
                                                 const Transition& target,
                                                 const Truncation& trunc,
                                                 const DriveFrequencies& drives);

/// Generic second-order diagonal correction: each channel shifts its upper
/// state by +rabi^2/detuning and its lower one by -rabi^2/detuning.
struct TwoLevelChannel {
  int lower = 0;
  int upper = 0;
  double rabi = 0.0;
  double detuning = 0.0;
};
Eigen::VectorXd stark_shifts_from_channels(const std::vector<TwoLevelChannel>& channels,
                                           int dim);

/// Second-order AC Stark shifts (rad/us) of every ket touched by an
/// off-resonant channel; untouched kets are absent (shift 0).
/// Throws DegeneracyError if any channel detuning is below 1e-6 max(J,G).
std::map<KetLabel, double> stark_shift_second_order(const SystemParams& p,
                                                    const Transition& target,
                                                    const Truncation& trunc,
                                                    const DriveFrequencies& drives);

/// Second-order leakage estimate: sum of |rabi/detuning|^2 over the parasitic
/// channels that touch either target state.
double leakage_probability(const SystemParams& p, const Transition& target,
                           const Truncation& trunc, const DriveFrequencies& drives);

struct BudgetEntry {
  std::string effect;
  std::string scaling;     // symbolic scaling law
  int magnus_order = 1;
  double magnitude = 0.0;  // rad/us, or probability when is_probability
  bool is_probability = false;
};

/// Table of systematic coherent errors for a selective gate on the target:
/// orders 1-2 computed exactly, orders 3-4 as scaling estimates.
std::vector<BudgetEntry> error_budget(const SystemParams& p, const Transition& target,
                                      const Truncation& trunc);

/// Drive frequency with the second-order Stark difference between the target
/// states folded in: bare detuning + [shift(final) - shift(initial)].
double compensated_drive_frequency(const SystemParams& p, const Transition& target,
                                   const Truncation& trunc);

struct EffectiveReport {
  Transition target;
  double rabi = 0.0;
  std::map<KetLabel, double> stark_shifts;
  double compensated_detuning = 0.0;
  double leakage_estimate = 0.0;
  std::vector<BudgetEntry> budget;
};

EffectiveReport effective_report(const SystemParams& p, const Transition& target,
                                 const Truncation& trunc);

}  // namespace kerrsel

#endif
