#ifndef KERRSEL_PROTOCOLS_HPP
#define KERRSEL_PROTOCOLS_HPP

#include <optional>
#include <string>
#include <vector>

#include "kerrsel/evolve.hpp"
#include "kerrsel/magnus.hpp"

namespace kerrsel {

enum class StepKind { BS, TMS, ResetAncilla, Wait };

/// One timed, frequency-targeted pulse. AUTO fields (empty optionals) are
/// resolved before execution: the frequency from the Stark-compensated
/// transition frequency, the duration from t = theta/(2 Omega) refined by a
/// numeric calibration scan, and the edge-ramp length from the nearest
/// parasitic detuning (switching the coupler adiabatically with respect to
/// every off-resonant channel, suddenly with respect to the target).
struct PulseStep {
  StepKind kind = StepKind::BS;
  Transition target{TransitionKind::BS, 0, 1};
  double angle = 3.14159265358979323846;  // rotation angle, radians
  std::optional<double> drive_frequency;  // rad/us
  std::optional<double> duration;         // us, includes the two ramps
  std::optional<double> ramp;             // us, cos^2 edge length
  double phase = 0.0;                     // drive phase, radians

  bool is_pulse() const { return kind == StepKind::BS || kind == StepKind::TMS; }
  bool resolved() const {
    return !is_pulse() ? duration.has_value() || kind == StepKind::ResetAncilla
                       : drive_frequency.has_value() && duration.has_value();
  }
};

struct TargetAmplitude {
  KetLabel ket;
  Complex amp;
};

struct ProtocolSpec {
  std::string name;
  KetLabel initial{0, 0};
  std::vector<PulseStep> steps;
  std::vector<TargetAmplitude> target;
  std::vector<KetLabel> track_extra;  // additional kets recorded in the output

  Vector target_state(const Truncation& trunc) const;  // normalized
  /// Truncation covering every ket the protocol touches plus guard levels.
  Truncation default_truncation(int guard = 4) const;
};

/// Analytic pulse duration t = theta/(2 Omega) (plus one ramp length when the
/// edges are smoothed, preserving the pulse area); with calibrate the value
/// is refined against a closed-system scan of the single pulse (transfer
/// maximization for theta = pi, amplitude-ratio matching for theta < pi)
/// within +-20% of the analytic value.
double pulse_duration(const SystemParams& p, const Transition& tr, double theta,
                      bool calibrate = false,
                      const std::optional<Truncation>& trunc = std::nullopt,
                      std::optional<double> drive_frequency = std::nullopt,
                      double start_time = 0.0, double ramp = 0.0);

/// Edge-ramp length for a pulse on the target: a few periods of the nearest
/// parasitic channel, capped at a fraction of the nominal duration.
double pulse_ramp_time(const SystemParams& p, const Transition& tr, const Truncation& trunc);

/// Fills AUTO fields. Pulse steps see only their own coupling: the other
/// interaction is gated off for the Stark and calibration analysis.
PulseStep resolve_step(const SystemParams& p, const PulseStep& step, const Truncation& trunc,
                       double start_time = 0.0);

/// Partial pulse producing cos(theta/2)|i> - i e^{i phase} sin(theta/2)|f>
/// from the transition's source state.
PulseStep superposition_pulse(const SystemParams& p, const Transition& tr, double theta,
                              double phase);

/// Two-photon NOON state (|2,0> + e^{i phi}|0,2>)/sqrt(2) from vacuum.
ProtocolSpec noon_protocol(const SystemParams& p);

/// |4,0> from vacuum via alternating TMS and BS pi pulses.
ProtocolSpec fock4_protocol(const SystemParams& p);

/// |m,0> ladder; odd m starts from a |0,1> seed with an initial photon swap.
ProtocolSpec fock_ladder_protocol(const SystemParams& p, int m);

/// Binomial state (sqrt(3)|1,2> + |3,0>)/2 from |0,3> via timed partial swaps.
ProtocolSpec binomial_example_protocol(const SystemParams& p);

enum class ResetModel {
  Projective,   // mode 2 replaced by vacuum instantly
  DecayWindow,  // strong kappa_2 burst with couplings off (density-matrix path)
};

struct RunOptions {
  OdeOptions ode;
  double sample_dt = 0.0;  // 0: duration/samples_per_step per segment
  int samples_per_step = 200;
  ResetModel reset_model = ResetModel::Projective;
  double reset_kappa2 = 0.0;   // rad/us; 0 picks a rate well above all couplings
  bool calibrate_durations = true;
  bool smooth_edges = true;  // cos^2 switching; false forces square pulses
};

struct StepReport {
  PulseStep resolved;
  double t_begin = 0.0;
  double t_end = 0.0;
  double fidelity_after = 0.0;        // vs protocol target (phase-fit when 2-ket)
  double discarded_population = 0.0;  // projective-reset bookkeeping
};

struct ProtocolResult {
  SimResult sim;
  std::vector<StepReport> steps;
  double final_fidelity = 0.0;      // vs spec.target as given
  double phase_fit_fidelity = 0.0;  // relative phase between 2 target kets freed
  double peak_phase_fit_fidelity = 0.0;  // max of the phase-fit series
  double measured_phase = 0.0;      // achieved relative phase, radians
  double total_pulse_time = 0.0;    // us, resets excluded
};

/// Executes the sequence from spec.initial; closed-system when noise is null,
/// Lindblad otherwise. Fidelity series are reported in the rotating frame of
/// the free Hamiltonian for both paths.
ProtocolResult run_protocol(const ProtocolSpec& spec, const SystemParams& p,
                            const Truncation& trunc, const NoiseParams* noise = nullptr,
                            const RunOptions& opts = {});

/// Dissipative Fock-state stabilization: an ancilla drive plus pump/cool BS
/// tones against a strongly damped mode 2.
struct StabilizationConfig {
  int n0 = 1;
  double epsilon = 0.0;         // ancilla drive amplitude, rad/us
  double pump_amplitude = 0.0;  // 0: use params.j
  double cool_amplitude = 0.0;  // 0: use params.j
  NoiseParams noise;
};

struct StabilizationResult {
  SimResult sim;
  bool hierarchy_ok = true;
  std::vector<std::string> warnings;
  double target_population = 0.0;  // P(n1 = n0) at t_final
};

StabilizationResult stabilization_run(const StabilizationConfig& config,
                                      const SystemParams& p, const Truncation& trunc,
                                      double t_final, const RunOptions& opts = {});

/// max_phi |<target(phi)|state>|^2 for a two-component target; used for NOON
/// fidelities where the achieved phase is free.
double phase_fit_fidelity(const Vector& psi, const KetLabel& a, const KetLabel& b,
                          const Truncation& trunc, double weight_a = 0.5);
double phase_fit_fidelity(const Matrix& rho, const KetLabel& a, const KetLabel& b,
                          const Truncation& trunc, double weight_a = 0.5);

}  // namespace kerrsel

#endif
