#ifndef KERRSEL_PULSE_HPP
#define KERRSEL_PULSE_HPP

#include <functional>
#include <limits>
#include <vector>

#include "kerrsel/hilbert.hpp"

namespace kerrsel {

/// Matrix-free time-dependent Hamiltonian, the input of the evolution engines.
class TimeDependentHamiltonian {
 public:
  virtual ~TimeDependentHamiltonian() = default;
  virtual int dim() const = 0;
  /// out = H(t) * in
  virtual void apply(double t, Eigen::Ref<const Vector> in, Eigen::Ref<Vector> out) const = 0;
  /// Dense snapshot; default assembles columns through apply().
  virtual Matrix matrix(double t) const;
  /// Step-size cap that resolves the fastest internal oscillation (0 = none).
  virtual double suggested_max_step() const { return 0.0; }
};

/// Wraps an arbitrary matrix-valued function of time.
class CallbackHamiltonian final : public TimeDependentHamiltonian {
 public:
  CallbackHamiltonian(int dim, std::function<Matrix(double)> fn)
      : dim_(dim), fn_(std::move(fn)) {}
  int dim() const override { return dim_; }
  void apply(double t, Eigen::Ref<const Vector> in, Eigen::Ref<Vector> out) const override {
    out.noalias() = fn_(t) * in;
  }
  Matrix matrix(double t) const override { return fn_(t); }

 private:
  int dim_;
  std::function<Matrix(double)> fn_;
};

/// Time-independent Hamiltonian.
class StaticHamiltonian final : public TimeDependentHamiltonian {
 public:
  explicit StaticHamiltonian(Matrix h) : h_(std::move(h)) {}
  int dim() const override { return int(h_.rows()); }
  void apply(double, Eigen::Ref<const Vector> in, Eigen::Ref<Vector> out) const override {
    out.noalias() = h_ * in;
  }
  Matrix matrix(double) const override { return h_; }

 private:
  Matrix h_;
};

enum class CouplingKind { BS, TMS, Drive1, Drive2 };

/// One modulation tone: s(t) * amplitude * (Op e^{-i(omega t + phase)} + h.c.)
/// with Op = a1^ a2 (BS), a1^ a2^ (TMS), a1^ (Drive1) or a2^ (Drive2).
/// The envelope s(t) is 1 on [t_on, t_off] with optional cos^2 edges of
/// length `ramp` inside the window (ramp = 0 gives a square pulse); leaving
/// the window unbounded gives a CW tone.
struct Tone {
  CouplingKind kind = CouplingKind::BS;
  double amplitude = 0.0;  // rad/us
  double omega = 0.0;      // rad/us
  double phase = 0.0;      // radians
  double t_on = -std::numeric_limits<double>::infinity();
  double t_off = std::numeric_limits<double>::infinity();
  double ramp = 0.0;  // us
};

/// Envelope value of a tone at time t.
double tone_envelope(const Tone& tone, double t);

/// The modulated system Hamiltonian in the interaction picture of H0: the
/// Kerr diagonal is absorbed into per-element phase factors, so each coupling
/// element oscillates at its transition detuning minus its tone frequency.
/// Populations and Fock-projector expectations agree with the lab frame;
/// relative phases differ by the diagonal frame_phases().
class RotatingFramePulse final : public TimeDependentHamiltonian {
 public:
  RotatingFramePulse(const SystemParams& p, const Truncation& trunc, std::vector<Tone> tones);

  int dim() const override { return dim_; }
  void apply(double t, Eigen::Ref<const Vector> in, Eigen::Ref<Vector> out) const override;
  Matrix matrix(double t) const override;
  double suggested_max_step() const override;

  /// Diagonal of e^{-i H0 t}: maps an interaction-picture state to the lab frame.
  Vector frame_phases(double t) const;

  int element_count() const { return int(amps_.size()); }

 private:
  int dim_ = 0;
  Eigen::VectorXd energies_;
  std::vector<Tone> tones_;
  std::vector<std::pair<int, int>> tone_ranges_;  // element span per tone
  Eigen::VectorXi rows_, cols_;
  Eigen::ArrayXd amps_, freqs_, phases_;
};

/// Same tones in the lab frame (dense assembly); the Lindblad path uses this
/// because the local dissipators are time-independent there.
class LabFramePulse final : public TimeDependentHamiltonian {
 public:
  LabFramePulse(const SystemParams& p, const Truncation& trunc, std::vector<Tone> tones);

  int dim() const override { return dim_; }
  void apply(double t, Eigen::Ref<const Vector> in, Eigen::Ref<Vector> out) const override;
  Matrix matrix(double t) const override;
  double suggested_max_step() const override;

 private:
  int dim_ = 0;
  Matrix h0_;
  std::vector<Tone> tones_;
  std::vector<Matrix> ops_;  // raising part of each tone
  double freq_scale_ = 0.0;
};

/// Coupling operator of one tone kind (raising part only).
Matrix coupling_operator(CouplingKind kind, const Truncation& trunc);

}  // namespace kerrsel

#endif
