#ifndef KERRSEL_SPECTRUM_HPP
#define KERRSEL_SPECTRUM_HPP

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "kerrsel/hilbert.hpp"

namespace kerrsel {

enum class TransitionKind { BS, TMS };

/// A Fock-state transition labeled by its source occupation (n0, m0).
/// BS drives |n0,m0> <-> |n0+1,m0-1>; TMS drives |n0,m0> <-> |n0+1,m0+1>.
struct Transition {
  TransitionKind kind = TransitionKind::BS;
  int n0 = 0;
  int m0 = 0;

  KetLabel source() const { return {n0, m0}; }
  KetLabel destination() const {
    return kind == TransitionKind::BS ? KetLabel{n0 + 1, m0 - 1} : KetLabel{n0 + 1, m0 + 1};
  }
  bool valid() const {
    return n0 >= 0 && m0 >= 0 && (kind == TransitionKind::TMS || m0 >= 1);
  }
  auto operator<=>(const Transition&) const = default;
  std::string str() const;
};

/// Bare transition frequency (rad/us): the free-Hamiltonian eigenvalue
/// difference E(destination) - E(source), including cross-Kerr.
double transition_detuning(const SystemParams& p, const Transition& tr);

/// Coupling strength of the transition (rad/us):
///   BS: J sqrt((n0+1) m0),  TMS: G sqrt((n0+1)(m0+1)).
double rabi_frequency(const SystemParams& p, const Transition& tr);

/// Detuning of a parasitic transition relative to a resonantly driven target
/// of the same kind (rad/us):
///   BS:  K1 dn - K2 dm + K12 (dm - dn),
///   TMS: K1 dn + K2 dm + K12 (dn + dm),   dn = n'-n0, dm = m'-m0.
double relative_detuning(const SystemParams& p, const Transition& target,
                         const Transition& parasitic);

struct Window {
  int dn = 1;  // half-width in n'
  int dm = 1;  // half-width in m'
};

struct DegeneracyCell {
  int n_prime = 0;
  int m_prime = 0;
  double delta_rel = 0.0;  // rad/us
  double rabi = 0.0;       // rad/us
  bool crowded = false;    // |delta_rel| < 3 * rabi
};

struct DegeneracyMap {
  Transition target;
  Window window;
  std::vector<DegeneracyCell> cells;  // row-major over the clipped window

  /// Smallest |delta_rel| over cells other than the target itself.
  double min_offtarget_abs_delta() const;
  /// Offsets (dn, dm) with |delta_rel| below tol (target excluded).
  std::vector<std::array<int, 2>> exact_zero_offsets(double tol) const;
};

/// Same-kind parasitic detunings and Rabi frequencies on a window around the
/// target; occupations clipped at the Fock-space boundary are skipped.
DegeneracyMap degeneracy_map(const SystemParams& p, const Transition& target,
                             const Window& window);

struct SelectivityReport {
  double min_ratio = 0.0;  // min |detuning| / rabi over parasitic channels
  Transition argmin;
  bool tms_frame_flagged = false;  // some TMS channel had |Delta| < 10 Omega
  std::vector<std::string> notes;
};

/// Worst-case selectivity over both same-kind parasitic transitions and the
/// opposite-kind channels (the latter with their frame-dependent detunings;
/// see notes when they are flagged). Channels with zero coupling are skipped;
/// if nothing couples, min_ratio is +infinity.
SelectivityReport selectivity_margin(const SystemParams& p, const Transition& target,
                                     const Window& window);

/// Continued-fraction convergent p/q of a Kerr ratio, with the first
/// systematic degeneracy it implies at (dn, dm) = (q, p).
struct RationalWitness {
  long long p = 0;
  long long q = 1;
  double error = 0.0;  // |x - p/q|
  std::array<long long, 2> first_degeneracy() const { return {q, p}; }
};

/// Convergents of the continued fraction of x with denominator <= max_q,
/// in order of increasing q.
std::vector<RationalWitness> best_rational_approximations(double x, long long max_q);

/// Searches integer triples (c1,c2,c3), all nonzero, |ci| <= coeff_bound, for
/// c1 k1 + c2 k2 + c3 k12 ~ 0. Returns the minimizing triple if its residual
/// is below tol (default 1e-9 * max|k|), else nullopt.
std::optional<std::array<long long, 3>> linear_independence_witness(
    double k1, double k2, double k12, int coeff_bound, double tol = -1.0);

}  // namespace kerrsel

#endif
