#ifndef KERRSEL_HILBERT_HPP
#define KERRSEL_HILBERT_HPP

#include <complex>
#include <compare>
#include <string>

#include <Eigen/Dense>

namespace kerrsel {

using Complex = std::complex<double>;
using Vector = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXcd;

/// Photon-number cutoffs of the truncated two-mode product basis.
/// Both bounds are inclusive: mode j holds 0..nmax_j photons.
struct Truncation {
  int nmax1 = 0;
  int nmax2 = 0;

  int dim() const { return (nmax1 + 1) * (nmax2 + 1); }
  bool operator==(const Truncation&) const = default;
};

/// Product-basis ket |n1, n2>.
struct KetLabel {
  int n1 = 0;
  int n2 = 0;

  auto operator<=>(const KetLabel&) const = default;
  std::string str() const;
};

/// Hamiltonian coefficients, all in rad/us.
/// omega_j: mode frequencies (0 in the default rotating frame),
/// k_j: self-Kerr, k12: cross-Kerr, j/g: BS and TMS coupling strengths.
struct SystemParams {
  double omega1 = 0.0;
  double omega2 = 0.0;
  double k1 = 0.0;
  double k2 = 0.0;
  double k12 = 0.0;
  double j = 0.0;
  double g = 0.0;

  void validate() const;  // throws std::domain_error on non-finite or j,g < 0
};

// Basis layout is row-major in (n1, n2): index = n1*(nmax2+1) + n2.
int basis_index(const KetLabel& label, const Truncation& trunc);
KetLabel basis_label(int index, const Truncation& trunc);

/// Unit vector for |n1, n2>.
Vector basis_state(const KetLabel& label, const Truncation& trunc);

/// Annihilation operator of one mode, tensored with identity on the other.
Matrix annihilation_op(int mode, const Truncation& trunc);

/// Number operator of one mode.
Matrix number_op(int mode, const Truncation& trunc);

/// Diagonal of the free Hamiltonian:
///   E(n1,n2) = w1 n1 + (K1/2) n1(n1-1) + w2 n2 + (K2/2) n2(n2-1) + K12 n1 n2.
Eigen::VectorXd free_energies(const SystemParams& p, const Truncation& trunc);

/// Free Hamiltonian (Kerr + cross-Kerr), diagonal in the Fock basis.
Matrix free_hamiltonian(const SystemParams& p, const Truncation& trunc);

struct InteractionOps {
  Matrix bs;   // J (a1^ a2 + a1 a2^), Hermitian
  Matrix tms;  // G (a1^ a2^ + a1 a2), Hermitian
};
InteractionOps interaction_ops(const SystemParams& p, const Truncation& trunc);

struct ModulationGates {
  bool bs_on = false;
  bool tms_on = false;
};
struct ModulationFreqs {
  double omega_bs = 0.0;   // rad/us
  double omega_tms = 0.0;  // rad/us
};

/// Full modulated Hamiltonian at time t:
///   H(t) = H0 + bs_on * J (a1^ a2 e^{-i w_bs t} + h.c.)
///             + tms_on * G (a1^ a2^ e^{-i w_tms t} + h.c.)
/// With this sign, setting w_bs (w_tms) equal to the transition detuning of a
/// target makes that matrix element static in the interaction picture of H0.
Matrix modulated_hamiltonian(const SystemParams& p, const Truncation& trunc,
                             const ModulationGates& gates,
                             const ModulationFreqs& freqs, double t);

/// |<[a_j, a_j^]> - 1| evaluated with truncated ladder operators; the
/// Fock-space cutoff hygiene check of a (normalized) state.
double commutator_truncation_error(const Vector& psi, int mode,
                                   const Truncation& trunc);
double commutator_truncation_error(const Matrix& rho, int mode,
                                   const Truncation& trunc);

}  // namespace kerrsel

#endif
