#include "kerrsel/hilbert.hpp"

#include <cmath>
#include <stdexcept>

namespace kerrsel {

std::string KetLabel::str() const {
  return "|" + std::to_string(n1) + "," + std::to_string(n2) + ">";
}

void SystemParams::validate() const {
  const double vals[] = {omega1, omega2, k1, k2, k12, j, g};
  for (double v : vals) {
    if (!std::isfinite(v)) throw std::domain_error("SystemParams: non-finite coefficient");
  }
  if (j < 0.0 || g < 0.0) throw std::domain_error("SystemParams: J and G must be >= 0");
}

int basis_index(const KetLabel& label, const Truncation& trunc) {
  if (label.n1 < 0 || label.n1 > trunc.nmax1 || label.n2 < 0 || label.n2 > trunc.nmax2) {
    throw std::domain_error("basis_index: ket " + label.str() + " outside truncation");
  }
  return label.n1 * (trunc.nmax2 + 1) + label.n2;
}

KetLabel basis_label(int index, const Truncation& trunc) {
  if (index < 0 || index >= trunc.dim()) {
    throw std::domain_error("basis_label: index outside basis");
  }
  const int w = trunc.nmax2 + 1;
  return {index / w, index % w};
}

Vector basis_state(const KetLabel& label, const Truncation& trunc) {
  Vector v = Vector::Zero(trunc.dim());
  v(basis_index(label, trunc)) = 1.0;
  return v;
}

Matrix annihilation_op(int mode, const Truncation& trunc) {
  if (mode != 1 && mode != 2) throw std::domain_error("annihilation_op: mode must be 1 or 2");
  const int d = trunc.dim();
  Matrix a = Matrix::Zero(d, d);
  for (int n1 = 0; n1 <= trunc.nmax1; ++n1) {
    for (int n2 = 0; n2 <= trunc.nmax2; ++n2) {
      const KetLabel from{n1, n2};
      if (mode == 1 && n1 >= 1) {
        a(basis_index({n1 - 1, n2}, trunc), basis_index(from, trunc)) = std::sqrt(double(n1));
      } else if (mode == 2 && n2 >= 1) {
        a(basis_index({n1, n2 - 1}, trunc), basis_index(from, trunc)) = std::sqrt(double(n2));
      }
    }
  }
  return a;
}

Matrix number_op(int mode, const Truncation& trunc) {
  if (mode != 1 && mode != 2) throw std::domain_error("number_op: mode must be 1 or 2");
  const int d = trunc.dim();
  Matrix n = Matrix::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    const KetLabel k = basis_label(i, trunc);
    n(i, i) = (mode == 1) ? double(k.n1) : double(k.n2);
  }
  return n;
}

Eigen::VectorXd free_energies(const SystemParams& p, const Truncation& trunc) {
  p.validate();
  Eigen::VectorXd e(trunc.dim());
  for (int i = 0; i < trunc.dim(); ++i) {
    const KetLabel k = basis_label(i, trunc);
    const double n1 = k.n1, n2 = k.n2;
    e(i) = p.omega1 * n1 + 0.5 * p.k1 * n1 * (n1 - 1.0) +
           p.omega2 * n2 + 0.5 * p.k2 * n2 * (n2 - 1.0) + p.k12 * n1 * n2;
  }
  return e;
}

Matrix free_hamiltonian(const SystemParams& p, const Truncation& trunc) {
  return free_energies(p, trunc).cast<Complex>().asDiagonal();
}

InteractionOps interaction_ops(const SystemParams& p, const Truncation& trunc) {
  p.validate();
  const int d = trunc.dim();
  InteractionOps ops{Matrix::Zero(d, d), Matrix::Zero(d, d)};
  for (int n1 = 0; n1 <= trunc.nmax1; ++n1) {
    for (int n2 = 0; n2 <= trunc.nmax2; ++n2) {
      const int col = basis_index({n1, n2}, trunc);
      // BS ladder: |n1,n2> -> |n1+1,n2-1>, element J sqrt((n1+1) n2)
      if (n1 + 1 <= trunc.nmax1 && n2 >= 1) {
        const int row = basis_index({n1 + 1, n2 - 1}, trunc);
        const double el = p.j * std::sqrt(double(n1 + 1) * double(n2));
        ops.bs(row, col) += el;
        ops.bs(col, row) += el;
      }
      // TMS ladder: |n1,n2> -> |n1+1,n2+1>, element G sqrt((n1+1)(n2+1))
      if (n1 + 1 <= trunc.nmax1 && n2 + 1 <= trunc.nmax2) {
        const int row = basis_index({n1 + 1, n2 + 1}, trunc);
        const double el = p.g * std::sqrt(double(n1 + 1) * double(n2 + 1));
        ops.tms(row, col) += el;
        ops.tms(col, row) += el;
      }
    }
  }
  return ops;
}

Matrix modulated_hamiltonian(const SystemParams& p, const Truncation& trunc,
                             const ModulationGates& gates,
                             const ModulationFreqs& freqs, double t) {
  if (!std::isfinite(freqs.omega_bs) || !std::isfinite(freqs.omega_tms) || !std::isfinite(t)) {
    throw std::domain_error("modulated_hamiltonian: non-finite frequency or time");
  }
  Matrix h = free_hamiltonian(p, trunc);
  if (!gates.bs_on && !gates.tms_on) return h;

  const int d = trunc.dim();
  for (int n1 = 0; n1 <= trunc.nmax1; ++n1) {
    for (int n2 = 0; n2 <= trunc.nmax2; ++n2) {
      const int col = n1 * (trunc.nmax2 + 1) + n2;
      if (gates.bs_on && n1 + 1 <= trunc.nmax1 && n2 >= 1) {
        const int row = (n1 + 1) * (trunc.nmax2 + 1) + (n2 - 1);
        const Complex el = p.j * std::sqrt(double(n1 + 1) * double(n2)) *
                           std::exp(Complex(0.0, -freqs.omega_bs * t));
        h(row, col) += el;
        h(col, row) += std::conj(el);
      }
      if (gates.tms_on && n1 + 1 <= trunc.nmax1 && n2 + 1 <= trunc.nmax2) {
        const int row = (n1 + 1) * (trunc.nmax2 + 1) + (n2 + 1);
        const Complex el = p.g * std::sqrt(double(n1 + 1) * double(n2 + 1)) *
                           std::exp(Complex(0.0, -freqs.omega_tms * t));
        h(row, col) += el;
        h(col, row) += std::conj(el);
      }
    }
  }
  (void)d;
  return h;
}

namespace {

// Diagonal of [a_j, a_j^] with truncated operators: 1 everywhere except the
// cutoff level, where it is -nmax instead of 1.
double commutator_expectation(const Eigen::VectorXd& populations, int mode,
                              const Truncation& trunc) {
  double acc = 0.0;
  const int nmax = (mode == 1) ? trunc.nmax1 : trunc.nmax2;
  for (int i = 0; i < int(populations.size()); ++i) {
    const KetLabel k = basis_label(i, trunc);
    const int n = (mode == 1) ? k.n1 : k.n2;
    acc += populations(i) * ((n == nmax) ? -double(nmax) : 1.0);
  }
  return acc;
}

}  // namespace

double commutator_truncation_error(const Vector& psi, int mode, const Truncation& trunc) {
  if (psi.size() != trunc.dim()) throw std::domain_error("commutator_truncation_error: dimension mismatch");
  if (mode != 1 && mode != 2) throw std::domain_error("commutator_truncation_error: mode must be 1 or 2");
  const Eigen::VectorXd pops = psi.cwiseAbs2();
  return std::abs(commutator_expectation(pops, mode, trunc) - 1.0);
}

double commutator_truncation_error(const Matrix& rho, int mode, const Truncation& trunc) {
  if (rho.rows() != trunc.dim() || rho.cols() != trunc.dim()) {
    throw std::domain_error("commutator_truncation_error: dimension mismatch");
  }
  if (mode != 1 && mode != 2) throw std::domain_error("commutator_truncation_error: mode must be 1 or 2");
  const Eigen::VectorXd pops = rho.diagonal().real();
  return std::abs(commutator_expectation(pops, mode, trunc) - 1.0);
}

}  // namespace kerrsel
