#include "kerrsel/pulse.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace kerrsel {

Matrix TimeDependentHamiltonian::matrix(double t) const {
  const int d = dim();
  Matrix m(d, d);
  Vector e = Vector::Zero(d), col(d);
  for (int j = 0; j < d; ++j) {
    e(j) = 1.0;
    apply(t, e, col);
    m.col(j) = col;
    e(j) = 0.0;
  }
  return m;
}

Matrix coupling_operator(CouplingKind kind, const Truncation& trunc) {
  const int d = trunc.dim();
  Matrix op = Matrix::Zero(d, d);
  for (int n1 = 0; n1 <= trunc.nmax1; ++n1) {
    for (int n2 = 0; n2 <= trunc.nmax2; ++n2) {
      const int col = basis_index({n1, n2}, trunc);
      switch (kind) {
        case CouplingKind::BS:
          if (n1 + 1 <= trunc.nmax1 && n2 >= 1) {
            op(basis_index({n1 + 1, n2 - 1}, trunc), col) =
                std::sqrt(double(n1 + 1) * double(n2));
          }
          break;
        case CouplingKind::TMS:
          if (n1 + 1 <= trunc.nmax1 && n2 + 1 <= trunc.nmax2) {
            op(basis_index({n1 + 1, n2 + 1}, trunc), col) =
                std::sqrt(double(n1 + 1) * double(n2 + 1));
          }
          break;
        case CouplingKind::Drive1:
          if (n1 + 1 <= trunc.nmax1) {
            op(basis_index({n1 + 1, n2}, trunc), col) = std::sqrt(double(n1 + 1));
          }
          break;
        case CouplingKind::Drive2:
          if (n2 + 1 <= trunc.nmax2) {
            op(basis_index({n1, n2 + 1}, trunc), col) = std::sqrt(double(n2 + 1));
          }
          break;
      }
    }
  }
  return op;
}

double tone_envelope(const Tone& tone, double t) {
  if (t < tone.t_on || t > tone.t_off) return 0.0;
  if (tone.ramp <= 0.0) return 1.0;
  const double up = t - tone.t_on;
  const double down = tone.t_off - t;
  double s = 1.0;
  if (up < tone.ramp) {
    const double x = std::sin(0.5 * std::numbers::pi * up / tone.ramp);
    s *= x * x;
  }
  if (down < tone.ramp) {
    const double x = std::sin(0.5 * std::numbers::pi * down / tone.ramp);
    s *= x * x;
  }
  return s;
}

RotatingFramePulse::RotatingFramePulse(const SystemParams& p, const Truncation& trunc,
                                       std::vector<Tone> tones)
    : dim_(trunc.dim()), energies_(free_energies(p, trunc)) {
  std::vector<int> rows, cols;
  std::vector<double> amps, freqs, phases;
  for (const Tone& tone : tones) {
    if (tone.amplitude == 0.0) continue;
    if (!std::isfinite(tone.amplitude) || !std::isfinite(tone.omega) ||
        !std::isfinite(tone.phase)) {
      throw std::domain_error("RotatingFramePulse: non-finite tone");
    }
    const int begin = int(amps.size());
    const Matrix op = coupling_operator(tone.kind, trunc);
    for (int c = 0; c < dim_; ++c) {
      for (int r = 0; r < dim_; ++r) {
        const double el = op(r, c).real();
        if (el == 0.0) continue;
        rows.push_back(r);
        cols.push_back(c);
        amps.push_back(tone.amplitude * el);
        freqs.push_back(energies_(r) - energies_(c) - tone.omega);
        phases.push_back(-tone.phase);
      }
    }
    tones_.push_back(tone);
    tone_ranges_.emplace_back(begin, int(amps.size()));
  }
  const int n = int(amps.size());
  rows_ = Eigen::Map<Eigen::VectorXi>(rows.data(), n);
  cols_ = Eigen::Map<Eigen::VectorXi>(cols.data(), n);
  amps_ = Eigen::Map<Eigen::ArrayXd>(amps.data(), n);
  freqs_ = Eigen::Map<Eigen::ArrayXd>(freqs.data(), n);
  phases_ = Eigen::Map<Eigen::ArrayXd>(phases.data(), n);
}

void RotatingFramePulse::apply(double t, Eigen::Ref<const Vector> in,
                               Eigen::Ref<Vector> out) const {
  out.setZero();
  const int n = int(amps_.size());
  if (n == 0) return;
  // element factors s(t) * amp * e^{i(freq t + phase)}, vectorized
  const Eigen::ArrayXd theta = freqs_ * t + phases_;
  const Eigen::ArrayXd re = amps_ * theta.cos();
  const Eigen::ArrayXd im = amps_ * theta.sin();
  for (size_t ti = 0; ti < tones_.size(); ++ti) {
    const double s = tone_envelope(tones_[ti], t);
    if (s == 0.0) continue;
    const auto [begin, end] = tone_ranges_[ti];
    for (int k = begin; k < end; ++k) {
      const Complex f(s * re(k), s * im(k));
      out(rows_(k)) += f * in(cols_(k));
      out(cols_(k)) += std::conj(f) * in(rows_(k));
    }
  }
}

Matrix RotatingFramePulse::matrix(double t) const {
  Matrix m = Matrix::Zero(dim_, dim_);
  const int n = int(amps_.size());
  if (n == 0) return m;
  const Eigen::ArrayXd theta = freqs_ * t + phases_;
  for (size_t ti = 0; ti < tones_.size(); ++ti) {
    const double s = tone_envelope(tones_[ti], t);
    if (s == 0.0) continue;
    const auto [begin, end] = tone_ranges_[ti];
    for (int k = begin; k < end; ++k) {
      const Complex f = s * amps_(k) * Complex(std::cos(theta(k)), std::sin(theta(k)));
      m(rows_(k), cols_(k)) += f;
      m(cols_(k), rows_(k)) += std::conj(f);
    }
  }
  return m;
}

double RotatingFramePulse::suggested_max_step() const {
  const double wmax = amps_.size() ? freqs_.abs().maxCoeff() : 0.0;
  if (wmax <= 0.0) return 0.0;
  return std::numbers::pi / (2.0 * wmax);
}

Vector RotatingFramePulse::frame_phases(double t) const {
  Vector ph(dim_);
  for (int i = 0; i < dim_; ++i) {
    ph(i) = std::exp(Complex(0.0, -energies_(i) * t));
  }
  return ph;
}

LabFramePulse::LabFramePulse(const SystemParams& p, const Truncation& trunc,
                             std::vector<Tone> tones)
    : dim_(trunc.dim()), h0_(free_hamiltonian(p, trunc)), tones_(std::move(tones)) {
  const Eigen::VectorXd e = free_energies(p, trunc);
  double spread = e.maxCoeff() - e.minCoeff();
  for (const Tone& tone : tones_) {
    if (!std::isfinite(tone.amplitude) || !std::isfinite(tone.omega)) {
      throw std::domain_error("LabFramePulse: non-finite tone");
    }
    ops_.push_back(coupling_operator(tone.kind, trunc));
    spread = std::max(spread, std::abs(tone.omega));
  }
  freq_scale_ = spread;
}

void LabFramePulse::apply(double t, Eigen::Ref<const Vector> in,
                          Eigen::Ref<Vector> out) const {
  out.noalias() = matrix(t) * in;
}

Matrix LabFramePulse::matrix(double t) const {
  Matrix h = h0_;
  for (size_t k = 0; k < tones_.size(); ++k) {
    const Tone& tone = tones_[k];
    if (tone.amplitude == 0.0) continue;
    const double s = tone_envelope(tone, t);
    if (s == 0.0) continue;
    const Complex f =
        s * tone.amplitude * std::exp(Complex(0.0, -(tone.omega * t + tone.phase)));
    h.noalias() += f * ops_[k];
    h.noalias() += std::conj(f) * ops_[k].adjoint();
  }
  return h;
}

double LabFramePulse::suggested_max_step() const {
  if (freq_scale_ <= 0.0) return 0.0;
  return std::numbers::pi / (2.0 * freq_scale_);
}

}  // namespace kerrsel
