#include "kerrsel/spectrum.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace kerrsel {

std::string Transition::str() const {
  return (kind == TransitionKind::BS ? std::string("BS(") : std::string("TMS(")) +
         std::to_string(n0) + "," + std::to_string(m0) + ")";
}

double transition_detuning(const SystemParams& p, const Transition& tr) {
  p.validate();
  if (!tr.valid()) throw std::domain_error("transition_detuning: invalid transition " + tr.str());
  const double n = tr.n0, m = tr.m0;
  if (tr.kind == TransitionKind::BS) {
    // E(n0+1, m0-1) - E(n0, m0)
    return p.omega1 - p.omega2 + p.k1 * n - p.k2 * (m - 1.0) + p.k12 * (m - n - 1.0);
  }
  // E(n0+1, m0+1) - E(n0, m0)
  return p.omega1 + p.omega2 + p.k1 * n + p.k2 * m + p.k12 * (n + m + 1.0);
}

double rabi_frequency(const SystemParams& p, const Transition& tr) {
  p.validate();
  if (!tr.valid()) throw std::domain_error("rabi_frequency: invalid transition " + tr.str());
  if (tr.kind == TransitionKind::BS) return p.j * std::sqrt(double(tr.n0 + 1) * double(tr.m0));
  return p.g * std::sqrt(double(tr.n0 + 1) * double(tr.m0 + 1));
}

double relative_detuning(const SystemParams& p, const Transition& target,
                         const Transition& parasitic) {
  if (target.kind != parasitic.kind) {
    throw std::domain_error("relative_detuning: mixed transition kinds");
  }
  const double dn = parasitic.n0 - target.n0;
  const double dm = parasitic.m0 - target.m0;
  if (target.kind == TransitionKind::BS) {
    return p.k1 * dn - p.k2 * dm + p.k12 * (dm - dn);
  }
  return p.k1 * dn + p.k2 * dm + p.k12 * (dn + dm);
}

double DegeneracyMap::min_offtarget_abs_delta() const {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& c : cells) {
    if (c.n_prime == target.n0 && c.m_prime == target.m0) continue;
    best = std::min(best, std::abs(c.delta_rel));
  }
  return best;
}

std::vector<std::array<int, 2>> DegeneracyMap::exact_zero_offsets(double tol) const {
  std::vector<std::array<int, 2>> zeros;
  for (const auto& c : cells) {
    const int dn = c.n_prime - target.n0;
    const int dm = c.m_prime - target.m0;
    if (dn == 0 && dm == 0) continue;
    if (std::abs(c.delta_rel) < tol) zeros.push_back({dn, dm});
  }
  return zeros;
}

DegeneracyMap degeneracy_map(const SystemParams& p, const Transition& target,
                             const Window& window) {
  p.validate();
  if (!target.valid()) throw std::domain_error("degeneracy_map: invalid target");
  if (window.dn < 1 || window.dm < 1) throw std::domain_error("degeneracy_map: window half-widths must be >= 1");

  DegeneracyMap map{target, window, {}};
  const int min_m = (target.kind == TransitionKind::BS) ? 1 : 0;
  for (int n = target.n0 - window.dn; n <= target.n0 + window.dn; ++n) {
    if (n < 0) continue;
    for (int m = target.m0 - window.dm; m <= target.m0 + window.dm; ++m) {
      if (m < min_m) continue;
      const Transition par{target.kind, n, m};
      DegeneracyCell cell;
      cell.n_prime = n;
      cell.m_prime = m;
      cell.delta_rel = relative_detuning(p, target, par);
      cell.rabi = rabi_frequency(p, par);
      cell.crowded = std::abs(cell.delta_rel) < 3.0 * cell.rabi &&
                     !(n == target.n0 && m == target.m0);
      map.cells.push_back(cell);
    }
  }
  return map;
}

SelectivityReport selectivity_margin(const SystemParams& p, const Transition& target,
                                     const Window& window) {
  p.validate();
  if (!target.valid()) throw std::domain_error("selectivity_margin: invalid target");
  if (window.dn < 1 || window.dm < 1) throw std::domain_error("selectivity_margin: window half-widths must be >= 1");

  SelectivityReport report;
  report.min_ratio = std::numeric_limits<double>::infinity();
  report.argmin = target;

  const double delta_target = transition_detuning(p, target);

  for (int pass = 0; pass < 2; ++pass) {
    const TransitionKind kind = (pass == 0) ? target.kind
                                            : (target.kind == TransitionKind::BS
                                                   ? TransitionKind::TMS
                                                   : TransitionKind::BS);
    const bool same_kind = (kind == target.kind);
    const int min_m = (kind == TransitionKind::BS) ? 1 : 0;
    for (int n = target.n0 - window.dn; n <= target.n0 + window.dn; ++n) {
      if (n < 0) continue;
      for (int m = target.m0 - window.dm; m <= target.m0 + window.dm; ++m) {
        if (m < min_m) continue;
        const Transition par{kind, n, m};
        if (same_kind && par == target) continue;
        const double rabi = rabi_frequency(p, par);
        if (rabi == 0.0) continue;
        // Same kind: detuning relative to the resonant drive (Kerr-difference form).
        // Opposite kind: bare frequency offset from the driven target; the
        // static-coupling form, frame-dependent through omega_j.
        const double det = same_kind ? relative_detuning(p, target, par)
                                     : transition_detuning(p, par) - delta_target;
        if (!same_kind && std::abs(det) < 10.0 * rabi) {
          report.tms_frame_flagged = true;
          report.notes.push_back(
              par.str() + " opposite-kind channel has |detuning| < 10 Rabi in this frame; "
                          "separation relies on the per-pulse modulation frequencies");
        }
        const double ratio = std::abs(det) / rabi;
        if (ratio < report.min_ratio) {
          report.min_ratio = ratio;
          report.argmin = par;
        }
      }
    }
  }
  return report;
}

std::vector<RationalWitness> best_rational_approximations(double x, long long max_q) {
  if (!std::isfinite(x) || x <= 0.0) {
    throw std::domain_error("best_rational_approximations: x must be finite and > 0");
  }
  if (max_q < 1) throw std::domain_error("best_rational_approximations: max_q must be >= 1");

  // Standard continued-fraction recurrence: p_k = a_k p_{k-1} + p_{k-2},
  // seeded with (p_{-2}, q_{-2}) = (0, 1) and (p_{-1}, q_{-1}) = (1, 0).
  std::vector<RationalWitness> out;
  long long p_prev = 0, q_prev = 1;
  long long p_curr = 1, q_curr = 0;
  double rem = x;
  for (int iter = 0; iter < 64; ++iter) {
    const double fl = std::floor(rem);
    if (fl > 9e17) break;
    const long long a = static_cast<long long>(fl);
    const long long p_next = a * p_curr + p_prev;
    const long long q_next = a * q_curr + q_prev;
    if (q_next > max_q) break;
    p_prev = p_curr;
    q_prev = q_curr;
    p_curr = p_next;
    q_curr = q_next;
    if (p_curr > 0) {  // skip the 0/1 convergent of x < 1, useless as a witness
      out.push_back({p_curr, q_curr, std::abs(x - double(p_curr) / double(q_curr))});
    }
    const double frac = rem - fl;
    if (frac < 1e-15 * std::max(1.0, std::abs(x))) break;
    rem = 1.0 / frac;
  }
  return out;
}

std::optional<std::array<long long, 3>> linear_independence_witness(
    double k1, double k2, double k12, int coeff_bound, double tol) {
  if (coeff_bound < 1) throw std::domain_error("linear_independence_witness: bound must be >= 1");
  const double scale = std::max({std::abs(k1), std::abs(k2), std::abs(k12)});
  if (tol < 0.0) tol = 1e-9 * scale;

  double best = std::numeric_limits<double>::infinity();
  std::array<long long, 3> argbest{0, 0, 0};
  for (int c1 = -coeff_bound; c1 <= coeff_bound; ++c1) {
    if (c1 == 0) continue;
    for (int c2 = -coeff_bound; c2 <= coeff_bound; ++c2) {
      if (c2 == 0) continue;
      for (int c3 = -coeff_bound; c3 <= coeff_bound; ++c3) {
        if (c3 == 0) continue;
        const double r = std::abs(c1 * k1 + c2 * k2 + c3 * k12);
        if (r < best) {
          best = r;
          argbest = {c1, c2, c3};
        }
      }
    }
  }
  if (best <= tol) return argbest;
  return std::nullopt;
}

}  // namespace kerrsel
