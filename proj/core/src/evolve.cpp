#include "kerrsel/evolve.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <boost/numeric/odeint.hpp>
#include <unsupported/Eigen/MatrixFunctions>

namespace kerrsel {

namespace {

namespace ode = boost::numeric::odeint;
using OdeState = std::vector<Complex>;

struct SampleGrid {
  std::vector<double> times;
};

SampleGrid make_grid(double t0, double t1, double sample_dt) {
  if (!(t1 >= t0)) throw std::domain_error("evolve: t1 must be >= t0");
  SampleGrid g;
  if (t1 == t0) {
    g.times = {t0};
    return g;
  }
  if (sample_dt <= 0.0) sample_dt = (t1 - t0) / 400.0;
  const double eps = 1e-12 * std::max(1.0, std::abs(t1));
  for (double t = t0; t < t1 - eps; t += sample_dt) g.times.push_back(t);
  g.times.push_back(t1);
  return g;
}

double edge_population(const Eigen::VectorXd& pops, const Truncation& trunc) {
  double acc = 0.0;
  for (int i = 0; i < pops.size(); ++i) {
    const KetLabel k = basis_label(i, trunc);
    if (k.n1 == trunc.nmax1 || k.n2 == trunc.nmax2) acc += pops(i);
  }
  return acc;
}

/// Shared per-sample bookkeeping for both evolution flavors.
class Recorder {
 public:
  Recorder(const SampleSpec& spec, const SampleGrid& grid, bool pure) : spec_(spec) {
    result_.times.reserve(grid.times.size());
    result_.tracked = spec.tracked;
    result_.populations.resize(grid.times.size(), spec.tracked.size());
    result_.is_pure = pure;
    if (spec.fidelity_target.size() > 0 && spec.trunc &&
        spec.fidelity_target.size() != spec.trunc->dim()) {
      throw std::domain_error("evolve: fidelity target dimension mismatch");
    }
    if (spec_.trunc) {
      tracked_idx_.reserve(spec.tracked.size());
      for (const auto& k : spec.tracked) tracked_idx_.push_back(basis_index(k, *spec_.trunc));
    } else if (!spec.tracked.empty()) {
      throw std::domain_error("evolve: tracked kets require a Truncation in the SampleSpec");
    }
    for (const auto& pr : spec_.probes) result_.extra[pr.name] = {};
  }

  void sample(double t, const Vector* psi, const Matrix* rho) {
    Eigen::VectorXd pops;
    double norm_drift = 0.0;
    const bool want_fid = spec_.fidelity_target_fn || spec_.fidelity_target.size() > 0;
    Vector target;
    if (want_fid) {
      target = spec_.fidelity_target_fn ? spec_.fidelity_target_fn(t) : spec_.fidelity_target;
    }
    if (psi) {
      pops = psi->cwiseAbs2();
      norm_drift = std::abs(pops.sum() - 1.0);
      if (want_fid) result_.fidelity.push_back(fidelity(*psi, target));
    } else {
      pops = rho->diagonal().real();
      norm_drift = std::abs(rho->trace().real() - 1.0);
      if (want_fid) result_.fidelity.push_back(fidelity(*rho, target));
      const double min_diag = pops.minCoeff();
      if (min_diag < -1e-6) negative_diag_ = std::min(negative_diag_, min_diag);
    }
    const int row = int(result_.times.size());
    result_.times.push_back(t);
    for (size_t c = 0; c < tracked_idx_.size(); ++c) {
      result_.populations(row, int(c)) = pops(tracked_idx_[c]);
    }
    result_.diag.max_norm_drift = std::max(result_.diag.max_norm_drift, norm_drift);
    if (spec_.trunc) {
      result_.diag.max_edge_population =
          std::max(result_.diag.max_edge_population, edge_population(pops, *spec_.trunc));
    }
    for (const auto& pr : spec_.probes) result_.extra[pr.name].push_back(pr.fn(t, psi, rho));
  }

  SimResult finish(long long steps) {
    result_.diag.steps = steps;
    if (result_.diag.max_edge_population > 1e-6) {
      result_.diag.converged = false;
      result_.diag.warnings.push_back("truncation edge population exceeded 1e-6");
    }
    if (negative_diag_ < -1e-6) {
      result_.diag.converged = false;
      result_.diag.warnings.push_back("density-matrix diagonal drifted below -1e-6");
    }
    result_.populations.conservativeResize(result_.times.size(), Eigen::NoChange);
    return std::move(result_);
  }

 private:
  const SampleSpec& spec_;
  std::vector<int> tracked_idx_;
  double negative_diag_ = 0.0;
  SimResult result_;
};

template <typename Rhs>
long long integrate_sampled(Rhs&& rhs, OdeState& state, double t0, double t1,
                            const SampleGrid& grid, const OdeOptions& opts,
                            double default_rtol, double suggested_max_step,
                            const std::function<void(double, const OdeState&)>& emit) {
  double max_step = opts.max_step > 0.0 ? opts.max_step : suggested_max_step;
  const double span = t1 - t0;
  if (max_step <= 0.0 || max_step > span) max_step = span;
  double dt0 = opts.init_step > 0.0 ? opts.init_step : std::min(max_step, span / 100.0);
  if (dt0 <= 0.0) dt0 = span;
  const double rtol = opts.rtol > 0.0 ? opts.rtol : default_rtol;

  auto stepper =
      ode::make_dense_output(opts.atol, rtol, max_step, ode::runge_kutta_dopri5<OdeState>());
  stepper.initialize(state, t0, dt0);

  size_t next_sample = 0;
  // t0 sample comes straight from the initial state
  if (next_sample < grid.times.size() && grid.times[next_sample] <= t0) {
    emit(t0, state);
    ++next_sample;
  }

  long long steps = 0;
  OdeState scratch(state.size());
  while (stepper.current_time() < t1 && next_sample < grid.times.size()) {
    stepper.do_step(rhs);
    ++steps;
    if (!std::isfinite(stepper.current_time())) {
      throw std::runtime_error("evolve: integrator produced non-finite time");
    }
    while (next_sample < grid.times.size() &&
           grid.times[next_sample] <= stepper.current_time()) {
      stepper.calc_state(grid.times[next_sample], scratch);
      emit(grid.times[next_sample], scratch);
      ++next_sample;
    }
    if (steps > 500000000LL) throw std::runtime_error("evolve: step limit exceeded");
  }
  // state at exactly t1
  if (stepper.current_time() >= t1) {
    stepper.calc_state(t1, state);
  } else {
    state = stepper.current_state();
  }
  return steps;
}

}  // namespace

void NoiseParams::validate() const {
  const double vals[] = {kappa1, kappa2, nth1, nth2};
  for (double v : vals) {
    if (!std::isfinite(v) || v < 0.0) {
      throw std::domain_error("NoiseParams: rates and occupations must be finite and >= 0");
    }
  }
}

void SimResult::append(const SimResult& next) {
  if (next.tracked != tracked) throw std::logic_error("SimResult::append: tracked sets differ");
  const Eigen::Index old_rows = populations.rows();
  populations.conservativeResize(old_rows + next.populations.rows(), Eigen::NoChange);
  populations.bottomRows(next.populations.rows()) = next.populations;
  times.insert(times.end(), next.times.begin(), next.times.end());
  fidelity.insert(fidelity.end(), next.fidelity.begin(), next.fidelity.end());
  for (const auto& [name, series] : next.extra) {
    auto& dst = extra[name];
    dst.insert(dst.end(), series.begin(), series.end());
  }
  is_pure = next.is_pure;
  final_psi = next.final_psi;
  final_rho = next.final_rho;
  diag.steps += next.diag.steps;
  diag.max_norm_drift = std::max(diag.max_norm_drift, next.diag.max_norm_drift);
  diag.max_edge_population = std::max(diag.max_edge_population, next.diag.max_edge_population);
  diag.min_eigenvalue = std::min(diag.min_eigenvalue, next.diag.min_eigenvalue);
  diag.converged = diag.converged && next.diag.converged;
  diag.warnings.insert(diag.warnings.end(), next.diag.warnings.begin(),
                       next.diag.warnings.end());
}

SimResult evolve_closed(const TimeDependentHamiltonian& h, const Vector& psi0,
                        double t0, double t1, double sample_dt,
                        const SampleSpec& spec, const OdeOptions& opts) {
  if (psi0.size() != h.dim()) throw std::domain_error("evolve_closed: state dimension mismatch");
  if (std::abs(psi0.squaredNorm() - 1.0) > 1e-8) {
    throw std::domain_error("evolve_closed: initial state not normalized");
  }
  const SampleGrid grid = make_grid(t0, t1, sample_dt);
  Recorder rec(spec, grid, true);

  const int d = h.dim();
  OdeState state(psi0.data(), psi0.data() + d);
  Vector hpsi(d);

  auto rhs = [&](const OdeState& x, OdeState& dxdt, double t) {
    Eigen::Map<const Vector> in(x.data(), d);
    h.apply(t, in, hpsi);
    Eigen::Map<Vector>(dxdt.data(), d) = Complex(0.0, -1.0) * hpsi;
  };
  auto emit = [&](double t, const OdeState& x) {
    const Eigen::Map<const Vector> psi_map(x.data(), d);
    const Vector psi = psi_map;
    rec.sample(t, &psi, nullptr);
  };

  long long steps = 0;
  if (t1 > t0) {
    steps = integrate_sampled(rhs, state, t0, t1, grid, opts, 1e-8, h.suggested_max_step(), emit);
  } else {
    emit(t0, state);
  }

  SimResult result = rec.finish(steps);
  result.final_psi = Eigen::Map<const Vector>(state.data(), d);
  if (!result.final_psi.allFinite()) throw std::runtime_error("evolve_closed: non-finite state");
  return result;
}

SimResult evolve_lindblad(const TimeDependentHamiltonian& h, const Matrix& rho0,
                          const NoiseParams& noise, const Truncation& trunc,
                          double t0, double t1, double sample_dt,
                          const SampleSpec& spec, const OdeOptions& opts) {
  noise.validate();
  const int d = h.dim();
  if (trunc.dim() != d) throw std::domain_error("evolve_lindblad: truncation/Hamiltonian mismatch");
  if (rho0.rows() != d || rho0.cols() != d) {
    throw std::domain_error("evolve_lindblad: state dimension mismatch");
  }
  if (std::abs(rho0.trace().real() - 1.0) > 1e-8 ||
      (rho0 - rho0.adjoint()).cwiseAbs().maxCoeff() > 1e-8) {
    throw std::domain_error("evolve_lindblad: rho0 is not a unit-trace Hermitian matrix");
  }

  const SampleGrid grid = make_grid(t0, t1, sample_dt);
  Recorder rec(spec, grid, false);

  struct Dissipator {
    Matrix l;        // jump operator
    Matrix ldl;      // L^ L
    double rate;
  };
  std::vector<Dissipator> dissipators;
  for (int mode = 1; mode <= 2; ++mode) {
    const double kappa = (mode == 1) ? noise.kappa1 : noise.kappa2;
    const double nth = (mode == 1) ? noise.nth1 : noise.nth2;
    if (kappa <= 0.0) continue;
    const Matrix a = annihilation_op(mode, trunc);
    dissipators.push_back({a, a.adjoint() * a, kappa * (nth + 1.0)});
    if (nth > 0.0) {
      const Matrix ad = a.adjoint();
      dissipators.push_back({ad, a * ad, kappa * nth});  // L = a^, L^L = a a^
    }
  }

  OdeState state(size_t(d) * d);
  Eigen::Map<Matrix>(state.data(), d, d) = rho0;

  Matrix rho_s(d, d), drho(d, d), tmp(d, d);
  auto rhs = [&](const OdeState& x, OdeState& dxdt, double t) {
    const Eigen::Map<const Matrix> rho(x.data(), d, d);
    const Matrix ht = h.matrix(t);
    drho.noalias() = ht * rho;
    drho.noalias() -= rho * ht;
    drho *= Complex(0.0, -1.0);
    for (const auto& dis : dissipators) {
      tmp.noalias() = dis.l * rho * dis.l.adjoint();
      tmp.noalias() -= 0.5 * (dis.ldl * rho + rho * dis.ldl);
      drho.noalias() += dis.rate * tmp;
    }
    Eigen::Map<Matrix>(dxdt.data(), d, d) = drho;
  };
  auto emit = [&](double t, const OdeState& x) {
    rho_s = Eigen::Map<const Matrix>(x.data(), d, d);
    rec.sample(t, nullptr, &rho_s);
  };

  long long steps = 0;
  if (t1 > t0) {
    steps = integrate_sampled(rhs, state, t0, t1, grid, opts, 1e-6, h.suggested_max_step(), emit);
  } else {
    emit(t0, state);
  }

  SimResult result = rec.finish(steps);
  result.is_pure = false;
  result.final_rho = Eigen::Map<const Matrix>(state.data(), d, d);
  if (!result.final_rho.allFinite()) throw std::runtime_error("evolve_lindblad: non-finite state");

  Eigen::SelfAdjointEigenSolver<Matrix> es(
      0.5 * (result.final_rho + result.final_rho.adjoint()));
  result.diag.min_eigenvalue = es.eigenvalues().minCoeff();
  if (result.diag.min_eigenvalue < -1e-6) {
    result.diag.converged = false;
    result.diag.warnings.push_back("final density matrix has eigenvalue below -1e-6");
  }
  return result;
}

double fidelity(const Vector& psi, const Vector& target) {
  if (psi.size() != target.size()) throw std::domain_error("fidelity: dimension mismatch");
  return std::norm(target.dot(psi));
}

double fidelity(const Matrix& rho, const Vector& target) {
  if (rho.rows() != target.size()) throw std::domain_error("fidelity: dimension mismatch");
  return std::real(target.dot(rho * target));
}

Matrix reduced_state(const Vector& psi, int mode, const Truncation& trunc) {
  if (psi.size() != trunc.dim()) throw std::domain_error("reduced_state: dimension mismatch");
  const int d1 = trunc.nmax1 + 1, d2 = trunc.nmax2 + 1;
  const int dk = (mode == 1) ? d1 : d2;
  Matrix r = Matrix::Zero(dk, dk);
  for (int a = 0; a < dk; ++a) {
    for (int b = 0; b < dk; ++b) {
      Complex acc = 0.0;
      const int do_ = (mode == 1) ? d2 : d1;
      for (int m = 0; m < do_; ++m) {
        const int ia = (mode == 1) ? a * d2 + m : m * d2 + a;
        const int ib = (mode == 1) ? b * d2 + m : m * d2 + b;
        acc += psi(ia) * std::conj(psi(ib));
      }
      r(a, b) = acc;
    }
  }
  return r;
}

Matrix reduced_state(const Matrix& rho, int mode, const Truncation& trunc) {
  if (rho.rows() != trunc.dim()) throw std::domain_error("reduced_state: dimension mismatch");
  const int d1 = trunc.nmax1 + 1, d2 = trunc.nmax2 + 1;
  const int dk = (mode == 1) ? d1 : d2;
  Matrix r = Matrix::Zero(dk, dk);
  for (int a = 0; a < dk; ++a) {
    for (int b = 0; b < dk; ++b) {
      Complex acc = 0.0;
      const int d_other = (mode == 1) ? d2 : d1;
      for (int m = 0; m < d_other; ++m) {
        const int ia = (mode == 1) ? a * d2 + m : m * d2 + a;
        const int ib = (mode == 1) ? b * d2 + m : m * d2 + b;
        acc += rho(ia, ib);
      }
      r(a, b) = acc;
    }
  }
  return r;
}

double purity(const Matrix& rho) { return std::real((rho * rho).trace()); }

double WignerGrid::integral() const {
  if (re_axis.size() < 2 || im_axis.size() < 2) return 0.0;
  const double dre = re_axis(1) - re_axis(0);
  const double dim = im_axis(1) - im_axis(0);
  return w.sum() * dre * dim;
}

namespace {

Matrix pad_density(const Matrix& rho, int pad) {
  const int d = int(rho.rows());
  Matrix out = Matrix::Zero(d + pad, d + pad);
  out.topLeftCorner(d, d) = rho;
  return out;
}

}  // namespace

double wigner_at(const Matrix& rho_mode, Complex alpha) {
  // the displaced state needs headroom ~ |alpha|^2 + spread above the base
  // cutoff, otherwise far grid points see a mangled displacement operator
  const double a = std::abs(alpha);
  const int pad = 4 + int(std::ceil(a * a + 6.0 * a));
  const Matrix rho = pad_density(rho_mode, pad);
  const int d = int(rho.rows());
  Matrix gen = Matrix::Zero(d, d);
  for (int n = 1; n < d; ++n) {
    gen(n, n - 1) = alpha * std::sqrt(double(n));          // alpha a^
    gen(n - 1, n) = -std::conj(alpha) * std::sqrt(double(n));  // -alpha* a
  }
  const Matrix disp = gen.exp();
  const Matrix m = disp.adjoint() * rho * disp;
  double acc = 0.0;
  for (int n = 0; n < d; ++n) {
    acc += ((n % 2 == 0) ? 1.0 : -1.0) * std::real(m(n, n));
  }
  return 2.0 / std::numbers::pi * acc;
}

WignerGrid wigner(const Matrix& rho_mode, double half_extent, int npoints) {
  if (npoints < 2 || half_extent <= 0.0) throw std::domain_error("wigner: empty grid");
  if (rho_mode.rows() != rho_mode.cols()) throw std::domain_error("wigner: not a square matrix");
  WignerGrid g;
  g.re_axis = Eigen::VectorXd::LinSpaced(npoints, -half_extent, half_extent);
  g.im_axis = g.re_axis;
  g.w.resize(npoints, npoints);
  for (int i = 0; i < npoints; ++i) {
    for (int j = 0; j < npoints; ++j) {
      g.w(i, j) = wigner_at(rho_mode, Complex(g.re_axis(j), g.im_axis(i)));
    }
  }
  return g;
}

}  // namespace kerrsel
