#ifndef KERRSEL_EVOLVE_HPP
#define KERRSEL_EVOLVE_HPP

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kerrsel/pulse.hpp"

namespace kerrsel {

/// Local photon loss and thermal occupation of each mode (Lindblad rates in
/// rad/us, thermal occupations dimensionless).
struct NoiseParams {
  double kappa1 = 0.0;
  double kappa2 = 0.0;
  double nth1 = 0.0;
  double nth2 = 0.0;

  bool any() const { return kappa1 > 0.0 || kappa2 > 0.0; }
  void validate() const;
};

struct OdeOptions {
  double rtol = 0.0;  // 0: engine default (1e-8 closed, 1e-6 open)
  double atol = 1e-12;
  double max_step = 0.0;   // 0: use the Hamiltonian's suggestion
  double init_step = 0.0;  // 0: auto
};

/// Extra scalar series evaluated at every sample (exactly one of psi/rho is
/// non-null depending on the evolution type).
struct Probe {
  std::string name;
  std::function<double(double t, const Vector* psi, const Matrix* rho)> fn;
};

struct SampleSpec {
  std::vector<KetLabel> tracked;
  Vector fidelity_target;           // empty: no fidelity series
  // Optional time-dependent target (overrides fidelity_target); lets callers
  // report frame-consistent fidelities when evolving in a different frame.
  std::function<Vector(double)> fidelity_target_fn;
  std::optional<Truncation> trunc;  // enables edge-population diagnostics
  std::vector<Probe> probes;
};

struct Diagnostics {
  long long steps = 0;
  double max_norm_drift = 0.0;      // max | ||psi||^2 - 1 | (or |tr rho - 1|)
  double max_edge_population = 0.0; // max population on cutoff levels
  double min_eigenvalue = 0.0;      // of the final density matrix (mixed only)
  bool converged = true;            // edge population stayed below 1e-6
  std::vector<std::string> warnings;
};

struct SimResult {
  std::vector<double> times;  // us
  std::vector<KetLabel> tracked;
  Eigen::MatrixXd populations;  // times x tracked
  std::vector<double> fidelity;
  std::map<std::string, std::vector<double>> extra;
  bool is_pure = true;
  Vector final_psi;
  Matrix final_rho;
  Diagnostics diag;

  /// Appends another result whose time grid continues this one.
  void append(const SimResult& next);
};

/// Integrates i d/dt psi = H(t) psi with an adaptive dopri5 stepper and dense
/// output on the sample grid. Norm drift is recorded, never corrected.
SimResult evolve_closed(const TimeDependentHamiltonian& h, const Vector& psi0,
                        double t0, double t1, double sample_dt,
                        const SampleSpec& spec = {}, const OdeOptions& opts = {});

/// Integrates the Lindblad master equation with local loss/thermal
/// dissipators on both modes.
SimResult evolve_lindblad(const TimeDependentHamiltonian& h, const Matrix& rho0,
                          const NoiseParams& noise, const Truncation& trunc,
                          double t0, double t1, double sample_dt,
                          const SampleSpec& spec = {}, const OdeOptions& opts = {});

double fidelity(const Vector& psi, const Vector& target);
double fidelity(const Matrix& rho, const Vector& target);

/// Density matrix of one mode after tracing out the other.
Matrix reduced_state(const Vector& psi, int mode, const Truncation& trunc);
Matrix reduced_state(const Matrix& rho, int mode, const Truncation& trunc);

double purity(const Matrix& rho);

struct WignerGrid {
  Eigen::VectorXd re_axis;
  Eigen::VectorXd im_axis;
  Eigen::MatrixXd w;  // w(i, j) = W(re_axis(j) + i im_axis(i))

  /// Quadrature of the grid (should be ~1 when the grid captures the state).
  double integral() const;
};

/// Wigner function of a single-mode density matrix on a square grid,
/// convention W(0) = 2/pi for vacuum, integral over the plane = 1.
/// Displacements are built in a basis padded by 4 levels.
WignerGrid wigner(const Matrix& rho_mode, double half_extent, int npoints);

/// Single-point evaluation (same convention).
double wigner_at(const Matrix& rho_mode, Complex alpha);

}  // namespace kerrsel

#endif
