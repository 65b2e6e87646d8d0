#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "mhdslab/field.hpp"
#include "mhdslab/grid.hpp"

namespace mhdslab {

/// One point of a trajectory of the perturbation system. eps = 0 selects the
/// limit system (no x2/x3 viscosity, no vertical resistivity).
struct State {
  SpectralVectorField u;  // velocity perturbation
  SpectralVectorField b;  // magnetic perturbation B - e2
  double t = 0.0;
  double eps = 0.0;

  static State zeros(const Grid& grid, double eps = 0.0);
  bool all_finite() const noexcept { return u.all_finite() && b.all_finite(); }
};

struct SolverConfig {
  double dt = 0.0;  // <= 0: adaptive, largest dt_cfl / 2^k within the CFL bound
  double cfl = 0.4;
  double t_end = 1.0;
  int rk_order = 3;
  bool zero_horizontal_mean = true;
  bool nonlinear = true;  // false: linear propagator only
};

/// Per-mode linear operator of the coupled (u, b) system:
/// d/dt (u, b) = [[-nu_u, i k2], [i k2, -nu_b]] (u, b).
struct LinearModeMatrix {
  double nu_u = 0.0;      // k1^2 + eps k2^2 + eps kappa^2
  double nu_b = 0.0;      // k1^2 + k2^2 + eps kappa^2
  double coupling = 0.0;  // k2

  static LinearModeMatrix at(double k1, double k2, double kappa, double eps) noexcept {
    return {k1 * k1 + eps * (k2 * k2 + kappa * kappa), k1 * k1 + k2 * k2 + eps * kappa * kappa, k2};
  }
  /// Roots of lambda^2 + (nu_u + nu_b) lambda + nu_u nu_b + k2^2, (lambda+, lambda-).
  std::pair<Complex, Complex> eigenvalues() const noexcept;
};

/// 2x2 complex matrix, row-major.
using Matrix2c = std::array<Complex, 4>;

/// exp(dt M) for the mode (k1, k2, kappa); dt >= 0.
Matrix2c linear_propagator(double k1, double k2, double kappa, double eps, double dt);

struct NonlinearTerms {
  SpectralVectorField nu;  // P(-u.grad u + b.grad b)
  SpectralVectorField nb;  // P(-u.grad b + b.grad u)
  double max_u = 0.0;      // max |u| over the nodes
  double max_b = 0.0;
};

/// Pseudo-spectral quadratic terms, dealiased and projected. With
/// `zero_mean` the k_h = 0 column of both terms is removed as well.
NonlinearTerms rhs_nonlinear(const Grid& grid, const State& state, bool zero_mean = false);

/// Unprojected -u.grad u + b.grad b (dealiased); diagnostic counterpart of
/// rhs_nonlinear used by the pressure and difference-system checks.
SpectralVectorField momentum_advection(const Grid& grid, const State& state);

/// Exponential integrator: exact linear propagator for diffusion plus the
/// d2 coupling, explicit Runge-Kutta (Lawson form) for the quadratic terms.
/// Propagator tables are cached per (eps, dt), so reuse one Stepper per run.
class Stepper {
 public:
  Stepper(GridPtr grid, SolverConfig cfg);

  const SolverConfig& config() const noexcept { return cfg_; }
  /// Moves the stopping time; steps are clamped so t never passes it.
  void set_t_end(double t_end) noexcept { cfg_.t_end = t_end; }
  /// Largest step the CFL rule allows for the given node maxima.
  double cfl_limit(double max_u, double max_b) const noexcept;

  /// Advances by cfg.dt (or the adaptive choice), clamped so t never passes
  /// t_end. Throws CflError or Error(NonfiniteField).
  State step(const State& state);

  /// Applies exp(dt L) to (u, b) in place.
  void propagate(SpectralVectorField& u, SpectralVectorField& b, double eps, double dt);

 private:
  struct Table {
    std::vector<Complex> e11, e12, e22;
  };
  const Table& table(double eps, double dt);
  NonlinearTerms nonlinear(const State& s) const;

  GridPtr grid_;
  SolverConfig cfg_;
  std::map<std::pair<double, double>, Table> tables_;
};

/// One step with a fresh Stepper (tables rebuilt; prefer Stepper for loops).
State step(const GridPtr& grid, const State& state, const SolverConfig& cfg);

struct Trajectory {
  State final_state;
  std::size_t steps = 0;
  std::vector<double> observed_times;
};

/// Called with an immutable snapshot and the step index.
using Observer = std::function<void(const State&, std::size_t)>;

/// Repeated step until cfg.t_end; the observer sees step 0, every
/// `callback_every`-th step and the final state.
Trajectory evolve(const GridPtr& grid, State state, const SolverConfig& cfg,
                  std::size_t callback_every, const Observer& observer = {});

/// Total pressure from div of the momentum equation, zero-mean gauge.
SpectralField recover_pressure(const Grid& grid, const State& state);

/// 1/2 ||(u, b)||^2
double l2_energy(const Grid& grid, const State& state);
/// ||d1 u||^2 + ||grad_h b||^2 + eps ||(d2 u, d3 u, d3 b)||^2
double l2_dissipation(const Grid& grid, const State& state);

struct BalanceSample {
  double t = 0.0;
  double energy = 0.0;       // 1/2 ||(u,b)||^2
  double dissipation = 0.0;  // L2 dissipation rate
};

/// |dE/dt + <D>| / max(<D>, machine eps) over the window. An even number of
/// equal intervals integrates the dissipation by Romberg extrapolation of the
/// nested trapezoid rules (coarsest rule at least 2 intervals, at most 6
/// levels); otherwise the plain trapezoid rule is used.
double energy_balance_residual(std::span<const BalanceSample> window);

}  // namespace mhdslab
