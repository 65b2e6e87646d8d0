#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mhdslab/conormal.hpp"
#include "mhdslab/dynamics.hpp"

namespace mhdslab {

enum class SpectrumKind {
  LowBand,  // |k_h| in [0.25, 1], Gaussian amplitudes
  Ring,     // |k_h| in [k_min, k_max], unit modulus with random phases
  Custom,   // |k_h| in [k_min, k_max], Gaussian amplitudes times |k_h|^slope
};

struct InitialDataSpec {
  std::uint64_t seed = 1;
  double amplitude = 1e-3;  // target value of the composite energy E at t = 0
  SpectrumKind spectrum = SpectrumKind::LowBand;
  double k_min = 0.25;
  double k_max = 1.0;
  double slope = 0.0;
  int vertical_modes = 2;  // highest vertical index drawn before the envelope
  bool concentration = true;  // envelope ((1 + cos(pi x3/L3))/2)^2, vanishing at x3 = L3

  void validate() const;
};

/// Random solenoidal (u, b) with zero horizontal mean, dealiased, scaled so
/// that E_full(0) equals the amplitude. Deterministic per seed. EmptyBand if
/// no retained horizontal mode falls in the band.
State gen_initial_data(const InitialDataSpec& spec, const Grid& grid, const ConormalConfig& ccfg,
                       double eps = 0.0);

struct PowerLawFit {
  double exponent = 0.0;
  double intercept = 0.0;     // log of the prefactor
  double max_residual = 0.0;  // largest |log y - fit| in the window
  std::size_t points = 0;
};

/// Least squares of log y on log x over x in [lo, hi]. TooFewPoints for
/// fewer than 3 points in the window, NonpositiveValues for x or y <= 0.
PowerLawFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y, double lo,
                          double hi);

/// `count` times t_i = (1 + t_end)^(i/(count-1)) - 1, i = 0..count-1.
std::vector<double> geometric_times(double t_end, std::size_t count);

struct DecayOptions {
  double t_end = 50.0;
  std::size_t samples = 81;
  double fit_lo = 5.0;
  double fit_hi = 50.0;
  double max_exponent = -0.9;     // fitted exponent must not exceed this
  double envelope_factor = 3.0;   // later (1+t)^s E_tan <= factor * max over t <= early_time
  double early_time = 5.0;
  double integral_ratio = 1.5;    // final / midpoint of the weighted dissipation integral
};

struct DecaySample {
  double t = 0.0;
  double E_tan = 0.0;           // E_tan^{m-1}
  double D_tan = 0.0;           // D_tan^{m-1}
  double weighted_E = 0.0;      // (1+t)^s E_tan^{m-1}
  double weighted_D_int = 0.0;  // int_0^t (1+tau)^sigma D_tan^{m-1} dtau (trapezoid)
};

struct DecayStudyReport {
  std::vector<DecaySample> series;
  double E0 = 0.0;  // composite energy at t = 0
  double s = 0.0, sigma = 0.0;
  int m = 0;
  std::optional<PowerLawFit> fit;
  double fit_lo = 0.0, fit_hi = 0.0;
  double max_exponent = 0.0;
  double C_emp = 0.0;  // sup (1+t)^s E_tan / E0
  double early_time = 0.0, early_max = 0.0, late_max = 0.0, envelope_factor = 0.0;
  double integral_final = 0.0, integral_mid = 0.0, integral_ratio_limit = 0.0;
  bool exponent_ok = false, envelope_ok = false, integral_ok = false, bounded_ok = false;
  bool pass = false;
  std::vector<std::string> notes;
};

DecayStudyReport run_decay_study(const InitialDataSpec& spec, const GridPtr& grid, const SolverConfig& scfg,
                                 const ConormalConfig& ccfg, const DecayOptions& opt = {},
                                 double eps = 0.0);

struct UniformOptions {
  double t_end = 20.0;
  std::size_t samples = 41;
  double max_spread = 1.25;
};

struct UniformRun {
  double eps = 0.0;
  std::vector<double> t, E, D, D_int;  // composite functionals and the running integral
  double R = 0.0;                      // sup_t (E + int D) / E(0)
};

struct UniformStudyReport {
  std::vector<UniformRun> runs;
  double spread = 0.0;  // max R / min R
  double max_spread = 0.0;
  bool pass = false;
  std::vector<std::string> notes;
};

/// ZeroData when the initial composite energy vanishes.
UniformStudyReport run_uniform_bound_study(const InitialDataSpec& spec, const std::vector<double>& eps_list,
                                           const GridPtr& grid, const SolverConfig& scfg,
                                           const ConormalConfig& ccfg, const UniformOptions& opt = {});

struct LimitOptions {
  double t_end = 10.0;
  std::size_t samples = 21;  // observation times, snapped to the fixed step grid
  double min_l2_slope = 0.20;
  double min_linf_slope = 0.075;
};

struct LimitRun {
  double eps = 0.0;
  std::vector<double> l2, linf;  // per observation time
  std::vector<double> E_bar, D_bar, B, B_h, source_residual;
  double sup_l2 = 0.0, sup_linf = 0.0;
};

struct LimitStudyReport {
  std::vector<double> times;
  std::vector<LimitRun> runs;  // ordered as the eps list
  std::optional<PowerLawFit> l2_fit, linf_fit;
  double min_l2_slope = 0.0, min_linf_slope = 0.0;
  bool monotone = false;
  bool degenerate = false;  // all differences zero, slopes undefined
  bool pass = false;
  std::vector<std::string> notes;
};

/// Every run (the eps list and the eps = 0 reference) uses the same initial
/// state and the same fixed step; scfg.dt must be positive. Runs execute in
/// parallel (MHD_THREADS caps the worker count). InvalidSpec unless the eps
/// list is nonnegative and strictly decreasing; MismatchedSchedules if a run's
/// observation times differ from the reference. An eps = 0 entry or a zero
/// difference makes the report degenerate (no slopes).
LimitStudyReport run_limit_study(const InitialDataSpec& spec, const std::vector<double>& eps_list,
                                 const GridPtr& grid, const SolverConfig& scfg, const ConormalConfig& ccfg,
                                 const LimitOptions& opt = {});

/// Same as run_limit_study for an explicit initial state.
LimitStudyReport run_limit_study(const State& initial, const std::vector<double>& eps_list, const GridPtr& grid,
                                 const SolverConfig& scfg, const LimitOptions& opt = {});

struct LinearCheckReport {
  double t_end = 0.0, dt = 0.0;
  std::size_t samples = 0;
  std::size_t modes = 0;     // (mode, component) pairs with nonzero initial data
  double max_error = 0.0;    // max |y - exp(tM) y0| / |y0| over modes and sample times
  double tolerance = 1e-12;
  bool pass = false;
};

/// Evolves `initial` with the linear solver at fixed dt and compares every
/// retained mode against exp(tM) built from the eigenvalues of M.
LinearCheckReport verify_linear(const GridPtr& grid, const State& initial, double t_end, double dt,
                                std::size_t samples = 11, double tolerance = 1e-12);

/// ||(v_1, ..., v_n)||_{H^2}^2 with all |beta| <= 2; `horizontal` applies grad_h first.
double h2_norm_sq(const Grid& grid, const SpectralVectorField& v, bool horizontal = false);

/// Relative mismatch between P f computed from the difference formula and
/// P(N(eps) - N(0) + eps (d22 + d33) u^eps), for a pair of states.
double difference_source_residual(const Grid& grid, const State& eps_state, const State& zero_state);

/// Worker count for parallel sweeps: MHD_THREADS if set and positive, else
/// hardware concurrency, capped by `jobs`.
unsigned sweep_threads(std::size_t jobs);

}  // namespace mhdslab
