#include "mhdslab/experiments.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <numbers>
#include <random>
#include <thread>

#include "mhdslab/error.hpp"
#include "mhdslab/spectral.hpp"

namespace mhdslab {

namespace {

using VB = VerticalBasis;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Runs job(i) for i in [0, n) on up to sweep_threads(n) workers; rethrows the
// first failure after all workers join.
template <class Job>
void parallel_for(std::size_t n, Job&& job) {
  const unsigned workers = sweep_threads(n);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex fail_mutex;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        job(i);
      } catch (...) {
        std::lock_guard lock(fail_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
}

// Advance with the stepper until state.t reaches t (clamped final step).
void advance_to(Stepper& st, State& s, double t) {
  st.set_t_end(t);
  while (s.t < t) s = st.step(s);
}

double trapezoid_step(double t0, double t1, double f0, double f1) { return 0.5 * (t1 - t0) * (f0 + f1); }

double interpolate(const std::vector<double>& t, const std::vector<double>& y, double at) {
  if (at <= t.front()) return y.front();
  for (std::size_t i = 1; i < t.size(); ++i)
    if (at <= t[i]) {
      const double w = (at - t[i - 1]) / (t[i] - t[i - 1]);
      return (1 - w) * y[i - 1] + w * y[i];
    }
  return y.back();
}

// (a.grad) c as a dealiased (C,C,S) field from physical products.
SpectralVectorField advect(const Grid& g, const SpectralVectorField& a, const SpectralVectorField& c) {
  PhysicalField ap[3];
  for (int k = 0; k < 3; ++k) ap[k] = to_physical(g, a[k]);
  SpectralVectorField out;
  for (int i = 0; i < 3; ++i) {
    PhysicalField acc(g.size(), 0.0);
    for (int k = 0; k < 3; ++k) {
      const PhysicalField d = to_physical(g, derivative(g, c[i], k + 1));
      for (std::size_t q = 0; q < acc.size(); ++q) acc[q] += ap[k][q] * d[q];
    }
    out[i] = dealias(g, to_spectral(g, acc, i == 2 ? VB::Sine : VB::Cosine));
  }
  return out;
}

double max_magnitude(const Grid& g, const SpectralVectorField& u, const SpectralVectorField& b) {
  return std::max(max_magnitude_physical(g, u), max_magnitude_physical(g, b));
}

// Least squares in log-log over every point; unlike fit_power_law two points suffice.
PowerLawFit log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() >= 3) return fit_power_law(x, y, x.back(), x.front());
  PowerLawFit f;
  f.exponent = std::log(y[0] / y[1]) / std::log(x[0] / x[1]);
  f.intercept = std::log(y[0]) - f.exponent * std::log(x[0]);
  f.points = 2;
  return f;
}

}  // namespace

void InitialDataSpec::validate() const {
  if (!(amplitude >= 0.0) || !std::isfinite(amplitude))
    throw Error(ErrorKind::InvalidSpec, "amplitude must be nonnegative");
  if (spectrum != SpectrumKind::LowBand && !(k_min >= 0.0 && k_max > k_min))
    throw Error(ErrorKind::InvalidSpec, "need 0 <= k_min < k_max");
  if (vertical_modes < 0) throw Error(ErrorKind::InvalidSpec, "vertical_modes must be nonnegative");
}

State gen_initial_data(const InitialDataSpec& spec, const Grid& g, const ConormalConfig& ccfg, double eps) {
  spec.validate();
  const double lo = spec.spectrum == SpectrumKind::LowBand ? 0.25 : spec.k_min;
  const double hi = spec.spectrum == SpectrumKind::LowBand ? 1.0 : spec.k_max;

  std::vector<std::pair<int, int>> band;  // canonical half plane only
  for (int i1 = 0; i1 < g.n1(); ++i1)
    for (int i2 = 0; i2 < g.n2(); ++i2) {
      if (!g.retained1(i1) || !g.retained2(i2)) continue;
      const int n1 = g.mode1(i1), n2 = g.mode2(i2);
      if (!(n1 > 0 || (n1 == 0 && n2 > 0))) continue;
      const double k = std::hypot(g.k1(i1), g.k2(i2));
      if (k >= lo && k <= hi) band.emplace_back(i1, i2);
    }
  if (band.empty()) throw Error(ErrorKind::EmptyBand, "no retained horizontal mode in the band");

  State s = State::zeros(g, eps);
  if (spec.amplitude == 0.0) return s;

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> phase(0.0, 2 * std::numbers::pi);
  const int jmax = std::min(spec.vertical_modes, g.retained3_count() - 1);
  for (SpectralVectorField* v : {&s.u, &s.b})
    for (int c = 0; c < 3; ++c) {
      SpectralField& f = (*v)[c];
      for (const auto& [i1, i2] : band) {
        const double k = std::hypot(g.k1(i1), g.k2(i2));
        const double a = spec.spectrum == SpectrumKind::Custom ? std::pow(k, spec.slope) : 1.0;
        const int p1 = (g.n1() - i1) % g.n1(), p2 = (g.n2() - i2) % g.n2();
        for (int j = 0; j <= jmax; ++j) {
          Complex z;
          if (spec.spectrum == SpectrumKind::Ring) {
            z = std::polar(1.0, phase(rng));
          } else {
            const double re = normal(rng), im = normal(rng);
            z = a * Complex(re, im);
          }
          if (f.basis() == VB::Sine && j == 0) continue;
          f(i1, i2, j) = z;
          f(p1, p2, j) = std::conj(z);
        }
      }
    }
  if (spec.concentration) {
    const auto env = sample(g, [&](double, double, double x3) {
      const double c = 0.5 * (1 + std::cos(std::numbers::pi * x3 / g.l3()));
      return c * c;
    });
    for (SpectralVectorField* v : {&s.u, &s.b})
      for (int c = 0; c < 3; ++c) {
        PhysicalField p = to_physical(g, (*v)[c]);
        for (std::size_t q = 0; q < p.size(); ++q) p[q] *= env[q];
        (*v)[c] = to_spectral(g, p, (*v)[c].basis());
      }
  }
  for (SpectralVectorField* v : {&s.u, &s.b}) {
    dealias_in_place(g, *v);
    leray_project_in_place(g, *v);
    remove_horizontal_mean(g, *v);
  }
  const double e = composite_energy(g, s, ccfg);
  if (!(e > 0.0)) throw Error(ErrorKind::ZeroData, "generated field vanished after projection");
  const double scale = std::sqrt(spec.amplitude / e);
  s.u *= scale;
  s.b *= scale;
  return s;
}

PowerLawFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y, double lo, double hi) {
  if (x.size() != y.size()) throw Error(ErrorKind::ShapeMismatch, "x and y lengths differ");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] < lo || x[i] > hi) continue;
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw Error(ErrorKind::NonpositiveValues, "power-law fit needs x, y > 0");
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  if (lx.size() < 3) throw Error(ErrorKind::TooFewPoints, "power-law fit needs at least 3 points in the window");
  const double n = static_cast<double>(lx.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) throw Error(ErrorKind::TooFewPoints, "power-law fit needs distinct x values");
  PowerLawFit fit;
  fit.exponent = sxy / sxx;
  fit.intercept = my - fit.exponent * mx;
  fit.points = lx.size();
  for (std::size_t i = 0; i < lx.size(); ++i)
    fit.max_residual = std::max(fit.max_residual, std::abs(ly[i] - fit.intercept - fit.exponent * lx[i]));
  return fit;
}

std::vector<double> geometric_times(double t_end, std::size_t count) {
  if (count < 2 || !(t_end > 0.0)) throw Error(ErrorKind::InvalidSpec, "need t_end > 0 and at least 2 samples");
  std::vector<double> t(count);
  for (std::size_t i = 0; i < count; ++i)
    t[i] = std::pow(1.0 + t_end, double(i) / double(count - 1)) - 1.0;
  t.front() = 0.0;
  t.back() = t_end;
  return t;
}

DecayStudyReport run_decay_study(const InitialDataSpec& spec, const GridPtr& grid, const SolverConfig& scfg,
                                 const ConormalConfig& ccfg, const DecayOptions& opt, double eps) {
  ccfg.validate();
  const Grid& g = *grid;
  DecayStudyReport rep;
  rep.s = ccfg.s;
  rep.sigma = ccfg.sigma;
  rep.m = ccfg.m;
  rep.fit_lo = opt.fit_lo;
  rep.fit_hi = opt.fit_hi;
  rep.max_exponent = opt.max_exponent;
  rep.envelope_factor = opt.envelope_factor;
  rep.early_time = opt.early_time;
  rep.integral_ratio_limit = opt.integral_ratio;

  State s = gen_initial_data(spec, g, ccfg, eps);
  rep.E0 = composite_energy(g, s, ccfg);
  const int k = ccfg.m - 1;
  Stepper st(grid, scfg);
  bool warned = false;
  for (double t : geometric_times(opt.t_end, opt.samples)) {
    advance_to(st, s, t);
    if (!warned && spectral_tail_fraction(g, s, ccfg.m) > 0.01) {
      if (!ccfg.allow_underresolved)
        throw Error(ErrorKind::UnderResolved, "decay run left the resolved range at t=" + std::to_string(s.t));
      rep.notes.push_back("under-resolved from t=" + std::to_string(s.t));
      warned = true;
    }
    DecaySample d;
    d.t = s.t;
    d.E_tan = energy_tan(g, s, k);
    d.D_tan = dissipation_tan(g, s, k);
    d.weighted_E = std::pow(1.0 + d.t, ccfg.s) * d.E_tan;
    if (!rep.series.empty()) {
      const auto& p = rep.series.back();
      d.weighted_D_int = p.weighted_D_int + trapezoid_step(p.t, d.t, std::pow(1.0 + p.t, ccfg.sigma) * p.D_tan,
                                                           std::pow(1.0 + d.t, ccfg.sigma) * d.D_tan);
    }
    rep.series.push_back(d);
  }

  std::vector<double> ts, es, ints;
  for (const auto& d : rep.series) {
    ts.push_back(d.t);
    es.push_back(d.E_tan);
    ints.push_back(d.weighted_D_int);
  }
  rep.integral_final = ints.back();
  rep.integral_mid = interpolate(ts, ints, 0.5 * opt.t_end);
  for (const auto& d : rep.series) {
    if (d.t <= opt.early_time) rep.early_max = std::max(rep.early_max, d.weighted_E);
    else rep.late_max = std::max(rep.late_max, d.weighted_E);
  }

  if (rep.E0 == 0.0) {
    rep.notes.push_back("zero data: every series vanishes");
    rep.exponent_ok = rep.envelope_ok = rep.integral_ok = rep.bounded_ok = rep.pass = true;
    return rep;
  }
  double sup = 0.0;
  for (const auto& d : rep.series) sup = std::max(sup, d.weighted_E);
  rep.C_emp = sup / rep.E0;
  rep.bounded_ok = std::isfinite(rep.C_emp) && std::isfinite(rep.integral_final);
  rep.envelope_ok = rep.late_max <= opt.envelope_factor * rep.early_max;
  rep.integral_ok = rep.integral_mid > 0.0 ? rep.integral_final / rep.integral_mid <= opt.integral_ratio
                                           : rep.integral_final == 0.0;

  std::vector<double> xs;
  for (double t : ts) xs.push_back(1.0 + t);
  try {
    rep.fit = fit_power_law(xs, es, 1.0 + opt.fit_lo, 1.0 + opt.fit_hi);
    rep.exponent_ok = rep.fit->exponent <= opt.max_exponent;
  } catch (const Error& e) {
    rep.notes.push_back(std::string("no decay fit: ") + e.what());
    rep.exponent_ok = false;
  }
  rep.pass = rep.bounded_ok && rep.envelope_ok && rep.integral_ok && rep.exponent_ok;
  return rep;
}

UniformStudyReport run_uniform_bound_study(const InitialDataSpec& spec, const std::vector<double>& eps_list,
                                           const GridPtr& grid, const SolverConfig& scfg,
                                           const ConormalConfig& ccfg, const UniformOptions& opt) {
  ccfg.validate();
  if (eps_list.empty()) throw Error(ErrorKind::InvalidSpec, "empty eps list");
  for (double e : eps_list)
    if (!(e >= 0.0)) throw Error(ErrorKind::InvalidSpec, "eps must be nonnegative");
  if (opt.samples < 2 || !(opt.t_end > 0.0)) throw Error(ErrorKind::InvalidSpec, "need t_end > 0 and 2 samples");
  const Grid& g = *grid;
  const State init = gen_initial_data(spec, g, ccfg, 0.0);
  const double e0 = composite_energy(g, init, ccfg);
  if (!(e0 > 0.0)) throw Error(ErrorKind::ZeroData, "uniform-bound study needs nonzero data");

  UniformStudyReport rep;
  rep.max_spread = opt.max_spread;
  rep.runs.resize(eps_list.size());
  parallel_for(eps_list.size(), [&](std::size_t r) {
    UniformRun run;
    run.eps = eps_list[r];
    State s = init;
    s.eps = run.eps;
    Stepper st(grid, scfg);
    for (std::size_t i = 0; i < opt.samples; ++i) {
      advance_to(st, s, opt.t_end * double(i) / double(opt.samples - 1));
      run.t.push_back(s.t);
      run.E.push_back(composite_energy(g, s, ccfg));
      run.D.push_back(composite_dissipation(g, s, ccfg));
      const std::size_t n = run.t.size();
      run.D_int.push_back(n == 1 ? 0.0
                                 : run.D_int.back() + trapezoid_step(run.t[n - 2], run.t[n - 1], run.D[n - 2], run.D[n - 1]));
      run.R = std::max(run.R, (run.E.back() + run.D_int.back()) / e0);
    }
    rep.runs[r] = std::move(run);
  });
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  bool finite = true;
  for (const auto& r : rep.runs) {
    finite = finite && std::isfinite(r.R);
    lo = std::min(lo, r.R);
    hi = std::max(hi, r.R);
  }
  rep.spread = hi / lo;
  rep.pass = finite && rep.spread <= opt.max_spread;
  return rep;
}

double h2_norm_sq(const Grid& g, const SpectralVectorField& v, bool horizontal) {
  double acc = 0.0;
  const double area = g.horizontal_area();
  for (int c = 0; c < 3; ++c) {
    const SpectralField& f = v[c];
    for (int i1 = 0; i1 < g.n1(); ++i1)
      for (int i2 = 0; i2 < g.n2(); ++i2) {
        const double x = g.kd1(i1) * g.kd1(i1), y = g.kd2(i2) * g.kd2(i2);
        for (int j = 0; j < f.nz(); ++j) {
          const double z = g.kappa(j) * g.kappa(j);
          double w = 1 + x + y + z + x * x + y * y + z * z + x * y + x * z + y * z;
          if (horizontal) w *= x + y;
          acc += area * w * g.vertical_weight(j, f.basis()) * std::norm(f(i1, i2, j));
        }
      }
  }
  return acc;
}

double difference_source_residual(const Grid& g, const State& se, const State& s0) {
  const SpectralVectorField ub = se.u - s0.u, bb = se.b - s0.b;
  // f = -u^e.grad ub - ub.grad u^0 + b^e.grad bb + bb.grad b^0 + eps (d22 + d33) u^e
  SpectralVectorField f = advect(g, se.b, bb) + advect(g, bb, s0.b) - advect(g, se.u, ub) - advect(g, ub, s0.u);
  SpectralVectorField visc = SpectralVectorField::zeros(g);
  for (int i = 0; i < 3; ++i) {
    visc[i] = derivative(g, derivative(g, se.u[i], 2), 2);
    visc[i] += derivative(g, derivative(g, se.u[i], 3), 3);
  }
  f.axpy(se.eps, visc);
  SpectralVectorField ref = momentum_advection(g, se) - momentum_advection(g, s0);
  ref.axpy(se.eps, visc);
  leray_project_in_place(g, f);
  leray_project_in_place(g, ref);
  const double scale = std::sqrt(l2_norm_sq(g, ref));
  const double diff = std::sqrt(l2_norm_sq(g, f - ref));
  return scale > 0.0 ? diff / scale : diff;
}

LimitStudyReport run_limit_study(const InitialDataSpec& spec, const std::vector<double>& eps_list,
                                 const GridPtr& grid, const SolverConfig& scfg, const ConormalConfig& ccfg,
                                 const LimitOptions& opt) {
  if (ccfg.m < 5) throw Error(ErrorKind::InvalidSpec, "limit study needs m >= 5");
  ccfg.validate();
  return run_limit_study(gen_initial_data(spec, *grid, ccfg, 0.0), eps_list, grid, scfg, opt);
}

LimitStudyReport run_limit_study(const State& initial, const std::vector<double>& eps_list, const GridPtr& grid,
                                 const SolverConfig& scfg, const LimitOptions& opt) {
  if (eps_list.empty()) throw Error(ErrorKind::InvalidSpec, "empty eps list");
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    if (!(eps_list[i] >= 0.0)) throw Error(ErrorKind::InvalidSpec, "eps must be nonnegative");
    if (i > 0 && !(eps_list[i] < eps_list[i - 1]))
      throw Error(ErrorKind::InvalidSpec, "eps list must be strictly decreasing");
  }
  if (!(scfg.dt > 0.0)) throw Error(ErrorKind::InvalidSpec, "limit study needs a fixed dt");
  if (!(opt.t_end > 0.0) || opt.samples < 2) throw Error(ErrorKind::InvalidSpec, "need t_end > 0 and 2 samples");
  const Grid& g = *grid;

  // observation step indices on the shared fixed-dt schedule
  const auto total = static_cast<std::size_t>(std::llround(opt.t_end / scfg.dt));
  if (total == 0) throw Error(ErrorKind::InvalidSpec, "t_end shorter than one step");
  std::vector<std::size_t> obs;
  for (std::size_t i = 0; i < opt.samples; ++i) {
    const std::size_t n = static_cast<std::size_t>(std::llround(double(total) * double(i) / double(opt.samples - 1)));
    if (obs.empty() || n > obs.back()) obs.push_back(n);
  }

  SolverConfig cfg = scfg;
  cfg.t_end = double(total) * scfg.dt;
  auto run_schedule = [&](State s, auto&& at_obs) {
    Stepper st(grid, cfg);
    std::size_t n = 0;
    for (std::size_t k = 0; k < obs.size(); ++k) {
      for (; n < obs[k]; ++n) {
        s = st.step(s);
        s.t = double(n + 1) * cfg.dt + initial.t;
      }
      at_obs(k, s);
    }
  };

  LimitStudyReport rep;
  rep.min_l2_slope = opt.min_l2_slope;
  rep.min_linf_slope = opt.min_linf_slope;
  std::vector<State> reference;
  State init0 = initial;
  init0.eps = 0.0;
  run_schedule(init0, [&](std::size_t, const State& s) {
    reference.push_back(s);
    rep.times.push_back(s.t);
  });

  rep.runs.resize(eps_list.size());
  parallel_for(eps_list.size(), [&](std::size_t r) {
    LimitRun run;
    run.eps = eps_list[r];
    State s = initial;
    s.eps = run.eps;
    run_schedule(s, [&](std::size_t k, const State& se) {
      const State& s0 = reference[k];
      if (se.t != s0.t) throw Error(ErrorKind::MismatchedSchedules, "observation times differ between runs");
      State diff = State::zeros(g, se.eps);
      diff.u = se.u - s0.u;
      diff.b = se.b - s0.b;
      run.l2.push_back(std::sqrt(l2_norm_sq(g, diff.u) + l2_norm_sq(g, diff.b)));
      run.linf.push_back(max_magnitude(g, diff.u, diff.b));
      run.E_bar.push_back(energy_tan(g, diff, 1));
      const auto wu = curl(g, diff.u), wb = curl(g, diff.b);
      SpectralVectorField d1u, d1b, d2b, d2u, d1w, d1wb, d2wb;
      for (int i = 0; i < 3; ++i) {
        d1u[i] = derivative(g, diff.u[i], 1);
        d2u[i] = derivative(g, diff.u[i], 2);
        d1b[i] = derivative(g, diff.b[i], 1);
        d2b[i] = derivative(g, diff.b[i], 2);
        d1w[i] = derivative(g, wu[i], 1);
        d1wb[i] = derivative(g, wb[i], 1);
        d2wb[i] = derivative(g, wb[i], 2);
      }
      run.D_bar.push_back(norm_tan(g, d1u, 1) + norm_tan(g, d1b, 1) + norm_tan(g, d2b, 1) + l2_norm_sq(g, d2u) +
                          l2_norm_sq(g, d1w) + l2_norm_sq(g, d1wb) + l2_norm_sq(g, d2wb));
      run.B.push_back(std::sqrt(h2_norm_sq(g, s0.u) + h2_norm_sq(g, s0.b) + h2_norm_sq(g, se.u) + h2_norm_sq(g, se.b)));
      run.B_h.push_back(std::sqrt(h2_norm_sq(g, s0.u, true) + h2_norm_sq(g, s0.b, true) + h2_norm_sq(g, se.u, true) +
                                  h2_norm_sq(g, se.b, true)));
      run.source_residual.push_back(difference_source_residual(g, se, s0));
    });
    run.sup_l2 = *std::max_element(run.l2.begin(), run.l2.end());
    run.sup_linf = *std::max_element(run.linf.begin(), run.linf.end());
    rep.runs[r] = std::move(run);
  });

  std::vector<double> eps, l2, linf;
  bool any_zero = false;
  for (const auto& r : rep.runs) {
    eps.push_back(r.eps);
    l2.push_back(r.sup_l2);
    linf.push_back(r.sup_linf);
    any_zero = any_zero || r.eps == 0.0 || r.sup_l2 == 0.0 || r.sup_linf == 0.0;
  }
  rep.monotone = true;
  for (std::size_t i = 1; i < rep.runs.size(); ++i)
    rep.monotone = rep.monotone && l2[i] < l2[i - 1] && linf[i] < linf[i - 1];
  if (any_zero) {
    rep.degenerate = true;
    rep.monotone = false;
    rep.notes.push_back("zero difference or eps = 0 entry: slopes undefined");
    return rep;
  }
  if (eps.size() < 2) {
    rep.notes.push_back("a slope needs at least two eps values");
    return rep;
  }
  rep.l2_fit = log_slope(eps, l2);
  rep.linf_fit = log_slope(eps, linf);
  rep.pass = rep.monotone && rep.l2_fit->exponent >= opt.min_l2_slope && rep.linf_fit->exponent >= opt.min_linf_slope;
  return rep;
}

namespace {

// exp(tM) from lambda = mu +- delta, in long double; sinh(delta t)/delta by series near delta = 0.
std::array<std::complex<long double>, 4> mode_exponential(double k1, double k2, double kappa, double eps,
                                                          double t) {
  using C = std::complex<long double>;
  const auto m = LinearModeMatrix::at(k1, k2, kappa, eps);
  const long double a = m.nu_u, c = m.nu_b, q = m.coupling, h = (a - c) / 2;
  const C mu = -(a + c) / 2;
  const C delta = std::sqrt(C(h * h - q * q));
  const C ep = std::exp((mu + delta) * (long double)t), em = std::exp((mu - delta) * (long double)t);
  const C ch = (ep + em) / 2.0L;
  C sh;
  const C z = delta * (long double)t;
  if (std::abs(z) < 1e-3L) {
    const C z2 = z * z;
    sh = std::exp(mu * (long double)t) * (long double)t * (1.0L + z2 / 6.0L + z2 * z2 / 120.0L + z2 * z2 * z2 / 5040.0L);
  } else {
    sh = (ep - em) / (2.0L * delta);
  }
  const C iq(0, q);
  return {ch - sh * h, sh * iq, sh * iq, ch + sh * h};
}

}  // namespace

LinearCheckReport verify_linear(const GridPtr& grid, const State& initial, double t_end, double dt,
                                std::size_t samples, double tolerance) {
  if (!(dt > 0.0) || !(t_end >= 0.0) || samples < 2)
    throw Error(ErrorKind::InvalidSpec, "verify_linear needs dt > 0, t_end >= 0 and 2 samples");
  const Grid& g = *grid;
  LinearCheckReport rep;
  rep.t_end = t_end;
  rep.dt = dt;
  rep.samples = samples;
  rep.tolerance = tolerance;
  SolverConfig cfg;
  cfg.dt = dt;
  cfg.nonlinear = false;
  cfg.zero_horizontal_mean = false;
  Stepper st(grid, cfg);
  State s = initial;
  bool counted = false;
  for (std::size_t k = 0; k < samples; ++k) {
    const double t = initial.t + t_end * double(k) / double(samples - 1);
    advance_to(st, s, t);
    const double tau = s.t - initial.t;
    for (int c = 0; c < 3; ++c) {
      const SpectralField &u0 = initial.u[c], &b0 = initial.b[c];
      for (int i1 = 0; i1 < g.n1(); ++i1)
        for (int i2 = 0; i2 < g.n2(); ++i2)
          for (int j = 0; j < g.n3(); ++j) {
            const Complex y0u = u0(i1, i2, j), y0b = b0(i1, i2, j);
            const double n0 = std::hypot(std::abs(y0u), std::abs(y0b));
            if (n0 == 0.0) continue;
            if (!counted) ++rep.modes;
            const auto e = mode_exponential(g.k1(i1), g.k2(i2), g.kappa(j), initial.eps, tau);
            using CL = std::complex<long double>;
            const CL eu = e[0] * CL(y0u) + e[1] * CL(y0b), eb = e[2] * CL(y0u) + e[3] * CL(y0b);
            const double du = std::abs(CL(s.u[c](i1, i2, j)) - eu), db = std::abs(CL(s.b[c](i1, i2, j)) - eb);
            rep.max_error = std::max(rep.max_error, std::hypot(du, db) / n0);
          }
    }
    counted = true;
  }
  rep.pass = rep.max_error <= tolerance;
  return rep;
}

unsigned sweep_threads(std::size_t jobs) {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("MHD_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) n = static_cast<unsigned>(v);
  }
  return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(jobs, 1)));
}

}  // namespace mhdslab
