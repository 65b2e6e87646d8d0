#include "mhdslab/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mhdslab/error.hpp"
#include "mhdslab/spectral.hpp"

namespace mhdslab {

namespace {

constexpr Complex kI{0.0, 1.0};

// sinh(x)/x
double sinhc(double x) {
  if (std::abs(x) < 1e-3) {
    const double x2 = x * x;
    return 1.0 + x2 / 6.0 * (1.0 + x2 / 20.0 * (1.0 + x2 / 42.0));
  }
  return std::sinh(x) / x;
}

// sin(x)/x
double sinc(double x) {
  if (std::abs(x) < 1e-3) {
    const double x2 = x * x;
    return 1.0 - x2 / 6.0 * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0));
  }
  return std::sin(x) / x;
}

SpectralField forward_product(const Grid& g, const PhysicalField& p, VerticalBasis basis) {
  SpectralField f = to_spectral(g, p, basis);
  dealias_in_place(g, f);
  return f;
}

}  // namespace

State State::zeros(const Grid& grid, double eps) {
  return {SpectralVectorField::zeros(grid), SpectralVectorField::zeros(grid), 0.0, eps};
}

std::pair<Complex, Complex> LinearModeMatrix::eigenvalues() const noexcept {
  const double a = 0.5 * (nu_u + nu_b);
  const double d = 0.5 * (nu_b - nu_u);
  const Complex r = std::sqrt(Complex(d * d - coupling * coupling));
  return {-a + r, -a - r};
}

Matrix2c linear_propagator(double k1, double k2, double kappa, double eps, double dt) {
  const auto m = LinearModeMatrix::at(k1, k2, kappa, eps);
  const double a = 0.5 * (m.nu_u + m.nu_b);
  const double d = 0.5 * (m.nu_b - m.nu_u);
  const double disc = d * d - k2 * k2;
  // exp(dt M) = C I + S (M + a I),  M + a I = [[d, i k2], [i k2, -d]]
  double c = 0.0, s = 0.0;
  if (disc >= 0.0) {
    const double r = std::sqrt(disc);
    if (r * dt < 0.1) {
      const double decay = std::exp(-a * dt);
      c = decay * std::cosh(r * dt);
      s = decay * dt * sinhc(r * dt);
    } else {
      // slow root from the product of roots to avoid cancellation
      const double fast = -a - r;
      const double slow = (m.nu_u * m.nu_b + k2 * k2) / fast;
      const double ef = std::exp(fast * dt), es = std::exp(slow * dt);
      c = 0.5 * (es + ef);
      s = (es - ef) / (2.0 * r);
    }
  } else {
    const double w = std::sqrt(-disc);
    const double decay = std::exp(-a * dt);
    c = decay * std::cos(w * dt);
    s = decay * dt * sinc(w * dt);
  }
  const Complex off = s * kI * k2;
  return {c + s * d, off, off, c - s * d};
}

SpectralVectorField momentum_advection(const Grid& g, const State& st) {
  PhysicalField u[3], b[3];
  for (int i = 0; i < 3; ++i) {
    u[i] = to_physical(g, st.u[i]);
    b[i] = to_physical(g, st.b[i]);
  }
  const std::size_t n = g.size();
  auto tensor = [&](int i, int j) {
    PhysicalField t(n);
    for (std::size_t k = 0; k < n; ++k) t[k] = -u[i][k] * u[j][k] + b[i][k] * b[j][k];
    return t;
  };
  using VB = VerticalBasis;
  const SpectralField t11 = forward_product(g, tensor(0, 0), VB::Cosine);
  const SpectralField t22 = forward_product(g, tensor(1, 1), VB::Cosine);
  const SpectralField t33 = forward_product(g, tensor(2, 2), VB::Cosine);
  const SpectralField t12 = forward_product(g, tensor(0, 1), VB::Cosine);
  const SpectralField t13 = forward_product(g, tensor(0, 2), VB::Sine);
  const SpectralField t23 = forward_product(g, tensor(1, 2), VB::Sine);
  SpectralVectorField out{{derivative(g, t11, 1), derivative(g, t12, 1), derivative(g, t13, 1)}};
  out[0] += derivative(g, t12, 2);
  out[0] += derivative(g, t13, 3);
  out[1] += derivative(g, t22, 2);
  out[1] += derivative(g, t23, 3);
  out[2] += derivative(g, t23, 2);
  out[2] += derivative(g, t33, 3);
  return out;
}

NonlinearTerms rhs_nonlinear(const Grid& g, const State& st, bool zero_mean) {
  PhysicalField u[3], b[3];
  for (int i = 0; i < 3; ++i) {
    u[i] = to_physical(g, st.u[i]);
    b[i] = to_physical(g, st.b[i]);
  }
  const std::size_t n = g.size();
  NonlinearTerms out;
  for (std::size_t k = 0; k < n; ++k) {
    out.max_u = std::max(out.max_u, std::sqrt(u[0][k] * u[0][k] + u[1][k] * u[1][k] + u[2][k] * u[2][k]));
    out.max_b = std::max(out.max_b, std::sqrt(b[0][k] * b[0][k] + b[1][k] * b[1][k] + b[2][k] * b[2][k]));
  }

  // Divergence form: (u.grad u)_i = d_j(u_i u_j) for solenoidal u, and
  // (-u.grad b + b.grad u)_i = d_j S_ij with S_ij = u_i b_j - b_i u_j.
  PhysicalField prod(n);
  using VB = VerticalBasis;
  auto sym = [&](int i, int j, VB basis) {
    for (std::size_t k = 0; k < n; ++k) prod[k] = -u[i][k] * u[j][k] + b[i][k] * b[j][k];
    return forward_product(g, prod, basis);
  };
  auto anti = [&](int i, int j, VB basis) {
    for (std::size_t k = 0; k < n; ++k) prod[k] = u[i][k] * b[j][k] - b[i][k] * u[j][k];
    return forward_product(g, prod, basis);
  };
  {
    const SpectralField t11 = sym(0, 0, VB::Cosine), t22 = sym(1, 1, VB::Cosine),
                        t33 = sym(2, 2, VB::Cosine), t12 = sym(0, 1, VB::Cosine),
                        t13 = sym(0, 2, VB::Sine), t23 = sym(1, 2, VB::Sine);
    out.nu = {{derivative(g, t11, 1), derivative(g, t12, 1), derivative(g, t13, 1)}};
    out.nu[0] += derivative(g, t12, 2);
    out.nu[0] += derivative(g, t13, 3);
    out.nu[1] += derivative(g, t22, 2);
    out.nu[1] += derivative(g, t23, 3);
    out.nu[2] += derivative(g, t23, 2);
    out.nu[2] += derivative(g, t33, 3);
  }
  {
    const SpectralField s12 = anti(0, 1, VB::Cosine), s13 = anti(0, 2, VB::Sine),
                        s23 = anti(1, 2, VB::Sine);
    out.nb = {{derivative(g, s12, 2), derivative(g, s12, 1), derivative(g, s13, 1)}};
    out.nb[0] += derivative(g, s13, 3);
    out.nb[1] *= -1.0;
    out.nb[1] += derivative(g, s23, 3);
    out.nb[2] *= -1.0;
    out.nb[2] -= derivative(g, s23, 2);
  }
  if (zero_mean) {
    remove_horizontal_mean(g, out.nu);
    remove_horizontal_mean(g, out.nb);
  }
  leray_project_in_place(g, out.nu);
  leray_project_in_place(g, out.nb);
  return out;
}

Stepper::Stepper(GridPtr grid, SolverConfig cfg) : grid_(std::move(grid)), cfg_(cfg) {
  if (cfg_.rk_order != 2 && cfg_.rk_order != 3)
    throw Error(ErrorKind::InvalidSpec, "rk_order must be 2 or 3");
  if (!(cfg_.cfl > 0.0) || !(cfg_.cfl < 1.0))
    throw Error(ErrorKind::InvalidSpec, "cfl must lie in (0,1)");
}

double Stepper::cfl_limit(double max_u, double max_b) const noexcept {
  return cfg_.cfl * grid_->min_spacing() / std::max(1.0, max_u + max_b);
}

const Stepper::Table& Stepper::table(double eps, double dt) {
  const auto key = std::make_pair(eps, dt);
  if (auto it = tables_.find(key); it != tables_.end()) return it->second;
  if (tables_.size() > 16) tables_.clear();
  const Grid& g = *grid_;
  Table t;
  t.e11.resize(g.size());
  t.e12.resize(g.size());
  t.e22.resize(g.size());
  for (int i1 = 0; i1 < g.n1(); ++i1)
    for (int i2 = 0; i2 < g.n2(); ++i2)
      for (int j = 0; j < g.n3(); ++j) {
        const auto e = linear_propagator(g.k1(i1), g.kd2(i2), g.kappa(j), eps, dt);
        const std::size_t k = g.index(i1, i2, j);
        t.e11[k] = e[0];
        t.e12[k] = e[1];
        t.e22[k] = e[3];
      }
  return tables_.emplace(key, std::move(t)).first->second;
}

void Stepper::propagate(SpectralVectorField& u, SpectralVectorField& b, double eps, double dt) {
  if (dt == 0.0) return;
  const Table& t = table(eps, dt);
  const std::size_t n = grid_->size();
  for (int c = 0; c < 3; ++c) {
    Complex* pu = u[c].data();
    Complex* pb = b[c].data();
    for (std::size_t k = 0; k < n; ++k) {
      const Complex x = pu[k], y = pb[k];
      pu[k] = t.e11[k] * x + t.e12[k] * y;
      pb[k] = t.e12[k] * x + t.e22[k] * y;
    }
  }
}

NonlinearTerms Stepper::nonlinear(const State& s) const {
  return rhs_nonlinear(*grid_, s, cfg_.zero_horizontal_mean);
}

State Stepper::step(const State& s0) {
  const Grid& g = *grid_;
  const double remaining = cfg_.t_end - s0.t;
  if (!(remaining > 0.0)) return s0;

  NonlinearTerms n0;
  if (cfg_.nonlinear) {
    n0 = nonlinear(s0);
  } else {
    n0.max_u = max_magnitude_physical(g, s0.u);
    n0.max_b = max_magnitude_physical(g, s0.b);
  }
  const double limit = cfl_limit(n0.max_u, n0.max_b);
  double h = cfg_.dt;
  if (h <= 0.0) {
    h = cfg_.cfl * g.min_spacing();
    while (h > limit) h *= 0.5;
  } else if (h > limit * (1.0 + 1e-12)) {
    throw CflError(h, limit);
  }
  if (h >= remaining * (1.0 - 1e-12)) h = remaining;

  State out = s0;
  out.t = (h == remaining) ? cfg_.t_end : s0.t + h;
  if (!cfg_.nonlinear) {
    propagate(out.u, out.b, s0.eps, h);
  } else if (cfg_.rk_order == 2) {
    // Lawson-Heun
    State s1 = s0;
    s1.u.axpy(h, n0.nu);
    s1.b.axpy(h, n0.nb);
    propagate(s1.u, s1.b, s0.eps, h);
    s1.t = s0.t + h;
    const NonlinearTerms n1 = nonlinear(s1);
    SpectralVectorField eu = n0.nu, eb = n0.nb;
    propagate(eu, eb, s0.eps, h);
    propagate(out.u, out.b, s0.eps, h);
    out.u.axpy(0.5 * h, eu).axpy(0.5 * h, n1.nu);
    out.b.axpy(0.5 * h, eb).axpy(0.5 * h, n1.nb);
  } else {
    // Lawson form of Kutta's third-order scheme, c = (0, 1/2, 1):
    // all propagators run forward in time.
    State s1 = s0;
    s1.u.axpy(0.5 * h, n0.nu);
    s1.b.axpy(0.5 * h, n0.nb);
    propagate(s1.u, s1.b, s0.eps, 0.5 * h);
    s1.t = s0.t + 0.5 * h;
    const NonlinearTerms n1 = nonlinear(s1);

    SpectralVectorField n0u_h = n0.nu, n0b_h = n0.nb;  // E(h) N0
    propagate(n0u_h, n0b_h, s0.eps, h);
    SpectralVectorField n1u_h = n1.nu, n1b_h = n1.nb;  // E(h/2) N1
    propagate(n1u_h, n1b_h, s0.eps, 0.5 * h);
    SpectralVectorField e0u = s0.u, e0b = s0.b;  // E(h) U0
    propagate(e0u, e0b, s0.eps, h);

    State s2 = s0;
    s2.u = e0u;
    s2.b = e0b;
    s2.u.axpy(-h, n0u_h).axpy(2.0 * h, n1u_h);
    s2.b.axpy(-h, n0b_h).axpy(2.0 * h, n1b_h);
    s2.t = s0.t + h;
    const NonlinearTerms n2 = nonlinear(s2);

    out.u = std::move(e0u);
    out.b = std::move(e0b);
    out.u.axpy(h / 6.0, n0u_h).axpy(2.0 * h / 3.0, n1u_h).axpy(h / 6.0, n2.nu);
    out.b.axpy(h / 6.0, n0b_h).axpy(2.0 * h / 3.0, n1b_h).axpy(h / 6.0, n2.nb);
  }
  if (cfg_.zero_horizontal_mean) {
    remove_horizontal_mean(g, out.u);
    remove_horizontal_mean(g, out.b);
  }
  if (!out.all_finite())
    throw Error(ErrorKind::NonfiniteField, "non-finite coefficient at t=" + std::to_string(out.t));
  return out;
}

State step(const GridPtr& grid, const State& state, const SolverConfig& cfg) {
  Stepper stepper(grid, cfg);
  return stepper.step(state);
}

Trajectory evolve(const GridPtr& grid, State state, const SolverConfig& cfg,
                  std::size_t callback_every, const Observer& observer) {
  if (callback_every == 0) throw Error(ErrorKind::InvalidSpec, "callback_every must be positive");
  if (!state.all_finite()) throw Error(ErrorKind::NonfiniteField, "initial state is not finite");
  Stepper stepper(grid, cfg);
  Trajectory traj;
  auto notify = [&](const State& s) {
    traj.observed_times.push_back(s.t);
    if (observer) observer(s, traj.steps);
  };
  notify(state);
  // Fixed-dt runs place step n at t0 + n dt so equal schedules stay bit-identical.
  const double t0 = state.t;
  while (state.t < cfg.t_end) {
    State next = stepper.step(state);
    ++traj.steps;
    if (cfg.dt > 0.0 && next.t != cfg.t_end) next.t = t0 + double(traj.steps) * cfg.dt;
    state = std::move(next);
    const bool last = !(state.t < cfg.t_end);
    if (traj.steps % callback_every == 0 || last) notify(state);
  }
  traj.final_state = std::move(state);
  return traj;
}

SpectralField recover_pressure(const Grid& g, const State& st) {
  SpectralVectorField rhs = momentum_advection(g, st);
  for (int i = 0; i < 3; ++i) rhs[i] += derivative(g, st.b[i], 2);
  SpectralField div = divergence(g, rhs);
  for (int i1 = 0; i1 < g.n1(); ++i1)
    for (int i2 = 0; i2 < g.n2(); ++i2)
      for (int j = 0; j < g.n3(); ++j) {
        const double kap = (j < g.n3() - 1) ? g.kappa(j) : 0.0;
        const double k2sum = g.kd1(i1) * g.kd1(i1) + g.kd2(i2) * g.kd2(i2) + kap * kap;
        div(i1, i2, j) = k2sum > 0.0 ? -div(i1, i2, j) / k2sum : Complex{};
      }
  return div;
}

double l2_energy(const Grid& g, const State& st) {
  return 0.5 * (l2_norm_sq(g, st.u) + l2_norm_sq(g, st.b));
}

double l2_dissipation(const Grid& g, const State& st) {
  double d = 0.0, weak = 0.0;
  for (int i = 0; i < 3; ++i) {
    d += l2_norm_sq(g, derivative(g, st.u[i], 1));
    d += l2_norm_sq(g, derivative(g, st.b[i], 1));
    d += l2_norm_sq(g, derivative(g, st.b[i], 2));
    if (st.eps != 0.0) {
      weak += l2_norm_sq(g, derivative(g, st.u[i], 2));
      weak += l2_norm_sq(g, derivative(g, st.u[i], 3));
      weak += l2_norm_sq(g, derivative(g, st.b[i], 3));
    }
  }
  return d + st.eps * weak;
}

double energy_balance_residual(std::span<const BalanceSample> w) {
  if (w.size() < 2) throw Error(ErrorKind::InsufficientSamples, "need at least two samples");
  const double span_t = w.back().t - w.front().t;
  if (!(span_t > 0.0)) throw Error(ErrorKind::InsufficientSamples, "samples must span positive time");
  const std::size_t n = w.size() - 1;
  const double h = span_t / double(n);
  bool uniform = n >= 2 && n % 2 == 0;
  for (std::size_t i = 1; uniform && i <= n; ++i) uniform = std::abs((w[i].t - w[i - 1].t) - h) <= 1e-9 * h;
  double integral = 0.0;
  if (uniform) {
    // Romberg table over the nested trapezoid rules with 2^k-fold coarser steps
    int levels = 0;
    while (levels < 6 && n % (std::size_t(2) << levels) == 0 && n / (std::size_t(2) << levels) >= 2) ++levels;
    std::vector<double> r(levels + 1);
    for (int k = 0; k <= levels; ++k) {
      const std::size_t stride = std::size_t(1) << (levels - k);
      double t = 0.5 * (w.front().dissipation + w.back().dissipation);
      for (std::size_t i = stride; i < n; i += stride) t += w[i].dissipation;
      r[k] = t * h * double(stride);
    }
    for (int i = 1; i <= levels; ++i) {
      const double f = std::pow(4.0, i);
      for (int k = levels; k >= i; --k) r[k] = r[k] + (r[k] - r[k - 1]) / (f - 1.0);
    }
    integral = r[levels];
  } else {
    for (std::size_t i = 1; i < w.size(); ++i)
      integral += 0.5 * (w[i].t - w[i - 1].t) * (w[i].dissipation + w[i - 1].dissipation);
  }
  const double mean_d = integral / span_t;
  const double de_dt = (w.back().energy - w.front().energy) / span_t;
  return std::abs(de_dt + mean_d) / std::max(mean_d, std::numeric_limits<double>::epsilon());
}

}  // namespace mhdslab
