#include "mhdslab/conormal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "mhdslab/error.hpp"
#include "mhdslab/spectral.hpp"

namespace mhdslab {

namespace {

using VB = VerticalBasis;

// Z3 once on a padded field: d3, multiply by phi at the padded nodes, back.
SpectralField apply_z3(const Grid& g, const SpectralField& f, PhiChoice phi) {
  const int nz = f.nz();
  SpectralField d = derivative(g, f, 3);
  g.vertical_synthesize(std::span<Complex>(d.data(), d.size()), nz, d.basis());
  std::vector<double> w(nz);
  for (int j = 0; j < nz; ++j) w[j] = weight_phi(g.l3() * j / (nz - 1), phi, g.l3());
  for (std::size_t c = 0; c < g.columns(); ++c) {
    Complex* col = d.data() + c * nz;
    for (int j = 0; j < nz; ++j) col[j] *= w[j];
  }
  d.set_basis(f.basis());
  g.vertical_analyze(std::span<Complex>(d.data(), d.size()), nz, d.basis());
  return d;
}

void apply_horizontal(const Grid& g, SpectralField& f, int a1, int a2) {
  if (a1 == 0 && a2 == 0) return;
  const int nz = f.nz();
  for (int i1 = 0; i1 < g.n1(); ++i1)
    for (int i2 = 0; i2 < g.n2(); ++i2) {
      const Complex m = std::pow(Complex(0, g.kd1(i1)), a1) * std::pow(Complex(0, g.kd2(i2)), a2);
      Complex* col = f.data() + (static_cast<std::size_t>(i1) * g.n2() + i2) * nz;
      for (int j = 0; j < nz; ++j) col[j] *= m;
    }
}

// W_n(k1,k2) = sum over a1 + a2 <= n of k1^(2 a1) k2^(2 a2), per column.
std::vector<std::vector<double>> horizontal_weights(const Grid& g, int kmax) {
  std::vector<std::vector<double>> w(std::max(kmax, 0) + 1, std::vector<double>(g.columns()));
  for (int i1 = 0; i1 < g.n1(); ++i1)
    for (int i2 = 0; i2 < g.n2(); ++i2) {
      const double x = g.kd1(i1) * g.kd1(i1), y = g.kd2(i2) * g.kd2(i2);
      const std::size_t c = static_cast<std::size_t>(i1) * g.n2() + i2;
      for (int n = 0; n <= kmax; ++n) {
        double acc = 0.0, xp = 1.0;
        for (int a1 = 0; a1 <= n; ++a1) {
          double yp = 1.0;
          for (int a2 = 0; a1 + a2 <= n; ++a2) {
            acc += xp * yp;
            yp *= y;
          }
          xp *= x;
        }
        w[n][c] = acc;
      }
    }
  return w;
}

std::vector<double> column_energy(const Grid& g, const SpectralField& f) {
  const int nz = f.nz();
  std::vector<double> out(g.columns());
  const double area = g.horizontal_area();
  for (std::size_t c = 0; c < g.columns(); ++c) {
    const Complex* col = f.data() + c * nz;
    double acc = 0.0;
    for (int j = 0; j < nz; ++j) acc += g.vertical_weight(j, f.basis()) * std::norm(col[j]);
    out[c] = area * acc;
  }
  return out;
}

// sum_j w_j Re(conj(f) i k2 h) per column: the integral of f * d2 h.
std::vector<double> column_cross_d2(const Grid& g, const SpectralField& f, const SpectralField& h) {
  const int nz = f.nz();
  std::vector<double> out(g.columns());
  const double area = g.horizontal_area();
  for (int i1 = 0; i1 < g.n1(); ++i1)
    for (int i2 = 0; i2 < g.n2(); ++i2) {
      const std::size_t c = static_cast<std::size_t>(i1) * g.n2() + i2;
      const Complex* a = f.data() + c * nz;
      const Complex* b = h.data() + c * nz;
      double acc = 0.0;
      for (int j = 0; j < nz; ++j)
        acc += g.vertical_weight(j, f.basis()) * (std::conj(a[j]) * Complex(0, g.kd2(i2)) * b[j]).real();
      out[c] = area * acc;
    }
  return out;
}

// Column energies of Z3^a f for a = 0..amax, summed over the given fields.
struct Stack {
  std::vector<std::vector<double>> e;

  void add(const Grid& g, const SpectralField& f, int amax, PhiChoice phi) {
    if (e.size() < static_cast<std::size_t>(amax + 1))
      e.resize(amax + 1, std::vector<double>(g.columns(), 0.0));
    SpectralField z = pad_vertical(g, f);
    for (int a = 0; a <= amax; ++a) {
      if (a > 0) z = apply_z3(g, z, phi);
      const auto ce = column_energy(g, z);
      for (std::size_t c = 0; c < ce.size(); ++c) e[a][c] += ce[c];
    }
  }
};

enum class Mult { One, K1, K2, Kh, NegS };

struct Multipliers {
  std::vector<double> k1, k2, kh, negs;

  Multipliers(const Grid& g, double s) : k1(g.columns()), k2(g.columns()), kh(g.columns()), negs(g.columns()) {
    for (int i1 = 0; i1 < g.n1(); ++i1)
      for (int i2 = 0; i2 < g.n2(); ++i2) {
        const std::size_t c = static_cast<std::size_t>(i1) * g.n2() + i2;
        k1[c] = g.kd1(i1) * g.kd1(i1);
        k2[c] = g.kd2(i2) * g.kd2(i2);
        kh[c] = k1[c] + k2[c];
        // |k_h|^-2s with the same k_h as lambda_h_pow
        const double k = std::hypot(g.k1(i1), g.k2(i2));
        negs[c] = k > 0 ? std::pow(k, -2.0 * s) : 0.0;
      }
  }
  double at(Mult m, std::size_t c) const {
    switch (m) {
      case Mult::One: return 1.0;
      case Mult::K1: return k1[c];
      case Mult::K2: return k2[c];
      case Mult::Kh: return kh[c];
      case Mult::NegS: return negs[c];
    }
    return 1.0;
  }
};

class Norms {
 public:
  Norms(const Grid& g, int kmax, double s) : g_(g), w_(horizontal_weights(g, kmax)), mult_(g, s) {}

  // sum over |alpha| <= k (a3 = 0 if tangential) of ||Z^alpha M f||^2
  double operator()(const Stack& st, int k, bool tangential, Mult m = Mult::One) const {
    if (k < 0 || st.e.empty()) return 0.0;
    double acc = 0.0;
    const int amax = tangential ? 0 : k;
    for (int a = 0; a <= amax; ++a) {
      if (a >= static_cast<int>(st.e.size()))
        throw Error(ErrorKind::OrderExceeded, "conormal stack too short");
      const auto& w = w_.at(k - a);
      for (std::size_t c = 0; c < g_.columns(); ++c) acc += w[c] * mult_.at(m, c) * st.e[a][c];
    }
    return acc;
  }
  double cross(const std::vector<double>& col, int k) const {
    if (k < 0) return 0.0;
    double acc = 0.0;
    for (std::size_t c = 0; c < g_.columns(); ++c) acc += w_.at(k)[c] * col[c];
    return acc;
  }

 private:
  const Grid& g_;
  std::vector<std::vector<double>> w_;
  Multipliers mult_;
};

SpectralField d3(const Grid& g, const SpectralField& f) { return derivative(g, f, 3); }

SpectralVectorField d3(const Grid& g, const SpectralVectorField& v) {
  return {{d3(g, v[0]), d3(g, v[1]), d3(g, v[2])}};
}

Stack stack_of(const Grid& g, const SpectralVectorField& v, int amax, PhiChoice phi) {
  Stack s;
  for (int i = 0; i < 3; ++i) s.add(g, v[i], std::max(amax, 0), phi);
  return s;
}

// Everything the (e-1)/(d-1) families and the composite functionals need.
struct Fields {
  SpectralVectorField u, b, wu, wb;
  SpectralVectorField u3, b3, u33, b33, u333, b333, wu3, wb3;

  Fields(const Grid& g, const State& s)
      : u(s.u), b(s.b), wu(curl(g, s.u)), wb(curl(g, s.b)) {
    u3 = d3(g, u);
    b3 = d3(g, b);
    u33 = d3(g, u3);
    b33 = d3(g, b3);
    u333 = d3(g, u33);
    b333 = d3(g, b33);
    wu3 = d3(g, wu);
    wb3 = d3(g, wb);
  }
};

struct Stacks {
  Stack u, b, wu, wb, u3, b3, u33, b33, u333, b333, wu3, wb3;
};

double energy_tan_k(const Norms& n, const Stacks& s, int k) {
  return n(s.u, k, true) + n(s.b, k, true) + n(s.wu, k - 1, true) + n(s.wb, k - 1, true);
}

double energy_k(const Norms& n, const Stacks& s, int k) {
  return energy_tan_k(n, s, k) + n(s.wu3, k - 2, false) + n(s.wb3, k - 2, false);
}

double dissipation_tan_k(const Norms& n, const Stacks& s, int k) {
  return n(s.u, k, true, Mult::K1) + n(s.b, k, true, Mult::Kh) + n(s.wu, k - 1, true, Mult::K1) +
         n(s.wb, k - 1, true, Mult::Kh) + n(s.u, k - 1, true, Mult::K2) +
         n(s.wu, k - 2, true, Mult::K2);
}

double dissipation_k(const Norms& n, const Stacks& s, int k) {
  return dissipation_tan_k(n, s, k) + n(s.wu3, k - 3, false, Mult::K2) +
         n(s.wu3, k - 2, false, Mult::K1) + n(s.wb3, k - 2, false, Mult::Kh);
}

Stacks build_stacks(const Grid& g, const Fields& f, int kmax, PhiChoice phi) {
  Stacks s;
  s.u = stack_of(g, f.u, kmax, phi);
  s.b = stack_of(g, f.b, kmax, phi);
  s.wu = stack_of(g, f.wu, 0, phi);
  s.wb = stack_of(g, f.wb, 0, phi);
  s.u3 = stack_of(g, f.u3, kmax, phi);
  s.b3 = stack_of(g, f.b3, kmax, phi);
  s.u33 = stack_of(g, f.u33, kmax - 1, phi);
  s.b33 = stack_of(g, f.b33, kmax - 1, phi);
  s.u333 = stack_of(g, f.u333, kmax - 2, phi);
  s.b333 = stack_of(g, f.b333, kmax - 2, phi);
  s.wu3 = stack_of(g, f.wu3, kmax - 2, phi);
  s.wb3 = stack_of(g, f.wb3, kmax - 2, phi);
  return s;
}

double energy_full_of(const Norms& n, const Stacks& s, int m) {
  return n(s.u, m, false) + n(s.b, m, false) + n(s.u3, m - 1, false) + n(s.b3, m - 1, false) +
         n(s.u33, m - 2, false) + n(s.b33, m - 2, false) + n(s.u, m - 1, true, Mult::NegS) +
         n(s.b, m - 1, true, Mult::NegS) + n(s.u3, m - 2, true, Mult::NegS) +
         n(s.b3, m - 2, true, Mult::NegS);
}

double dissipation_full_of(const Norms& n, const Stacks& s, int m, double eps) {
  double d = n(s.u, m, false, Mult::K1) + n(s.u3, m - 1, false, Mult::K1) +
             n(s.u33, m - 2, false, Mult::K1) + n(s.b, m, false, Mult::Kh) +
             n(s.b3, m - 1, false, Mult::Kh) + n(s.b33, m - 2, false, Mult::Kh) +
             n(s.u, m - 1, false, Mult::K2) + n(s.u3, m - 2, false, Mult::K2) +
             n(s.u33, m - 3, false, Mult::K2);
  if (eps != 0.0) {
    d += eps * (n(s.u, m, false, Mult::K2) + n(s.u3, m, false) + n(s.u3, m - 1, false, Mult::K2) +
                n(s.u33, m - 1, false) + n(s.u33, m - 2, false, Mult::K2) + n(s.u333, m - 2, false));
    d += eps * (n(s.b3, m, false) + n(s.b33, m - 1, false) + n(s.b333, m - 2, false));
  }
  return d;
}

double relative_divergence(const Grid& g, const SpectralVectorField& v) {
  double grad = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int ax = 1; ax <= 3; ++ax) grad = std::max(grad, max_abs_physical(g, derivative(g, v[i], ax)));
  if (grad == 0.0) return 0.0;
  return max_abs_physical(g, divergence(g, v)) / grad;
}

// Vertical quadrature weights on the collocation nodes (trapezoid).
std::vector<double> node_weights3(const Grid& g) {
  std::vector<double> w(g.n3(), g.l3() / g.m3());
  w.front() *= 0.5;
  w.back() *= 0.5;
  return w;
}

double node_cell(const Grid& g) { return g.horizontal_area() / (double(g.n1()) * g.n2()); }

}  // namespace

void ConormalConfig::validate() const {
  if (m < 4 || m > kMaxConormalOrder)
    throw Error(ErrorKind::InvalidSpec, "m must lie in [4, " + std::to_string(kMaxConormalOrder) + "]");
  if (!(0.9 < sigma && sigma < s && s < 1.0))
    throw Error(ErrorKind::InvalidSpec, "need 9/10 < sigma < s < 1");
}

std::vector<MultiIndex> multi_indices(int k, bool tangential) {
  std::vector<MultiIndex> out;
  for (int a1 = 0; a1 <= k; ++a1)
    for (int a2 = 0; a1 + a2 <= k; ++a2)
      for (int a3 = 0; a1 + a2 + a3 <= k; ++a3) {
        if (tangential && a3 > 0) break;
        out.push_back({a1, a2, a3});
      }
  return out;
}

double weight_phi(double x3, PhiChoice choice, double l3) {
  if (!(x3 >= -1e-12 * l3 && x3 <= l3 * (1 + 1e-12)))
    throw Error(ErrorKind::OutOfDomain, "x3 outside [0, L3]");
  if (choice == PhiChoice::RationalPhi) return x3 / (1.0 + x3);
  return l3 / std::numbers::pi * std::sin(std::numbers::pi * x3 / l3);
}

SpectralField pad_vertical(const Grid& g, const SpectralField& f) {
  if (f.nz() == g.padded_n3()) return f;
  if (f.nz() != g.n3()) throw Error(ErrorKind::ShapeMismatch, "unexpected vertical size");
  SpectralField out(g.n1(), g.n2(), g.padded_n3(), f.basis());
  for (std::size_t c = 0; c < g.columns(); ++c)
    std::copy_n(f.data() + c * f.nz(), f.nz(), out.data() + c * out.nz());
  return out;
}

SpectralField conormal_Z(const Grid& g, const SpectralField& f, MultiIndex alpha, PhiChoice phi) {
  if (alpha.a1 < 0 || alpha.a2 < 0 || alpha.a3 < 0)
    throw Error(ErrorKind::InvalidSpec, "negative multi-index");
  if (alpha.a3 > kMaxConormalOrder || alpha.order() > kMaxConormalOrder + 2)
    throw Error(ErrorKind::OrderExceeded, "multi-index order beyond the padded workspace");
  SpectralField z = pad_vertical(g, f);
  for (int a = 0; a < alpha.a3; ++a) z = apply_z3(g, z, phi);
  apply_horizontal(g, z, alpha.a1, alpha.a2);
  return z;
}

double norm_tan(const Grid& g, const SpectralField& f, int k) {
  if (k < 0) return 0.0;
  Stack s;
  s.add(g, f, 0, PhiChoice::SlabPhi);
  return Norms(g, k, 0.0)(s, k, true);
}

double norm_co(const Grid& g, const SpectralField& f, int k, PhiChoice phi) {
  if (k < 0) return 0.0;
  if (k > kMaxConormalOrder) throw Error(ErrorKind::OrderExceeded, "order beyond the padded workspace");
  Stack s;
  s.add(g, f, k, phi);
  return Norms(g, k, 0.0)(s, k, false);
}

double norm_tan(const Grid& g, const SpectralVectorField& v, int k) {
  return norm_tan(g, v[0], k) + norm_tan(g, v[1], k) + norm_tan(g, v[2], k);
}

double norm_co(const Grid& g, const SpectralVectorField& v, int k, PhiChoice phi) {
  return norm_co(g, v[0], k, phi) + norm_co(g, v[1], k, phi) + norm_co(g, v[2], k, phi);
}

SpectralVectorField curl(const Grid& g, const SpectralVectorField& v) {
  SpectralVectorField w{{derivative(g, v[2], 2), derivative(g, v[0], 3), derivative(g, v[1], 1)}};
  w[0] -= derivative(g, v[1], 3);
  w[1] -= derivative(g, v[2], 1);
  w[2] -= derivative(g, v[0], 2);
  return w;
}

double energy_tan(const Grid& g, const State& s, int k) {
  const Fields f(g, s);
  Stacks st = build_stacks(g, f, 0, PhiChoice::SlabPhi);
  return energy_tan_k(Norms(g, std::max(k, 0), 0.0), st, k);
}

double energy(const Grid& g, const State& s, int k, PhiChoice phi) {
  const Fields f(g, s);
  Stacks st = build_stacks(g, f, std::max(k, 2), phi);
  return energy_k(Norms(g, std::max(k, 0), 0.0), st, k);
}

double dissipation_tan(const Grid& g, const State& s, int k) {
  const Fields f(g, s);
  Stacks st = build_stacks(g, f, 0, PhiChoice::SlabPhi);
  return dissipation_tan_k(Norms(g, std::max(k, 0), 0.0), st, k);
}

double dissipation(const Grid& g, const State& s, int k, PhiChoice phi) {
  const Fields f(g, s);
  Stacks st = build_stacks(g, f, std::max(k, 2), phi);
  return dissipation_k(Norms(g, std::max(k, 0), 0.0), st, k);
}

bool EnergyLedger::all_finite() const noexcept {
  for (double v : {E_tan_m1, E_tan_m, E_m1, E_m, D_tan_m1, D_tan_m, D_m1, D_m, E_full, D_full, neg_u_b,
                   neg_w, neg_d33, E_hat3_tan, cross_phi1, cross_phi2, cross_phi3, energy_L2,
                   dissipation_L2, div_u, div_b})
    if (!std::isfinite(v)) return false;
  return std::isfinite(t);
}

double composite_energy(const Grid& g, const State& state, const ConormalConfig& cfg) {
  cfg.validate();
  const Fields f(g, state);
  return energy_full_of(Norms(g, cfg.m, cfg.s), build_stacks(g, f, cfg.m, cfg.phi), cfg.m);
}

double composite_dissipation(const Grid& g, const State& state, const ConormalConfig& cfg) {
  cfg.validate();
  const Fields f(g, state);
  return dissipation_full_of(Norms(g, cfg.m, cfg.s), build_stacks(g, f, cfg.m, cfg.phi), cfg.m, state.eps);
}

double spectral_tail_fraction(const Grid& g, const State& s, int m) {
  int cut1 = 0, cut2 = 0;
  for (int i = 0; i < g.n1(); ++i)
    if (g.retained1(i)) cut1 = std::max(cut1, std::abs(g.mode1(i)) + 1);
  for (int i = 0; i < g.n2(); ++i)
    if (g.retained2(i)) cut2 = std::max(cut2, std::abs(g.mode2(i)) + 1);
  const int cut3 = g.retained3_count();
  double total = 0.0, tail = 0.0;
  for (int i1 = 0; i1 < g.n1(); ++i1)
    for (int i2 = 0; i2 < g.n2(); ++i2) {
      const bool outer_h = std::abs(g.mode1(i1)) > 0.8 * cut1 || std::abs(g.mode2(i2)) > 0.8 * cut2;
      const double kh2 = g.kd1(i1) * g.kd1(i1) + g.kd2(i2) * g.kd2(i2);
      for (int j = 0; j < g.n3(); ++j) {
        const double w = std::pow(1.0 + kh2 + g.kappa(j) * g.kappa(j), m);
        double e = 0.0;
        for (const SpectralVectorField* v : {&s.u, &s.b})
          for (int c = 0; c < 3; ++c)
            e += g.vertical_weight(j, (*v)[c].basis()) * std::norm((*v)[c](i1, i2, j));
        total += w * e;
        if (outer_h || j > 0.8 * cut3) tail += w * e;
      }
    }
  return total > 0.0 ? tail / total : 0.0;
}

EnergyLedger ledger(const Grid& g, const State& state, const ConormalConfig& cfg) {
  cfg.validate();
  const int m = cfg.m;
  EnergyLedger L;
  L.t = state.t;
  L.m = m;

  const double tail = spectral_tail_fraction(g, state, m);
  if (tail > 0.01) {
    const std::string msg = "outer spectral shell holds " + std::to_string(100 * tail) +
                            "% of the order-" + std::to_string(m) + " norm";
    if (!cfg.allow_underresolved) throw Error(ErrorKind::UnderResolved, msg);
    L.warnings.push_back(msg);
  }
  if (g.retained3_count() - 1 < m)
    L.warnings.push_back("vertical dealias margin below m modes");

  const Fields f(g, state);
  const Stacks s = build_stacks(g, f, m, cfg.phi);
  const Norms n(g, m, cfg.s);

  L.E_tan_m1 = energy_tan_k(n, s, m - 1);
  L.E_tan_m = energy_tan_k(n, s, m);
  L.E_m1 = energy_k(n, s, m - 1);
  L.E_m = energy_k(n, s, m);
  L.D_tan_m1 = dissipation_tan_k(n, s, m - 1);
  L.D_tan_m = dissipation_tan_k(n, s, m);
  L.D_m1 = dissipation_k(n, s, m - 1);
  L.D_m = dissipation_k(n, s, m);

  L.neg_u_b = n(s.u, m - 1, true, Mult::NegS) + n(s.b, m - 1, true, Mult::NegS);
  L.neg_w = n(s.wu, m - 2, true, Mult::NegS) + n(s.wb, m - 2, true, Mult::NegS);
  L.neg_d33 = n(s.u33, 0, true, Mult::NegS) + n(s.b33, 0, true, Mult::NegS);
  L.E_full = energy_full_of(n, s, m);
  L.D_full = dissipation_full_of(n, s, m, state.eps);

  L.E_hat3_tan = energy_tan_k(n, s, 3) + n(s.wu3, 1, true) + n(s.wb3, 1, true);

  // cross functionals
  std::vector<double> c1(g.columns(), 0.0), c2(g.columns(), 0.0);
  for (int i = 0; i < 3; ++i) {
    const auto a = column_cross_d2(g, f.u[i], f.b[i]);
    const auto b = column_cross_d2(g, f.wu[i], f.wb[i]);
    for (std::size_t c = 0; c < g.columns(); ++c) {
      c1[c] += a[c];
      c2[c] += b[c];
    }
  }
  L.cross_phi1 = n.cross(c1, m - 2);
  L.cross_phi2 = n.cross(c2, m - 3);
  double c3 = 0.0;
  for (int i = 0; i < 3; ++i) {
    SpectralField zb = pad_vertical(g, f.wb[i]), zu = pad_vertical(g, f.wu[i]);
    for (int a = 0; a <= m - 3; ++a) {
      if (a > 0) {
        zb = apply_z3(g, zb, cfg.phi);
        zu = apply_z3(g, zu, cfg.phi);
      }
      c3 += n.cross(column_cross_d2(g, d3(g, zb), d3(g, zu)), m - 3 - a);
    }
  }
  L.cross_phi3 = c3;

  L.energy_L2 = l2_energy(g, state);
  L.dissipation_L2 = l2_dissipation(g, state);
  L.div_u = relative_divergence(g, state.u);
  L.div_b = relative_divergence(g, state.b);
  return L;
}

namespace {

SpectralField resample(const Grid& from, const Grid& to, const SpectralField& f) {
  SpectralField out(to, f.basis());
  for (int i1 = 0; i1 < from.n1(); ++i1) {
    const int n1 = from.mode1(i1);
    if (2 * std::abs(n1) >= from.n1()) continue;
    const int o1 = n1 < 0 ? n1 + to.n1() : n1;
    for (int i2 = 0; i2 < from.n2(); ++i2) {
      const int n2 = from.mode2(i2);
      if (2 * std::abs(n2) >= from.n2()) continue;
      const int o2 = n2 < 0 ? n2 + to.n2() : n2;
      for (int j = 0; j < from.n3(); ++j) out(o1, o2, j) = f(i1, i2, j);
    }
  }
  return out;
}

double max_abs(const PhysicalField& p) {
  double m = 0.0;
  for (double v : p) m = std::max(m, std::abs(v));
  return m;
}

// Physical samples of a field, its gradient and the gradient of its curl.
struct Sampled {
  PhysicalField v[3], dv[3][3], dw[3][3];
  Sampled(const Grid& g, const SpectralVectorField& f) {
    const SpectralVectorField w = curl(g, f);
    for (int i = 0; i < 3; ++i) {
      v[i] = to_physical(g, f[i]);
      for (int k = 0; k < 3; ++k) {
        dv[i][k] = to_physical(g, derivative(g, f[i], k + 1));
        dw[i][k] = to_physical(g, derivative(g, w[i], k + 1));
      }
    }
  }
};

// Residual of the commutator expansion of curl((u.grad) b) for one ordering.
double commutator_residual(const Grid& g, const Sampled& u, const Sampled& b) {
  const std::size_t n = g.size();
  // (u.grad) b, exactly representable on the product grid
  SpectralVectorField adv;
  for (int l = 0; l < 3; ++l) {
    PhysicalField p(n, 0.0);
    for (std::size_t q = 0; q < n; ++q)
      for (int k = 0; k < 3; ++k) p[q] += u.v[k][q] * b.dv[l][k][q];
    adv[l] = to_spectral(g, p, l == 2 ? VB::Sine : VB::Cosine);
  }
  const SpectralVectorField cadv = curl(g, adv);
  double diff = 0.0, scale = 0.0;
  for (int l = 0; l < 3; ++l) {
    const PhysicalField lhs_a = to_physical(g, cadv[l]);
    const int p1 = (l + 1) % 3, p2 = (l + 2) % 3;
    for (std::size_t q = 0; q < n; ++q) {
      double lhs = lhs_a[q];
      for (int k = 0; k < 3; ++k) lhs -= u.v[k][q] * b.dw[l][k][q];
      double rhs = 0.0;
      for (int k = 0; k < 3; ++k) rhs += u.dv[k][p1][q] * b.dv[p2][k][q] - u.dv[k][p2][q] * b.dv[p1][k][q];
      diff = std::max(diff, std::abs(lhs - rhs));
      scale = std::max({scale, std::abs(lhs), std::abs(rhs)});
    }
  }
  return scale > 0.0 ? diff / scale : 0.0;
}

// grad u3 x d3 b directly and with d3 v3 replaced by -div_h v_h.
double substitution_residual(const Grid& g, const Sampled& u, const Sampled& b) {
  const auto& du = u.dv;
  const auto& db = b.dv;
  double diff = 0.0, scale = 0.0;
  for (std::size_t q = 0; q < g.size(); ++q) {
    const double u31 = du[2][0][q], u32 = du[2][1][q], u33 = du[2][2][q];
    const double b13 = db[0][2][q], b23 = db[1][2][q], b33 = db[2][2][q];
    const double divu = du[0][0][q] + du[1][1][q], divb = db[0][0][q] + db[1][1][q];
    const double direct[3] = {u32 * b33 - u33 * b23, u33 * b13 - u31 * b33, u31 * b23 - u32 * b13};
    const double subst[3] = {-u32 * divb + divu * b23, -divu * b13 + u31 * divb, u31 * b23 - u32 * b13};
    for (int i = 0; i < 3; ++i) {
      diff = std::max(diff, std::abs(direct[i] - subst[i]));
      scale = std::max({scale, std::abs(direct[i]), std::abs(subst[i])});
    }
  }
  return scale > 0.0 ? diff / scale : 0.0;
}

}  // namespace

double curl_identity_residual(const Grid& g, const SpectralVectorField& u, const SpectralVectorField& b) {
  // smallest grid on which products of two retained fields are sampled without aliasing
  int r1 = 0, r2 = 0;
  for (int i = 0; i < g.n1(); ++i)
    if (g.retained1(i)) r1 = std::max(r1, std::abs(g.mode1(i)));
  for (int i = 0; i < g.n2(); ++i)
    if (g.retained2(i)) r2 = std::max(r2, std::abs(g.mode2(i)));
  GridSpec fine = g.spec();
  fine.n1 = std::max(4, 4 * r1 + 2);
  fine.n2 = std::max(4, 4 * r2 + 2);
  fine.n3 = std::max(4, 2 * (g.retained3_count() - 1) + 2);  // sine products need j = 2 r3 below the last node
  fine.dealias_fraction = 1.0;
  const GridPtr fg = plan_grid(fine);
  SpectralVectorField uf, bf;
  for (int i = 0; i < 3; ++i) {
    uf[i] = resample(g, *fg, dealias(g, u[i]));
    bf[i] = resample(g, *fg, dealias(g, b[i]));
  }
  const Sampled us(*fg, uf), bs(*fg, bf);
  return std::max({commutator_residual(*fg, us, bs), commutator_residual(*fg, bs, us),
                   substitution_residual(*fg, us, bs), substitution_residual(*fg, bs, us)});
}

bool ProbeReport::any_degenerate() const noexcept {
  return std::any_of(entries.begin(), entries.end(), [](const ProbeEntry& e) { return e.degenerate; });
}

ProbeReport sobolev_probe(const Grid& g, const SpectralField& f, const SpectralField& gg,
                          const SpectralField& h, double s, PhiChoice phi) {
  if (!f.same_shape(gg) || !f.same_shape(h) || f.nz() != g.n3())
    throw Error(ErrorKind::ShapeMismatch, "probe fields must share the grid");
  if (!(s > 0.5 && s < 1.0)) throw Error(ErrorKind::InvalidSpec, "probe exponent s must lie in (1/2, 1)");
  ProbeReport rep;
  auto add = [&](std::string name, double lhs, double rhs) {
    ProbeEntry e{std::move(name), lhs, rhs, 0.0, false};
    const double tiny = 1e-300;
    if (!(rhs > tiny)) {
      e.degenerate = true;
      e.ratio = std::numeric_limits<double>::quiet_NaN();
    } else {
      e.ratio = lhs / rhs;
    }
    rep.entries.push_back(std::move(e));
  };
  // ||d^beta f|| for a list of axes
  auto nd = [&](const SpectralField& x, std::initializer_list<int> axes) {
    SpectralField y = x;
    for (int a : axes) y = derivative(g, y, a);
    return std::sqrt(l2_norm_sq(g, y));
  };
  const auto w3 = node_weights3(g);
  const double cell = node_cell(g);
  const PhysicalField fp = to_physical(g, f), gp = to_physical(g, gg), hp = to_physical(g, h);

  {
    const double rhs = std::pow(nd(f, {}) * nd(f, {1}) * nd(f, {2}) * nd(f, {1, 2}) * nd(f, {3}) *
                                    nd(f, {1, 3}) * nd(f, {2, 3}) * nd(f, {1, 2, 3}),
                                0.125);
    add("linf_eight_factor", max_abs(fp), rhs);
  }
  double trilinear = 0.0;
  for (int i1 = 0; i1 < g.n1(); ++i1)
    for (int i2 = 0; i2 < g.n2(); ++i2)
      for (int j = 0; j < g.n3(); ++j) {
        const std::size_t q = g.index(i1, i2, j);
        trilinear += cell * w3[j] * std::abs(fp[q] * gp[q] * hp[q]);
      }
  const int perms[6][3] = {{1, 2, 3}, {1, 3, 2}, {2, 1, 3}, {2, 3, 1}, {3, 1, 2}, {3, 2, 1}};
  for (const auto& p : perms) {
    const int i = p[0], j = p[1], k = p[2];
    const double rhs = nd(f, {}) * std::sqrt(nd(gg, {}) * nd(gg, {i})) *
                       std::pow(nd(h, {}) * nd(h, {j}) * nd(h, {k}) * nd(h, {j, k}), 0.25);
    add("trilinear_i" + std::to_string(i) + "_j" + std::to_string(j) + "_k" + std::to_string(k),
        trilinear, rhs);
  }
  add("trilinear_split",
      trilinear,
      std::sqrt(nd(f, {}) * nd(f, {1}) * nd(gg, {}) * nd(gg, {2}) * nd(h, {}) * nd(h, {3})));
  {
    const double f0 = nd(f, {});
    const double z1 = std::sqrt(l2_norm_sq(g, conormal_Z(g, f, {0, 0, 1}, phi)));
    const double z3 = std::sqrt(l2_norm_sq(g, conormal_Z(g, f, {0, 0, 3}, phi)));
    add("conormal_z3", z1, f0 + std::pow(f0, 0.75) * std::pow(z3, 0.25) + std::pow(f0, 2.0 / 3) * std::cbrt(z3));
  }
  {
    const double p = 2.0 / s;
    double acc = 0.0;
    for (int i1 = 0; i1 < g.n1(); ++i1)
      for (int i2 = 0; i2 < g.n2(); ++i2) {
        double sup = 0.0;
        for (int j = 0; j < g.n3(); ++j) sup = std::max(sup, std::abs(fp[g.index(i1, i2, j)]));
        acc += cell * std::pow(sup, p);
      }
    const double lhs = std::pow(acc, 1.0 / p);
    const double base = nd(f, {}) * nd(f, {2}) + nd(f, {1}) * nd(f, {1, 2});
    const double rhs = std::pow(base, (1 - s) / 2) * std::pow(nd(f, {}), (2 * s - 1) / 2) *
                       std::sqrt(nd(f, {3}));
    add("mixed_linf_l2s", lhs, rhs);
  }
  {
    // Hardy-Littlewood-Sobolev in x_h with q = 2, p = 2/(1+s), then L2 in x3
    const double p = 2.0 / (1.0 + s);
    const double lhs = std::sqrt(l2_norm_sq(g, lambda_h_pow(g, f, -s)));
    double acc = 0.0;
    for (int j = 0; j < g.n3(); ++j) {
      double slice = 0.0;
      for (int i1 = 0; i1 < g.n1(); ++i1)
        for (int i2 = 0; i2 < g.n2(); ++i2) slice += cell * std::pow(std::abs(fp[g.index(i1, i2, j)]), p);
      acc += w3[j] * std::pow(slice, 2.0 / p);
    }
    add("hls_q2", lhs, std::sqrt(acc));
  }
  return rep;
}

InterpolationCheck interpolation_check(const Grid& g, const SpectralField& f, double s) {
  const double l2 = std::sqrt(l2_norm_sq(g, f));
  const double neg = std::sqrt(l2_norm_sq(g, lambda_h_pow(g, f, -s)));
  const double grad = std::sqrt(l2_norm_sq(g, derivative(g, f, 1)) + l2_norm_sq(g, derivative(g, f, 2)));
  return {l2, std::pow(neg, 1.0 / (1.0 + s)) * std::pow(grad, s / (1.0 + s))};
}

}  // namespace mhdslab
