#pragma once

#include <array>
#include <string>
#include <vector>

#include "mhdslab/dynamics.hpp"
#include "mhdslab/field.hpp"
#include "mhdslab/grid.hpp"

namespace mhdslab {

/// Weight of the normal conormal field Z3 = phi(x3) d3.
enum class PhiChoice {
  RationalPhi,  // x3 / (1 + x3); only approximately representable in the vertical bases
  SlabPhi,   // (L3/pi) sin(pi x3 / L3); tangent at both walls, exact in the padded workspace
};

struct ConormalConfig {
  int m = 4;
  double s = 0.95;
  double sigma = 0.92;
  PhiChoice phi = PhiChoice::SlabPhi;
  bool allow_underresolved = false;

  /// Throws InvalidSpec unless 4 <= m <= kMaxConormalOrder and 9/10 < sigma < s < 1.
  void validate() const;
};

struct MultiIndex {
  int a1 = 0, a2 = 0, a3 = 0;
  int order() const noexcept { return a1 + a2 + a3; }
  MultiIndex horizontal() const noexcept { return {a1, a2, 0}; }
};

/// All multi-indices with |alpha| <= k (a3 = 0 when `tangential`).
std::vector<MultiIndex> multi_indices(int k, bool tangential);

/// phi(x3) for 0 <= x3 <= l3; OutOfDomain otherwise.
double weight_phi(double x3, PhiChoice choice, double l3);

/// Z1^a1 Z2^a2 Z3^a3 f. The result lives on the padded vertical workspace
/// (nz = grid.padded_n3()) and keeps the basis of f. Input may be unpadded or
/// padded. OrderExceeded when a3 > kMaxConormalOrder or |alpha| > kMaxConormalOrder + 2.
SpectralField conormal_Z(const Grid& grid, const SpectralField& f, MultiIndex alpha,
                         PhiChoice phi = PhiChoice::SlabPhi);

/// Copy of f on the padded vertical workspace (zero coefficients appended).
SpectralField pad_vertical(const Grid& grid, const SpectralField& f);

/// Squared norms: sum over tangential (a3 = 0) or all |alpha| <= k of ||Z^alpha f||^2.
/// Negative k gives 0.
double norm_tan(const Grid& grid, const SpectralField& f, int k);
double norm_co(const Grid& grid, const SpectralField& f, int k, PhiChoice phi = PhiChoice::SlabPhi);
double norm_tan(const Grid& grid, const SpectralVectorField& v, int k);
double norm_co(const Grid& grid, const SpectralVectorField& v, int k,
               PhiChoice phi = PhiChoice::SlabPhi);

/// Spectral curl; (C,C,S) input gives (S,S,C) output.
SpectralVectorField curl(const Grid& grid, const SpectralVectorField& v);

/// Functionals for arbitrary order k (k >= 0); orders below zero contribute nothing.
double energy_tan(const Grid& grid, const State& s, int k);
double energy(const Grid& grid, const State& s, int k, PhiChoice phi = PhiChoice::SlabPhi);
double dissipation_tan(const Grid& grid, const State& s, int k);
double dissipation(const Grid& grid, const State& s, int k, PhiChoice phi = PhiChoice::SlabPhi);

/// All stored entries are squared norms; cross_phi* are sign-indefinite.
struct EnergyLedger {
  double t = 0.0;
  int m = 0;
  double E_tan_m1 = 0, E_tan_m = 0, E_m1 = 0, E_m = 0;
  double D_tan_m1 = 0, D_tan_m = 0, D_m1 = 0, D_m = 0;
  double E_full = 0, D_full = 0;
  double neg_u_b = 0;  // ||Lambda_h^-s (u,b)||^2 in H^{m-1}_tan
  double neg_w = 0;    // ||Lambda_h^-s (w^u,w^b)||^2 in H^{m-2}_tan
  double neg_d33 = 0;  // ||Lambda_h^-s d33 (u,b)||^2 in L2
  double E_hat3_tan = 0;  // E^3_tan + ||d3 (w^u,w^b)||^2 in H^1_tan
  double cross_phi1 = 0, cross_phi2 = 0, cross_phi3 = 0;
  double energy_L2 = 0, dissipation_L2 = 0;
  double div_u = 0, div_b = 0;  // max |div| over nodes relative to max |d_j v_i|
  std::vector<std::string> warnings;

  bool all_finite() const noexcept;
};

/// Full diagnostic ledger of a state. UnderResolved when the outer shell of
/// the retained spectrum (beyond 0.8 of the cutoff) carries more than 1% of
/// the order-m weighted norm of (u, b), unless cfg.allow_underresolved.
EnergyLedger ledger(const Grid& grid, const State& state, const ConormalConfig& cfg);

/// The composite energy E(u,b) and dissipation D(u,b,eps) of order cfg.m alone
/// (no resolution guard).
double composite_energy(const Grid& grid, const State& state, const ConormalConfig& cfg);
double composite_dissipation(const Grid& grid, const State& state, const ConormalConfig& cfg);

/// Share of the order-m weighted norm of (u, b) held in the outer shell.
double spectral_tail_fraction(const Grid& grid, const State& state, int m);

/// Max relative pointwise residual of the commutator expansion
///   curl((u.grad) b) - (u.grad) curl b = sum_k grad u_k x d_k b
/// (and the same with u, b exchanged) together with the component forms of
/// grad u3 x d3 b and grad b3 x d3 u after substituting d3 v3 = -div_h v_h.
/// Products are formed on a doubled grid, so resolved inputs are exact.
double curl_identity_residual(const Grid& grid, const SpectralVectorField& u,
                              const SpectralVectorField& b);

struct ProbeEntry {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;       // lhs / rhs, NaN when degenerate
  bool degenerate = false;  // rhs vanished
};

struct ProbeReport {
  std::vector<ProbeEntry> entries;
  bool any_degenerate() const noexcept;
};

/// The five anisotropic inequalities (the trilinear one for all six (i,j,k)
/// permutations) and the horizontal Hardy-Littlewood-Sobolev bound with
/// q = 2, p = 2/(1+s). Ratios are empirical constants, not verdicts.
ProbeReport sobolev_probe(const Grid& grid, const SpectralField& f, const SpectralField& g,
                          const SpectralField& h, double s,
                          PhiChoice phi = PhiChoice::SlabPhi);

/// ||f||, and ||Lambda_h^-s f||^{1/(1+s)} ||grad_h f||^{s/(1+s)}.
struct InterpolationCheck {
  double lhs = 0.0;
  double rhs = 0.0;
};
InterpolationCheck interpolation_check(const Grid& grid, const SpectralField& f, double s);

}  // namespace mhdslab
