#pragma once

#include <cmath>
#include <random>

#include "mhdslab/field.hpp"
#include "mhdslab/grid.hpp"
#include "mhdslab/spectral.hpp"

namespace mhdslab::testing {

/// Real random field with all retained modes populated (or every mode when
/// `dealiased` is false). Built from physical samples so conjugate symmetry
/// holds by construction.
inline SpectralField random_field(const Grid& g, VerticalBasis basis, std::mt19937_64& rng,
                                  bool dealiased = true) {
  std::normal_distribution<double> n01;
  PhysicalField p(g.size());
  for (auto& v : p) v = n01(rng);
  if (basis == VerticalBasis::Sine)
    for (std::size_t c = 0; c < g.columns(); ++c) {
      p[c * g.n3()] = 0.0;
      p[c * g.n3() + g.n3() - 1] = 0.0;
    }
  SpectralField f = to_spectral(g, p, basis);
  if (dealiased) dealias_in_place(g, f);
  return f;
}

inline SpectralVectorField random_vector(const Grid& g, std::mt19937_64& rng, bool dealiased = true) {
  return {{random_field(g, VerticalBasis::Cosine, rng, dealiased),
           random_field(g, VerticalBasis::Cosine, rng, dealiased),
           random_field(g, VerticalBasis::Sine, rng, dealiased)}};
}

inline SpectralVectorField random_solenoidal(const Grid& g, std::mt19937_64& rng,
                                             bool zero_mean = true) {
  auto v = leray_project(g, random_vector(g, rng));
  if (zero_mean) remove_horizontal_mean(g, v);
  return v;
}

inline double rel_diff(const Grid& g, const SpectralField& a, const SpectralField& b) {
  const double den = std::sqrt(l2_norm_sq(g, b));
  return std::sqrt(l2_norm_sq(g, a - b)) / (den > 0 ? den : 1.0);
}

inline double rel_diff(const Grid& g, const SpectralVectorField& a, const SpectralVectorField& b) {
  const double den = std::sqrt(l2_norm_sq(g, b));
  return std::sqrt(l2_norm_sq(g, a - b)) / (den > 0 ? den : 1.0);
}

inline double max_coeff_diff(const SpectralField& a, const SpectralField& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

}  // namespace mhdslab::testing
