#pragma once

#include <span>

#include "mhdslab/field.hpp"
#include "mhdslab/grid.hpp"

namespace mhdslab {

/// Physical samples on the collocation grid to coefficients.
SpectralField to_spectral(const Grid& grid, std::span<const double> samples, VerticalBasis basis);
/// Coefficients to physical samples. Requires nz == grid.n3().
PhysicalField to_physical(const Grid& grid, const SpectralField& f);

/// Samples a callable f(x1, x2, x3) on the collocation grid.
template <class F>
PhysicalField sample(const Grid& grid, F&& f) {
  PhysicalField out(grid.size());
  for (int i1 = 0; i1 < grid.n1(); ++i1)
    for (int i2 = 0; i2 < grid.n2(); ++i2)
      for (int j = 0; j < grid.n3(); ++j)
        out[grid.index(i1, i2, j)] = f(grid.x1(i1), grid.x2(i2), grid.x3(j));
  return out;
}

/// Exact spectral derivative along axis 1, 2 or 3. Axis 3 maps Cosine to
/// Sine and back; the result carries the flipped basis tag.
SpectralField derivative(const Grid& grid, const SpectralField& f, int axis);

/// div v as a Cosine scalar, for v with bases (Cosine, Cosine, Sine).
SpectralField divergence(const Grid& grid, const SpectralVectorField& v);
/// grad p for a Cosine scalar p; bases (Cosine, Cosine, Sine).
SpectralVectorField gradient(const Grid& grid, const SpectralField& p);

/// Orthogonal L2 projection onto divergence-free fields compatible with the
/// slip walls. Uses the per-mode vectors (i k1, i k2, kappa) for the
/// divergence and (i k1, i k2, -kappa) for the gradient.
SpectralVectorField leray_project(const Grid& grid, SpectralVectorField v);
void leray_project_in_place(const Grid& grid, SpectralVectorField& v);

/// Horizontal fractional multiplier |k_h|^s. The k_h = 0 column is zeroed for
/// s != 0 (and left untouched for s == 0).
SpectralField lambda_h_pow(const Grid& grid, SpectralField f, double s);

/// Zero every coefficient outside the 2/3-type mask.
SpectralField dealias(const Grid& grid, SpectralField f);
void dealias_in_place(const Grid& grid, SpectralField& f);
void dealias_in_place(const Grid& grid, SpectralVectorField& v);

/// Zero the k_h = 0 column (all vertical modes).
void remove_horizontal_mean(const Grid& grid, SpectralField& f);
void remove_horizontal_mean(const Grid& grid, SpectralVectorField& v);

/// Integral over the slab of f*g for two real fields in the same basis.
double inner_product(const Grid& grid, const SpectralField& f, const SpectralField& g);
/// Squared L2 norm over the slab (Parseval).
double l2_norm_sq(const Grid& grid, const SpectralField& f);
double l2_norm_sq(const Grid& grid, const SpectralVectorField& v);
/// sqrt(||f||^2 / volume).
double rms(const Grid& grid, const SpectralField& f);
double rms(const Grid& grid, const SpectralVectorField& v);

/// Point evaluation of the series (any nz).
double evaluate(const Grid& grid, const SpectralField& f, double x1, double x2, double x3);

/// Largest |f| over the collocation nodes.
double max_abs_physical(const Grid& grid, const SpectralField& f);

/// Largest |v| (Euclidean) over the collocation nodes.
double max_magnitude_physical(const Grid& grid, const SpectralVectorField& v);

}  // namespace mhdslab
