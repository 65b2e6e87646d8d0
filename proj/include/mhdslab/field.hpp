#pragma once

#include <array>
#include <span>
#include <vector>

#include "mhdslab/grid.hpp"

namespace mhdslab {

using PhysicalField = std::vector<double>;

/// Coefficients of one real scalar field: full horizontal Fourier spectrum
/// times a vertical cosine or sine series with nz terms. nz equals the grid's
/// N3 for fields that live on the grid and padded_n3() for the intermediate
/// products of the conormal machinery.
class SpectralField {
 public:
  SpectralField() = default;
  SpectralField(const Grid& grid, VerticalBasis basis)
      : SpectralField(grid.n1(), grid.n2(), grid.n3(), basis) {}
  SpectralField(int n1, int n2, int nz, VerticalBasis basis)
      : n1_(n1), n2_(n2), nz_(nz), basis_(basis), c_(std::size_t(n1) * n2 * nz) {}

  int n1() const noexcept { return n1_; }
  int n2() const noexcept { return n2_; }
  int nz() const noexcept { return nz_; }
  VerticalBasis basis() const noexcept { return basis_; }
  void set_basis(VerticalBasis b) noexcept { basis_ = b; }

  std::size_t size() const noexcept { return c_.size(); }
  std::span<Complex> coeffs() noexcept { return c_; }
  std::span<const Complex> coeffs() const noexcept { return c_; }
  Complex* data() noexcept { return c_.data(); }
  const Complex* data() const noexcept { return c_.data(); }

  std::size_t index(int i1, int i2, int j) const noexcept {
    return (std::size_t(i1) * n2_ + i2) * nz_ + j;
  }
  Complex& operator()(int i1, int i2, int j) noexcept { return c_[index(i1, i2, j)]; }
  Complex operator()(int i1, int i2, int j) const noexcept { return c_[index(i1, i2, j)]; }

  bool same_shape(const SpectralField& o) const noexcept {
    return n1_ == o.n1_ && n2_ == o.n2_ && nz_ == o.nz_ && basis_ == o.basis_;
  }

  SpectralField& operator+=(const SpectralField& o);
  SpectralField& operator-=(const SpectralField& o);
  SpectralField& operator*=(Complex a) noexcept {
    for (auto& v : c_) v *= a;
    return *this;
  }
  /// this += a * x
  SpectralField& axpy(Complex a, const SpectralField& x);

  void set_zero() noexcept { std::fill(c_.begin(), c_.end(), Complex{}); }
  bool all_finite() const noexcept;
  double max_abs() const noexcept;

 private:
  int n1_ = 0, n2_ = 0, nz_ = 0;
  VerticalBasis basis_ = VerticalBasis::Cosine;
  std::vector<Complex> c_;
};

SpectralField operator+(SpectralField a, const SpectralField& b);
SpectralField operator-(SpectralField a, const SpectralField& b);
SpectralField operator*(Complex s, SpectralField a);

/// Three components with bases (Cosine, Cosine, Sine) for u and b,
/// (Sine, Sine, Cosine) for their curls.
struct SpectralVectorField {
  std::array<SpectralField, 3> c;

  /// Zero field with the velocity/magnetic bases (Cosine, Cosine, Sine).
  static SpectralVectorField zeros(const Grid& grid);
  /// Zero field with the vorticity bases (Sine, Sine, Cosine).
  static SpectralVectorField zeros_curl(const Grid& grid);

  SpectralField& operator[](int i) noexcept { return c[i]; }
  const SpectralField& operator[](int i) const noexcept { return c[i]; }

  SpectralVectorField& operator+=(const SpectralVectorField& o);
  SpectralVectorField& operator-=(const SpectralVectorField& o);
  SpectralVectorField& operator*=(Complex a) noexcept;
  SpectralVectorField& axpy(Complex a, const SpectralVectorField& x);
  bool all_finite() const noexcept;
};

SpectralVectorField operator+(SpectralVectorField a, const SpectralVectorField& b);
SpectralVectorField operator-(SpectralVectorField a, const SpectralVectorField& b);

}  // namespace mhdslab
