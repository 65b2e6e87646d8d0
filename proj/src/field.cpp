#include "mhdslab/field.hpp"

#include <cmath>

#include "mhdslab/error.hpp"

namespace mhdslab {

namespace {
void require_same(const SpectralField& a, const SpectralField& b) {
  if (!a.same_shape(b)) throw Error(ErrorKind::ShapeMismatch, "field shapes or bases differ");
}
}  // namespace

SpectralField& SpectralField::operator+=(const SpectralField& o) {
  require_same(*this, o);
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
  return *this;
}

SpectralField& SpectralField::operator-=(const SpectralField& o) {
  require_same(*this, o);
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
  return *this;
}

SpectralField& SpectralField::axpy(Complex a, const SpectralField& x) {
  require_same(*this, x);
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += a * x.c_[i];
  return *this;
}

bool SpectralField::all_finite() const noexcept {
  for (const auto& v : c_)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  return true;
}

double SpectralField::max_abs() const noexcept {
  double m = 0.0;
  for (const auto& v : c_) m = std::max(m, std::abs(v));
  return m;
}

SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
SpectralField operator*(Complex s, SpectralField a) { return a *= s; }

SpectralVectorField SpectralVectorField::zeros(const Grid& grid) {
  return {{SpectralField(grid, VerticalBasis::Cosine), SpectralField(grid, VerticalBasis::Cosine),
           SpectralField(grid, VerticalBasis::Sine)}};
}

SpectralVectorField SpectralVectorField::zeros_curl(const Grid& grid) {
  return {{SpectralField(grid, VerticalBasis::Sine), SpectralField(grid, VerticalBasis::Sine),
           SpectralField(grid, VerticalBasis::Cosine)}};
}

SpectralVectorField& SpectralVectorField::operator+=(const SpectralVectorField& o) {
  for (int i = 0; i < 3; ++i) c[i] += o.c[i];
  return *this;
}

SpectralVectorField& SpectralVectorField::operator-=(const SpectralVectorField& o) {
  for (int i = 0; i < 3; ++i) c[i] -= o.c[i];
  return *this;
}

SpectralVectorField& SpectralVectorField::operator*=(Complex a) noexcept {
  for (auto& f : c) f *= a;
  return *this;
}

SpectralVectorField& SpectralVectorField::axpy(Complex a, const SpectralVectorField& x) {
  for (int i = 0; i < 3; ++i) c[i].axpy(a, x.c[i]);
  return *this;
}

bool SpectralVectorField::all_finite() const noexcept {
  for (const auto& f : c)
    if (!f.all_finite()) return false;
  return true;
}

SpectralVectorField operator+(SpectralVectorField a, const SpectralVectorField& b) {
  return a += b;
}
SpectralVectorField operator-(SpectralVectorField a, const SpectralVectorField& b) {
  return a -= b;
}

}  // namespace mhdslab
