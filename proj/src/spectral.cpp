#include "mhdslab/spectral.hpp"

#include <cmath>
#include <numbers>

#include "mhdslab/error.hpp"

namespace mhdslab {

namespace {

constexpr Complex kI{0.0, 1.0};

void require_grid_shape(const Grid& grid, const SpectralField& f) {
  if (f.n1() != grid.n1() || f.n2() != grid.n2())
    throw Error(ErrorKind::ShapeMismatch, "field does not match grid horizontally");
}

void require_velocity_bases(const SpectralVectorField& v) {
  if (v[0].basis() != VerticalBasis::Cosine || v[1].basis() != VerticalBasis::Cosine ||
      v[2].basis() != VerticalBasis::Sine)
    throw Error(ErrorKind::InvalidState, "expected component bases (cosine, cosine, sine)");
}

}  // namespace

SpectralField to_spectral(const Grid& grid, std::span<const double> samples, VerticalBasis basis) {
  SpectralField f(grid, basis);
  grid.forward(samples, basis, f.coeffs());
  return f;
}

PhysicalField to_physical(const Grid& grid, const SpectralField& f) {
  if (f.nz() != grid.n3()) throw Error(ErrorKind::ShapeMismatch, "padded field has no grid samples");
  PhysicalField out(grid.size());
  grid.inverse(f.coeffs(), f.basis(), out);
  return out;
}

SpectralField derivative(const Grid& grid, const SpectralField& f, int axis) {
  require_grid_shape(grid, f);
  const int nz = f.nz();
  if (axis == 1 || axis == 2) {
    SpectralField out = f;
    for (int i1 = 0; i1 < f.n1(); ++i1)
      for (int i2 = 0; i2 < f.n2(); ++i2) {
        const Complex m = kI * (axis == 1 ? grid.kd1(i1) : grid.kd2(i2));
        Complex* col = out.data() + out.index(i1, i2, 0);
        for (int j = 0; j < nz; ++j) col[j] *= m;
      }
    return out;
  }
  if (axis != 3) throw Error(ErrorKind::InvalidSpec, "derivative axis must be 1, 2 or 3");
  SpectralField out(f.n1(), f.n2(), nz, flip(f.basis()));
  const bool from_cosine = f.basis() == VerticalBasis::Cosine;
  for (std::size_t c = 0; c < grid.columns(); ++c) {
    const Complex* in = f.data() + c * nz;
    Complex* res = out.data() + c * nz;
    if (from_cosine) {
      // d/dx3 cos(kappa x3) = -kappa sin(kappa x3); sine index nz-1 has no node support
      for (int j = 1; j < nz - 1; ++j) res[j] = -grid.kappa(j) * in[j];
    } else {
      for (int j = 1; j < nz - 1; ++j) res[j] = grid.kappa(j) * in[j];
    }
  }
  return out;
}

SpectralField divergence(const Grid& grid, const SpectralVectorField& v) {
  require_velocity_bases(v);
  const int nz = v[0].nz();
  SpectralField out(v[0].n1(), v[0].n2(), nz, VerticalBasis::Cosine);
  for (int i1 = 0; i1 < grid.n1(); ++i1)
    for (int i2 = 0; i2 < grid.n2(); ++i2) {
      const Complex a1 = kI * grid.kd1(i1), a2 = kI * grid.kd2(i2);
      const std::size_t base = out.index(i1, i2, 0);
      for (int j = 0; j < nz; ++j) {
        const double kap = (j < nz - 1) ? grid.kappa(j) : 0.0;
        out.data()[base + j] =
            a1 * v[0].data()[base + j] + a2 * v[1].data()[base + j] + kap * v[2].data()[base + j];
      }
    }
  return out;
}

SpectralVectorField gradient(const Grid& grid, const SpectralField& p) {
  if (p.basis() != VerticalBasis::Cosine)
    throw Error(ErrorKind::InvalidState, "gradient expects a cosine scalar");
  return {{derivative(grid, p, 1), derivative(grid, p, 2), derivative(grid, p, 3)}};
}

void leray_project_in_place(const Grid& grid, SpectralVectorField& v) {
  require_velocity_bases(v);
  const int nz = v[0].nz();
  for (int i1 = 0; i1 < grid.n1(); ++i1)
    for (int i2 = 0; i2 < grid.n2(); ++i2) {
      const double a = grid.kd1(i1), b = grid.kd2(i2);
      const std::size_t base = v[0].index(i1, i2, 0);
      for (int j = 0; j < nz; ++j) {
        const double kap = (j < nz - 1) ? grid.kappa(j) : 0.0;
        const double k2sum = a * a + b * b + kap * kap;
        if (k2sum == 0.0) continue;
        Complex& x = v[0].data()[base + j];
        Complex& y = v[1].data()[base + j];
        Complex& z = v[2].data()[base + j];
        const Complex div = kI * a * x + kI * b * y + kap * z;
        const Complex phi = div / k2sum;
        x += kI * a * phi;
        y += kI * b * phi;
        z -= kap * phi;
      }
    }
}

SpectralVectorField leray_project(const Grid& grid, SpectralVectorField v) {
  leray_project_in_place(grid, v);
  return v;
}

SpectralField lambda_h_pow(const Grid& grid, SpectralField f, double s) {
  require_grid_shape(grid, f);
  if (s == 0.0) return f;
  const int nz = f.nz();
  for (int i1 = 0; i1 < f.n1(); ++i1)
    for (int i2 = 0; i2 < f.n2(); ++i2) {
      const double kh = std::hypot(grid.k1(i1), grid.k2(i2));
      const double m = kh > 0.0 ? std::pow(kh, s) : 0.0;
      Complex* col = f.data() + f.index(i1, i2, 0);
      for (int j = 0; j < nz; ++j) col[j] *= m;
    }
  return f;
}

void dealias_in_place(const Grid& grid, SpectralField& f) {
  require_grid_shape(grid, f);
  const int nz = f.nz();
  for (int i1 = 0; i1 < f.n1(); ++i1)
    for (int i2 = 0; i2 < f.n2(); ++i2) {
      Complex* col = f.data() + f.index(i1, i2, 0);
      if (!grid.retained1(i1) || !grid.retained2(i2)) {
        std::fill(col, col + nz, Complex{});
        continue;
      }
      for (int j = grid.retained3_count(); j < nz; ++j) col[j] = 0.0;
    }
}

void dealias_in_place(const Grid& grid, SpectralVectorField& v) {
  for (auto& f : v.c) dealias_in_place(grid, f);
}

SpectralField dealias(const Grid& grid, SpectralField f) {
  dealias_in_place(grid, f);
  return f;
}

void remove_horizontal_mean(const Grid& grid, SpectralField& f) {
  require_grid_shape(grid, f);
  Complex* col = f.data() + f.index(0, 0, 0);
  std::fill(col, col + f.nz(), Complex{});
}

void remove_horizontal_mean(const Grid& grid, SpectralVectorField& v) {
  for (auto& f : v.c) remove_horizontal_mean(grid, f);
}

double inner_product(const Grid& grid, const SpectralField& f, const SpectralField& g) {
  if (!f.same_shape(g)) throw Error(ErrorKind::ShapeMismatch, "inner product of unlike fields");
  const int nz = f.nz();
  double acc = 0.0;
  for (std::size_t c = 0; c < grid.columns(); ++c) {
    const Complex* a = f.data() + c * nz;
    const Complex* b = g.data() + c * nz;
    for (int j = 0; j < nz; ++j)
      acc += grid.vertical_weight(j, f.basis()) * (std::conj(a[j]) * b[j]).real();
  }
  return acc * grid.horizontal_area();
}

double l2_norm_sq(const Grid& grid, const SpectralField& f) { return inner_product(grid, f, f); }

double l2_norm_sq(const Grid& grid, const SpectralVectorField& v) {
  return l2_norm_sq(grid, v[0]) + l2_norm_sq(grid, v[1]) + l2_norm_sq(grid, v[2]);
}

double rms(const Grid& grid, const SpectralField& f) {
  return std::sqrt(l2_norm_sq(grid, f) / (grid.horizontal_area() * grid.l3()));
}

double rms(const Grid& grid, const SpectralVectorField& v) {
  return std::sqrt(l2_norm_sq(grid, v) / (grid.horizontal_area() * grid.l3()));
}

double evaluate(const Grid& grid, const SpectralField& f, double x1, double x2, double x3) {
  const int nz = f.nz();
  std::vector<double> vert(nz);
  for (int j = 0; j < nz; ++j)
    vert[j] = f.basis() == VerticalBasis::Cosine ? std::cos(grid.kappa(j) * x3)
                                                  : std::sin(grid.kappa(j) * x3);
  Complex acc = 0.0;
  for (int i1 = 0; i1 < f.n1(); ++i1)
    for (int i2 = 0; i2 < f.n2(); ++i2) {
      const Complex phase = std::polar(1.0, grid.k1(i1) * x1 + grid.k2(i2) * x2);
      const Complex* col = f.data() + f.index(i1, i2, 0);
      Complex s = 0.0;
      for (int j = 0; j < nz; ++j) s += col[j] * vert[j];
      acc += phase * s;
    }
  return acc.real();
}

double max_abs_physical(const Grid& grid, const SpectralField& f) {
  double m = 0.0;
  for (double v : to_physical(grid, f)) m = std::max(m, std::abs(v));
  return m;
}

double max_magnitude_physical(const Grid& grid, const SpectralVectorField& v) {
  const auto a = to_physical(grid, v[0]), b = to_physical(grid, v[1]), c = to_physical(grid, v[2]);
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::sqrt(a[i] * a[i] + b[i] * b[i] + c[i] * c[i]));
  return m;
}

}  // namespace mhdslab
