#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <numbers>
#include <span>
#include <vector>

namespace mhdslab {

using Complex = std::complex<double>;

/// Vertical expansion used by a scalar component. Horizontal velocity and
/// magnetic components use Cosine, vertical components use Sine, so that
/// u3 = 0 and d3 u_h = 0 hold exactly on both walls.
enum class VerticalBasis { Cosine, Sine };

inline VerticalBasis flip(VerticalBasis b) {
  return b == VerticalBasis::Cosine ? VerticalBasis::Sine : VerticalBasis::Cosine;
}

const char* to_string(VerticalBasis b) noexcept;

struct GridSpec {
  int n1 = 64;
  int n2 = 64;
  int n3 = 17;
  double l1 = 16.0 * std::numbers::pi;
  double l2 = 16.0 * std::numbers::pi;
  double l3 = 2.0 * std::numbers::pi;
  double dealias_fraction = 2.0 / 3.0;
};

/// Largest conormal power Z3^a the padded vertical workspace resolves exactly
/// (for the slab weight) on a fully populated vertical spectrum.
inline constexpr int kMaxConormalOrder = 10;

/// Immutable discretization of [0,L1) x [0,L2) x [0,L3].
///
/// Horizontal directions are periodic Fourier; the vertical direction uses
/// cosine/sine series sampled on x3_j = j L3 / (N3-1), j = 0..N3-1 (DCT-I /
/// DST-I nodes, walls included). Coefficients are stored for the full
/// horizontal spectrum, index (i1, i2, j) with j fastest.
///
/// A Grid owns its FFTW plans. Execution is thread-safe; construct through
/// plan_grid() and share the returned pointer.
class Grid {
 public:
  ~Grid();
  Grid(const Grid&) = delete;
  Grid& operator=(const Grid&) = delete;

  const GridSpec& spec() const noexcept { return spec_; }
  int n1() const noexcept { return spec_.n1; }
  int n2() const noexcept { return spec_.n2; }
  int n3() const noexcept { return spec_.n3; }
  /// Number of vertical intervals, N3 - 1.
  int m3() const noexcept { return spec_.n3 - 1; }
  /// Vertical coefficient count of the padded conormal workspace.
  int padded_n3() const noexcept { return padded_n3_; }
  double l1() const noexcept { return spec_.l1; }
  double l2() const noexcept { return spec_.l2; }
  double l3() const noexcept { return spec_.l3; }

  std::size_t columns() const noexcept { return std::size_t(spec_.n1) * spec_.n2; }
  std::size_t size() const noexcept { return columns() * spec_.n3; }

  std::size_t index(int i1, int i2, int j) const noexcept {
    return (std::size_t(i1) * spec_.n2 + i2) * spec_.n3 + j;
  }

  /// Signed integer wavenumber of storage index i along an axis of n points.
  static int signed_mode(int i, int n) noexcept { return i < n / 2 ? i : i - n; }
  int mode1(int i1) const noexcept { return signed_mode(i1, spec_.n1); }
  int mode2(int i2) const noexcept { return signed_mode(i2, spec_.n2); }

  /// Physical wavenumbers 2 pi n / L.
  double k1(int i1) const noexcept { return k1_[i1]; }
  double k2(int i2) const noexcept { return k2_[i2]; }
  /// Differentiation wavenumbers: equal to k1/k2 except zero at the Nyquist index.
  double kd1(int i1) const noexcept { return kd1_[i1]; }
  double kd2(int i2) const noexcept { return kd2_[i2]; }
  /// Vertical wavenumber pi j / L3 (any j, including padded indices).
  double kappa(int j) const noexcept { return std::numbers::pi * j / spec_.l3; }

  double x1(int i1) const noexcept { return spec_.l1 * i1 / spec_.n1; }
  double x2(int i2) const noexcept { return spec_.l2 * i2 / spec_.n2; }
  double x3(int j) const noexcept { return spec_.l3 * j / m3(); }

  /// Smallest nonzero |k_h| present on the grid.
  double min_horizontal_wavenumber() const noexcept;
  /// Minimum physical spacing over the three directions.
  double min_spacing() const noexcept;

  bool retained1(int i1) const noexcept { return keep1_[i1]; }
  bool retained2(int i2) const noexcept { return keep2_[i2]; }
  bool retained3(int j) const noexcept { return j < keep3_; }
  /// Number of retained vertical modes (indices 0 .. count-1).
  int retained3_count() const noexcept { return keep3_; }

  /// L2 weight of vertical mode j in the given basis: integral over [0,L3]
  /// of the squared basis function (L3 for the constant cosine, L3/2 else).
  double vertical_weight(int j, VerticalBasis b) const noexcept {
    if (b == VerticalBasis::Cosine && j == 0) return spec_.l3;
    if (b == VerticalBasis::Sine && j == 0) return 0.0;
    return 0.5 * spec_.l3;
  }
  double horizontal_area() const noexcept { return spec_.l1 * spec_.l2; }

  /// Physical samples (size()) to coefficients (size()).
  void forward(std::span<const double> physical, VerticalBasis basis,
               std::span<Complex> coeffs) const;
  /// Coefficients (size()) to physical samples (size()).
  void inverse(std::span<const Complex> coeffs, VerticalBasis basis,
               std::span<double> physical) const;

  /// In-place vertical synthesis (coefficients -> nodal values) on complex
  /// columns of length nz, nz in {n3(), padded_n3()}. Values sit on the
  /// nodes x3_j = j L3/(nz-1).
  void vertical_synthesize(std::span<Complex> data, int nz, VerticalBasis basis) const;
  /// Inverse of vertical_synthesize.
  void vertical_analyze(std::span<Complex> data, int nz, VerticalBasis basis) const;

 private:
  struct Plans;
  explicit Grid(const GridSpec& spec);
  friend std::shared_ptr<const Grid> plan_grid(const GridSpec& spec);

  const Plans& plans_for(int nz) const;

  GridSpec spec_;
  int padded_n3_ = 0;
  int keep3_ = 0;
  std::vector<double> k1_, k2_, kd1_, kd2_;
  std::vector<bool> keep1_, keep2_;
  std::unique_ptr<Plans> plans_;
  std::unique_ptr<Plans> padded_plans_;
};

using GridPtr = std::shared_ptr<const Grid>;

/// Validates the spec and builds wavenumber tables and transform plans.
/// Throws Error(InvalidSpec) if N1/N2 are odd or nonpositive, N3 < 4,
/// a length is not strictly positive, or the dealias fraction is outside (0,1].
GridPtr plan_grid(const GridSpec& spec);

}  // namespace mhdslab
