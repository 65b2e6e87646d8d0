#include "mhdslab/grid.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <string>

#include "mhdslab/error.hpp"

namespace mhdslab {

namespace {

// The FFTW planner is not reentrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

double* as_doubles(Complex* p) { return reinterpret_cast<double*>(p); }
fftw_complex* as_fftw(Complex* p) { return reinterpret_cast<fftw_complex*>(p); }

}  // namespace

const char* to_string(VerticalBasis b) noexcept {
  return b == VerticalBasis::Cosine ? "cosine" : "sine";
}

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidSpec: return "invalid-spec";
    case ErrorKind::ShapeMismatch: return "shape-mismatch";
    case ErrorKind::CflViolation: return "cfl-violation";
    case ErrorKind::NonfiniteField: return "nonfinite-field";
    case ErrorKind::InsufficientSamples: return "insufficient-samples";
    case ErrorKind::OrderExceeded: return "order-exceeded";
    case ErrorKind::UnderResolved: return "under-resolved";
    case ErrorKind::OutOfDomain: return "out-of-domain";
    case ErrorKind::EmptyBand: return "empty-band";
    case ErrorKind::NonpositiveValues: return "nonpositive-values";
    case ErrorKind::TooFewPoints: return "too-few-points";
    case ErrorKind::MismatchedSchedules: return "mismatched-schedules";
    case ErrorKind::ZeroData: return "zero-data";
    case ErrorKind::IoError: return "io-error";
    case ErrorKind::CorruptHeader: return "corrupt-header";
    case ErrorKind::VersionMismatch: return "version-mismatch";
    case ErrorKind::DimensionMismatch: return "dimension-mismatch";
    case ErrorKind::InvalidState: return "invalid-state";
    case ErrorKind::Usage: return "usage";
  }
  return "unknown";
}

struct Grid::Plans {
  int nz = 0;
  fftw_plan cosine = nullptr;  // REDFT00 over nz nodes, re and im parts
  fftw_plan sine = nullptr;    // RODFT00 over the nz-2 interior nodes
  fftw_plan forward = nullptr;   // horizontal 2D DFTs, one per vertical index
  fftw_plan backward = nullptr;

  ~Plans() {
    for (fftw_plan p : {cosine, sine, forward, backward})
      if (p) fftw_destroy_plan(p);
  }
};

namespace {

fftw_plan make_vertical_plan(std::size_t columns, int nz, bool sine, Complex* scratch) {
  const int n = sine ? nz - 2 : nz;
  fftw_iodim64 dim{n, 2, 2};
  fftw_iodim64 many[2] = {{std::ptrdiff_t(columns), 2 * std::ptrdiff_t(nz), 2 * std::ptrdiff_t(nz)},
                          {2, 1, 1}};
  double* base = as_doubles(scratch) + (sine ? 2 : 0);
  fftw_r2r_kind kind = sine ? FFTW_RODFT00 : FFTW_REDFT00;
  return fftw_plan_guru64_r2r(1, &dim, 2, many, base, base, &kind,
                              FFTW_ESTIMATE | FFTW_UNALIGNED);
}

}  // namespace

Grid::Grid(const GridSpec& spec) : spec_(spec) {
  padded_n3_ = spec.n3 + kMaxConormalOrder + 2;

  auto fill = [](int n, double len, std::vector<double>& k, std::vector<double>& kd,
                 std::vector<bool>& keep, double frac) {
    k.resize(n);
    kd.resize(n);
    keep.resize(n);
    const double cutoff = frac * n / 2.0;
    for (int i = 0; i < n; ++i) {
      const int m = signed_mode(i, n);
      k[i] = 2.0 * std::numbers::pi * m / len;
      kd[i] = (m == -n / 2) ? 0.0 : k[i];
      keep[i] = std::abs(m) < cutoff;
    }
  };
  fill(spec.n1, spec.l1, k1_, kd1_, keep1_, spec.dealias_fraction);
  fill(spec.n2, spec.l2, k2_, kd2_, keep2_, spec.dealias_fraction);
  const double cut3 = spec.dealias_fraction * m3();
  keep3_ = 0;
  while (keep3_ < spec.n3 && keep3_ < cut3) ++keep3_;

  std::lock_guard lock(planner_mutex());
  std::vector<Complex> scratch(std::max(size(), columns() * padded_n3_));
  auto build = [&](int nz) {
    auto p = std::make_unique<Plans>();
    p->nz = nz;
    p->cosine = make_vertical_plan(columns(), nz, false, scratch.data());
    p->sine = make_vertical_plan(columns(), nz, true, scratch.data());
    return p;
  };
  plans_ = build(spec.n3);
  padded_plans_ = build(padded_n3_);

  int dims[2] = {spec.n1, spec.n2};
  plans_->forward = fftw_plan_many_dft(2, dims, spec.n3, as_fftw(scratch.data()), nullptr,
                                       spec.n3, 1, as_fftw(scratch.data()), nullptr, spec.n3, 1,
                                       FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
  plans_->backward = fftw_plan_many_dft(2, dims, spec.n3, as_fftw(scratch.data()), nullptr,
                                        spec.n3, 1, as_fftw(scratch.data()), nullptr, spec.n3, 1,
                                        FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (!plans_->cosine || !plans_->sine || !plans_->forward || !plans_->backward ||
      !padded_plans_->cosine || !padded_plans_->sine)
    throw Error(ErrorKind::InvalidSpec, "FFTW could not plan transforms for this grid");
}

Grid::~Grid() {
  std::lock_guard lock(planner_mutex());
  plans_.reset();
  padded_plans_.reset();
}

GridPtr plan_grid(const GridSpec& spec) {
  auto bad = [](const std::string& why) { throw Error(ErrorKind::InvalidSpec, why); };
  if (spec.n1 <= 0 || spec.n1 % 2 != 0) bad("N1 must be a positive even integer");
  if (spec.n2 <= 0 || spec.n2 % 2 != 0) bad("N2 must be a positive even integer");
  if (spec.n3 < 4) bad("N3 must be at least 4");
  if (!(spec.l1 > 0) || !(spec.l2 > 0) || !(spec.l3 > 0)) bad("domain lengths must be positive");
  if (!(spec.dealias_fraction > 0) || spec.dealias_fraction > 1)
    bad("dealias fraction must lie in (0,1]");
  return GridPtr(new Grid(spec));
}

const Grid::Plans& Grid::plans_for(int nz) const {
  if (nz == spec_.n3) return *plans_;
  if (nz == padded_n3_) return *padded_plans_;
  throw Error(ErrorKind::ShapeMismatch, "no vertical plan for nz=" + std::to_string(nz));
}

double Grid::min_horizontal_wavenumber() const noexcept {
  return 2.0 * std::numbers::pi / std::max(spec_.l1, spec_.l2);
}

double Grid::min_spacing() const noexcept {
  return std::min({spec_.l1 / spec_.n1, spec_.l2 / spec_.n2, spec_.l3 / m3()});
}

void Grid::vertical_synthesize(std::span<Complex> data, int nz, VerticalBasis basis) const {
  const Plans& p = plans_for(nz);
  const std::size_t cols = columns();
  if (data.size() != cols * nz) throw Error(ErrorKind::ShapeMismatch, "vertical synthesis");
  const int m = nz - 1;
  if (basis == VerticalBasis::Cosine) {
    for (std::size_t c = 0; c < cols; ++c) {
      Complex* col = data.data() + c * nz;
      for (int j = 1; j < m; ++j) col[j] *= 0.5;
    }
    fftw_execute_r2r(p.cosine, as_doubles(data.data()), as_doubles(data.data()));
  } else {
    for (std::size_t c = 0; c < cols; ++c) {
      Complex* col = data.data() + c * nz;
      col[0] = 0.0;
      col[m] = 0.0;
      for (int j = 1; j < m; ++j) col[j] *= 0.5;
    }
    double* base = as_doubles(data.data()) + 2;
    fftw_execute_r2r(p.sine, base, base);
  }
}

void Grid::vertical_analyze(std::span<Complex> data, int nz, VerticalBasis basis) const {
  const Plans& p = plans_for(nz);
  const std::size_t cols = columns();
  if (data.size() != cols * nz) throw Error(ErrorKind::ShapeMismatch, "vertical analysis");
  const int m = nz - 1;
  const double inv_m = 1.0 / m;
  if (basis == VerticalBasis::Cosine) {
    fftw_execute_r2r(p.cosine, as_doubles(data.data()), as_doubles(data.data()));
    for (std::size_t c = 0; c < cols; ++c) {
      Complex* col = data.data() + c * nz;
      col[0] *= 0.5 * inv_m;
      col[m] *= 0.5 * inv_m;
      for (int j = 1; j < m; ++j) col[j] *= inv_m;
    }
  } else {
    double* base = as_doubles(data.data()) + 2;
    fftw_execute_r2r(p.sine, base, base);
    for (std::size_t c = 0; c < cols; ++c) {
      Complex* col = data.data() + c * nz;
      col[0] = 0.0;
      col[m] = 0.0;
      for (int j = 1; j < m; ++j) col[j] *= inv_m;
    }
  }
}

void Grid::forward(std::span<const double> physical, VerticalBasis basis,
                   std::span<Complex> coeffs) const {
  if (physical.size() != size() || coeffs.size() != size())
    throw Error(ErrorKind::ShapeMismatch, "forward transform expects " + std::to_string(size()) +
                                              " samples, got " + std::to_string(physical.size()));
  for (std::size_t i = 0; i < size(); ++i) coeffs[i] = physical[i];
  vertical_analyze(coeffs, spec_.n3, basis);
  fftw_execute_dft(plans_->forward, as_fftw(coeffs.data()), as_fftw(coeffs.data()));
  const double scale = 1.0 / double(columns());
  for (auto& c : coeffs) c *= scale;
}

void Grid::inverse(std::span<const Complex> coeffs, VerticalBasis basis,
                   std::span<double> physical) const {
  if (physical.size() != size() || coeffs.size() != size())
    throw Error(ErrorKind::ShapeMismatch, "inverse transform expects " + std::to_string(size()) +
                                              " coefficients, got " + std::to_string(coeffs.size()));
  std::vector<Complex> work(coeffs.begin(), coeffs.end());
  fftw_execute_dft(plans_->backward, as_fftw(work.data()), as_fftw(work.data()));
  vertical_synthesize(work, spec_.n3, basis);
  for (std::size_t i = 0; i < size(); ++i) physical[i] = work[i].real();
}

}  // namespace mhdslab
