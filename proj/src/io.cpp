#include "mhdslab/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <vector>

#include "mhdslab/error.hpp"
#include "mhdslab/spectral.hpp"

namespace mhdslab {

namespace {

using json = nlohmann::json;

class ByteWriter {
 public:
  template <class T>
  void put(T v) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    buf.insert(buf.end(), bytes.begin(), bytes.end());
  }
  std::vector<unsigned char> buf;
};

class ByteReader {
 public:
  explicit ByteReader(const std::vector<unsigned char>& b) : buf(b) {}
  template <class T>
  T get() {
    if (pos + sizeof(T) > buf.size()) throw Error(ErrorKind::CorruptHeader, "checkpoint truncated");
    std::array<unsigned char, sizeof(T)> bytes;
    std::memcpy(bytes.data(), buf.data() + pos, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    pos += sizeof(T);
    return std::bit_cast<T>(bytes);
  }
  const std::vector<unsigned char>& buf;
  std::size_t pos = 0;
};

std::uint64_t fnv1a(const unsigned char* p, std::size_t n) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

const SpectralField& component(const State& s, int i) { return i < 3 ? s.u[i] : s.b[i - 3]; }
SpectralField& component(State& s, int i) { return i < 3 ? s.u[i] : s.b[i - 3]; }

std::vector<unsigned char> read_all(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path);
  std::vector<unsigned char> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorKind::IoError, "read failed: " + path);
  return data;
}

CheckpointHeader parse_header(const std::vector<unsigned char>& data) {
  if (data.size() < kCheckpointHeaderBytes) throw Error(ErrorKind::CorruptHeader, "checkpoint shorter than its header");
  if (std::memcmp(data.data(), "MHDC", 4) != 0) throw Error(ErrorKind::CorruptHeader, "bad magic");
  ByteReader r(data);
  r.pos = 4;
  CheckpointHeader h;
  h.version = r.get<std::uint32_t>();
  h.n1 = r.get<std::int32_t>();
  h.n2 = r.get<std::int32_t>();
  h.n3 = r.get<std::int32_t>();
  h.l1 = r.get<double>();
  h.l2 = r.get<double>();
  h.l3 = r.get<double>();
  h.t = r.get<double>();
  h.eps = r.get<double>();
  std::array<std::uint8_t, 8> tags;
  for (auto& t : tags) t = r.get<std::uint8_t>();
  const std::size_t covered = r.pos;
  const auto sum = r.get<std::uint64_t>();
  if (sum != fnv1a(data.data(), covered)) throw Error(ErrorKind::CorruptHeader, "header checksum mismatch");
  if (h.version != kCheckpointVersion)
    throw Error(ErrorKind::VersionMismatch,
                "checkpoint version " + std::to_string(h.version) + ", expected " + std::to_string(kCheckpointVersion));
  for (int i = 0; i < 6; ++i) {
    if (tags[i] > 1) throw Error(ErrorKind::CorruptHeader, "unknown basis tag");
    h.bases[i] = tags[i] == 0 ? VerticalBasis::Cosine : VerticalBasis::Sine;
  }
  if (h.n1 <= 0 || h.n2 <= 0 || h.n3 <= 1) throw Error(ErrorKind::CorruptHeader, "nonpositive dimensions");
  return h;
}

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

json fit_json(const std::optional<PowerLawFit>& f, double lo, double hi, const std::string& window_var,
              double tolerance, const std::string& rule) {
  json j;
  j["window"] = {{"variable", window_var}, {"lo", lo}, {"hi", hi}};
  j["tolerance"] = {{"rule", rule}, {"value", tolerance}};
  if (f) {
    j["exponent"] = f->exponent;
    j["intercept"] = f->intercept;
    j["max_residual"] = f->max_residual;
    j["points"] = f->points;
  } else {
    j["exponent"] = nullptr;
  }
  return j;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

}  // namespace

void write_checkpoint(const Grid& g, const State& s, const std::string& path) {
  ByteWriter w;
  w.buf.insert(w.buf.end(), {'M', 'H', 'D', 'C'});
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put<std::int32_t>(g.n1());
  w.put<std::int32_t>(g.n2());
  w.put<std::int32_t>(g.n3());
  for (double v : {g.spec().l1, g.spec().l2, g.spec().l3, s.t, s.eps}) w.put<double>(v);
  for (int i = 0; i < 6; ++i) {
    const SpectralField& f = component(s, i);
    if (f.n1() != g.n1() || f.n2() != g.n2() || f.nz() != g.n3())
      throw Error(ErrorKind::DimensionMismatch, "state does not match the grid");
    w.put<std::uint8_t>(f.basis() == VerticalBasis::Cosine ? 0 : 1);
  }
  w.put<std::uint8_t>(0);
  w.put<std::uint8_t>(0);
  w.put<std::uint64_t>(fnv1a(w.buf.data(), w.buf.size()));
  for (int i = 0; i < 6; ++i)
    for (const Complex& z : component(s, i).coeffs()) {
      w.put<double>(z.real());
      w.put<double>(z.imag());
    }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot create " + path);
  out.write(reinterpret_cast<const char*>(w.buf.data()), static_cast<std::streamsize>(w.buf.size()));
  if (!out) throw Error(ErrorKind::IoError, "write failed: " + path);
}

CheckpointHeader read_checkpoint_header(const std::string& path) { return parse_header(read_all(path)); }

State read_checkpoint(const Grid& g, const std::string& path) {
  const auto data = read_all(path);
  const CheckpointHeader h = parse_header(data);
  const std::size_t count = std::size_t(h.n1) * h.n2 * h.n3;
  if (data.size() != kCheckpointHeaderBytes + 6 * count * 16)
    throw Error(ErrorKind::CorruptHeader, "payload length does not match the header dimensions");
  if (h.n1 != g.n1() || h.n2 != g.n2() || h.n3 != g.n3())
    throw Error(ErrorKind::DimensionMismatch, "checkpoint is " + std::to_string(h.n1) + "x" + std::to_string(h.n2) +
                                                  "x" + std::to_string(h.n3) + ", grid is " + std::to_string(g.n1()) +
                                                  "x" + std::to_string(g.n2()) + "x" + std::to_string(g.n3()));
  auto close = [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b)); };
  if (!close(h.l1, g.spec().l1) || !close(h.l2, g.spec().l2) || !close(h.l3, g.spec().l3))
    throw Error(ErrorKind::DimensionMismatch, "checkpoint box lengths differ from the grid");
  State s = State::zeros(g, h.eps);
  s.t = h.t;
  ByteReader r(data);
  r.pos = kCheckpointHeaderBytes;
  for (int i = 0; i < 6; ++i) {
    SpectralField& f = component(s, i);
    if (f.basis() != h.bases[i]) throw Error(ErrorKind::InvalidState, "unexpected basis tag for component " + std::to_string(i));
    for (Complex& z : f.coeffs()) {
      const double re = r.get<double>();
      const double im = r.get<double>();
      z = {re, im};
    }
  }
  if (!s.all_finite()) throw Error(ErrorKind::InvalidState, "checkpoint holds nonfinite coefficients");
  for (const SpectralVectorField* v : {&s.u, &s.b}) {
    double grad = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int k = 1; k <= 3; ++k) grad = std::max(grad, max_abs_physical(g, derivative(g, (*v)[i], k)));
    const double div = max_abs_physical(g, divergence(g, *v));
    if (div > 1e-8 * std::max(grad, 1e-300) && div > 1e-300)
      throw Error(ErrorKind::InvalidState, "checkpoint field is not divergence free");
  }
  return s;
}

const std::vector<std::string>& ledger_columns() {
  static const std::vector<std::string> cols{
      "t",          "m",          "E_tan_m1",   "E_tan_m",   "E_m1",           "E_m",     "D_tan_m1",
      "D_tan_m",    "D_m1",       "D_m",        "E_full",    "D_full",         "neg_u_b", "neg_w",
      "neg_d33",    "E_hat3_tan", "cross_phi1", "cross_phi2", "cross_phi3",    "energy_L2",
      "dissipation_L2", "div_u",  "div_b",      "warnings"};
  return cols;
}

void write_ledger_header(std::ostream& out) {
  const auto& c = ledger_columns();
  for (std::size_t i = 0; i < c.size(); ++i) out << (i ? "," : "") << c[i];
  out << '\n';
}

void write_ledger_row(std::ostream& out, const EnergyLedger& r) {
  std::string warn;
  for (const auto& w : r.warnings) warn += (warn.empty() ? "" : "; ") + w;
  out << fmt(r.t) << ',' << r.m;
  for (double v : {r.E_tan_m1, r.E_tan_m, r.E_m1, r.E_m, r.D_tan_m1, r.D_tan_m, r.D_m1, r.D_m, r.E_full, r.D_full,
                   r.neg_u_b, r.neg_w, r.neg_d33, r.E_hat3_tan, r.cross_phi1, r.cross_phi2, r.cross_phi3, r.energy_L2,
                   r.dissipation_L2, r.div_u, r.div_b})
    out << ',' << fmt(v);
  out << ',' << csv_field(warn) << '\n';
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + '"';
}

json to_json(const DecayStudyReport& r) {
  json j;
  j["study"] = "decay";
  j["verdict"] = r.pass ? "PASS" : "FAIL";
  j["parameters"] = {{"m", r.m}, {"s", r.s}, {"sigma", r.sigma}, {"E0", r.E0}};
  j["decay_fit"] = fit_json(r.fit, r.fit_lo, r.fit_hi, "t", r.max_exponent, "exponent <= value");
  j["decay_fit"]["ok"] = r.exponent_ok;
  j["envelope"] = {{"window", {{"variable", "t"}, {"early_end", r.early_time}}},
                   {"early_max", r.early_max},
                   {"late_max", r.late_max},
                   {"tolerance", {{"rule", "late_max <= value * early_max"}, {"value", r.envelope_factor}}},
                   {"ok", r.envelope_ok}};
  j["weighted_integral"] = {{"final", r.integral_final},
                            {"midpoint", r.integral_mid},
                            {"tolerance", {{"rule", "final / midpoint <= value"}, {"value", r.integral_ratio_limit}}},
                            {"ok", r.integral_ok}};
  j["C_emp"] = {{"value", r.C_emp}, {"rule", "sup (1+t)^s E_tan / E0, finite"}, {"ok", r.bounded_ok}};
  json series = json::array();
  for (const auto& d : r.series)
    series.push_back({{"t", d.t}, {"E_tan", d.E_tan}, {"D_tan", d.D_tan}, {"weighted_E", d.weighted_E},
                      {"weighted_D_int", d.weighted_D_int}});
  j["series"] = series;
  j["notes"] = r.notes;
  return j;
}

json to_json(const UniformStudyReport& r) {
  json j;
  j["study"] = "uniform-bound";
  j["verdict"] = r.pass ? "PASS" : "FAIL";
  j["spread"] = {{"value", r.spread}, {"tolerance", {{"rule", "max R / min R <= value"}, {"value", r.max_spread}}}};
  json runs = json::array();
  for (const auto& run : r.runs)
    runs.push_back({{"eps", run.eps},
                    {"R", run.R},
                    {"window", {{"variable", "t"}, {"lo", run.t.empty() ? 0.0 : run.t.front()},
                                {"hi", run.t.empty() ? 0.0 : run.t.back()}}},
                    {"t", run.t},
                    {"E", run.E},
                    {"D", run.D},
                    {"D_int", run.D_int}});
  j["runs"] = runs;
  j["notes"] = r.notes;
  return j;
}

json to_json(const LimitStudyReport& r, const std::vector<double>& eps) {
  json j;
  j["study"] = "vanishing-dissipation";
  j["verdict"] = r.pass ? "PASS" : "FAIL";
  j["eps"] = eps;
  j["times"] = r.times;
  const double lo = eps.empty() ? 0.0 : eps.back(), hi = eps.empty() ? 0.0 : eps.front();
  j["slopes"] = json::array({
      fit_json(r.l2_fit, lo, hi, "eps", r.min_l2_slope, "slope >= value"),
      fit_json(r.linf_fit, lo, hi, "eps", r.min_linf_slope, "slope >= value"),
  });
  j["slopes"][0]["norm"] = "L2";
  j["slopes"][1]["norm"] = "Linf";
  j["monotone"] = r.monotone;
  j["degenerate"] = r.degenerate;
  json runs = json::array();
  for (const auto& run : r.runs)
    runs.push_back({{"eps", run.eps},
                    {"sup_l2", run.sup_l2},
                    {"sup_linf", run.sup_linf},
                    {"l2", run.l2},
                    {"linf", run.linf},
                    {"E_bar", run.E_bar},
                    {"D_bar", run.D_bar},
                    {"B", run.B},
                    {"B_h", run.B_h},
                    {"source_residual", run.source_residual}});
  j["runs"] = runs;
  j["notes"] = r.notes;
  return j;
}

json to_json(const LinearCheckReport& r) {
  return {{"check", "linear-propagator"},
          {"verdict", r.pass ? "PASS" : "FAIL"},
          {"window", {{"variable", "t"}, {"lo", 0.0}, {"hi", r.t_end}}},
          {"dt", r.dt},
          {"samples", r.samples},
          {"modes", r.modes},
          {"max_error", r.max_error},
          {"tolerance", {{"rule", "max relative mode error <= value"}, {"value", r.tolerance}}}};
}

json to_json(const ProbeReport& r) {
  json entries = json::array();
  for (const auto& e : r.entries)
    entries.push_back({{"name", e.name},
                       {"lhs", e.lhs},
                       {"rhs", e.rhs},
                       {"ratio", e.degenerate ? json(nullptr) : json(e.ratio)},
                       {"degenerate", e.degenerate}});
  return {{"entries", entries}, {"any_degenerate", r.any_degenerate()}};
}

std::string normalize_key(std::string key) {
  for (char& c : key) {
    if (c == '_') c = '-';
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return key;
}

std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  int no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorKind::Usage, "config line " + std::to_string(no) + ": expected 'key = value'");
    const std::string key = normalize_key(trim(line.substr(0, eq)));
    if (key.empty()) throw Error(ErrorKind::Usage, "config line " + std::to_string(no) + ": empty key");
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

std::map<std::string, std::string> parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open config " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return parse_config_text(s.str());
}

}  // namespace mhdslab
