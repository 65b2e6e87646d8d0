#include "mhdslab/cli.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <fstream>
#include <iostream>
#include <sstream>

#include "mhdslab/error.hpp"
#include "mhdslab/io.hpp"

namespace mhdslab {

namespace {

using json = nlohmann::json;

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw Error(ErrorKind::Usage, key + ": expected a number, got '" + v + "'");
}

long to_long(const std::string& key, const std::string& v) {
  long out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) throw Error(ErrorKind::Usage, key + ": expected an integer, got '" + v + "'");
  return out;
}

std::size_t to_count(const std::string& key, const std::string& v) {
  const long n = to_long(key, v);
  if (n < 0) throw Error(ErrorKind::Usage, key + ": must be nonnegative");
  return static_cast<std::size_t>(n);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw Error(ErrorKind::Usage, key + ": expected true or false, got '" + v + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(' '), e = item.find_last_not_of(' ');
    if (b == std::string::npos) throw Error(ErrorKind::Usage, key + ": empty list entry");
    out.push_back(to_double(key, item.substr(b, e - b + 1)));
  }
  if (out.empty()) throw Error(ErrorKind::Usage, key + ": empty list");
  return out;
}

// Writes to `path` or to `fallback` when the path is empty.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : os_(&fallback) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw Error(ErrorKind::IoError, "cannot create " + path);
      os_ = &file_;
    }
  }
  std::ostream& operator*() { return *os_; }

 private:
  std::ofstream file_;
  std::ostream* os_;
};

void emit(const RunConfig& cfg, const json& j, std::ostream& out) {
  Sink s(cfg.out, out);
  *s << j.dump(2) << '\n';
}

int verdict(bool pass) { return pass ? 0 : 2; }

json config_json(const RunConfig& c) {
  return {{"grid", {{"n1", c.grid.n1}, {"n2", c.grid.n2}, {"n3", c.grid.n3}, {"l1", c.grid.l1}, {"l2", c.grid.l2}, {"l3", c.grid.l3}}},
          {"solver", {{"dt", c.solver.dt}, {"cfl", c.solver.cfl}, {"t_end", c.solver.t_end}, {"rk_order", c.solver.rk_order},
                      {"nonlinear", c.solver.nonlinear}}},
          {"conormal", {{"m", c.conormal.m}, {"s", c.conormal.s}, {"sigma", c.conormal.sigma},
                        {"phi", c.conormal.phi == PhiChoice::SlabPhi ? "slab" : "rational"}}},
          {"data", {{"seed", c.data.seed}, {"amplitude", c.data.amplitude}, {"k_min", c.data.k_min}, {"k_max", c.data.k_max},
                    {"vertical_modes", c.data.vertical_modes}, {"concentration", c.data.concentration}}}};
}

State initial_state(const RunConfig& cfg, const Grid& g, double eps) {
  if (!cfg.checkpoint_in.empty()) {
    State s = read_checkpoint(g, cfg.checkpoint_in);
    if (cfg.has("eps")) s.eps = eps;
    return s;
  }
  return gen_initial_data(cfg.data, g, cfg.conormal, eps);
}

int run_simulate(RunConfig cfg, std::ostream& out, std::ostream& err) {
  auto grid = plan_grid(cfg.grid);
  const double eps = cfg.eps.empty() ? 0.0 : cfg.eps.front();
  const State s0 = initial_state(cfg, *grid, eps);
  SolverConfig scfg = cfg.solver;
  scfg.t_end = s0.t + cfg.t_end.value_or(1.0);
  Sink csv(cfg.csv, out);
  write_ledger_header(*csv);
  std::size_t last = std::size_t(-1);
  const auto traj = evolve(grid, s0, scfg, std::max<std::size_t>(cfg.ledger_every, 1), [&](const State& s, std::size_t n) {
    if (n == last) return;
    last = n;
    const EnergyLedger row = ledger(*grid, s, cfg.conormal);
    if (!row.all_finite()) throw Error(ErrorKind::NonfiniteField, "ledger entry not finite at t=" + std::to_string(s.t));
    write_ledger_row(*csv, row);
  });
  if (!cfg.checkpoint_out.empty()) write_checkpoint(*grid, traj.final_state, cfg.checkpoint_out);
  err << "simulate: " << traj.steps << " steps to t=" << traj.final_state.t << '\n';
  return 0;
}

int run_decay(RunConfig cfg, std::ostream& out) {
  auto grid = plan_grid(cfg.grid);
  if (cfg.t_end) cfg.decay.t_end = *cfg.t_end;
  if (cfg.samples) cfg.decay.samples = *cfg.samples;
  if (!cfg.has("fit-hi")) cfg.decay.fit_hi = cfg.decay.t_end;
  const double eps = cfg.eps.empty() ? 0.0 : cfg.eps.front();
  const auto rep = run_decay_study(cfg.data, grid, cfg.solver, cfg.conormal, cfg.decay, eps);
  json j = to_json(rep);
  j["config"] = config_json(cfg);
  j["eps"] = eps;
  emit(cfg, j, out);
  return verdict(rep.pass);
}

int run_uniform(RunConfig cfg, std::ostream& out) {
  auto grid = plan_grid(cfg.grid);
  if (cfg.t_end) cfg.uniform.t_end = *cfg.t_end;
  if (cfg.samples) cfg.uniform.samples = *cfg.samples;
  if (cfg.eps.empty()) cfg.eps = {1e-2, 1e-3, 1e-4};
  const auto rep = run_uniform_bound_study(cfg.data, cfg.eps, grid, cfg.solver, cfg.conormal, cfg.uniform);
  json j = to_json(rep);
  j["config"] = config_json(cfg);
  emit(cfg, j, out);
  return verdict(rep.pass);
}

int run_limit(RunConfig cfg, std::ostream& out) {
  auto grid = plan_grid(cfg.grid);
  if (cfg.t_end) cfg.limit.t_end = *cfg.t_end;
  if (cfg.samples) cfg.limit.samples = *cfg.samples;
  if (cfg.eps.empty()) cfg.eps = {1e-1, 1e-2, 1e-3, 1e-4};
  if (!cfg.has("m")) cfg.conormal.m = 5;
  if (!(cfg.solver.dt > 0.0)) cfg.solver.dt = 0.02;
  const auto rep = run_limit_study(cfg.data, cfg.eps, grid, cfg.solver, cfg.conormal, cfg.limit);
  json j = to_json(rep, cfg.eps);
  j["config"] = config_json(cfg);
  emit(cfg, j, out);
  return verdict(rep.pass);
}

int run_probe(const RunConfig& cfg, std::ostream& out) {
  auto grid = plan_grid(cfg.grid);
  const Grid& g = *grid;
  const State s = initial_state(cfg, g, 0.0);
  const double s_exp = cfg.conormal.s;
  const ProbeReport probe = sobolev_probe(g, s.u[0], s.u[1], s.b[0], s_exp, cfg.conormal.phi);
  std::size_t violations = 0;
  double worst = 0.0;
  InitialDataSpec spec = cfg.data;
  spec.spectrum = SpectrumKind::Custom;
  spec.k_min = 0.0;
  spec.k_max = 1e9;
  for (std::size_t i = 0; i < cfg.probe_fields; ++i) {
    spec.seed = cfg.data.seed + i;
    const State r = gen_initial_data(spec, g, cfg.conormal);
    for (const SpectralField* f : {&r.u[0], &r.u[1], &r.b[0], &r.b[1]}) {
      const auto c = interpolation_check(g, *f, s_exp);
      if (c.rhs > 0.0) worst = std::max(worst, c.lhs / c.rhs);
      if (c.lhs > c.rhs * (1 + 1e-12)) ++violations;
    }
  }
  json j;
  j["probe"] = to_json(probe);
  j["interpolation"] = {{"fields", 4 * cfg.probe_fields},
                        {"s", s_exp},
                        {"violations", violations},
                        {"worst_ratio", worst},
                        {"tolerance", {{"rule", "lhs <= rhs * (1 + value)"}, {"value", 1e-12}}}};
  j["verdict"] = violations == 0 ? "PASS" : "FAIL";
  j["config"] = config_json(cfg);
  emit(cfg, j, out);
  return verdict(violations == 0);
}

int run_verify_linear(const RunConfig& cfg, std::ostream& out) {
  auto grid = plan_grid(cfg.grid);
  const double eps = cfg.eps.empty() ? 0.0 : cfg.eps.front();
  State s;
  if (!cfg.checkpoint_in.empty()) {
    s = initial_state(cfg, *grid, eps);
  } else {
    InitialDataSpec spec = cfg.data;
    if (!cfg.has("spectrum")) {
      spec.spectrum = SpectrumKind::Custom;
      spec.k_min = 0.0;
      spec.k_max = 1e9;
      spec.vertical_modes = grid->n3();
    }
    s = gen_initial_data(spec, *grid, cfg.conormal, eps);
  }
  const double dt = cfg.solver.dt > 0.0 ? cfg.solver.dt : 0.05;
  const auto rep = verify_linear(grid, s, cfg.t_end.value_or(10.0), dt, cfg.samples.value_or(11), cfg.tolerance);
  json j = to_json(rep);
  j["eps"] = eps;
  emit(cfg, j, out);
  return verdict(rep.pass);
}

int run_ledger(const RunConfig& cfg, std::ostream& out) {
  auto grid = plan_grid(cfg.grid);
  const State s = initial_state(cfg, *grid, cfg.eps.empty() ? 0.0 : cfg.eps.front());
  Sink csv(cfg.csv, out);
  write_ledger_header(*csv);
  write_ledger_row(*csv, ledger(*grid, s, cfg.conormal));
  return 0;
}

std::string help_footer() {
  std::string cols;
  for (const auto& c : ledger_columns()) cols += (cols.empty() ? "" : ",") + c;
  return "\nConfig file: lines 'key = value' with '#' comments; keys are the long flag names.\n"
         "Flags override the file. MHD_THREADS caps the eps-sweep worker count.\n"
         "Ledger CSV columns: " + cols + "\n"
         "Exit status: 0 success or PASS, 2 study FAIL, 1 error.";
}

}  // namespace

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> k{
      "n1", "n2", "n3", "l1", "l2", "l3", "lh", "dt", "cfl", "t-end", "rk-order", "linear", "keep-mean",
      "m", "s", "sigma", "phi", "allow-underresolved", "seed", "amplitude", "spectrum", "k-min", "k-max", "slope",
      "vertical-modes", "concentration", "eps", "samples", "fit-lo", "fit-hi", "max-exponent", "envelope-factor",
      "early-time", "integral-ratio", "max-spread", "min-l2-slope", "min-linf-slope", "tolerance", "ledger-every",
      "probe-fields", "out", "csv", "checkpoint-in", "checkpoint-out"};
  return k;
}

void RunConfig::apply(const std::string& raw_key, const std::string& v) {
  const std::string key = normalize_key(raw_key);
  const auto d = [&] { return to_double(key, v); };
  const auto i = [&] { return static_cast<int>(to_long(key, v)); };
  if (key == "n1") grid.n1 = i();
  else if (key == "n2") grid.n2 = i();
  else if (key == "n3") grid.n3 = i();
  else if (key == "l1") grid.l1 = d();
  else if (key == "l2") grid.l2 = d();
  else if (key == "l3") grid.l3 = d();
  else if (key == "lh") grid.l1 = grid.l2 = d();
  else if (key == "dt") solver.dt = d();
  else if (key == "cfl") solver.cfl = d();
  else if (key == "t-end") t_end = d();
  else if (key == "rk-order") solver.rk_order = i();
  else if (key == "linear") solver.nonlinear = !to_bool(key, v);
  else if (key == "keep-mean") solver.zero_horizontal_mean = !to_bool(key, v);
  else if (key == "m") conormal.m = i();
  else if (key == "s") conormal.s = d();
  else if (key == "sigma") conormal.sigma = d();
  else if (key == "phi") {
    if (v == "slab") conormal.phi = PhiChoice::SlabPhi;
    else if (v == "rational") conormal.phi = PhiChoice::RationalPhi;
    else throw Error(ErrorKind::Usage, "phi: expected 'slab' or 'rational'");
  } else if (key == "allow-underresolved") conormal.allow_underresolved = to_bool(key, v);
  else if (key == "seed") data.seed = to_count(key, v);
  else if (key == "amplitude") data.amplitude = d();
  else if (key == "spectrum") {
    if (v == "lowband") data.spectrum = SpectrumKind::LowBand;
    else if (v == "ring") data.spectrum = SpectrumKind::Ring;
    else if (v == "custom") data.spectrum = SpectrumKind::Custom;
    else throw Error(ErrorKind::Usage, "spectrum: expected lowband, ring or custom");
  } else if (key == "k-min") data.k_min = d();
  else if (key == "k-max") data.k_max = d();
  else if (key == "slope") data.slope = d();
  else if (key == "vertical-modes") data.vertical_modes = i();
  else if (key == "concentration") data.concentration = to_bool(key, v);
  else if (key == "eps") eps = to_list(key, v);
  else if (key == "samples") samples = to_count(key, v);
  else if (key == "fit-lo") decay.fit_lo = d();
  else if (key == "fit-hi") decay.fit_hi = d();
  else if (key == "max-exponent") decay.max_exponent = d();
  else if (key == "envelope-factor") decay.envelope_factor = d();
  else if (key == "early-time") decay.early_time = d();
  else if (key == "integral-ratio") decay.integral_ratio = d();
  else if (key == "max-spread") uniform.max_spread = d();
  else if (key == "min-l2-slope") limit.min_l2_slope = d();
  else if (key == "min-linf-slope") limit.min_linf_slope = d();
  else if (key == "tolerance") tolerance = d();
  else if (key == "ledger-every") ledger_every = to_count(key, v);
  else if (key == "probe-fields") probe_fields = to_count(key, v);
  else if (key == "out") out = v;
  else if (key == "csv") csv = v;
  else if (key == "checkpoint-in") checkpoint_in = v;
  else if (key == "checkpoint-out") checkpoint_out = v;
  else throw Error(ErrorKind::Usage, "unknown key '" + raw_key + "'");
  explicit_keys.insert(key);
}

void RunConfig::validate() const {
  conormal.validate();
  data.validate();
  if (grid.n1 < 4 || grid.n2 < 4 || grid.n3 < 3) throw Error(ErrorKind::Usage, "grid too small (need n1, n2 >= 4, n3 >= 3)");
  if (!(grid.l1 > 0 && grid.l2 > 0 && grid.l3 > 0)) throw Error(ErrorKind::Usage, "box lengths must be positive");
  for (std::size_t k = 0; k < eps.size(); ++k) {
    if (!(eps[k] >= 0.0)) throw Error(ErrorKind::Usage, "eps values must be nonnegative");
    if (k > 0 && !(eps[k] < eps[k - 1])) throw Error(ErrorKind::Usage, "eps list must be strictly decreasing");
  }
  if (t_end && !(*t_end >= 0.0)) throw Error(ErrorKind::Usage, "t-end must be nonnegative");
  if (!conormal.allow_underresolved) {
    const double cut3 = grid.dealias_fraction * (grid.n3 - 1);
    int keep3 = 0;
    while (keep3 < grid.n3 && keep3 < cut3) ++keep3;
    if (keep3 - 1 < conormal.m)
      throw Error(ErrorKind::Usage, "m = " + std::to_string(conormal.m) + " exceeds the " + std::to_string(keep3 - 1) +
                                        " resolved vertical modes; raise n3 or set allow-underresolved");
  }
}

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Slab MHD solver with conormal energy diagnostics and decay/limit studies"};
  app.footer(help_footer());
  app.require_subcommand(1);
  std::string config_path;
  std::map<std::string, std::string> flags;
  const char* names[] = {"simulate", "decay-study", "uniform-study", "limit-study", "probe-inequalities", "verify-linear", "ledger"};
  const char* about[] = {"evolve and write the ledger CSV (and an optional checkpoint)",
                         "decay exponent and weighted-envelope study (JSON)",
                         "eps-uniform energy bound study (JSON)",
                         "vanishing-dissipation rate study (JSON)",
                         "anisotropic inequality probes and interpolation check (JSON)",
                         "linear solver against per-mode matrix exponentials (JSON)",
                         "ledger of one state as CSV"};
  std::vector<CLI::App*> subs;
  for (std::size_t k = 0; k < std::size(names); ++k) {
    CLI::App* sub = app.add_subcommand(names[k], about[k]);
    sub->add_option("--config", config_path, "config file with key = value lines");
    for (const auto& key : RunConfig::keys()) sub->add_option("--" + key, flags[key]);
    subs.push_back(sub);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\nrun with --help for the option list\n";
    return 1;
  }
  CLI::App* sub = nullptr;
  for (CLI::App* s : subs)
    if (s->parsed()) sub = s;

  try {
    RunConfig cfg;
    if (!config_path.empty())
      for (const auto& [k, v] : parse_config_file(config_path)) cfg.apply(k, v);
    for (const auto& key : RunConfig::keys())
      if (sub->count("--" + key) > 0) cfg.apply(key, flags[key]);
    cfg.validate();
    const std::string name = sub->get_name();
    if (name == "simulate") return run_simulate(cfg, out, err);
    if (name == "decay-study") return run_decay(cfg, out);
    if (name == "uniform-study") return run_uniform(cfg, out);
    if (name == "limit-study") return run_limit(cfg, out);
    if (name == "probe-inequalities") return run_probe(cfg, out);
    if (name == "verify-linear") return run_verify_linear(cfg, out);
    return run_ledger(cfg, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace mhdslab
