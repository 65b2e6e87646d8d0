#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mhdslab/conormal.hpp"
#include "mhdslab/dynamics.hpp"
#include "mhdslab/experiments.hpp"
#include "mhdslab/grid.hpp"

namespace mhdslab {

struct RunConfig {
  GridSpec grid;
  SolverConfig solver;
  ConormalConfig conormal;
  InitialDataSpec data;
  std::vector<double> eps;  // single value for simulate, the sweep for studies
  std::optional<double> t_end;
  std::optional<std::size_t> samples;
  DecayOptions decay;
  UniformOptions uniform;
  LimitOptions limit;
  double tolerance = 1e-12;
  std::size_t ledger_every = 10;
  std::size_t probe_fields = 100;
  std::string out;  // report path; empty writes to stdout
  std::string csv;  // ledger path; empty writes to stdout
  std::string checkpoint_in, checkpoint_out;
  std::set<std::string> explicit_keys;

  /// Sets one `key = value` entry (keys as in the config file). Usage error
  /// for unknown keys or unparsable values.
  void apply(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return explicit_keys.count(key) > 0; }
  /// Cross-field checks: conormal parameters, eps list nonnegative and
  /// strictly decreasing, m within the vertical resolution unless
  /// allow-underresolved.
  void validate() const;
  static const std::vector<std::string>& keys();
};

/// Exit status: 0 success or PASS, 2 study FAIL, 1 error.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mhdslab
