#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>

#include <json.hpp>

#include "mhdslab/conormal.hpp"
#include "mhdslab/dynamics.hpp"
#include "mhdslab/experiments.hpp"
#include "mhdslab/grid.hpp"

namespace mhdslab {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary layout, all little-endian:
///   "MHDC" | u32 version | i32 n1, n2, n3 | f64 l1, l2, l3, t, eps |
///   u8[6] basis tags (0 cosine, 1 sine; u1..u3, b1..b3) | u8[2] zero |
///   u64 FNV-1a of the preceding header bytes |
///   payload: f64 (re, im) per coefficient, components u1, u2, u3, b1, b2, b3.
struct CheckpointHeader {
  std::uint32_t version = kCheckpointVersion;
  int n1 = 0, n2 = 0, n3 = 0;
  double l1 = 0, l2 = 0, l3 = 0;
  double t = 0, eps = 0;
  std::array<VerticalBasis, 6> bases{};
};

inline constexpr std::size_t kCheckpointHeaderBytes = 4 + 4 + 12 + 40 + 8 + 8;

void write_checkpoint(const Grid& grid, const State& state, const std::string& path);
/// IoError, CorruptHeader (bad magic, checksum, tags or payload length),
/// VersionMismatch, DimensionMismatch (dims or lengths differ from the grid),
/// InvalidState (wrong basis layout, nonfinite or divergent payload).
State read_checkpoint(const Grid& grid, const std::string& path);
CheckpointHeader read_checkpoint_header(const std::string& path);

/// Column order of the ledger CSV.
const std::vector<std::string>& ledger_columns();
void write_ledger_header(std::ostream& out);
void write_ledger_row(std::ostream& out, const EnergyLedger& row);
/// RFC 4180 quoting for one field.
std::string csv_field(const std::string& s);

nlohmann::json to_json(const DecayStudyReport& r);
nlohmann::json to_json(const UniformStudyReport& r);
nlohmann::json to_json(const LimitStudyReport& r, const std::vector<double>& eps);
nlohmann::json to_json(const LinearCheckReport& r);
nlohmann::json to_json(const ProbeReport& r);

/// `key = value` lines, `#` comments, blank lines ignored. Keys are
/// normalized to lower case with '_' replaced by '-'. Usage error on a line
/// without '='.
std::map<std::string, std::string> parse_config_text(const std::string& text);
std::map<std::string, std::string> parse_config_file(const std::string& path);
std::string normalize_key(std::string key);

}  // namespace mhdslab
