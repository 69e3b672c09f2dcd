#pragma once

// Text formats used by the command-line tool.
//
// rfgrid: first line `rfgrid <ndim> <d1> [d2] [d3] <delta>`, then the values
// in row-major order, one line per run along the last axis. Numbers are
// written with 17 significant digits so doubles survive a round trip.
//
// Simulation configs are flat `key = value` lines; `#` starts a comment.

#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "rft/error.hpp"
#include "rft/grid_field.hpp"
#include "rft/montecarlo.hpp"
#include "rft/topology.hpp"

namespace rft::io {

inline std::string format_double(double v, int digits = 17) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline double parse_double(std::string_view text) {
  const std::string s = trim(text);
  detail::require_param(!s.empty(), "expected a number");
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  detail::require_param(end == s.c_str() + s.size() && errno != ERANGE, "malformed number '" + s + "'");
  return v;
}

inline std::uint64_t parse_uint(std::string_view text) {
  const std::string s = trim(text);
  detail::require_param(!s.empty() && s.find_first_not_of("0123456789") == std::string::npos,
                        "malformed non-negative integer '" + s + "'");
  errno = 0;
  const unsigned long long v = std::strtoull(s.c_str(), nullptr, 10);
  detail::require_param(errno != ERANGE, "integer out of range '" + s + "'");
  return v;
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::vector<double> parse_double_list(std::string_view s) {
  std::vector<double> out;
  for (const auto& part : split(s, ',')) out.push_back(parse_double(part));
  return out;
}

inline std::vector<std::size_t> parse_dims(std::string_view s) {
  std::vector<std::size_t> out;
  for (const auto& part : split(s, ',')) out.push_back(static_cast<std::size_t>(parse_uint(part)));
  return out;
}

/// `start:step:stop` (inclusive, like a MATLAB range) or a comma list.
inline std::vector<double> parse_thresholds(std::string_view s) {
  if (s.find(':') == std::string_view::npos) return parse_double_list(s);
  const auto parts = split(s, ':');
  detail::require_param(parts.size() == 3, "threshold range must be start:step:stop");
  const double start = parse_double(parts[0]), step = parse_double(parts[1]), stop = parse_double(parts[2]);
  detail::require_param(step > 0.0 && stop >= start, "threshold range needs step > 0 and stop >= start");
  const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
  detail::require_param(count <= 1000000, "threshold range too long");
  std::vector<double> out(count);
  for (std::size_t k = 0; k < count; ++k) out[k] = start + static_cast<double>(k) * step;
  return out;
}

// ---------------------------------------------------------------------------
// rfgrid

inline void write_rfgrid(std::ostream& os, const ScalarField& field) {
  const Grid& g = field.grid();
  os << "rfgrid " << g.ndim();
  for (std::size_t d : g.dims()) os << ' ' << d;
  os << ' ' << format_double(g.delta()) << '\n';
  const std::size_t row = g.dim(g.ndim() - 1);
  for (std::size_t i = 0; i < field.size(); ++i) {
    os << format_double(field[i]);
    os << ((i + 1) % row == 0 ? '\n' : ' ');
  }
}

inline std::string to_rfgrid(const ScalarField& field) {
  std::ostringstream os;
  write_rfgrid(os, field);
  return os.str();
}

inline ScalarField read_rfgrid(std::istream& is) {
  std::string magic;
  std::size_t ndim = 0;
  if (!(is >> magic) || magic != "rfgrid") throw Error(ErrorCode::Io, "not an rfgrid file (missing magic token)");
  if (!(is >> ndim) || ndim < 1 || ndim > 3) throw Error(ErrorCode::Io, "rfgrid header: ndim must be 1, 2 or 3");
  std::vector<std::size_t> dims(ndim);
  for (auto& d : dims)
    if (!(is >> d)) throw Error(ErrorCode::Io, "rfgrid header: missing dimension");
  std::string token;
  if (!(is >> token)) throw Error(ErrorCode::Io, "rfgrid header: missing delta");
  const double delta = parse_double(token);
  Grid grid(dims, delta);
  std::vector<double> values;
  values.reserve(grid.size());
  while (is >> token) {
    if (values.size() == grid.size()) throw Error(ErrorCode::Io, "rfgrid: more values than the header declares");
    values.push_back(parse_double(token));
  }
  if (values.size() != grid.size()) throw Error(ErrorCode::Io, "rfgrid: fewer values than the header declares");
  return ScalarField(grid, std::move(values));
}

inline ScalarField from_rfgrid(const std::string& text) {
  std::istringstream is(text);
  return read_rfgrid(is);
}

inline ScalarField load_rfgrid(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
  return read_rfgrid(in);
}

inline void save_rfgrid(const std::string& path, const ScalarField& field) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path + "'");
  write_rfgrid(out, field);
  if (!out) throw Error(ErrorCode::Io, "write to '" + path + "' failed");
}

/// Region of interest stored as an rfgrid of zeros and ones.
inline BinaryMask mask_from_field(const ScalarField& field) {
  BinaryMask mask(field.grid());
  for (std::size_t i = 0; i < field.size(); ++i) {
    const double v = field[i];
    detail::require_param(v == 0.0 || v == 1.0, "mask values must be 0 or 1");
    mask.bits[i] = v == 1.0;
  }
  return mask;
}

// ---------------------------------------------------------------------------
// key = value configs

using KeyValues = std::map<std::string, std::string>;

inline KeyValues parse_key_values(std::istream& is) {
  KeyValues kv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    detail::require_param(eq != std::string::npos, "config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(t.substr(0, eq));
    detail::require_param(!key.empty(), "config line " + std::to_string(lineno) + ": empty key");
    detail::require_param(!kv.count(key), "config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    kv[key] = trim(t.substr(eq + 1));
  }
  return kv;
}

inline bool parse_bool(std::string_view s) {
  const std::string t = trim(s);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw Error(ErrorCode::InvalidParameter, "malformed boolean '" + t + "'");
}

inline Standardization parse_standardization(std::string_view s) {
  const std::string t = trim(s);
  if (t == "none") return Standardization::None;
  if (t == "sample") return Standardization::SampleVariance;
  if (t == "theoretical") return Standardization::Theoretical;
  throw Error(ErrorCode::InvalidParameter, "standardize must be none, sample or theoretical");
}

/// Signal spec: none | cos | key | file:PATH. `coskey` is accepted as an
/// alias of `cos`.
inline std::optional<ScalarField> make_signal(std::string_view spec, const Grid& grid) {
  const std::string s = trim(spec);
  if (s == "none" || s.empty()) return std::nullopt;
  if (s == "cos" || s == "coskey") return synthetic_signal(grid);
  if (s == "key") return key_signal(grid);
  if (s.rfind("file:", 0) == 0) {
    ScalarField f = load_rfgrid(s.substr(5));
    detail::require_param(f.grid() == grid, "signal file grid does not match the simulation grid");
    return f;
  }
  throw Error(ErrorCode::InvalidParameter, "unknown signal '" + s + "' (none|cos|key|file:PATH)");
}

/// Builds a SimConfig from key = value pairs. Keys: dims, delta, fwhm,
/// sigma_w, replicates, thresholds, seed, signal, standardize, interior_crop,
/// threads. dims and thresholds are required.
inline SimConfig sim_config_from(const KeyValues& kv) {
  static const char* known[] = {"dims",   "delta",       "fwhm",          "sigma_w", "replicates", "thresholds",
                                "seed",   "signal",      "standardize",   "interior_crop", "threads"};
  for (const auto& [k, v] : kv) {
    bool ok = false;
    for (const char* name : known) ok = ok || k == name;
    detail::require_param(ok, "unknown config key '" + k + "'");
  }
  auto get = [&](const char* key, const char* fallback) -> std::string {
    const auto it = kv.find(key);
    if (it != kv.end()) return it->second;
    detail::require_param(fallback != nullptr, std::string("config is missing '") + key + "'");
    return fallback;
  };

  SimConfig c;
  c.grid = Grid(parse_dims(get("dims", nullptr)), parse_double(get("delta", "1")));
  c.fwhm = parse_double(get("fwhm", "0"));
  detail::require_param(c.fwhm >= 0.0, "fwhm must be >= 0");
  c.sigma_w = parse_double(get("sigma_w", "1"));
  c.n_replicates = static_cast<std::size_t>(parse_uint(get("replicates", "1")));
  c.thresholds = parse_thresholds(get("thresholds", nullptr));
  c.base_seed = {parse_uint(get("seed", "0")), 0};
  c.signal = make_signal(get("signal", "none"), c.grid);
  c.standardization = parse_standardization(get("standardize", "none"));
  c.interior_crop = parse_bool(get("interior_crop", "false"));
  c.threads = static_cast<unsigned>(parse_uint(get("threads", "1")));
  return c;
}

inline SimConfig load_sim_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open config '" + path + "'");
  return sim_config_from(parse_key_values(in));
}

}  // namespace rft::io
