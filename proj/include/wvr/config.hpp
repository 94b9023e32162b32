#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "wvr/cavity.hpp"
#include "wvr/sagnac.hpp"

// Scenario configuration: a flat key-value text format with section headers,
// parsed strictly. Unknown sections, unknown keys, duplicates, malformed
// numbers and out-of-range values are all rejected with the offending key in
// the diagnostic; physics parameters are never silently defaulted.

namespace wvr {

class config_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class RunMode {
  single_pass,
  recycled_closed_form,
  recycled_iterative,
  fp_cavity,
  monte_carlo,
  confocal,
};

inline std::string to_string(RunMode m) {
  switch (m) {
    case RunMode::single_pass: return "single_pass";
    case RunMode::recycled_closed_form: return "recycled_closed_form";
    case RunMode::recycled_iterative: return "recycled_iterative";
    case RunMode::fp_cavity: return "fp_cavity";
    case RunMode::monte_carlo: return "monte_carlo";
    case RunMode::confocal: return "confocal";
  }
  return "?";
}

inline std::string to_string(LossModel m) {
  return m == LossModel::raw ? "raw" : "effective";
}

struct GridOptions {
  int points = 4096;
  double halfwidth = 10.0;  // in units of sigma
};

struct SweepSpec {
  std::string variable;  // phi | k_sigma | gamma | mirror_r
  std::vector<double> values;
  std::vector<std::string> columns;  // optional output selection
};

struct RunConfig {
  RunMode mode = RunMode::single_pass;
  std::optional<std::uint64_t> seed;
  GridOptions grid;

  // Interferometer + beam (absent for fp_cavity).
  std::optional<InterferometerParams> ifo;
  double photons = 0.0;

  // Recycling cavity.
  std::optional<double> mirror_r;
  bool auto_match = false;
  LossModel loss_model = LossModel::raw;
  long max_passes = 1000000;
  double tol = 1e-12;
  std::optional<ConfocalSpec> confocal;

  // Plain Fabry-Perot.
  std::optional<CavitySpec> fp;

  // Monte Carlo.
  std::optional<long long> trials;

  std::optional<SweepSpec> sweep;
};

namespace cfgdetail {

inline std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

[[noreturn]] inline void fail(const std::string& where, const std::string& what) {
  throw config_error("config: " + where + ": " + what);
}

inline double parse_double(const std::string& where, const std::string& text) {
  const std::string t = trim(text);
  if (t.empty()) fail(where, "empty value");
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size()) fail(where, "malformed number '" + t + "'");
  if (!std::isfinite(v)) fail(where, "value must be finite");
  return v;
}

inline long long parse_int(const std::string& where, const std::string& text) {
  const std::string t = trim(text);
  if (t.empty()) fail(where, "empty value");
  char* end = nullptr;
  const long long v = std::strtoll(t.c_str(), &end, 10);
  if (end != t.c_str() + t.size()) fail(where, "malformed integer '" + t + "'");
  return v;
}

inline std::uint64_t parse_u64(const std::string& where, const std::string& text) {
  const std::string t = trim(text);
  if (t.empty() || t[0] == '-') fail(where, "expected a nonnegative integer");
  char* end = nullptr;
  const unsigned long long v = std::strtoull(t.c_str(), &end, 10);
  if (end != t.c_str() + t.size()) fail(where, "malformed integer '" + t + "'");
  return v;
}

inline bool parse_bool(const std::string& where, const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "on" || t == "yes" || t == "1") return true;
  if (t == "false" || t == "off" || t == "no" || t == "0") return false;
  fail(where, "expected a boolean (true/false/on/off/yes/no/1/0), got '" + t + "'");
}

inline std::vector<double> parse_double_list(const std::string& where,
                                             const std::string& text) {
  std::string cleaned = text;
  std::replace(cleaned.begin(), cleaned.end(), ',', ' ');
  std::istringstream in(cleaned);
  std::vector<double> out;
  std::string token;
  while (in >> token) out.push_back(parse_double(where, token));
  if (out.empty()) fail(where, "empty list");
  return out;
}

inline std::vector<std::string> parse_string_list(const std::string& text) {
  std::string cleaned = text;
  std::replace(cleaned.begin(), cleaned.end(), ',', ' ');
  std::istringstream in(cleaned);
  std::vector<std::string> out;
  std::string token;
  while (in >> token) out.push_back(token);
  return out;
}

using Section = std::map<std::string, std::string>;

// Raw lexical pass: sections, key = value lines, '#'/';' comments.
inline std::map<std::string, Section> lex(const std::string& text) {
  static const std::map<std::string, std::set<std::string>> known = {
      {"run", {"mode", "seed"}},
      {"grid", {"points", "halfwidth"}},
      {"interferometer", {"phi", "k_sigma", "gamma", "photons", "filter"}},
      {"cavity",
       {"mirror_r", "auto_match", "loss_model", "max_passes", "tol", "r1",
        "r2", "theta", "sigma0", "ell", "dove_prism"}},
      {"detection", {"trials"}},
      {"sweep", {"variable", "values", "columns"}},
  };

  std::map<std::string, Section> out;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto comment = line.find_first_of("#;");
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(lineno);
    if (line.front() == '[') {
      if (line.back() != ']') fail(where, "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!known.count(section)) fail(where, "unknown section [" + section + "]");
      out[section];  // a section may legitimately be empty
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(where, "expected 'key = value'");
    if (section.empty()) fail(where, "key outside any [section]");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!known.at(section).count(key))
      fail(where, "unknown key '" + key + "' in [" + section + "]");
    if (out[section].count(key))
      fail(where, "duplicate key '" + key + "' in [" + section + "]");
    if (value.empty()) fail(where, "empty value for '" + key + "'");
    out[section][key] = value;
  }
  return out;
}

inline const std::string* find(const std::map<std::string, Section>& cfg,
                               const std::string& section,
                               const std::string& key) {
  const auto s = cfg.find(section);
  if (s == cfg.end()) return nullptr;
  const auto k = s->second.find(key);
  if (k == s->second.end()) return nullptr;
  return &k->second;
}

inline std::string require_key(const std::map<std::string, Section>& cfg,
                               const std::string& section,
                               const std::string& key) {
  const std::string* v = find(cfg, section, key);
  if (!v) fail("[" + section + "]", "missing required key '" + key + "'");
  return *v;
}

inline void forbid_key(const std::map<std::string, Section>& cfg,
                       const std::string& section, const std::string& key,
                       const std::string& why) {
  if (find(cfg, section, key))
    fail("[" + section + "] " + key, why);
}

}  // namespace cfgdetail

/// Parse and validate a scenario configuration. `expect_sweep` is true for
/// the sweep subcommand: a [sweep] section is then required (and forbidden
/// otherwise), and the swept variable must not also be fixed.
inline RunConfig parse_config(const std::string& text, bool expect_sweep = false) {
  using namespace cfgdetail;
  const auto cfg = lex(text);

  RunConfig rc;

  // --- run ---
  const std::string mode_text = require_key(cfg, "run", "mode");
  if (mode_text == "single_pass") rc.mode = RunMode::single_pass;
  else if (mode_text == "recycled_closed_form") rc.mode = RunMode::recycled_closed_form;
  else if (mode_text == "recycled_iterative") rc.mode = RunMode::recycled_iterative;
  else if (mode_text == "fp_cavity") rc.mode = RunMode::fp_cavity;
  else if (mode_text == "monte_carlo") rc.mode = RunMode::monte_carlo;
  else if (mode_text == "confocal") rc.mode = RunMode::confocal;
  else fail("[run] mode", "unknown mode '" + mode_text + "'");
  if (const std::string* s = find(cfg, "run", "seed"))
    rc.seed = parse_u64("[run] seed", *s);

  // --- grid ---
  if (const std::string* s = find(cfg, "grid", "points")) {
    const long long p = parse_int("[grid] points", *s);
    if (p < 2 || p > 100000000) fail("[grid] points", "must be in [2, 1e8]");
    rc.grid.points = static_cast<int>(p);
  }
  if (const std::string* s = find(cfg, "grid", "halfwidth")) {
    const double w = parse_double("[grid] halfwidth", *s);
    if (w < 8.0)
      fail("[grid] halfwidth", "must span at least 8 sigma (got " + *s + ")");
    rc.grid.halfwidth = w;
  }

  const bool recycled_family = rc.mode == RunMode::recycled_closed_form ||
                               rc.mode == RunMode::recycled_iterative ||
                               rc.mode == RunMode::monte_carlo ||
                               rc.mode == RunMode::confocal;

  // --- sweep (validated early so requirement checks can exempt the swept key) ---
  std::string swept;
  if (expect_sweep) {
    if (!cfg.count("sweep"))
      fail("[sweep]", "the sweep subcommand requires a [sweep] section");
    SweepSpec sw;
    sw.variable = require_key(cfg, "sweep", "variable");
    static const std::set<std::string> allowed = {"phi", "k_sigma", "gamma",
                                                 "mirror_r"};
    if (!allowed.count(sw.variable))
      fail("[sweep] variable",
           "must be one of phi, k_sigma, gamma, mirror_r (got '" +
               sw.variable + "')");
    if (rc.mode == RunMode::fp_cavity)
      fail("[sweep] variable", "fp_cavity mode has no sweepable variables");
    if (sw.variable == "mirror_r" && !recycled_family)
      fail("[sweep] variable", "mirror_r can only be swept in recycled modes");
    sw.values = parse_double_list("[sweep] values",
                                  require_key(cfg, "sweep", "values"));
    if (sw.values.size() >= 2) {
      const bool inc = sw.values[1] > sw.values[0];
      for (size_t i = 1; i < sw.values.size(); ++i) {
        const bool step_inc = sw.values[i] > sw.values[i - 1];
        if (sw.values[i] == sw.values[i - 1] || step_inc != inc)
          fail("[sweep] values", "must be strictly monotone");
      }
    }
    if (const std::string* s = find(cfg, "sweep", "columns"))
      sw.columns = parse_string_list(*s);
    swept = sw.variable;
    rc.sweep = std::move(sw);
  } else if (cfg.count("sweep")) {
    fail("[sweep]", "only valid with the sweep subcommand");
  }

  // --- interferometer + beam ---
  if (rc.mode != RunMode::fp_cavity) {
    auto physics = [&](const char* key) -> double {
      if (swept == key) {
        forbid_key(cfg, "interferometer", key,
                   "fixed value conflicts with [sweep] variable");
        return 0.0;  // placeholder, replaced per sweep row
      }
      return parse_double(std::string("[interferometer] ") + key,
                          require_key(cfg, "interferometer", key));
    };
    const double phi = physics("phi");
    const double k_sigma = physics("k_sigma");
    const double gamma = physics("gamma");
    if (swept != "gamma" && (gamma < 0.0 || gamma >= 1.0))
      fail("[interferometer] gamma", "must be in [0,1) (got " +
                                         require_key(cfg, "interferometer",
                                                     "gamma") + ")");
    const double photons = parse_double(
        "[interferometer] photons", require_key(cfg, "interferometer", "photons"));
    if (photons < 0.0) fail("[interferometer] photons", "must be nonnegative");
    bool filter_on = true;
    if (const std::string* s = find(cfg, "interferometer", "filter"))
      filter_on = parse_bool("[interferometer] filter", *s);
    if (recycled_family && !filter_on)
      fail("[interferometer] filter",
           "recycled modes require the mode filter (filter = on)");
    rc.ifo = InterferometerParams(phi, k_sigma, gamma, filter_on);
    rc.photons = photons;
  } else if (cfg.count("interferometer") && !cfg.at("interferometer").empty()) {
    fail("[interferometer]", "not used by fp_cavity mode");
  }

  // --- cavity ---
  auto cavity_key_allowed = [&](const std::string& key) {
    if (rc.mode == RunMode::fp_cavity)
      return key == "r1" || key == "r2" || key == "theta";
    if (!recycled_family) return false;
    if (key == "mirror_r" || key == "auto_match" || key == "loss_model")
      return true;
    if ((key == "max_passes" || key == "tol"))
      return rc.mode == RunMode::recycled_iterative;
    if (key == "sigma0" || key == "ell" || key == "dove_prism")
      return rc.mode == RunMode::confocal;
    return false;
  };
  if (cfg.count("cavity")) {
    for (const auto& [key, value] : cfg.at("cavity")) {
      if (!cavity_key_allowed(key))
        fail("[cavity] " + key,
             "not used by mode " + to_string(rc.mode));
    }
  }

  if (rc.mode == RunMode::fp_cavity) {
    const double r1 = parse_double("[cavity] r1", require_key(cfg, "cavity", "r1"));
    const double r2 = parse_double("[cavity] r2", require_key(cfg, "cavity", "r2"));
    const double theta =
        parse_double("[cavity] theta", require_key(cfg, "cavity", "theta"));
    if (r1 < 0.0 || r1 > 1.0) fail("[cavity] r1", "must be in [0,1]");
    if (r2 < 0.0 || r2 > 1.0) fail("[cavity] r2", "must be in [0,1]");
    rc.fp = CavitySpec::lossless(r1, r2, theta);
  }

  if (recycled_family) {
    const std::string* r_text = find(cfg, "cavity", "mirror_r");
    bool auto_match = false;
    if (const std::string* s = find(cfg, "cavity", "auto_match"))
      auto_match = parse_bool("[cavity] auto_match", *s);
    if (swept == "mirror_r") {
      if (r_text)
        fail("[cavity] mirror_r", "fixed value conflicts with [sweep] variable");
      if (auto_match)
        fail("[cavity] auto_match", "cannot auto-match while sweeping mirror_r");
    } else {
      if (r_text && auto_match)
        fail("[cavity]", "give either mirror_r or auto_match = true, not both");
      if (!r_text && !auto_match)
        fail("[cavity]", "recycled modes need mirror_r or auto_match = true");
      if (r_text) {
        const double r = parse_double("[cavity] mirror_r", *r_text);
        if (r < 0.0 || r >= 1.0)
          fail("[cavity] mirror_r", "must be in [0,1) (got " + *r_text + ")");
        rc.mirror_r = r;
      }
    }
    rc.auto_match = auto_match;
    if (const std::string* s = find(cfg, "cavity", "loss_model")) {
      if (*s == "raw") rc.loss_model = LossModel::raw;
      else if (*s == "effective") rc.loss_model = LossModel::effective;
      else fail("[cavity] loss_model", "must be 'raw' or 'effective'");
    }
    if (const std::string* s = find(cfg, "cavity", "max_passes")) {
      const long long mp = parse_int("[cavity] max_passes", *s);
      if (mp < 1 || mp > 1000000000) fail("[cavity] max_passes", "must be in [1, 1e9]");
      rc.max_passes = static_cast<long>(mp);
    }
    if (const std::string* s = find(cfg, "cavity", "tol")) {
      const double tol = parse_double("[cavity] tol", *s);
      if (tol < 0.0) fail("[cavity] tol", "must be nonnegative");
      rc.tol = tol;
    }
  }

  if (rc.mode == RunMode::confocal) {
    ConfocalSpec cs;
    cs.sigma0 = parse_double("[cavity] sigma0", require_key(cfg, "cavity", "sigma0"));
    if (cs.sigma0 <= 0.0) fail("[cavity] sigma0", "must be positive");
    cs.ell = parse_double("[cavity] ell", require_key(cfg, "cavity", "ell"));
    if (cs.ell <= 0.0) fail("[cavity] ell", "must be positive");
    cs.dove_prism =
        parse_bool("[cavity] dove_prism", require_key(cfg, "cavity", "dove_prism"));
    rc.confocal = cs;
  }

  // --- detection ---
  if (rc.mode == RunMode::monte_carlo) {
    const long long trials =
        parse_int("[detection] trials", require_key(cfg, "detection", "trials"));
    if (trials < 2) fail("[detection] trials", "must be at least 2");
    rc.trials = trials;
  } else if (cfg.count("detection") && !cfg.at("detection").empty()) {
    fail("[detection]", "only used by monte_carlo mode");
  }

  return rc;
}

namespace cfgdetail {

inline std::string fmt_double_exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace cfgdetail

/// Canonical one-line-per-setting serialization of the *effective*
/// configuration (after any command-line overrides); input to the config
/// hash that every output row carries.
inline std::string canonical_text(const RunConfig& rc) {
  using cfgdetail::fmt_double_exact;
  std::vector<std::string> lines;
  lines.push_back("mode=" + to_string(rc.mode));
  if (rc.seed) lines.push_back("seed=" + std::to_string(*rc.seed));
  lines.push_back("grid.points=" + std::to_string(rc.grid.points));
  lines.push_back("grid.halfwidth=" + fmt_double_exact(rc.grid.halfwidth));
  if (rc.ifo) {
    lines.push_back("interferometer.phi=" + fmt_double_exact(rc.ifo->phi));
    lines.push_back("interferometer.k_sigma=" + fmt_double_exact(rc.ifo->k_sigma));
    lines.push_back("interferometer.gamma=" + fmt_double_exact(rc.ifo->gamma));
    lines.push_back("interferometer.photons=" + fmt_double_exact(rc.photons));
    lines.push_back(std::string("interferometer.filter=") +
                    (rc.ifo->filter_enabled ? "on" : "off"));
  }
  if (rc.fp) {
    lines.push_back("cavity.r1=" + fmt_double_exact(rc.fp->r1));
    lines.push_back("cavity.r2=" + fmt_double_exact(rc.fp->r2));
    lines.push_back("cavity.theta=" + fmt_double_exact(rc.fp->theta));
  }
  if (rc.mirror_r) lines.push_back("cavity.mirror_r=" + fmt_double_exact(*rc.mirror_r));
  if (rc.auto_match) lines.push_back("cavity.auto_match=true");
  const bool recycled_family = rc.mode == RunMode::recycled_closed_form ||
                               rc.mode == RunMode::recycled_iterative ||
                               rc.mode == RunMode::monte_carlo ||
                               rc.mode == RunMode::confocal;
  if (recycled_family) {
    lines.push_back("cavity.loss_model=" + to_string(rc.loss_model));
    if (rc.mode == RunMode::recycled_iterative) {
      lines.push_back("cavity.max_passes=" + std::to_string(rc.max_passes));
      lines.push_back("cavity.tol=" + fmt_double_exact(rc.tol));
    }
  }
  if (rc.confocal) {
    lines.push_back("cavity.sigma0=" + fmt_double_exact(rc.confocal->sigma0));
    lines.push_back("cavity.ell=" + fmt_double_exact(rc.confocal->ell));
    lines.push_back(std::string("cavity.dove_prism=") +
                    (rc.confocal->dove_prism ? "true" : "false"));
  }
  if (rc.trials) lines.push_back("detection.trials=" + std::to_string(*rc.trials));
  if (rc.sweep) {
    lines.push_back("sweep.variable=" + rc.sweep->variable);
    std::string vals = "sweep.values=";
    for (size_t i = 0; i < rc.sweep->values.size(); ++i) {
      if (i) vals += ",";
      vals += fmt_double_exact(rc.sweep->values[i]);
    }
    lines.push_back(vals);
  }
  std::sort(lines.begin(), lines.end());
  std::string out;
  for (const auto& l : lines) {
    out += l;
    out += '\n';
  }
  return out;
}

/// FNV-1a 64-bit hash of the canonical configuration text, as fixed-width hex.
inline std::string config_hash(const RunConfig& rc) {
  const std::string text = canonical_text(rc);
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (const unsigned char c : text) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace wvr
