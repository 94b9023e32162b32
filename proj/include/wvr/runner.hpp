#pragma once

#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "wvr/cavity.hpp"
#include "wvr/config.hpp"
#include "wvr/detection.hpp"
#include "wvr/field.hpp"
#include "wvr/sagnac.hpp"

// Scenario runner: turns a validated RunConfig into a table of named columns
// placing analytic predictions, field-level quadrature values and (when
// requested) Monte Carlo results side by side. Output is byte-deterministic:
// fixed column order, fixed 12-significant-digit formatting, no
// locale-dependent pieces.

namespace wvr {

using Cell = std::variant<std::monostate, double, long long, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

namespace rundetail {

using Row = std::map<std::string, Cell>;

inline std::string fmt12(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline Grid make_grid(const RunConfig& rc) {
  return Grid(rc.grid.halfwidth, rc.grid.points);
}

inline bool recycled_family(RunMode m) {
  return m == RunMode::recycled_closed_form ||
         m == RunMode::recycled_iterative || m == RunMode::monte_carlo ||
         m == RunMode::confocal;
}

// Deviation between a quadrature value and an analytic estimate, compared on
// magnitudes: the detector's left/right labeling is a lab orientation choice,
// so the closed forms are quoted unsigned while the quadrature keeps the
// operator convention's sign.
inline Cell magnitude_rel_dev(double quad, double analytic) {
  if (analytic == 0.0 || !std::isfinite(analytic)) return std::monostate{};
  return std::abs(quad) / std::abs(analytic) - 1.0;
}

inline std::vector<std::string> mode_columns(const RunConfig& rc) {
  std::vector<std::string> cols = {"mode", "status", "config_hash", "seed"};
  auto add = [&](std::initializer_list<const char*> names) {
    for (const char* n : names) cols.emplace_back(n);
  };
  if (rc.mode == RunMode::fp_cavity) {
    add({"r1", "t1", "r2", "t2", "theta", "gain_re", "gain_im", "gain_abs2",
         "refl_re", "refl_im", "refl_abs2", "energy_residual"});
    return cols;
  }
  add({"phi", "k_sigma", "gamma", "photons", "grid_points", "grid_halfwidth"});
  if (rc.mode == RunMode::single_pass) {
    add({"n_det_quad", "n_det_est", "signal_quad", "signal_analytic",
         "signal_rel_dev", "snr_quad", "snr_analytic", "snr_rel_dev",
         "weak_value_im", "postselect_p", "interactions", "mean_passes"});
    return cols;
  }
  // Recycled family.
  add({"loss_model", "gamma_eff", "mirror_r", "auto_matched", "mirror_t",
       "roundtrip_amp", "n_det_quad", "n_det_over_n", "n_det_analytic",
       "signal_quad", "signal_analytic", "signal_rel_dev", "snr_quad",
       "snr_analytic", "snr_rel_dev", "snr_single_pass_quad",
       "snr_boost_quad", "snr_boost_analytic", "reflection_amp"});
  if (rc.mode == RunMode::recycled_iterative) add({"passes_used"});
  if (rc.mode == RunMode::monte_carlo)
    add({"mc_trials", "mc_mean_signal", "mc_var_signal", "mc_snr",
         "mc_signal_rel_dev"});
  if (rc.mode == RunMode::confocal)
    add({"sigma0", "ell", "sigma_mirror", "dove_prism"});
  return cols;
}

inline void fill_common(Row& row, const RunConfig& rc,
                        std::optional<std::uint64_t> row_seed) {
  row["mode"] = to_string(rc.mode);
  row["status"] = std::string("ok");
  row["config_hash"] = config_hash(rc);
  if (row_seed)
    row["seed"] = static_cast<long long>(*row_seed);
  if (rc.ifo) {
    row["phi"] = rc.ifo->phi;
    row["k_sigma"] = rc.ifo->k_sigma;
    row["gamma"] = rc.ifo->gamma;
    row["photons"] = rc.photons;
    row["grid_points"] = static_cast<long long>(rc.grid.points);
    row["grid_halfwidth"] = rc.grid.halfwidth;
  }
}

inline void fill_single_pass(Row& row, const RunConfig& rc) {
  const Grid grid = make_grid(rc);
  const InterferometerParams& p = *rc.ifo;
  const double n = rc.photons;
  const TransverseField f = dark_port_field(p, n, grid);
  const DetectionResult det = detect_quadrature(f);
  row["n_det_quad"] = det.n_detected;
  const double n_est = n * 0.25 * p.phi * p.phi;  // weak-regime p = (phi/2)^2
  row["n_det_est"] = n_est;
  row["signal_quad"] = det.signal;
  row["snr_quad"] = det.snr;
  if (p.phi != 0.0) {
    const double sig_an = analytic_signal(p, n_est);
    row["signal_analytic"] = sig_an;
    row["signal_rel_dev"] = magnitude_rel_dev(det.signal, sig_an);
    if (n_est > 0.0) {
      const double snr_an = analytic_snr_single_pass(p, n_est);
      row["snr_analytic"] = snr_an;
      row["snr_rel_dev"] = magnitude_rel_dev(det.snr, snr_an);
    }
    if (p.phi < 2.0 * M_PI)
      row["weak_value_im"] = which_path_weak_value(p.phi).imag();
  }
  const double p_dark = dark_port_probability(p);
  row["postselect_p"] = p_dark;
  if (p_dark > 0.0) {
    const ResourceCount res = resource_count(n, p_dark);
    row["interactions"] = res.interactions;
    row["mean_passes"] = res.mean_passes;
  }
}

inline void fill_recycled(Row& row, const RunConfig& rc,
                          std::optional<std::uint64_t> row_seed) {
  const Grid grid = make_grid(rc);
  const InterferometerParams& p = *rc.ifo;
  const double n = rc.photons;

  RecycledSetup setup;
  setup.params = p;
  setup.photons = n;
  setup.grid = grid;
  setup.loss_model = rc.loss_model;
  setup.confocal = rc.confocal;
  setup.mirror_r = rc.auto_match ? matched_mirror_r(p, rc.loss_model)
                                 : rc.mirror_r.value();

  const double gamma_used = setup.loss_gamma();
  row["loss_model"] = to_string(rc.loss_model);
  row["gamma_eff"] = effective_gamma(p);
  row["mirror_r"] = setup.mirror_r;
  row["auto_matched"] = std::string(rc.auto_match ? "true" : "false");
  row["mirror_t"] = setup.mirror_t();
  row["roundtrip_amp"] =
      setup.mirror_r *
      std::sqrt((1.0 - gamma_used) * bright_port_probability(p));

  TransverseField f;
  if (rc.mode == RunMode::recycled_iterative) {
    const RoundtripResult it = iterate_roundtrips(setup, rc.max_passes, rc.tol);
    f = it.field;
    row["passes_used"] = static_cast<long long>(it.passes);
  } else {
    f = recycled_steady_state(setup);
  }

  const DetectionResult det = detect_quadrature(f);
  row["n_det_quad"] = det.n_detected;
  if (n > 0.0) row["n_det_over_n"] = det.n_detected / n;
  row["signal_quad"] = det.signal;
  row["snr_quad"] = det.snr;
  row["reflection_amp"] = recycled_reflection(setup);

  if (p.phi != 0.0) {
    const double n_det_an = n * (1.0 - 4.0 * gamma_used / (p.phi * p.phi));
    row["n_det_analytic"] = n_det_an;
    if (n_det_an >= 0.0) {
      const double sig_an = analytic_signal(p, n_det_an);
      row["signal_analytic"] = sig_an;
      row["signal_rel_dev"] = magnitude_rel_dev(det.signal, sig_an);
    }
    if (gamma_used < 1.0) {
      const InterferometerParams p_used(p.phi, p.k_sigma, gamma_used,
                                        p.filter_enabled);
      const double snr_an = analytic_snr_recycled(p_used, n);
      row["snr_analytic"] = snr_an;
      row["snr_rel_dev"] = magnitude_rel_dev(det.snr, snr_an);
      row["snr_boost_analytic"] =
          (2.0 / p.phi) * (1.0 - 2.0 * gamma_used / (p.phi * p.phi));
    }
    // Field-level single-pass reference (same beam, no cavity, no loss).
    const DetectionResult sp = detect_quadrature(dark_port_field(p, n, grid));
    row["snr_single_pass_quad"] = sp.snr;
    if (sp.snr != 0.0) row["snr_boost_quad"] = det.snr / sp.snr;
  }

  if (rc.mode == RunMode::monte_carlo) {
    const DetectionResult mc =
        monte_carlo_detect(f, rc.trials.value(), row_seed.value());
    row["mc_trials"] = static_cast<long long>(rc.trials.value());
    row["mc_mean_signal"] = mc.signal;
    row["mc_var_signal"] = mc.mc->var_signal;
    row["mc_snr"] = mc.snr;
    row["mc_signal_rel_dev"] = magnitude_rel_dev(mc.signal, det.signal);
  }

  if (rc.mode == RunMode::confocal) {
    const ConfocalSpec& cs = *rc.confocal;
    row["sigma0"] = cs.sigma0;
    row["ell"] = cs.ell;
    row["sigma_mirror"] = beam_width(cs, cs.ell);
    row["dove_prism"] = std::string(cs.dove_prism ? "true" : "false");
  }
}

inline void fill_fp(Row& row, const RunConfig& rc) {
  const CavitySpec& c = *rc.fp;
  row["r1"] = c.r1;
  row["t1"] = c.t1;
  row["r2"] = c.r2;
  row["t2"] = c.t2;
  row["theta"] = c.theta;
  const complexd gain = fp_cavity_gain(c);
  const complexd refl = fp_reflection(c);
  row["gain_re"] = gain.real();
  row["gain_im"] = gain.imag();
  row["gain_abs2"] = std::norm(gain);
  row["refl_re"] = refl.real();
  row["refl_im"] = refl.imag();
  row["refl_abs2"] = std::norm(refl);
  row["energy_residual"] =
      std::norm(refl) + c.t2 * c.t2 * std::norm(gain) - 1.0;
}

inline Row scenario_row(const RunConfig& rc,
                        std::optional<std::uint64_t> row_seed) {
  Row row;
  fill_common(row, rc, row_seed);
  switch (rc.mode) {
    case RunMode::single_pass:
      fill_single_pass(row, rc);
      break;
    case RunMode::fp_cavity:
      fill_fp(row, rc);
      break;
    default:
      fill_recycled(row, rc, row_seed);
      break;
  }
  return row;
}

inline std::vector<Cell> project(const Row& row,
                                 const std::vector<std::string>& columns) {
  std::vector<Cell> out;
  out.reserve(columns.size());
  for (const auto& name : columns) {
    const auto it = row.find(name);
    out.push_back(it == row.end() ? Cell{} : it->second);
  }
  return out;
}

// Set the swept variable on a copy of the configuration.
inline RunConfig with_swept_value(const RunConfig& rc,
                                  const std::string& variable, double value) {
  RunConfig out = rc;
  if (variable == "mirror_r") {
    out.mirror_r = value;  // range-checked by the cavity model
    return out;
  }
  const InterferometerParams& p = *rc.ifo;
  const double phi = variable == "phi" ? value : p.phi;
  const double ks = variable == "k_sigma" ? value : p.k_sigma;
  const double gamma = variable == "gamma" ? value : p.gamma;
  out.ifo = InterferometerParams(phi, ks, gamma, p.filter_enabled);
  return out;
}

}  // namespace rundetail

/// Advisory weak-value-regime check used for CLI warnings.
inline bool weak_regime_ok(const InterferometerParams& p) {
  return p.phi > 0.0 && p.phi <= 0.5 && p.k_sigma >= 0.0 &&
         p.k_sigma <= 0.1 * p.phi;
}

/// Run a single scenario; one output row.
inline Table run_scenario(const RunConfig& rc) {
  if (rc.mode == RunMode::monte_carlo && !rc.seed)
    throw config_error("config: [run] seed: required for monte_carlo mode");
  Table t;
  t.columns = rundetail::mode_columns(rc);
  t.rows.push_back(
      rundetail::project(rundetail::scenario_row(rc, rc.seed), t.columns));
  return t;
}

/// Run a sweep; one row per value, in order. Rows that fail (for example a
/// divergent or out-of-range cavity point) are kept with a status message
/// rather than dropped. Monte Carlo rows use seed + row index so each row's
/// statistics are independent but schedule-free.
inline Table run_sweep(const RunConfig& rc) {
  if (!rc.sweep) throw config_error("config: [sweep]: missing sweep section");
  if (rc.mode == RunMode::monte_carlo && !rc.seed)
    throw config_error("config: [run] seed: required for monte_carlo mode");

  Table t;
  t.columns = rundetail::mode_columns(rc);

  if (!rc.sweep->columns.empty()) {
    for (const auto& want : rc.sweep->columns) {
      if (std::find(t.columns.begin(), t.columns.end(), want) ==
          t.columns.end())
        throw config_error("config: [sweep] columns: unknown column '" + want +
                           "' for mode " + to_string(rc.mode));
    }
  }

  for (size_t i = 0; i < rc.sweep->values.size(); ++i) {
    std::optional<std::uint64_t> row_seed = rc.seed;
    if (rc.mode == RunMode::monte_carlo && rc.seed)
      row_seed = *rc.seed + static_cast<std::uint64_t>(i);
    rundetail::Row row;
    try {
      const RunConfig point = rundetail::with_swept_value(
          rc, rc.sweep->variable, rc.sweep->values[i]);
      row = rundetail::scenario_row(point, row_seed);
    } catch (const std::exception& e) {
      row.clear();
      rundetail::fill_common(row, rc, row_seed);
      row[rc.sweep->variable] = rc.sweep->values[i];
      row["status"] = std::string("error: ") + e.what();
    }
    t.rows.push_back(rundetail::project(row, t.columns));
  }

  if (!rc.sweep->columns.empty()) {
    Table filtered;
    filtered.columns = rc.sweep->columns;
    for (const auto& full_row : t.rows) {
      std::vector<Cell> cells;
      for (const auto& name : filtered.columns) {
        const auto idx = static_cast<size_t>(
            std::find(t.columns.begin(), t.columns.end(), name) -
            t.columns.begin());
        cells.push_back(full_row[idx]);
      }
      filtered.rows.push_back(std::move(cells));
    }
    return filtered;
  }
  return t;
}

namespace rundetail {

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += "\"";
  return out;
}

inline std::string json_escape(const std::string& s) {
  std::string out;
  for (const char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out;
}

inline std::string csv_cell(const Cell& cell) {
  if (std::holds_alternative<std::monostate>(cell)) return "";
  if (const double* d = std::get_if<double>(&cell)) return fmt12(*d);
  if (const long long* i = std::get_if<long long>(&cell))
    return std::to_string(*i);
  return csv_escape(std::get<std::string>(cell));
}

inline std::string json_cell(const Cell& cell) {
  if (std::holds_alternative<std::monostate>(cell)) return "null";
  if (const double* d = std::get_if<double>(&cell)) {
    if (!std::isfinite(*d)) return "null";
    return fmt12(*d);
  }
  if (const long long* i = std::get_if<long long>(&cell))
    return std::to_string(*i);
  return "\"" + json_escape(std::get<std::string>(cell)) + "\"";
}

}  // namespace rundetail

/// CSV: one header line, one line per row, '\n' separators, 12 significant
/// digits, '.' decimal separator, no locale dependence.
inline void emit_csv(const Table& t, std::ostream& os) {
  detail::require(!t.columns.empty(), "emit_csv: empty table");
  for (size_t c = 0; c < t.columns.size(); ++c) {
    if (c) os << ',';
    os << rundetail::csv_escape(t.columns[c]);
  }
  os << '\n';
  for (const auto& row : t.rows) {
    for (size_t c = 0; c < row.size(); ++c) {
      if (c) os << ',';
      os << rundetail::csv_cell(row[c]);
    }
    os << '\n';
  }
}

/// JSON: array of row objects with the same field names and numeric values
/// as the CSV encoding.
inline void emit_json(const Table& t, std::ostream& os) {
  detail::require(!t.columns.empty(), "emit_json: empty table");
  os << "[\n";
  for (size_t r = 0; r < t.rows.size(); ++r) {
    os << "  {";
    for (size_t c = 0; c < t.columns.size(); ++c) {
      if (c) os << ", ";
      os << '"' << rundetail::json_escape(t.columns[c])
         << "\": " << rundetail::json_cell(t.rows[r][c]);
    }
    os << (r + 1 < t.rows.size() ? "},\n" : "}\n");
  }
  os << "]\n";
}

}  // namespace wvr
