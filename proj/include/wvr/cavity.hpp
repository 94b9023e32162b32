#pragma once

#include <cmath>
#include <complex>
#include <optional>
#include <stdexcept>
#include <string>

#include "wvr/field.hpp"
#include "wvr/sagnac.hpp"

// Power-recycling cavity around the interferometer. Two layers:
//
//  * plain two-mirror Fabry-Perot closed forms (gain, reflection), used to
//    pin down the geometric-series algebra in isolation;
//  * the recycled interferometer: recycling mirror (r, t) + Sagnac ports +
//    per-traversal loss + mode filter that refreshes the circulating beam
//    to the input Gaussian profile each pass. On resonance the circulating
//    amplitude sums a real geometric series with per-pass factor
//    beta = r sqrt((1-gamma) P+), and the detector field is the dark-port
//    profile scaled by t sqrt(1-gamma) / (1 - beta).
//
// The per-pass factor uses the bright-port power sqrt(P+) for the refreshed
// profile (the filter resets the shape, power bookkeeping stays with P+);
// the filter's own projection loss is available separately via
// effective_gamma() and can be folded into the loss model.

namespace wvr {

/// Lossless two-mirror cavity: r_i^2 + t_i^2 = 1 for each mirror,
/// theta = round-trip phase.
struct CavitySpec {
  double r1 = 0.0, t1 = 1.0;
  double r2 = 0.0, t2 = 1.0;
  double theta = 0.0;

  static CavitySpec lossless(double r1, double r2, double theta) {
    detail::require(detail::is_finite(r1) && r1 >= 0.0 && r1 <= 1.0,
                    "CavitySpec: r1 must be in [0,1]");
    detail::require(detail::is_finite(r2) && r2 >= 0.0 && r2 <= 1.0,
                    "CavitySpec: r2 must be in [0,1]");
    detail::require(detail::is_finite(theta), "CavitySpec: theta must be finite");
    CavitySpec s;
    s.r1 = r1;
    s.t1 = std::sqrt(1.0 - r1 * r1);
    s.r2 = r2;
    s.t2 = std::sqrt(1.0 - r2 * r2);
    s.theta = theta;
    return s;
  }
};

namespace detail {
inline void require_subunit_loop(const CavitySpec& c, const char* who) {
  require(std::abs(c.r1 * c.r2) < 1.0,
          std::string(who) + ": |r1*r2| must be < 1");
}
}  // namespace detail

/// Intracavity field gain E_cav/E_in = t1 / (1 - r1 r2 e^{i theta}).
inline complexd fp_cavity_gain(const CavitySpec& c) {
  detail::require_subunit_loop(c, "fp_cavity_gain");
  const complexd loop = c.r1 * c.r2 *
                        complexd(std::cos(c.theta), std::sin(c.theta));
  return c.t1 / (1.0 - loop);
}

/// Reflected amplitude E_r/E_in = -r1 + t1^2 r2 e^{i theta} / (1 - r1 r2 e^{i theta}).
inline complexd fp_reflection(const CavitySpec& c) {
  detail::require_subunit_loop(c, "fp_reflection");
  const complexd phase(std::cos(c.theta), std::sin(c.theta));
  const complexd loop = c.r1 * c.r2 * phase;
  return -c.r1 + c.t1 * c.t1 * c.r2 * phase / (1.0 - loop);
}

/// Recycling-mirror reflectivity that cancels the back-reflection:
/// r = sqrt((1-gamma) P+). P+ = 1 is accepted as the degenerate lossless
/// limit (r = sqrt(1-gamma), nothing exits the dark port).
inline double impedance_match(double gamma, double p_plus) {
  detail::require(detail::is_finite(gamma) && gamma >= 0.0 && gamma < 1.0,
                  "impedance_match: gamma must be in [0,1)");
  detail::require(detail::is_finite(p_plus) && p_plus > 0.0 && p_plus <= 1.0,
                  "impedance_match: p_plus must be in (0,1]");
  return std::sqrt((1.0 - gamma) * p_plus);
}

/// Which loss enters the recycling series and the matching condition:
/// the raw optics gamma, or gamma + k^2 s^2 phi^2 / 4 with the filter's
/// per-pass projection loss folded in. Used consistently for both.
enum class LossModel { raw, effective };

/// Confocal relay geometry: waist sigma0 at the beam splitter, focal
/// distance ell; the recycling mirror sits at the focus, where the width is
/// sqrt(2) sigma0. Each traversal of the focus inverts the transverse
/// profile and adds a pi Gouy phase; a Dove prism undoes the inversion.
struct ConfocalSpec {
  double sigma0 = 1.0;
  double ell = 1.0;
  bool dove_prism = true;
};

/// Beam width at distance z from the waist: sigma(z) = sigma0 sqrt(1 + z^2/ell^2).
inline double beam_width(const ConfocalSpec& c, double z) {
  detail::require(detail::is_finite(c.sigma0) && c.sigma0 > 0.0,
                  "beam_width: sigma0 must be positive");
  detail::require(detail::is_finite(c.ell) && c.ell > 0.0,
                  "beam_width: ell must be positive");
  detail::require(detail::is_finite(z), "beam_width: z must be finite");
  return c.sigma0 * std::sqrt(1.0 + (z / c.ell) * (z / c.ell));
}

/// One traversal of the focus: global e^{i pi} phase and a parity flip;
/// with a Dove prism in the path, a second parity flip so the net
/// transverse transformation is the identity (times the phase).
inline TransverseField confocal_pass_correction(const TransverseField& f,
                                                bool dove_prism) {
  TransverseField out = parity_flip(f);
  if (dove_prism) out = parity_flip(out);
  for (auto& a : out.amp) a = -a;
  return out;
}

/// Recycled interferometer on resonance. The grid is expressed in units of
/// the beam width at the recycling mirror, so confocal geometry enters only
/// through the exit-path correction and the reported widths.
struct RecycledSetup {
  InterferometerParams params;
  double mirror_r = 0.0;
  double photons = 0.0;
  Grid grid;
  LossModel loss_model = LossModel::raw;
  std::optional<ConfocalSpec> confocal;  // flat geometry when empty

  double mirror_t() const { return std::sqrt(1.0 - mirror_r * mirror_r); }
  double loss_gamma() const {
    return loss_model == LossModel::raw ? params.gamma
                                        : effective_gamma(params);
  }
};

/// Matched mirror reflectivity for a parameter set under a loss model.
inline double matched_mirror_r(const InterferometerParams& p,
                               LossModel model = LossModel::raw) {
  const double gamma =
      model == LossModel::raw ? p.gamma : effective_gamma(p);
  return impedance_match(gamma, bright_port_probability(p));
}

namespace detail {
inline void validate_recycled(const RecycledSetup& s, const char* who) {
  require(s.params.filter_enabled,
          std::string(who) +
              ": recycling without the profile-refreshing filter is outside "
              "the model (filter_enabled must be true)");
  require(is_finite(s.mirror_r) && s.mirror_r >= 0.0 && s.mirror_r < 1.0,
          std::string(who) + ": mirror_r must be in [0,1)");
  require(is_finite(s.photons) && s.photons >= 0.0,
          std::string(who) + ": photons must be nonnegative");
}

inline double roundtrip_factor(const RecycledSetup& s, double p_plus) {
  return s.mirror_r * std::sqrt((1.0 - s.loss_gamma()) * p_plus);
}
}  // namespace detail

/// Closed-form steady-state field at the dark-port detector:
/// i t sqrt(1-gamma) sin(phi/2 - k x) / (1 - beta) applied to the input
/// Gaussian, beta = r sqrt((1-gamma) P+).
inline TransverseField recycled_steady_state(const RecycledSetup& s) {
  detail::validate_recycled(s, "recycled_steady_state");
  const double beta = detail::roundtrip_factor(s, bright_port_probability(s.params));
  detail::require(beta < 1.0, "recycled_steady_state: series divergent");
  const double gain =
      s.mirror_t() * std::sqrt(1.0 - s.loss_gamma()) / (1.0 - beta);
  TransverseField out = scale_field(
      apply_dark_port(gaussian_field(1.0, s.photons, s.grid), s.params), gain);
  if (s.confocal) out = confocal_pass_correction(out, s.confocal->dove_prism);
  return out;
}

/// Steady-state amplitude reflected back toward the source:
/// -r + t^2 sqrt(1-gamma) sqrt(P+) / (1 - beta). Exactly zero at the
/// impedance-matched mirror_r.
inline double recycled_reflection(const RecycledSetup& s) {
  detail::validate_recycled(s, "recycled_reflection");
  const double p_plus = bright_port_probability(s.params);
  const double beta = detail::roundtrip_factor(s, p_plus);
  detail::require(beta < 1.0, "recycled_reflection: series divergent");
  const double root = std::sqrt((1.0 - s.loss_gamma()) * p_plus);
  return -s.mirror_r + s.mirror_t() * s.mirror_t() * root / (1.0 - beta);
}

struct RoundtripResult {
  TransverseField field;
  long passes = 0;
};

/// Thrown when the round-trip sum fails to converge; carries the partial
/// accumulation so callers can inspect how far it got.
class convergence_error : public std::runtime_error {
 public:
  convergence_error(std::string message, RoundtripResult partial)
      : std::runtime_error(std::move(message)), partial_(std::move(partial)) {}
  const RoundtripResult& partial() const { return partial_; }

 private:
  RoundtripResult partial_;
};

/// Brute-force steady state: accumulate per-pass dark-port leakage
/// amplitudes until the incremental detected power drops below
/// tol * accumulated power. Per pass: mirror -> bright-port projection ->
/// loss -> filter refresh (power-preserving shape reset, amplitude from the
/// quadrature norm) -> return. The bright-port power is taken from the
/// quadrature, not the closed form, so this genuinely cross-checks
/// recycled_steady_state.
inline RoundtripResult iterate_roundtrips(const RecycledSetup& s,
                                          long max_passes = 1000000,
                                          double tol = 1e-12) {
  detail::validate_recycled(s, "iterate_roundtrips");
  detail::require(max_passes >= 1, "iterate_roundtrips: max_passes must be >= 1");
  detail::require(detail::is_finite(tol) && tol >= 0.0,
                  "iterate_roundtrips: tol must be nonnegative");

  const TransverseField unit_input = gaussian_field(1.0, 1.0, s.grid);
  const TransverseField dark_shape = apply_dark_port(unit_input, s.params);
  const double p_plus_quad = power(apply_bright_port(unit_input, s.params));
  const double dark_power = power(dark_shape);
  const double gamma = s.loss_gamma();
  const double beta = s.mirror_r * std::sqrt((1.0 - gamma) * p_plus_quad);
  const double t = s.mirror_t();
  const double loss_amp = std::sqrt(1.0 - gamma);

  detail::KahanSum leak;  // coherent on-resonance amplitude sum, real
  double total_power = 0.0;
  long pass = 0;
  bool converged = false;
  while (pass < max_passes) {
    // Amplitude entering the interferometer on this pass: t * beta^pass.
    leak.add(t * std::pow(beta, static_cast<double>(pass)) * loss_amp);
    ++pass;
    const double amp_sum = leak.total();
    const double new_power = amp_sum * amp_sum * dark_power * s.photons;
    const double increment = new_power - total_power;
    total_power = new_power;
    if (pass >= 2 && increment <= tol * new_power) {
      converged = true;
      break;
    }
    if (new_power == 0.0 && pass >= 2) {  // dark port carries no light
      converged = true;
      break;
    }
  }

  auto assemble = [&](double amp_sum) {
    TransverseField out =
        scale_field(dark_shape, amp_sum * std::sqrt(s.photons));
    if (s.confocal)
      out = confocal_pass_correction(out, s.confocal->dove_prism);
    return out;
  };

  RoundtripResult result{assemble(leak.total()), pass};
  if (!converged) {
    throw convergence_error(
        "iterate_roundtrips: no convergence within " +
            std::to_string(max_passes) + " passes",
        std::move(result));
  }
  return result;
}

}  // namespace wvr
