#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

#include "wvr/field.hpp"

// Sagnac interferometer port operators. The two counter-propagating paths
// pick up a relative phase phi (Soleil-Babinet) plus opposite transverse
// momentum kicks +-k from the tilting mirror. Interfering them at the beam
// splitter reduces, at field level, to position-diagonal multipliers:
//
//   bright port:  amp(x) -> cos(phi/2 - k x) * amp(x)
//   dark port:    amp(x) -> i sin(phi/2 - k x) * amp(x)
//
// which together conserve power pointwise. Everything here is expressed in
// units of the beam width, so only the products phi and k*sigma matter.

namespace wvr {

struct InterferometerParams {
  double phi = 0.0;      // relative Sagnac phase, radians
  double k_sigma = 0.0;  // transverse kick in units of 1/sigma
  double gamma = 0.0;    // per-traversal optical power loss, in [0, 1)
  bool filter_enabled = true;

  InterferometerParams() = default;
  InterferometerParams(double phi_, double k_sigma_, double gamma_,
                       bool filter_on = true)
      : phi(phi_), k_sigma(k_sigma_), gamma(gamma_), filter_enabled(filter_on) {
    detail::require(detail::is_finite(phi),
                    "InterferometerParams: phi must be finite");
    detail::require(detail::is_finite(k_sigma),
                    "InterferometerParams: k_sigma must be finite");
    detail::require(detail::is_finite(gamma) && gamma >= 0.0 && gamma < 1.0,
                    "InterferometerParams: gamma must be in [0,1)");
  }
};

/// Bright-port projection: amp(x) -> cos(phi/2 - k x) amp(x).
inline TransverseField apply_bright_port(const TransverseField& f,
                                         const InterferometerParams& p) {
  TransverseField out = f;
  for (int i = 0; i < f.grid.n_points; ++i) {
    out.amp[i] = f.amp[i] * std::cos(0.5 * p.phi - p.k_sigma * f.grid.x(i));
  }
  out.photons = power(out);
  return out;
}

/// Dark-port projection: amp(x) -> i sin(phi/2 - k x) amp(x).
inline TransverseField apply_dark_port(const TransverseField& f,
                                       const InterferometerParams& p) {
  TransverseField out = f;
  for (int i = 0; i < f.grid.n_points; ++i) {
    const double s = std::sin(0.5 * p.phi - p.k_sigma * f.grid.x(i));
    out.amp[i] = f.amp[i] * complexd(0.0, s);
  }
  out.photons = power(out);
  return out;
}

/// Probability that a photon in the Gaussian mode exits the bright port:
/// P+ = (1/2) [1 + cos(phi) exp(-2 k^2 sigma^2)].
inline double bright_port_probability(const InterferometerParams& p) {
  const double ks2 = p.k_sigma * p.k_sigma;
  return 0.5 * (1.0 + std::cos(p.phi) * std::exp(-2.0 * ks2));
}

/// Dark-port exit probability, 1 - P+.
inline double dark_port_probability(const InterferometerParams& p) {
  const double ks2 = p.k_sigma * p.k_sigma;
  return 0.5 * (1.0 - std::cos(p.phi) * std::exp(-2.0 * ks2));
}

/// Which-path weak value for dark-port postselection: -i cot(phi/2).
/// Purely imaginary; magnitude ~ 2/phi in the weak-value regime.
inline complexd which_path_weak_value(double phi) {
  detail::require(detail::is_finite(phi) && phi > 0.0 && phi < 2.0 * M_PI,
                  "which_path_weak_value: postselection singular, "
                  "phi must lie in (0, 2*pi)");
  const double s = std::sin(0.5 * phi);
  detail::require(s != 0.0,
                  "which_path_weak_value: postselection singular at phi");
  return complexd(0.0, -std::cos(0.5 * phi) / s);
}

/// Survival probability of the bright-port beam through the mode filter:
/// P_Z = cos^2(phi/2) / [sinh(k^2 s^2) + cos^2(phi/2) exp(-k^2 s^2)].
/// Exactly 1 at k = 0 for any phi with cos(phi/2) != 0.
inline double zeno_survival(const InterferometerParams& p) {
  const double c = std::cos(0.5 * p.phi);
  const double c2 = c * c;
  const double a = p.k_sigma * p.k_sigma;
  const double denom = std::sinh(a) + c2 * std::exp(-a);
  detail::require(denom > 0.0,
                  "zeno_survival: undefined, bright port carries no light");
  return c2 / denom;
}

/// Small-signal expansion of the survival probability:
/// P_Z ~ 1 - (phi/2)^2 k^2 s^2 - k^4 s^4 / 2.
inline double zeno_survival_expansion(const InterferometerParams& p) {
  const double a = p.k_sigma * p.k_sigma;
  const double half_phi = 0.5 * p.phi;
  return 1.0 - half_phi * half_phi * a - 0.5 * a * a;
}

/// Leading-order power lost to the filter per pass, k^2 s^2 phi^2 / 4.
inline double filter_loss_estimate(const InterferometerParams& p) {
  return 0.25 * p.k_sigma * p.k_sigma * p.phi * p.phi;
}

/// Optics loss with the per-pass filter loss folded in.
inline double effective_gamma(const InterferometerParams& p) {
  return p.gamma + filter_loss_estimate(p);
}

/// Uniform per-traversal power loss: amp *= sqrt(1-gamma).
inline TransverseField apply_loss(const TransverseField& f, double gamma) {
  detail::require(detail::is_finite(gamma) && gamma >= 0.0 && gamma < 1.0,
                  "apply_loss: gamma must be in [0,1)");
  TransverseField out = f;
  const double s = std::sqrt(1.0 - gamma);
  for (auto& a : out.amp) a *= s;
  out.photons = f.photons * (1.0 - gamma);
  return out;
}

struct FilterResult {
  TransverseField field;  // reference profile carrying the surviving power
  double survival;        // |<ref | f_normalized>|^2
};

/// Mode filter: project onto a unit-normalized reference profile. The output
/// is the reference re-emitted with amplitude <ref|f>, so its power is
/// |<ref|f>|^2 in the normalization convention of f.
inline FilterResult spatial_filter(const TransverseField& f,
                                   const TransverseField& reference) {
  detail::require(f.grid == reference.grid,
                  "spatial_filter: grids do not match");
  const double ref_power = power(reference);
  detail::require(std::abs(ref_power - 1.0) <= 1e-8,
                  "spatial_filter: reference must be unit-normalized");
  const double in_power = power(f);
  detail::require(in_power > 0.0, "spatial_filter: zero-power input field");
  const complexd overlap = inner_product(reference, f);
  FilterResult result{scale_field(reference, overlap),
                      std::norm(overlap) / in_power};
  return result;
}

/// Convenience: the single-pass dark-port field for a Gaussian input beam
/// carrying `photons`. No cavity, no loss.
inline TransverseField dark_port_field(const InterferometerParams& p,
                                       double photons,
                                       const Grid& grid = Grid()) {
  return apply_dark_port(gaussian_field(1.0, photons, grid), p);
}

}  // namespace wvr
