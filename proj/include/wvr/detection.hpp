#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "wvr/field.hpp"
#include "wvr/sagnac.hpp"

// Split detection of the dark-port beam. The observable is
// S = (photons on x > 0) - (photons on x < 0); shot noise gives
// var(S) = N_det, so the signal-to-noise ratio is S / sqrt(N_det).
// Alongside the quadrature values, the small-signal closed forms for the
// mean signal and SNR (single-pass and recycled) are provided, plus a
// photon-by-photon Monte Carlo with deterministic per-trial seeding.

namespace wvr {

namespace detail {

// SplitMix64: cheap, well-mixed 64-bit hash used to derive independent
// per-trial RNG seeds from (seed, trial index) so results do not depend on
// any execution schedule.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace detail

/// Sign-weighted quadrature of the intensity: integral of sgn(x) |amp|^2.
/// Cells straddling x = 0 are split with the same linear interpolation the
/// trapezoid rule implies, so a parity-even field gives exactly zero and a
/// grid node at x = 0 contributes nothing.
inline double split_signal(const TransverseField& f) {
  const int n = f.grid.n_points;
  const double h = f.grid.spacing();
  detail::KahanSum acc;
  for (int i = 0; i + 1 < n; ++i) {
    const double x0 = f.grid.x(i);
    const double x1 = f.grid.x(i + 1);
    const double f0 = std::norm(f.amp[i]);
    const double f1 = std::norm(f.amp[i + 1]);
    if (x0 >= 0.0) {
      acc.add(0.5 * h * (f0 + f1));
    } else if (x1 <= 0.0) {
      acc.add(-0.5 * h * (f0 + f1));
    } else {
      // Straddling cell [x0, x1] with x0 < 0 < x1: integrate the linear
      // interpolant on each side of zero separately.
      const double a = -x0;
      const double b = x1;
      const double fmid = f0 + a * (f1 - f0) / h;  // interpolated value at 0
      acc.add(0.5 * b * (fmid + f1) - 0.5 * a * (f0 + fmid));
    }
  }
  return acc.total();
}

enum class DetectionMode { analytic, quadrature, monte_carlo };

struct McMeta {
  long long trials = 0;
  std::uint64_t seed = 0;
  double var_signal = 0.0;
};

struct DetectionResult {
  double signal = 0.0;      // mean split signal S
  double n_detected = 0.0;  // mean detected photons
  double snr = 0.0;
  DetectionMode mode = DetectionMode::quadrature;
  std::optional<McMeta> mc;
};

/// Deterministic field-level detection: S and N_det by quadrature.
inline DetectionResult detect_quadrature(const TransverseField& f) {
  DetectionResult r;
  r.signal = split_signal(f);
  r.n_detected = power(f);
  r.snr = r.n_detected > 0.0 ? r.signal / std::sqrt(r.n_detected) : 0.0;
  r.mode = DetectionMode::quadrature;
  return r;
}

/// Small-signal mean split signal, 2 sqrt(2/pi) N_det (2 k s / phi).
inline double analytic_signal(const InterferometerParams& p, double n_det) {
  detail::require(p.phi != 0.0, "analytic_signal: phi = 0");
  detail::require(detail::is_finite(n_det) && n_det >= 0.0,
                  "analytic_signal: n_det must be nonnegative");
  return 2.0 * std::sqrt(2.0 / M_PI) * n_det * 2.0 * p.k_sigma / p.phi;
}

/// Single-pass shot-noise-limited SNR, 2 sqrt(2/pi) sqrt(N_det) (2 k s / phi).
inline double analytic_snr_single_pass(const InterferometerParams& p,
                                       double n_det) {
  detail::require(p.phi != 0.0, "analytic_snr_single_pass: phi = 0");
  detail::require(detail::is_finite(n_det) && n_det > 0.0,
                  "analytic_snr_single_pass: n_det must be positive");
  return 2.0 * std::sqrt(2.0 / M_PI) * std::sqrt(n_det) * 2.0 * p.k_sigma /
         p.phi;
}

/// Recycled SNR with all input photons N recycled into the measurement:
/// 4 sqrt(2/pi) sqrt(N) (k s / phi) (1 - 2 gamma / phi^2). Pass the loss that
/// the recycling model uses (raw or effective) via p.gamma.
inline double analytic_snr_recycled(const InterferometerParams& p,
                                    double photons) {
  detail::require(p.phi != 0.0, "analytic_snr_recycled: phi = 0");
  detail::require(detail::is_finite(photons) && photons >= 0.0,
                  "analytic_snr_recycled: photons must be nonnegative");
  const double bracket = 1.0 - 2.0 * p.gamma / (p.phi * p.phi);
  return 4.0 * std::sqrt(2.0 / M_PI) * std::sqrt(photons) * p.k_sigma /
         p.phi * bracket;
}

namespace detail {

// Per-cell cumulative intensity for inverse-CDF position sampling; the cell
// masses use the same trapezoid weights as power(), so the sampled measure
// matches the quadrature exactly.
struct IntensityCdf {
  std::vector<double> cum;  // cum[i] = mass of cells [0..i)
  std::vector<double> dens;  // |amp|^2 at nodes
  const Grid* grid;
  double total = 0.0;

  explicit IntensityCdf(const TransverseField& f) : grid(&f.grid) {
    const int n = f.grid.n_points;
    dens.resize(n);
    for (int i = 0; i < n; ++i) dens[i] = std::norm(f.amp[i]);
    cum.resize(n);
    cum[0] = 0.0;
    const double h = f.grid.spacing();
    KahanSum acc;
    for (int i = 0; i + 1 < n; ++i) {
      acc.add(0.5 * h * (dens[i] + dens[i + 1]));
      cum[i + 1] = acc.total();
    }
    total = cum[n - 1];
  }

  // Invert u in [0,1): find x with CDF(x) = u * total.
  double sample(double u) const {
    const double target = u * total;
    const int n = grid->n_points;
    int lo = 0, hi = n - 1;
    while (hi - lo > 1) {
      const int mid = (lo + hi) / 2;
      (cum[mid] <= target ? lo : hi) = mid;
    }
    const double h = grid->spacing();
    const double m = (target - cum[lo]) / h;  // mass/h inside the cell
    const double f0 = dens[lo];
    const double d = dens[lo + 1] - f0;
    // Solve (d/2) t^2 + f0 t = m for t in [0,1] (linear density in the cell).
    double t;
    const double disc = f0 * f0 + 2.0 * d * m;
    if (std::abs(d) > 1e-300 && disc > 0.0) {
      t = (std::sqrt(disc) - f0) / d;
    } else {
      t = f0 > 0.0 ? m / f0 : 0.5;
    }
    if (t < 0.0) t = 0.0;
    if (t > 1.0) t = 1.0;
    return grid->x(lo) + t * h;
  }
};

}  // namespace detail

/// Photon-counting Monte Carlo of the split measurement. Per trial the
/// photon count is Poisson with mean power(f); photon positions follow the
/// normalized intensity via inverse-CDF sampling. Above 1e5 expected
/// photons per trial the per-photon loop is replaced by an exact binomial
/// draw of the x > 0 count (the split statistic depends on each photon only
/// through its side), keeping the distribution identical. Deterministic for
/// a fixed seed, independent of any execution schedule: trial i uses an RNG
/// seeded with splitmix64(seed ^ i).
inline DetectionResult monte_carlo_detect(const TransverseField& f,
                                          long long trials,
                                          std::uint64_t seed) {
  detail::require(trials >= 2, "monte_carlo_detect: need at least 2 trials");
  const double lambda = power(f);
  detail::require(lambda > 0.0, "monte_carlo_detect: zero-power field");

  const detail::IntensityCdf cdf(f);
  // P(x > 0) consistent with split_signal's straddle-cell convention.
  const double q = 0.5 * (1.0 + split_signal(f) / lambda);
  const bool per_photon = lambda <= 1e5;

  double mean_s = 0.0, m2_s = 0.0, mean_n = 0.0;
  for (long long trial = 0; trial < trials; ++trial) {
    std::mt19937_64 rng(detail::splitmix64(seed ^ static_cast<std::uint64_t>(trial)));
    std::poisson_distribution<long long> count(lambda);
    const long long n = count(rng);
    long long right = 0;
    if (per_photon) {
      std::uniform_real_distribution<double> uniform(0.0, 1.0);
      for (long long j = 0; j < n; ++j) {
        if (cdf.sample(uniform(rng)) > 0.0) ++right;
      }
    } else {
      std::binomial_distribution<long long> side(n, q);
      right = side(rng);
    }
    const double s = static_cast<double>(2 * right - n);
    // Welford running mean/variance.
    const double k = static_cast<double>(trial + 1);
    const double delta = s - mean_s;
    mean_s += delta / k;
    m2_s += delta * (s - mean_s);
    mean_n += (static_cast<double>(n) - mean_n) / k;
  }

  DetectionResult r;
  r.signal = mean_s;
  r.n_detected = mean_n;
  r.mode = DetectionMode::monte_carlo;
  const double var = m2_s / static_cast<double>(trials - 1);
  r.snr = var > 0.0 ? mean_s / std::sqrt(var) : 0.0;
  r.mc = McMeta{trials, seed, var};
  return r;
}

struct ResourceCount {
  double interactions = 0.0;  // sample interactions consumed, N / p
  double mean_passes = 0.0;   // mean traversals per detected photon, 1 / p
};

/// Resource accounting for postselection probability p: every detected
/// photon interacted with the sample 1/p times on average.
inline ResourceCount resource_count(double photons, double postselect_p) {
  detail::require(detail::is_finite(photons) && photons >= 0.0,
                  "resource_count: photons must be nonnegative");
  detail::require(detail::is_finite(postselect_p) && postselect_p > 0.0 &&
                      postselect_p <= 1.0,
                  "resource_count: postselection probability must be in (0,1]");
  return ResourceCount{photons / postselect_p, 1.0 / postselect_p};
}

}  // namespace wvr
