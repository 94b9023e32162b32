#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

// Transverse field core: a 1-D complex field sampled on a uniform symmetric
// grid, with trapezoidal quadrature for all integrals. Positions are measured
// in units of the Gaussian beam width sigma, so downstream physics depends on
// the beam only through the dimensionless products k*sigma and phi.

namespace wvr {

using complexd = std::complex<double>;

namespace detail {

// Compensated (Kahan-Neumaier) accumulator. Quadrature sums feed cavity
// round-trip amplitude factors whose errors get amplified by the finesse,
// so plain left-to-right summation noise (~n*eps) is not acceptable.
class KahanSum {
 public:
  void add(double value) {
    const double t = sum_ + value;
    if (std::abs(sum_) >= std::abs(value)) {
      comp_ += (sum_ - t) + value;
    } else {
      comp_ += (value - t) + sum_;
    }
    sum_ = t;
  }
  double total() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

class KahanComplexSum {
 public:
  void add(const complexd& value) {
    re_.add(value.real());
    im_.add(value.imag());
  }
  complexd total() const { return {re_.total(), im_.total()}; }

 private:
  KahanSum re_;
  KahanSum im_;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw std::invalid_argument(message);
}

inline bool is_finite(double value) { return std::isfinite(value); }

}  // namespace detail

/// Uniform grid on [-half_width, +half_width], in units of sigma.
struct Grid {
  double half_width = 10.0;
  int n_points = 4096;

  Grid() = default;
  Grid(double half_width_sigma, int points)
      : half_width(half_width_sigma), n_points(points) {
    detail::require(detail::is_finite(half_width) && half_width > 0.0,
                    "Grid: half_width must be positive and finite");
    detail::require(n_points >= 2, "Grid: n_points must be at least 2");
  }

  double spacing() const { return 2.0 * half_width / (n_points - 1); }

  // Coordinates are generated antisymmetrically so that x(n-1-i) == -x(i)
  // holds bitwise; parity operations and the x=0 split rely on this.
  double x(int i) const {
    return static_cast<double>(2 * i - (n_points - 1)) *
           (half_width / (n_points - 1));
  }

  bool operator==(const Grid&) const = default;
};

/// Complex field envelope on a grid. |amp|^2 integrates to `photons`
/// (photon flux per unit time); every operation keeps that bookkeeping
/// consistent with the quadrature.
struct TransverseField {
  Grid grid;
  std::vector<complexd> amp;
  double photons = 0.0;
};

/// Trapezoidal quadrature of |amp|^2 over the grid.
inline double power(const TransverseField& f) {
  detail::KahanSum acc;
  const int n = f.grid.n_points;
  for (int i = 0; i < n; ++i) {
    const double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
    acc.add(w * std::norm(f.amp[i]));
  }
  return acc.total() * f.grid.spacing();
}

/// <f|g> = integral of conj(f)*g; conjugate-symmetric, <f|f> real.
inline complexd inner_product(const TransverseField& f,
                              const TransverseField& g) {
  detail::require(f.grid == g.grid, "inner_product: grids do not match");
  detail::KahanComplexSum acc;
  const int n = f.grid.n_points;
  for (int i = 0; i < n; ++i) {
    const double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
    acc.add(w * std::conj(f.amp[i]) * g.amp[i]);
  }
  return acc.total() * f.grid.spacing();
}

/// Gaussian input beam: amp(x) ~ exp(-x^2 / 4 sigma^2), normalized so the
/// quadrature power equals `photons` exactly. Intensity has standard
/// deviation sigma. Rejects grids that clip the beam: the window must span
/// at least +-8 sigma and truncate less than 1e-12 of the total power.
inline TransverseField gaussian_field(double sigma, double photons,
                                      const Grid& grid = Grid()) {
  detail::require(detail::is_finite(sigma) && sigma > 0.0,
                  "gaussian_field: sigma must be positive and finite");
  detail::require(detail::is_finite(photons) && photons >= 0.0,
                  "gaussian_field: photons must be nonnegative and finite");
  if (grid.half_width < 8.0 * sigma) {
    throw std::invalid_argument(
        "gaussian_field: grid too narrow, spans " +
        std::to_string(grid.half_width / sigma) +
        " sigma but at least 8 sigma is required");
  }
  // Two-sided tail fraction of the intensity outside the window.
  const double tail = std::erfc(grid.half_width / (sigma * std::sqrt(2.0)));
  if (tail > 1e-12) {
    throw std::invalid_argument(
        "gaussian_field: tail truncation " + std::to_string(tail) +
        " exceeds 1e-12 of total power");
  }

  TransverseField f;
  f.grid = grid;
  f.amp.resize(grid.n_points);
  for (int i = 0; i < grid.n_points; ++i) {
    const double x = grid.x(i);
    f.amp[i] = std::exp(-x * x / (4.0 * sigma * sigma));
  }
  f.photons = 1.0;  // placeholder so power() sees the raw profile
  const double raw = power(f);
  const double scale = photons > 0.0 ? std::sqrt(photons / raw) : 0.0;
  for (auto& a : f.amp) a *= scale;
  f.photons = photons;
  return f;
}

/// Multiply by the transverse phase ramp e^{i k x} (momentum kick k, in
/// units of 1/sigma). Pure phase: power is unchanged.
inline TransverseField apply_momentum_kick(const TransverseField& f,
                                           double k) {
  detail::require(detail::is_finite(k),
                  "apply_momentum_kick: k must be finite");
  TransverseField out = f;
  for (int i = 0; i < f.grid.n_points; ++i) {
    const double kx = k * f.grid.x(i);
    out.amp[i] = f.amp[i] * complexd(std::cos(kx), std::sin(kx));
  }
  return out;
}

/// amp(x) -> amp(-x). Exact sample permutation on the symmetric grid, so
/// applying it twice is the identity bitwise.
inline TransverseField parity_flip(const TransverseField& f) {
  TransverseField out = f;
  const int n = f.grid.n_points;
  for (int i = 0; i < n; ++i) out.amp[i] = f.amp[n - 1 - i];
  return out;
}

/// Intensity-weighted mean position <x>.
inline double first_moment(const TransverseField& f) {
  const double total = power(f);
  detail::require(total > 0.0, "first_moment: zero-power field");
  detail::KahanSum acc;
  const int n = f.grid.n_points;
  for (int i = 0; i < n; ++i) {
    const double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
    acc.add(w * f.grid.x(i) * std::norm(f.amp[i]));
  }
  return acc.total() * f.grid.spacing() / total;
}

/// Intensity-weighted second moment <x^2> about the origin.
inline double second_moment(const TransverseField& f) {
  const double total = power(f);
  detail::require(total > 0.0, "second_moment: zero-power field");
  detail::KahanSum acc;
  const int n = f.grid.n_points;
  for (int i = 0; i < n; ++i) {
    const double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
    const double x = f.grid.x(i);
    acc.add(w * x * x * std::norm(f.amp[i]));
  }
  return acc.total() * f.grid.spacing() / total;
}

/// Rescale a field by a complex amplitude factor.
inline TransverseField scale_field(const TransverseField& f, complexd c) {
  TransverseField out = f;
  for (auto& a : out.amp) a *= c;
  out.photons = f.photons * std::norm(c);
  return out;
}

}  // namespace wvr
