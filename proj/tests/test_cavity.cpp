#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <random>

#include "wvr/cavity.hpp"
#include "wvr/detection.hpp"

// Cavity algebra. Oracles: the lossless Fabry-Perot closed forms are
// checked against an explicit 10^4-term geometric series and the exact
// lossless energy balance; the recycled steady state is checked against
// brute-force round-trip accumulation with quadrature port powers.

using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Geometric-series oracle: sum (r1 r2 e^{i theta})^n term by term.
wvr::complexd series_gain(const wvr::CavitySpec& c, int terms) {
  wvr::detail::KahanComplexSum acc;
  const wvr::complexd loop =
      c.r1 * c.r2 * wvr::complexd(std::cos(c.theta), std::sin(c.theta));
  wvr::complexd term(1.0, 0.0);
  for (int n = 0; n < terms; ++n) {
    acc.add(c.t1 * term);
    term *= loop;
  }
  return acc.total();
}

wvr::complexd series_reflection(const wvr::CavitySpec& c, int terms) {
  const wvr::complexd phase(std::cos(c.theta), std::sin(c.theta));
  return -c.r1 + c.t1 * c.r2 * phase * series_gain(c, terms);
}

}  // namespace

TEST_CASE("resonant cavity gain is 1/t for matched mirrors", "[cavity]") {
  // Identical lossless mirrors on resonance: gain = t / (1 - r^2) = 1/t,
  // so the circulating intensity is 1/T.
  for (double T : {0.01, 0.04, 0.25}) {
    const double r = std::sqrt(1.0 - T);
    const auto c = wvr::CavitySpec::lossless(r, r, 0.0);
    const auto gain = wvr::fp_cavity_gain(c);
    REQUIRE_THAT(gain.real(), WithinRel(1.0 / std::sqrt(T), 1e-12));
    REQUIRE_THAT(gain.imag(), WithinAbs(0.0, 1e-15));
    REQUIRE_THAT(std::norm(gain), WithinRel(1.0 / T, 1e-12));
    // Impedance-matched: nothing comes back.
    REQUIRE_THAT(std::abs(wvr::fp_reflection(c)), WithinAbs(0.0, 1e-14));
  }
}

TEST_CASE("anti-resonant gain frozen value", "[cavity]") {
  // theta = pi, r1 = r2 = 0.9: gain = t / (1 + r^2) = sqrt(0.19) / 1.81.
  const auto c = wvr::CavitySpec::lossless(0.9, 0.9, M_PI);
  REQUIRE_THAT(std::abs(wvr::fp_cavity_gain(c)),
               WithinRel(0.24082314605197091, 1e-12));
}

TEST_CASE("closed forms match the geometric series", "[cavity]") {
  // 100 seeded (r1, r2, theta) triples with |r1 r2| <= 0.99; 10^4 series
  // terms leave a truncation tail below 0.99^1e4 ~ 2e-44.
  std::mt19937 rng(20240517u);
  std::uniform_real_distribution<double> ur(0.0, 0.99);
  std::uniform_real_distribution<double> uth(-M_PI, M_PI);
  for (int trial = 0; trial < 100; ++trial) {
    const double r1 = ur(rng);
    const double r2 = ur(rng);
    const double theta = uth(rng);
    const auto c = wvr::CavitySpec::lossless(r1, r2, theta);
    const auto gain = wvr::fp_cavity_gain(c);
    const auto refl = wvr::fp_reflection(c);
    REQUIRE_THAT(std::abs(gain - series_gain(c, 10000)),
                 WithinAbs(0.0, 1e-12 * std::abs(gain) + 1e-15));
    REQUIRE_THAT(std::abs(refl - series_reflection(c, 10000)),
                 WithinAbs(0.0, 1e-12));
    // Lossless energy balance at any detuning: |E_r|^2 + T2 |E_cav|^2 = 1.
    const double residual =
        std::abs(std::norm(refl) + c.t2 * c.t2 * std::norm(gain) - 1.0);
    REQUIRE(residual <= 1e-10);
  }
}

TEST_CASE("mirror decomposition and guards", "[cavity]") {
  const auto c = wvr::CavitySpec::lossless(0.6, 0.8, 0.25);
  REQUIRE_THAT(c.r1 * c.r1 + c.t1 * c.t1, WithinRel(1.0, 1e-15));
  REQUIRE_THAT(c.r2 * c.r2 + c.t2 * c.t2, WithinRel(1.0, 1e-15));
  REQUIRE_THROWS(wvr::CavitySpec::lossless(1.2, 0.5, 0.0));
  REQUIRE_THROWS(wvr::CavitySpec::lossless(-0.1, 0.5, 0.0));
  // r1 = r2 = 1 on resonance: the loop sum diverges.
  REQUIRE_THROWS_WITH(wvr::fp_cavity_gain(wvr::CavitySpec::lossless(1.0, 1.0, 0.0)),
                      Catch::Matchers::ContainsSubstring("|r1*r2|"));
}

TEST_CASE("impedance matching", "[cavity]") {
  REQUIRE_THAT(wvr::impedance_match(0.01, 0.9975),
               WithinRel(0.99374292450311313, 1e-14));
  // Degenerate lossless limit P+ = 1: r = sqrt(1 - gamma).
  REQUIRE_THAT(wvr::impedance_match(0.04, 1.0), WithinRel(std::sqrt(0.96), 1e-15));
  REQUIRE(wvr::impedance_match(0.0, 1.0) == 1.0);
  REQUIRE_THROWS(wvr::impedance_match(1.0, 0.5));
  REQUIRE_THROWS(wvr::impedance_match(0.1, 0.0));
  REQUIRE_THROWS(wvr::impedance_match(0.1, 1.5));
  // matched_mirror_r ties it to the interferometer parameters:
  // phi = 0.1, k = 0, gamma = 0 gives r = sqrt(P+) = cos(0.05).
  const wvr::InterferometerParams p(0.1, 0.0, 0.0);
  REQUIRE_THAT(wvr::matched_mirror_r(p), WithinRel(0.99875026039496625, 1e-14));
}

TEST_CASE("open cavity reduces to the bare dark port", "[cavity]") {
  // mirror_r = 0: one traversal, detector field = sqrt(1-gamma) times the
  // dark-port projection of the input Gaussian.
  wvr::RecycledSetup s;
  s.params = wvr::InterferometerParams(0.2, 0.01, 0.05);
  s.mirror_r = 0.0;
  s.photons = 1e6;
  const auto out = wvr::recycled_steady_state(s);
  const double expect =
      0.95 * 1e6 * wvr::dark_port_probability(s.params);
  REQUIRE_THAT(wvr::power(out), WithinRel(expect, 1e-9));
  // Reflection toward the source is the bright-port amplitude itself.
  const double root = std::sqrt(0.95 * wvr::bright_port_probability(s.params));
  REQUIRE_THAT(wvr::recycled_reflection(s), WithinRel(root, 1e-14));
}

TEST_CASE("matched lossless recycling detects every photon", "[cavity]") {
  // At gamma = 0 and matched mirror the steady-state detected power equals
  // the full input power, independent of the kick.
  for (double ks : {0.0025, 0.005, 0.01}) {
    wvr::RecycledSetup s;
    s.params = wvr::InterferometerParams(0.05, ks, 0.0);
    s.mirror_r = wvr::matched_mirror_r(s.params);
    s.photons = 1e10;
    REQUIRE_THAT(wvr::power(wvr::recycled_steady_state(s)),
                 WithinRel(1e10, 1e-6));
    REQUIRE_THAT(wvr::recycled_reflection(s), WithinAbs(0.0, 1e-14));
  }
}

TEST_CASE("matched lossy recycling detected fraction", "[cavity]") {
  // Steady-state photon budget: N_det / N = (1-gamma) P- / (P- + gamma P+).
  const double gamma = 1e-4;
  wvr::RecycledSetup s;
  s.params = wvr::InterferometerParams(0.1, 0.005, gamma);
  s.mirror_r = wvr::matched_mirror_r(s.params);
  s.photons = 1.0;
  const double pm = wvr::dark_port_probability(s.params);
  const double pp = wvr::bright_port_probability(s.params);
  const double expect = (1.0 - gamma) * pm / (pm + gamma * pp);
  REQUIRE_THAT(wvr::power(wvr::recycled_steady_state(s)),
               WithinRel(expect, 1e-6));
  REQUIRE_THAT(wvr::recycled_reflection(s), WithinAbs(0.0, 1e-14));
}

TEST_CASE("effective loss model equals raw with shifted gamma", "[cavity]") {
  wvr::RecycledSetup eff;
  eff.params = wvr::InterferometerParams(0.1, 0.01, 1e-4);
  eff.mirror_r = 0.9;
  eff.photons = 100.0;
  eff.loss_model = wvr::LossModel::effective;

  wvr::RecycledSetup raw = eff;
  raw.params.gamma = wvr::effective_gamma(eff.params);
  raw.loss_model = wvr::LossModel::raw;

  REQUIRE(eff.loss_gamma() == raw.loss_gamma());
  const auto a = wvr::recycled_steady_state(eff);
  const auto b = wvr::recycled_steady_state(raw);
  for (int i = 0; i < a.grid.n_points; ++i) REQUIRE(a.amp[i] == b.amp[i]);
  REQUIRE(wvr::recycled_reflection(eff) == wvr::recycled_reflection(raw));
}

TEST_CASE("round-trip iteration matches the closed form", "[cavity]") {
  // Finesse ladder: matched lossless cavities with 1 - beta = (phi/2)^2
  // near 1e-2, 1e-3, 1e-4. The iteration derives the bright-port power
  // from quadrature, so this is a genuine cross-check.
  for (double phi : {0.2, 0.0632455532034, 0.02}) {
    wvr::RecycledSetup s;
    s.params = wvr::InterferometerParams(phi, phi / 20.0, 0.0);
    s.mirror_r = wvr::matched_mirror_r(s.params);
    s.photons = 1e6;
    const auto closed = wvr::recycled_steady_state(s);
    const auto iter = wvr::iterate_roundtrips(s, 1000000, 1e-15);
    REQUIRE_THAT(wvr::power(iter.field), WithinRel(wvr::power(closed), 1e-10));
    REQUIRE_THAT(wvr::split_signal(iter.field),
                 WithinRel(wvr::split_signal(closed), 1e-10));
    // The pass count scales like the cavity lifetime ~ 1/(1 - beta).
    REQUIRE(iter.passes >= static_cast<long>(0.5 / (phi * phi)));
  }
}

TEST_CASE("round-trip iteration reports non-convergence", "[cavity]") {
  wvr::RecycledSetup s;
  s.params = wvr::InterferometerParams(0.1, 0.005, 0.0);
  s.mirror_r = wvr::matched_mirror_r(s.params);
  s.photons = 1e6;
  try {
    wvr::iterate_roundtrips(s, 1, 1e-15);
    FAIL("expected convergence_error");
  } catch (const wvr::convergence_error& e) {
    REQUIRE_THAT(e.what(), Catch::Matchers::ContainsSubstring("1 passes"));
    // The partial sum after one pass is the bare transmitted dark field.
    REQUIRE(e.partial().passes == 1);
    const double expect = s.mirror_t() * s.mirror_t() * 1e6 *
                          wvr::dark_port_probability(s.params);
    REQUIRE_THAT(wvr::power(e.partial().field), WithinRel(expect, 1e-9));
  }
}

TEST_CASE("recycling requires the mode filter", "[cavity]") {
  wvr::RecycledSetup s;
  s.params = wvr::InterferometerParams(0.1, 0.005, 0.0, false);
  s.mirror_r = 0.5;
  s.photons = 1.0;
  REQUIRE_THROWS_WITH(wvr::recycled_steady_state(s),
                      Catch::Matchers::ContainsSubstring("filter"));
  REQUIRE_THROWS_WITH(wvr::iterate_roundtrips(s),
                      Catch::Matchers::ContainsSubstring("filter"));
  s.params.filter_enabled = true;
  s.mirror_r = 1.0;
  REQUIRE_THROWS_WITH(wvr::recycled_steady_state(s),
                      Catch::Matchers::ContainsSubstring("mirror_r"));
  s.mirror_r = 0.5;
  s.photons = -1.0;
  REQUIRE_THROWS(wvr::recycled_steady_state(s));
}

TEST_CASE("confocal relay geometry", "[cavity]") {
  wvr::ConfocalSpec c{2.0, 5.0, true};
  REQUIRE(wvr::beam_width(c, 0.0) == 2.0);
  // At the focal distance the width is sqrt(2) sigma0.
  REQUIRE_THAT(wvr::beam_width(c, 5.0), WithinRel(2.0 * std::sqrt(2.0), 1e-15));
  REQUIRE_THAT(wvr::beam_width(c, -5.0), WithinRel(2.0 * std::sqrt(2.0), 1e-15));
  REQUIRE_THROWS(wvr::beam_width(wvr::ConfocalSpec{0.0, 1.0, true}, 0.0));
  REQUIRE_THROWS(wvr::beam_width(wvr::ConfocalSpec{1.0, -1.0, true}, 0.0));
}

TEST_CASE("confocal pass correction", "[cavity]") {
  wvr::RecycledSetup flat;
  flat.params = wvr::InterferometerParams(0.1, 0.005, 0.0);
  flat.mirror_r = wvr::matched_mirror_r(flat.params);
  flat.photons = 1e6;
  const auto base = wvr::recycled_steady_state(flat);

  // With the Dove prism the two parity flips cancel and only the Gouy
  // phase survives: amplitudes are exactly negated, intensities bitwise
  // identical.
  wvr::RecycledSetup dove = flat;
  dove.confocal = wvr::ConfocalSpec{1.0, 3.0, true};
  const auto with_dove = wvr::recycled_steady_state(dove);
  for (int i = 0; i < base.grid.n_points; ++i) {
    REQUIRE(with_dove.amp[i] == -base.amp[i]);
  }
  REQUIRE(wvr::power(with_dove) == wvr::power(base));
  REQUIRE(wvr::split_signal(with_dove) == wvr::split_signal(base));

  // Without it the profile arrives inverted: the split signal changes
  // sign and nothing else.
  wvr::RecycledSetup bare = flat;
  bare.confocal = wvr::ConfocalSpec{1.0, 3.0, false};
  const auto inverted = wvr::recycled_steady_state(bare);
  REQUIRE_THAT(wvr::power(inverted), WithinRel(wvr::power(base), 1e-12));
  REQUIRE_THAT(wvr::split_signal(inverted),
               WithinRel(-wvr::split_signal(base), 1e-9));
}
