#include "doctest.h"

#include <cmath>

#include "oracles.hpp"
#include "spikenc/dataio.hpp"
#include "spikenc/decoders.hpp"
#include "spikenc/encoders.hpp"

using namespace spikenc;

namespace {

Signal single(std::vector<double> values, double rate = 20.0) {
  return Signal({std::move(values)}, rate);
}

SpikeTensor window_with(std::size_t n, std::vector<std::pair<std::size_t, int>> spikes) {
  SpikeTensor t(1, 1, n, 1.0, n);
  for (auto [i, s] : spikes) t.at(0, 0, i) = static_cast<std::int8_t>(s);
  return t;
}

}  // namespace

TEST_CASE("standard normal ppf matches a bisection oracle") {
  for (double p : {1e-9, 1e-6, 0.001, 0.02425, 0.1, 0.3, 0.5, 0.77, 0.97575,
                   0.999, 1 - 1e-6}) {
    // Bisection on the erf series.
    long double lo = -12, hi = 12;
    for (int i = 0; i < 200; ++i) {
      const long double mid = (lo + hi) / 2;
      (oracle::normal_cdf(mid, 0.0L, 1.0L) < p ? lo : hi) = mid;
    }
    CAPTURE(p);
    CHECK(std::abs(standard_normal_ppf(p) - static_cast<double>((lo + hi) / 2)) < 1e-8);
  }
  CHECK(std::isinf(standard_normal_ppf(0.0)));
  CHECK(std::isinf(standard_normal_ppf(1.0)));
}

TEST_CASE("rate_ppf examples") {
  for (auto m : {RateMapping::uniform(), RateMapping::normal(),
                 RateMapping::combined_beta()}) {
    CHECK(rate_ppf(0.5, m) == doctest::Approx(0.5).epsilon(1e-12));
  }
  CHECK(std::abs(rate_ppf(0.20270, RateMapping::combined_beta()) - 0.25) < 1e-4);
  CHECK(std::abs(rate_ppf(0.86819, RateMapping::normal()) - 1.0) < 1e-3);
  CHECK(rate_ppf(0.0, RateMapping::normal()) == 0.0);
  CHECK(rate_ppf(1.0, RateMapping::normal()) == 1.0);
  CHECK_THROWS_AS(rate_ppf(1.5, RateMapping::uniform()), Error);
  CHECK_THROWS_AS(rate_ppf(-0.1, RateMapping::combined_beta()), Error);
}

TEST_CASE("rate_ppf inverts map_value_to_rate on a grid") {
  for (auto m : {RateMapping::uniform(), RateMapping::normal(),
                 RateMapping::combined_beta()}) {
    for (int i = 0; i <= 1000; ++i) {
      const double v = i / 1000.0;
      REQUIRE(std::abs(rate_ppf(map_value_to_rate(v, m), m) - v) < 1e-4);
    }
  }
}

TEST_CASE("decode_rate examples") {
  SpikeTensor full(1, 1, 50, 1.0, 50);
  for (auto& v : full.raw()) v = 1;
  CHECK(decode_rate(full, RateMapping::uniform(), 50, 20.0).at(0, 0) == 1.0);

  SpikeTensor half(1, 1, 50, 1.0, 50);
  for (std::size_t i = 0; i < 25; ++i) half.at(0, 0, 2 * i) = 1;
  CHECK(decode_rate(half, RateMapping::uniform(), 50, 20.0).at(0, 0) == 0.5);

  // 79730 of 1e5 slots fire -> rate 0.79730 -> ~0.75 under combined beta.
  SpikeTensor beta(1, 1, 100000, 1.0, 100000);
  for (std::size_t i = 0; i < 79730; ++i) beta.at(0, 0, i) = 1;
  CHECK(std::abs(decode_rate(beta, RateMapping::combined_beta(), 100000, 20.0).at(0, 0) -
                 0.75) < 1e-4);

  CHECK_THROWS_AS(decode_rate(full, RateMapping::uniform(), 40, 20.0), Error);
}

TEST_CASE("decode_rate under the normal mapping stays finite at rates 0 and 1") {
  SpikeTensor none(1, 1, 50, 1.0, 50);
  const double v = decode_rate(none, RateMapping::normal(), 50, 20.0).at(0, 0);
  CHECK(std::isfinite(v));
  CHECK(v == 0.0);  // the clamped tail still lies below 0
}

TEST_CASE("decode_ttfs examples") {
  CHECK(decode_ttfs(window_with(50, {{25, 1}}), TtfsCurve::Linear, 50, 20.0).at(0, 0) ==
        doctest::Approx(0.5));
  CHECK(decode_ttfs(window_with(50, {{0, 1}}), TtfsCurve::Log, 50, 20.0).at(0, 0) ==
        doctest::Approx(1.0));
  // 0.5 - 0.5 * 10^-0.3 = 0.2494063831863638...
  CHECK(std::abs(decode_ttfs(window_with(50, {{6, -1}}), TtfsCurve::Log, 50, 20.0).at(0, 0) -
                 0.24940638318636385) < 1e-12);
  CHECK(decode_ttfs(window_with(50, {}), TtfsCurve::Log, 50, 20.0).at(0, 0) == 0.5);
  CHECK(decode_ttfs(window_with(50, {}), TtfsCurve::Linear, 50, 20.0).at(0, 0) == 0.0);
}

TEST_CASE("decode_ttfs rejects windows with two spikes") {
  try {
    decode_ttfs(window_with(50, {{3, 1}, {9, 1}}), TtfsCurve::Linear, 50, 20.0);
    FAIL("expected MultipleSpikesInWindow");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MultipleSpikesInWindow);
  }
}

TEST_CASE("ttfs linear round trip within 1/N on a 1e4 grid") {
  std::vector<double> grid;
  for (int i = 1; i <= 10000; ++i) grid.push_back(i / 10000.0);
  const auto sig = single(grid);
  const auto back = decode_ttfs(encode_ttfs(sig, TtfsCurve::Linear, 50),
                                TtfsCurve::Linear, 50, 20.0);
  double worst = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    worst = std::max(worst, std::abs(back.at(0, i) - grid[i]));
  }
  CHECK(worst <= 1.0 / 50 + 1e-12);  // exact bound is < 1/N; allow for rounding
}

TEST_CASE("ttfs log round trip keeps sign and approaches the value") {
  for (double v : {0.0, 0.1, 0.3, 0.45, 0.55, 0.7, 0.9, 1.0}) {
    const auto back =
        decode_ttfs(encode_ttfs(single({v}), TtfsCurve::Log, 50), TtfsCurve::Log, 50, 20.0);
    const double r = back.at(0, 0);
    CAPTURE(v);
    CHECK((r - 0.5) * (v - 0.5) >= 0.0);
    // One slot of log quantization: factor 10^(1/20) on |v - 0.5|.
    CHECK(std::abs(r - 0.5) <= std::abs(v - 0.5) * std::pow(10.0, 1.0 / 20.0) + 1e-12);
    CHECK(std::abs(r - 0.5) >= std::abs(v - 0.5) - 1e-12);
  }
}

TEST_CASE("decode_binary examples") {
  SpikeTensor t(6, 1, 1, 50.0, 1);
  for (auto& v : t.raw()) v = 1;
  CHECK(decode_binary(t, 20.0).at(0, 0) == 0.984375);
  for (auto& v : t.raw()) v = 0;
  CHECK(decode_binary(t, 20.0).at(0, 0) == 0.0);
  const int bits[] = {1, 0, 1, 1, 1, 1};
  for (std::size_t b = 0; b < 6; ++b) t.at(b, 0, 0) = static_cast<std::int8_t>(bits[b]);
  CHECK(decode_binary(t, 20.0).at(0, 0) == 0.734375);
  CHECK(decode_binary(encode_binary(single({0.75}), 6), 20.0).at(0, 0) == 0.734375);
}

TEST_CASE("decode_delta examples") {
  const auto banks = ThresholdBanks::recgym_default();
  SpikeTensor silent(5, 1, 10, 10.0, 1);
  const double init03[] = {0.3};
  const auto flat = decode_delta(silent, banks, init03, 100.0);
  CHECK(flat.samples() == 11);
  for (std::size_t i = 0; i < flat.samples(); ++i) CHECK(flat.at(0, i) == 0.3);

  SpikeTensor one(5, 1, 1, 10.0, 1);
  for (std::size_t i = 0; i < 3; ++i) one.at(i, 0, 0) = 1;
  const double init05[] = {0.5};
  CHECK(decode_delta(one, banks, init05, 100.0).at(0, 1) == doctest::Approx(0.5016));

  const auto mid = decode_delta(one, banks, init05, 100.0, DeltaStep::Midpoint);
  CHECK(mid.at(0, 1) == doctest::Approx(0.5 + 0.5 * (0.0016 + 0.0032)));
}

TEST_CASE("decode_delta rejects mixed signs in one step") {
  SpikeTensor t(5, 1, 1, 10.0, 1);
  t.at(0, 0, 0) = 1;
  t.at(1, 0, 0) = -1;
  const double init[] = {0.5};
  try {
    decode_delta(t, ThresholdBanks::recgym_default(), init, 100.0);
    FAIL("expected InconsistentSpikes");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InconsistentSpikes);
  }
}

TEST_CASE("decode_delta clamps to [0,1]") {
  SpikeTensor t(5, 1, 4, 10.0, 1);
  for (std::size_t s = 0; s < 4; ++s) t.at(4, 0, s) = 1;
  const double init[] = {0.99};
  const auto r = decode_delta(t, ThresholdBanks::recgym_default(), init, 100.0);
  CHECK(r.at(0, 4) == 1.0);
}

TEST_CASE("delta ramp round trip tracks within the largest threshold per step") {
  // Slopes chosen inside the bank's range so every step has a firing channel.
  const auto banks = ThresholdBanks::single({0.0004, 0.0008, 0.0016, 0.0032, 0.0064});
  for (double slope : {0.0005, 0.001, 0.003, 0.005}) {
    std::vector<double> ramp;
    for (int i = 0; i < 100; ++i) ramp.push_back(0.2 + slope * i);
    const auto sig = single(ramp);
    const auto enc = encode_delta(sig, banks, 1);
    const double init[] = {ramp[0]};
    const auto dec = decode_delta(enc, banks, init, 20.0);
    for (std::size_t i = 1; i < ramp.size(); ++i) {
      const double true_step = ramp[i] - ramp[i - 1];
      const double est_step = dec.at(0, i) - dec.at(0, i - 1);
      REQUIRE(std::abs(true_step - est_step) <= 0.0064);
      REQUIRE(est_step >= 0.0);
    }
  }
}

TEST_CASE("delta decode of a monotone signal is monotone") {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> v(40);
    double x = 0.1;
    for (auto& s : v) {
      x = std::min(1.0, x + 0.01 * rng.uniform());
      s = x;
    }
    const auto sig = single(v);
    const auto banks = ThresholdBanks::recgym_default();
    const auto enc = encode_delta(sig, banks, 5);
    const double init[] = {v[0]};
    const auto dec = decode_delta(enc, banks, init, 100.0);
    for (std::size_t i = 1; i < dec.samples(); ++i) {
      REQUIRE(dec.at(0, i) >= dec.at(0, i - 1));
    }
  }
}

TEST_CASE("decode dispatch matches the individual decoders") {
  const auto sig = Signal({{0.2, 0.6, 0.9}, {0.4, 0.5, 0.1}}, 20.0);
  EncodingConfig cfg;
  cfg.scheme = Scheme::Binary;
  cfg.n_bits = 10;
  CHECK(decode(encode(sig, cfg), cfg, 20.0) == decode_binary(encode_binary(sig, 10), 20.0));
  cfg.scheme = Scheme::DeltaMod;
  const double init[] = {0.2, 0.4};
  const auto d = decode(encode(sig, cfg), cfg, 20.0, init);
  CHECK(d.samples() == interpolate_linear(sig, 5).samples());
  CHECK(d.sample_rate_hz() == 100.0);
}
