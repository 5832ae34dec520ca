#pragma once

#include "spikenc/core.hpp"
#include "spikenc/encoders.hpp"

namespace spikenc {

// Inverse standard normal CDF. Rational approximation refined by one
// Halley step; absolute error well below 1e-9 on (0, 1).
double standard_normal_ppf(double p);

double rate_ppf(double p, const RateMapping& mapping);

Signal decode_rate(const SpikeTensor& tensor, const RateMapping& mapping,
                   std::size_t steps_per_sample, double sample_rate_hz);

Signal decode_ttfs(const SpikeTensor& tensor, TtfsCurve curve,
                   std::size_t steps_per_sample, double sample_rate_hz);

Signal decode_binary(const SpikeTensor& tensor, double sample_rate_hz);

enum class DeltaStep {
  LargestThreshold,  // step by the largest fired threshold
  Midpoint,          // step by the midpoint to the next threshold up
};

// Output has timesteps + 1 samples at the up-sampled rate; sample 0 is
// `initial_values[channel]`.
Signal decode_delta(const SpikeTensor& tensor, const ThresholdBanks& thresholds,
                    std::span<const double> initial_values,
                    double sample_rate_hz,
                    DeltaStep rule = DeltaStep::LargestThreshold);

// Inverse of encode(); `sample_rate_hz` is the original signal's rate. For
// delta modulation the result is at the up-sampled rate and `initial_values`
// must be supplied.
Signal decode(const SpikeTensor& tensor, const EncodingConfig& cfg,
              double sample_rate_hz,
              std::span<const double> initial_values = {});

}  // namespace spikenc
