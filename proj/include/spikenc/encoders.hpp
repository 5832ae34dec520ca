#pragma once

#include "spikenc/core.hpp"

namespace spikenc {

enum class MappingKind { Uniform, Normal, CombinedBeta };

// Value-to-firing-probability mapping used by rate encoding.
struct RateMapping {
  MappingKind kind = MappingKind::Uniform;
  double mu = 0.5;
  double var = 0.2;
  double beta_shape = 0.75;

  static RateMapping uniform() { return {MappingKind::Uniform}; }
  static RateMapping normal(double mu = 0.5, double var = 0.2) {
    return {MappingKind::Normal, mu, var};
  }
  static RateMapping combined_beta(double shape = 0.75) {
    return {MappingKind::CombinedBeta, 0.5, 0.2, shape};
  }
  static RateMapping from_config(const EncodingConfig& cfg);
};

enum class TtfsCurve { Linear, Log };

double standard_normal_cdf(double x);

double map_value_to_rate(double v, const RateMapping& mapping);

SpikeTensor encode_rate(const Signal& signal, const RateMapping& mapping,
                        std::size_t steps_per_sample, Rng& rng);

// Index of the spike within a window of `steps` slots, or -1 for no spike.
// The sign of the spike is returned through `sign`.
int ttfs_spike_index(double v, TtfsCurve curve, std::size_t steps, int& sign);

SpikeTensor encode_ttfs(const Signal& signal, TtfsCurve curve,
                        std::size_t steps_per_sample);

SpikeTensor encode_binary(const Signal& signal, std::size_t n_bits);

SpikeTensor encode_delta(const Signal& signal, const ThresholdBanks& thresholds,
                         std::size_t interp_factor);

// Dispatches on cfg.scheme. Rate schemes draw from an Rng seeded with
// cfg.seed.
SpikeTensor encode(const Signal& signal, const EncodingConfig& cfg);

}  // namespace spikenc
