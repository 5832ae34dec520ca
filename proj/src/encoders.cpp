#include "spikenc/encoders.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "spikenc/dataio.hpp"

namespace spikenc {

namespace {

void require_unit(double v) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw Error(ErrorKind::Domain,
                "value " + std::to_string(v) + " outside [0,1]");
  }
}

double sample_interval_ms(const Signal& signal) {
  return 1000.0 / signal.sample_rate_hz();
}

}  // namespace

RateMapping RateMapping::from_config(const EncodingConfig& cfg) {
  switch (cfg.scheme) {
    case Scheme::RateNormal: return normal(cfg.normal_mu, cfg.normal_var);
    case Scheme::RateBeta: return combined_beta(cfg.beta_shape);
    default: return uniform();
  }
}

double standard_normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double map_value_to_rate(double v, const RateMapping& mapping) {
  require_unit(v);
  switch (mapping.kind) {
    case MappingKind::Uniform:
      return v;
    case MappingKind::Normal:
      return standard_normal_cdf((v - mapping.mu) / std::sqrt(mapping.var));
    case MappingKind::CombinedBeta:
      // Beta(1, b) on the lower half and Beta(b, 1) on the upper half, each
      // squeezed into its half of the probability range.
      if (v < 0.5) {
        return 0.5 * (1.0 - std::pow(1.0 - 2.0 * v, mapping.beta_shape));
      }
      return 0.5 + 0.5 * std::pow(2.0 * v - 1.0, mapping.beta_shape);
  }
  return v;
}

SpikeTensor encode_rate(const Signal& signal, const RateMapping& mapping,
                        std::size_t steps_per_sample, Rng& rng) {
  require_valid(signal);
  if (steps_per_sample == 0) {
    throw Error(ErrorKind::Domain, "steps_per_sample must be >= 1");
  }
  const std::size_t n = steps_per_sample;
  SpikeTensor out(1, signal.channels(), signal.samples() * n,
                  sample_interval_ms(signal) / static_cast<double>(n), n);
  for (std::size_t c = 0; c < signal.channels(); ++c) {
    for (std::size_t m = 0; m < signal.samples(); ++m) {
      const double p = map_value_to_rate(signal.at(c, m), mapping);
      for (std::size_t k = 0; k < n; ++k) {
        out.at(0, c, m * n + k) = rng.bernoulli(p) ? 1 : 0;
      }
    }
  }
  return out;
}

int ttfs_spike_index(double v, TtfsCurve curve, std::size_t steps, int& sign) {
  require_unit(v);
  const auto last = static_cast<double>(steps - 1);
  if (curve == TtfsCurve::Linear) {
    sign = 1;
    const double idx = std::floor((1.0 - v) * static_cast<double>(steps));
    return static_cast<int>(std::clamp(idx, 0.0, last));
  }
  const double diff = 2.0 * (v - 0.5);
  if (diff == 0.0) {
    sign = 0;
    return -1;
  }
  sign = diff > 0.0 ? 1 : -1;
  const double idx = std::floor(-20.0 * std::log10(std::abs(diff)));
  return static_cast<int>(std::clamp(idx, 0.0, last));
}

SpikeTensor encode_ttfs(const Signal& signal, TtfsCurve curve,
                        std::size_t steps_per_sample) {
  require_valid(signal);
  if (steps_per_sample < 2) {
    throw Error(ErrorKind::Domain, "TTFS needs at least 2 steps per sample");
  }
  const std::size_t n = steps_per_sample;
  SpikeTensor out(1, signal.channels(), signal.samples() * n,
                  sample_interval_ms(signal) / static_cast<double>(n), n);
  for (std::size_t c = 0; c < signal.channels(); ++c) {
    for (std::size_t m = 0; m < signal.samples(); ++m) {
      int sign = 0;
      const int idx = ttfs_spike_index(signal.at(c, m), curve, n, sign);
      if (idx >= 0) {
        out.at(0, c, m * n + static_cast<std::size_t>(idx)) =
            static_cast<std::int8_t>(sign);
      }
    }
  }
  return out;
}

SpikeTensor encode_binary(const Signal& signal, std::size_t n_bits) {
  require_valid(signal);
  if (n_bits == 0 || n_bits > 16) {
    throw Error(ErrorKind::Domain, "n_bits must be in [1, 16]");
  }
  SpikeTensor out(n_bits, signal.channels(), signal.samples(),
                  sample_interval_ms(signal), 1);
  for (std::size_t c = 0; c < signal.channels(); ++c) {
    for (std::size_t m = 0; m < signal.samples(); ++m) {
      double residual = signal.at(c, m);
      double bit_value = 0.5;
      for (std::size_t bit = 0; bit < n_bits; ++bit) {
        // Strict comparison: an exact match does not set the bit.
        if (residual - bit_value > 0.0) {
          out.at(bit, c, m) = 1;
          residual -= bit_value;
        }
        bit_value *= 0.5;
      }
    }
  }
  return out;
}

SpikeTensor encode_delta(const Signal& signal, const ThresholdBanks& thresholds,
                         std::size_t interp_factor) {
  require_valid(signal);
  thresholds.validate();
  if (interp_factor == 0) {
    throw Error(ErrorKind::Domain, "interp_factor must be >= 1");
  }
  const Signal fine = interpolate_linear(signal, interp_factor);
  const std::size_t steps = fine.samples() > 0 ? fine.samples() - 1 : 0;
  SpikeTensor out(thresholds.trains(), fine.channels(), steps,
                  1000.0 / fine.sample_rate_hz(), 1);
  for (std::size_t c = 0; c < fine.channels(); ++c) {
    const auto& bank = thresholds.for_channel(c);
    for (std::size_t m = 0; m < steps; ++m) {
      const double diff = fine.at(c, m + 1) - fine.at(c, m);
      for (std::size_t i = 0; i < bank.size(); ++i) {
        if (diff > bank[i]) {
          out.at(i, c, m) = 1;
        } else if (diff < -bank[i]) {
          out.at(i, c, m) = -1;
        }
      }
    }
  }
  return out;
}

SpikeTensor encode(const Signal& signal, const EncodingConfig& cfg) {
  cfg.validate();
  switch (cfg.scheme) {
    case Scheme::RateUniform:
    case Scheme::RateNormal:
    case Scheme::RateBeta: {
      Rng rng(cfg.seed);
      return encode_rate(signal, RateMapping::from_config(cfg),
                         cfg.steps_per_sample, rng);
    }
    case Scheme::TtfsLinear:
      return encode_ttfs(signal, TtfsCurve::Linear, cfg.steps_per_sample);
    case Scheme::TtfsLog:
      return encode_ttfs(signal, TtfsCurve::Log, cfg.steps_per_sample);
    case Scheme::Binary:
      return encode_binary(signal, cfg.n_bits);
    case Scheme::DeltaMod:
      return encode_delta(signal, cfg.thresholds, cfg.interp_factor);
  }
  throw Error(ErrorKind::Domain, "unknown scheme");
}

}  // namespace spikenc
