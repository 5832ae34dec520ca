#include "spikenc/decoders.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace spikenc {

namespace {

// Bounds used when a window's empirical rate is exactly 0 or 1.
constexpr double kPpfClampLow = 1e-6;
constexpr double kPpfClampHigh = 1.0 - 1e-6;

}  // namespace

double standard_normal_ppf(double p) {
  if (p <= 0.0) return -std::numeric_limits<double>::infinity();
  if (p >= 1.0) return std::numeric_limits<double>::infinity();

  // Acklam's coefficients.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) *
        q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
          c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  const double e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - p;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(x * x / 2.0);
  return x - u / (1.0 + x * u / 2.0);
}

double rate_ppf(double p, const RateMapping& mapping) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw Error(ErrorKind::Domain,
                "probability " + std::to_string(p) + " outside [0,1]");
  }
  switch (mapping.kind) {
    case MappingKind::Uniform:
      return p;
    case MappingKind::Normal: {
      const double v =
          mapping.mu + std::sqrt(mapping.var) * standard_normal_ppf(p);
      return std::clamp(v, 0.0, 1.0);
    }
    case MappingKind::CombinedBeta: {
      const double inv = 1.0 / mapping.beta_shape;
      if (p < 0.5) return 0.5 * (1.0 - std::pow(1.0 - 2.0 * p, inv));
      return 0.5 * (1.0 + std::pow(2.0 * p - 1.0, inv));
    }
  }
  return p;
}

Signal decode_rate(const SpikeTensor& tensor, const RateMapping& mapping,
                   std::size_t steps_per_sample, double sample_rate_hz) {
  const std::size_t n = steps_per_sample;
  if (n == 0 || tensor.timesteps() % n != 0) {
    throw Error(ErrorKind::Shape,
                "timesteps not divisible by steps_per_sample");
  }
  if (tensor.trains() != 1) {
    throw Error(ErrorKind::Shape, "rate decoding expects a single train");
  }
  const std::size_t samples = tensor.timesteps() / n;
  Signal out(tensor.channels(), samples, sample_rate_hz);
  for (std::size_t c = 0; c < tensor.channels(); ++c) {
    for (std::size_t m = 0; m < samples; ++m) {
      std::size_t count = 0;
      for (std::size_t k = 0; k < n; ++k) {
        count += tensor.at(0, c, m * n + k) != 0 ? 1 : 0;
      }
      double rate = static_cast<double>(count) / static_cast<double>(n);
      if (mapping.kind == MappingKind::Normal) {
        rate = std::clamp(rate, kPpfClampLow, kPpfClampHigh);
      }
      out.at(c, m) = rate_ppf(rate, mapping);
    }
  }
  return out;
}

Signal decode_ttfs(const SpikeTensor& tensor, TtfsCurve curve,
                   std::size_t steps_per_sample, double sample_rate_hz) {
  const std::size_t n = steps_per_sample;
  if (n == 0 || tensor.timesteps() % n != 0 || tensor.trains() != 1) {
    throw Error(ErrorKind::Shape, "tensor shape does not match TTFS windows");
  }
  const std::size_t samples = tensor.timesteps() / n;
  Signal out(tensor.channels(), samples, sample_rate_hz);
  for (std::size_t c = 0; c < tensor.channels(); ++c) {
    for (std::size_t m = 0; m < samples; ++m) {
      int index = -1;
      int sign = 0;
      for (std::size_t k = 0; k < n; ++k) {
        const int s = tensor.at(0, c, m * n + k);
        if (s == 0) continue;
        if (index >= 0) {
          throw Error(ErrorKind::MultipleSpikesInWindow,
                      "channel " + std::to_string(c) + ", window " +
                          std::to_string(m) + " holds more than one spike");
        }
        index = static_cast<int>(k);
        sign = s;
      }
      double v;
      if (curve == TtfsCurve::Linear) {
        // A missing spike only happens after noise; read it as zero.
        v = index < 0 ? 0.0
                      : 1.0 - static_cast<double>(index) / static_cast<double>(n);
      } else {
        v = index < 0 ? 0.5
                      : 0.5 + sign * 0.5 * std::pow(10.0, -index / 20.0);
      }
      out.at(c, m) = v;
    }
  }
  return out;
}

Signal decode_binary(const SpikeTensor& tensor, double sample_rate_hz) {
  Signal out(tensor.channels(), tensor.timesteps(), sample_rate_hz);
  for (std::size_t c = 0; c < tensor.channels(); ++c) {
    for (std::size_t m = 0; m < tensor.timesteps(); ++m) {
      double v = 0.0;
      double weight = 0.5;
      for (std::size_t bit = 0; bit < tensor.trains(); ++bit) {
        v += tensor.at(bit, c, m) * weight;
        weight *= 0.5;
      }
      out.at(c, m) = v;
    }
  }
  return out;
}

Signal decode_delta(const SpikeTensor& tensor, const ThresholdBanks& thresholds,
                    std::span<const double> initial_values,
                    double sample_rate_hz, DeltaStep rule) {
  thresholds.validate();
  if (tensor.trains() != thresholds.trains()) {
    throw Error(ErrorKind::Shape, "train count does not match threshold count");
  }
  if (initial_values.size() != tensor.channels()) {
    throw Error(ErrorKind::Shape, "one initial value per channel required");
  }
  Signal out(tensor.channels(), tensor.timesteps() + 1, sample_rate_hz);
  for (std::size_t c = 0; c < tensor.channels(); ++c) {
    const auto& bank = thresholds.for_channel(c);
    double value = initial_values[c];
    out.at(c, 0) = value;
    for (std::size_t t = 0; t < tensor.timesteps(); ++t) {
      int sign = 0;
      int top = -1;
      for (std::size_t i = 0; i < bank.size(); ++i) {
        const int s = tensor.at(i, c, t);
        if (s == 0) continue;
        if (sign != 0 && s != sign) {
          throw Error(ErrorKind::InconsistentSpikes,
                      "mixed spike signs at channel " + std::to_string(c) +
                          ", step " + std::to_string(t));
        }
        sign = s;
        top = static_cast<int>(i);
      }
      if (top >= 0) {
        const auto k = static_cast<std::size_t>(top);
        double step = bank[k];
        // The top threshold has no upper neighbour and keeps its own value.
        if (rule == DeltaStep::Midpoint && k + 1 < bank.size()) {
          step = 0.5 * (bank[k] + bank[k + 1]);
        }
        value = std::clamp(value + sign * step, 0.0, 1.0);
      }
      out.at(c, t + 1) = value;
    }
  }
  return out;
}

Signal decode(const SpikeTensor& tensor, const EncodingConfig& cfg,
              double sample_rate_hz, std::span<const double> initial_values) {
  switch (cfg.scheme) {
    case Scheme::RateUniform:
    case Scheme::RateNormal:
    case Scheme::RateBeta:
      return decode_rate(tensor, RateMapping::from_config(cfg),
                         cfg.steps_per_sample, sample_rate_hz);
    case Scheme::TtfsLinear:
      return decode_ttfs(tensor, TtfsCurve::Linear, cfg.steps_per_sample,
                         sample_rate_hz);
    case Scheme::TtfsLog:
      return decode_ttfs(tensor, TtfsCurve::Log, cfg.steps_per_sample,
                         sample_rate_hz);
    case Scheme::Binary:
      return decode_binary(tensor, sample_rate_hz);
    case Scheme::DeltaMod:
      return decode_delta(tensor, cfg.thresholds, initial_values,
                          sample_rate_hz * static_cast<double>(cfg.interp_factor));
  }
  throw Error(ErrorKind::Domain, "unknown scheme");
}

}  // namespace spikenc
