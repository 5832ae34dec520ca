#include "spikenc/metrics.hpp"

#include <cmath>
#include <limits>

namespace spikenc {

double afr(const SpikeTensor& tensor) {
  if (tensor.size() == 0) return 0.0;
  std::size_t spikes = 0;
  for (auto v : tensor.raw()) spikes += v != 0 ? 1 : 0;
  return static_cast<double>(spikes) / static_cast<double>(tensor.size());
}

void SnrAccumulator::add(const Signal& original, const Signal& reconstructed) {
  if (original.channels() != reconstructed.channels() ||
      original.samples() != reconstructed.samples()) {
    throw Error(ErrorKind::Shape, "SNR needs signals of equal shape");
  }
  const auto a = original.values();
  const auto b = reconstructed.values();
  for (std::size_t i = 0; i < a.size(); ++i) {
    signal_power += a[i] * a[i];
    error_power += (a[i] - b[i]) * (a[i] - b[i]);
  }
  count += a.size();
}

double SnrAccumulator::db() const {
  if (error_power == 0.0) return std::numeric_limits<double>::infinity();
  // Both sums share the same count, so the means cancel.
  return 10.0 * std::log10(signal_power / error_power);
}

double snr_db(const Signal& original, const Signal& reconstructed) {
  SnrAccumulator acc;
  acc.add(original, reconstructed);
  return acc.db();
}

void NoiseSpec::validate() const {
  if (!(error_probability >= 0.0 && error_probability <= 1.0)) {
    throw Error(ErrorKind::Domain, "error probability must lie in [0,1]");
  }
}

NoiseMode default_noise_mode(Scheme scheme) {
  switch (scheme) {
    case Scheme::TtfsLog:
    case Scheme::DeltaMod:
      return NoiseMode::SignedPerturb;
    default:
      return NoiseMode::FlipBinary;
  }
}

SpikeTensor inject_noise(const SpikeTensor& tensor, const NoiseSpec& spec) {
  spec.validate();
  SpikeTensor out = tensor;
  if (spec.error_probability == 0.0) return out;
  // One flip variate per position, and signs from a separate stream, so the
  // error sets for a fixed seed are nested as p grows.
  Rng flips(spec.seed);
  Rng signs = flips.child(1);
  const bool is_signed = spec.mode == NoiseMode::SignedPerturb;
  for (auto& v : out.raw()) {
    const bool hit = flips.uniform() < spec.error_probability;
    const bool up = is_signed && signs.uniform() < 0.5;
    if (!hit) continue;
    if (v != 0) {
      v = 0;
    } else if (!is_signed) {
      v = 1;
    } else {
      v = up ? 1 : -1;
    }
  }
  return out;
}

std::vector<RobustnessRow> robustness_sweep(
    const CubaNetwork& model, std::span<const SpikeSample> test_set,
    std::span<const double> p_list, NoiseMode mode,
    std::span<const std::uint64_t> seeds) {
  if (test_set.empty()) {
    throw Error(ErrorKind::EmptyDataset, "robustness sweep on empty test set");
  }
  const double baseline = accuracy(model, test_set);
  const std::vector<std::uint64_t> default_seeds{0};
  const auto seed_list = seeds.empty() ? std::span(default_seeds) : seeds;

  std::vector<RobustnessRow> rows;
  for (const double p : p_list) {
    RobustnessRow row;
    row.p = p;
    if (p == 0.0) {
      row.accuracy = baseline;
    } else {
      // Pooled count over all seeds: the mean of per-seed accuracies.
      std::size_t correct = 0;
      for (const auto seed : seed_list) {
        for (std::size_t i = 0; i < test_set.size(); ++i) {
          const NoiseSpec spec{p, mix_seed(seed, i), mode};
          const auto noisy = inject_noise(test_set[i].spikes, spec);
          correct += classify(model, noisy).label == test_set[i].label ? 1 : 0;
        }
      }
      row.accuracy = static_cast<double>(correct) /
                     static_cast<double>(test_set.size() * seed_list.size());
    }
    row.accuracy_drop = baseline - row.accuracy;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace spikenc
