#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "spikenc/core.hpp"
#include "spikenc/snn.hpp"

namespace spikenc {

// Fraction of positions holding a spike of either sign.
double afr(const SpikeTensor& tensor);

// 10 log10(P_signal / P_err) with raw (not mean-removed) powers. +inf when
// the reconstruction is exact.
double snr_db(const Signal& original, const Signal& reconstructed);

// Power sums that can be pooled over many windows before taking the ratio.
struct SnrAccumulator {
  double signal_power = 0.0;
  double error_power = 0.0;
  std::size_t count = 0;

  void add(const Signal& original, const Signal& reconstructed);
  double db() const;
};

enum class NoiseMode {
  FlipBinary,     // 0 -> 1, nonzero -> 0
  SignedPerturb,  // 0 -> +1 or -1 with equal odds, nonzero -> 0
};

struct NoiseSpec {
  double error_probability = 0.0;
  std::uint64_t seed = 0;
  NoiseMode mode = NoiseMode::FlipBinary;

  void validate() const;
};

// Ternary schemes get SignedPerturb, pure {0,1} schemes FlipBinary.
NoiseMode default_noise_mode(Scheme scheme);

SpikeTensor inject_noise(const SpikeTensor& tensor, const NoiseSpec& spec);

struct RobustnessRow {
  double p = 0.0;
  double accuracy = 0.0;
  double accuracy_drop = 0.0;  // baseline accuracy minus accuracy
};

// Clean accuracy is the baseline. For each p the test set is perturbed once
// per seed and the accuracy averaged over seeds.
std::vector<RobustnessRow> robustness_sweep(const CubaNetwork& model,
                                            std::span<const SpikeSample> test_set,
                                            std::span<const double> p_list,
                                            NoiseMode mode,
                                            std::span<const std::uint64_t> seeds);

}  // namespace spikenc
