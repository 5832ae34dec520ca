#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spikenc/dataio.hpp"
#include "spikenc/metrics.hpp"
#include "spikenc/snn.hpp"

namespace spikenc {

// A named encoding setup, e.g. "binary10".
struct SchemeVariant {
  std::string name;
  EncodingConfig config;
};

// Accepts the scheme names plus "binaryN" (N bits). `base` supplies every
// parameter the name does not fix.
std::optional<SchemeVariant> parse_variant(const std::string& name,
                                           const EncodingConfig& base = {});

// rate-uniform, rate-normal, rate-beta, ttfs-linear, ttfs-log, binary6,
// binary10, delta.
std::vector<SchemeVariant> standard_variants(const EncodingConfig& base = {});

// Neuron and trainer settings for one scheme.
struct ModelSetup {
  std::vector<std::size_t> hidden = {256, 64};
  CubaParams params;
  double weight_gain = 1.0;
  double dropout_p = 0.1;
  TrainConfig train;
};

// Per scheme family; checked against the synthetic task.
ModelSetup default_model_setup(Scheme scheme);

// Encodes every window; rate schemes use a per-window seed derived from the
// config seed and the window index.
std::vector<SpikeSample> encode_dataset(const WindowedDataset& data,
                                        const EncodingConfig& cfg);

// Pooled SNR over all windows. Delta modulation is compared with the
// up-sampled original and seeded with each window's first sample.
double dataset_snr_db(const WindowedDataset& data, const EncodingConfig& cfg,
                      std::span<const SpikeSample> encoded);

struct EvalOptions {
  std::vector<double> noise_p = {0.001, 0.01, 0.1};
  std::size_t noise_seeds = 10;
  std::uint64_t noise_seed = 1000;
  std::size_t test_fold = 0;
  bool train_model = true;
  // Overrides applied on top of default_model_setup when set.
  std::optional<std::size_t> epochs;
  std::optional<double> learning_rate;
  std::optional<std::size_t> batch_size;
  std::optional<std::uint64_t> train_seed;
  std::optional<double> stop_accuracy;
  std::optional<std::vector<std::size_t>> hidden;
};

struct EvalRow {
  std::string scheme;
  std::vector<std::size_t> shape;  // trains, channels, timesteps
  double time_step_ms = 0.0;
  double afr_percent = 0.0;
  double snr_db = 0.0;
  std::optional<double> accuracy;
  std::vector<RobustnessRow> robustness;
  std::size_t best_epoch = 0;
};

using ProgressFn = std::function<void(const std::string&)>;

EvalRow evaluate_variant(const WindowedDataset& data,
                         const SchemeVariant& variant, const EvalOptions& opts,
                         const ProgressFn& progress = {});

nlohmann::json to_json(const EvalRow& row);
// Header plus one line per row; deployment columns carry "not measured".
std::string report_csv(const std::vector<EvalRow>& rows,
                       std::span<const double> noise_p);

}  // namespace spikenc
