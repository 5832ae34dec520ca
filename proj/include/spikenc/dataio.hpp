#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spikenc/core.hpp"

namespace spikenc {

// ---------------------------------------------------------------------------
// CSV ingestion

struct CsvSchema {
  std::vector<std::string> sensor_columns = {"acc_x",  "acc_y",  "acc_z",
                                             "gyro_x", "gyro_y", "gyro_z",
                                             "hbc"};
  std::string label_column = "label";
  std::string user_column = "user";
  std::vector<std::string> vocabulary = default_vocabulary();

  static std::vector<std::string> default_vocabulary();
};

// One time-ordered sensor reading.
struct SessionRecord {
  std::vector<double> values;
  std::size_t label = 0;
  std::string user;
};

std::vector<SessionRecord> load_csv(const std::filesystem::path& path,
                                    const CsvSchema& schema = {});
std::vector<SessionRecord> parse_csv(std::istream& in,
                                     const CsvSchema& schema = {});

// ---------------------------------------------------------------------------
// Normalization

struct NormStats {
  std::vector<double> min;
  std::vector<double> max;
  std::vector<std::size_t> degenerate;  // channels with max == min

  double apply(std::size_t channel, double v) const;
};

// Per-channel min/max over the training split.
NormStats fit_normalization(std::span<const SessionRecord> train);

// In place; values outside the training range are clamped, degenerate
// channels map to 0.5.
void apply_normalization(std::span<SessionRecord> records,
                         const NormStats& stats);

// Fits on `train`, then transforms both splits.
NormStats normalize(std::span<SessionRecord> train,
                    std::span<SessionRecord> test = {});

// ---------------------------------------------------------------------------
// Windowing

struct Example {
  Signal signal;
  std::size_t label = 0;
  std::size_t fold = 0;  // leave-one-user-out fold id
};

struct WindowedDataset {
  std::vector<Example> examples;
  std::vector<std::string> class_names;
  std::vector<std::string> users;  // fold id -> user

  std::size_t num_classes() const { return class_names.size(); }
  std::size_t num_folds() const { return users.size(); }
};

struct WindowSpec {
  double sample_rate_hz = 20.0;
  double seconds = 2.0;
  double stride_seconds = 2.0;
};

// Windows never span two users. Windows whose rows carry more than one
// label are dropped.
WindowedDataset window(std::span<const SessionRecord> records,
                       const WindowSpec& spec,
                       std::vector<std::string> class_names = {});

// Split by fold: examples of `test_fold` go to the second set.
std::pair<WindowedDataset, WindowedDataset> split_leave_one_out(
    const WindowedDataset& data, std::size_t test_fold);

// ---------------------------------------------------------------------------
// Resampling

Signal interpolate_linear(const Signal& signal, std::size_t factor);

// ---------------------------------------------------------------------------
// Synthetic data

struct SynthSpec {
  std::size_t classes = 3;
  std::size_t samples_per_class = 100;
  std::size_t channels = 7;
  std::size_t users = 5;
  double sample_rate_hz = 20.0;
  double seconds = 2.0;
  // Minimum pairwise L2 distance between class prototype offset vectors.
  double margin = 0.15;
  double noise_std = 0.002;
  std::uint64_t seed = 1;
};

// Per-class prototypes: each channel is a sinusoid around a class-specific
// offset near 0.5, with class-specific frequency and amplitude. Samples
// jitter phase, amplitude and frequency and add white noise.
WindowedDataset synth_dataset(const SynthSpec& spec);

// Prototype offsets (classes x channels) used by synth_dataset.
std::vector<std::vector<double>> synth_class_offsets(const SynthSpec& spec);

// ---------------------------------------------------------------------------
// SPK1 spike files

inline constexpr char kSpikeMagic[4] = {'S', 'P', 'K', '1'};
inline constexpr std::uint16_t kSpikeFormatVersion = 1;

nlohmann::json to_json(const EncodingConfig& cfg);
EncodingConfig encoding_config_from_json(const nlohmann::json& j);

struct SpikeFileMeta {
  std::optional<EncodingConfig> config;
  std::optional<std::size_t> label;
  std::size_t window_steps = 1;
  nlohmann::json extra = nlohmann::json::object();
};

std::vector<std::uint8_t> serialize_spikes(const SpikeTensor& tensor);
SpikeTensor deserialize_spikes(std::span<const std::uint8_t> bytes,
                               std::size_t window_steps = 1);

// Writes <path> and the sidecar <path with .json extension>, both atomically.
void write_spikes(const SpikeTensor& tensor, const SpikeFileMeta& meta,
                  const std::filesystem::path& path);
// The sidecar is optional on read.
std::pair<SpikeTensor, SpikeFileMeta> read_spikes(
    const std::filesystem::path& path);

std::filesystem::path sidecar_path(const std::filesystem::path& path);

// Temp file + rename.
void write_file_atomic(const std::filesystem::path& path,
                       std::span<const std::uint8_t> bytes);
void write_file_atomic(const std::filesystem::path& path,
                       const std::string& text);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

}  // namespace spikenc
