#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spikenc/core.hpp"

namespace spikenc {

// Current-based leaky integrate-and-fire parameters. Decays are the
// fraction lost per time step.
struct CubaParams {
  double threshold = 1.0;
  double current_decay = 0.25;
  double voltage_decay = 0.1;

  void validate() const;
};

// Dense CUBA layer. Weights are stored input-major: weight(i, o) connects
// input i to neuron o.
struct DenseLayer {
  std::size_t inputs = 0;
  std::size_t outputs = 0;
  std::vector<double> weights;
  CubaParams params;

  double& weight(std::size_t in, std::size_t out) {
    return weights[in * outputs + out];
  }
  double weight(std::size_t in, std::size_t out) const {
    return weights[in * outputs + out];
  }
};

struct LayerState {
  std::vector<double> current;
  std::vector<double> voltage;

  explicit LayerState(std::size_t n = 0) : current(n, 0.0), voltage(n, 0.0) {}
};

// One time step:
//   u[t] = (1 - current_decay) u[t-1] + W s_in[t]
//   v[t] = (1 - voltage_decay) v[t-1] + u[t]
//   spike where v[t] >= threshold, and v is reset to 0 there.
// Writes 0/1 into `spikes_out`.
void cuba_step(const DenseLayer& layer, LayerState& state,
               std::span<const double> spikes_in, std::span<double> spikes_out);

struct CubaNetwork {
  std::vector<DenseLayer> layers;
  double dropout_p = 0.1;

  // sizes = {inputs, hidden..., classes}
  static CubaNetwork create(const std::vector<std::size_t>& sizes,
                            const CubaParams& params, std::uint64_t seed,
                            double weight_gain = 1.0);

  std::vector<std::size_t> layer_sizes() const;
  std::size_t inputs() const { return layers.front().inputs; }
  std::size_t classes() const { return layers.back().outputs; }
  void validate() const;
};

// Feature vector for time step t: index = train * channels + channel.
std::size_t feature_count(const SpikeTensor& tensor);

struct ForwardResult {
  std::size_t timesteps = 0;
  std::size_t classes = 0;
  std::vector<std::uint8_t> raster;  // timesteps x classes
  std::vector<double> rates;
};

ForwardResult forward(const CubaNetwork& net, const SpikeTensor& input);

struct Classification {
  std::size_t label = 0;
  bool no_spike = false;  // every output rate was zero
};

// Argmax with ties going to the lowest index.
Classification classify_rates(std::span<const double> rates);
Classification classify(const CubaNetwork& net, const SpikeTensor& input);

struct LossSpec {
  double true_rate = 0.9;
  double false_rate = 0.1;

  void validate() const;
};

// Mean squared error against the target vector.
double spike_rate_loss(std::span<const double> rates, std::size_t label,
                       const LossSpec& spec);

struct TrainConfig {
  std::size_t epochs = 100;
  double learning_rate = 1e-3;
  std::size_t batch_size = 32;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double surrogate_slope = 10.0;
  bool soft_mode = false;
  LossSpec loss;
  std::uint64_t seed = 0;
  // Stop early once held-out accuracy reaches this value (> 1 disables).
  double stop_accuracy = 2.0;

  void validate() const;
};

struct SpikeSample {
  SpikeTensor spikes;
  std::size_t label = 0;
};

struct EpochStats {
  std::size_t epoch = 0;
  double loss = 0.0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
};

struct TrainResult {
  CubaNetwork net;  // weights of the best held-out epoch
  std::vector<EpochStats> history;
  std::size_t best_epoch = 0;
  double best_test_accuracy = 0.0;
};

using EpochCallback = std::function<void(const EpochStats&)>;

// BPTT with a fast-sigmoid surrogate and ADAM. When `test` is empty the
// training split doubles as the selection set.
TrainResult train(const CubaNetwork& net, std::span<const SpikeSample> train_set,
                  std::span<const SpikeSample> test_set, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

double accuracy(const CubaNetwork& net, std::span<const SpikeSample> samples);

// Loss and weight gradients for one sample without dropout. Gradients are
// laid out like the layer weights. In soft mode spikes are replaced by a
// sigmoid of slope cfg.surrogate_slope and the gradient is exact.
struct Gradients {
  double loss = 0.0;
  std::vector<std::vector<double>> layers;
};
Gradients compute_gradients(const CubaNetwork& net, const SpikeSample& sample,
                            const TrainConfig& cfg);
double sample_loss(const CubaNetwork& net, const SpikeSample& sample,
                   const TrainConfig& cfg);

enum class GradCheckStatus { Ok, NonDifferentiable };

struct GradCheckResult {
  GradCheckStatus status = GradCheckStatus::Ok;
  double max_relative_error = 0.0;
  std::size_t checked = 0;
};

// Central differences with step 1e-5 on `samples` randomly chosen weights.
// Relative error is |a - n| / max(|a|, |n|, 1e-6).
GradCheckResult gradient_check(const CubaNetwork& net, const SpikeSample& sample,
                               const TrainConfig& cfg, std::size_t samples = 128,
                               std::uint64_t seed = 0);

// ---------------------------------------------------------------------------
// Checkpoints: "CUBA" magic, u16 version, u8 layer count, u32 sizes, f32 dropout, then per
// layer three f32 params and an (outputs x inputs) f32 row-major matrix.
// Everything little-endian.

inline constexpr std::uint16_t kCheckpointVersion = 1;

std::vector<std::uint8_t> serialize_network(const CubaNetwork& net);
CubaNetwork deserialize_network(std::span<const std::uint8_t> bytes);

nlohmann::json to_json(const TrainConfig& cfg);

void save_checkpoint(const CubaNetwork& net, const std::filesystem::path& path,
                     const nlohmann::json& sidecar);
CubaNetwork load_checkpoint(const std::filesystem::path& path);

// FNV-1a over tensor payloads and labels.
std::uint64_t dataset_fingerprint(std::span<const SpikeSample> samples);

}  // namespace spikenc
