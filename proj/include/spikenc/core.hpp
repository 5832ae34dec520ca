#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace spikenc {

// Error categories. The CLI maps these onto process exit codes.
enum class ErrorKind {
  OutOfRange,
  RaggedChannels,
  NonFiniteValue,
  Domain,
  Shape,
  ThresholdOrder,
  MultipleSpikesInWindow,
  InconsistentSpikes,
  Index,
  Parse,
  MissingColumn,
  Label,
  BadMagic,
  VersionMismatch,
  TruncatedPayload,
  EmptyDataset,
  Divergence,
  Io,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

// Multi-channel time series, channels x samples, stored row-major.
class Signal {
 public:
  Signal() = default;
  Signal(std::size_t channels, std::size_t samples, double sample_rate_hz,
         double fill = 0.0);
  Signal(std::vector<std::vector<double>> rows, double sample_rate_hz,
         std::vector<std::string> channel_names = {});

  std::size_t channels() const { return channels_; }
  std::size_t samples() const { return samples_; }
  double sample_rate_hz() const { return sample_rate_hz_; }
  const std::vector<std::string>& channel_names() const { return names_; }

  double& at(std::size_t channel, std::size_t sample) {
    return data_[channel * samples_ + sample];
  }
  double at(std::size_t channel, std::size_t sample) const {
    return data_[channel * samples_ + sample];
  }

  std::span<double> channel(std::size_t c) {
    return {data_.data() + c * samples_, samples_};
  }
  std::span<const double> channel(std::size_t c) const {
    return {data_.data() + c * samples_, samples_};
  }

  std::span<const double> values() const { return data_; }

  friend bool operator==(const Signal&, const Signal&) = default;

 private:
  std::size_t channels_ = 0;
  std::size_t samples_ = 0;
  double sample_rate_hz_ = 1.0;
  std::vector<double> data_;
  std::vector<std::string> names_;
};

struct SignalIssue {
  ErrorKind kind;
  std::size_t channel = 0;
  std::size_t index = 0;
  double value = 0.0;
  std::string message;
};

// Validation of a signal as nested rows, so ragged input can be reported
// before a Signal is ever constructed.
std::optional<SignalIssue> validate_signal(
    const std::vector<std::vector<double>>& rows);
std::optional<SignalIssue> validate_signal(const Signal& signal);

// Throws Error with the first issue found.
void require_valid(const Signal& signal);

// Ternary spike raster laid out as (trains, channels, timesteps).
class SpikeTensor {
 public:
  SpikeTensor() = default;
  SpikeTensor(std::size_t trains, std::size_t channels, std::size_t timesteps,
              double time_step_ms, std::size_t window_steps);

  std::size_t trains() const { return trains_; }
  std::size_t channels() const { return channels_; }
  std::size_t timesteps() const { return timesteps_; }
  std::size_t size() const { return data_.size(); }
  double time_step_ms() const { return time_step_ms_; }
  std::size_t window_steps() const { return window_steps_; }

  std::int8_t& at(std::size_t train, std::size_t channel, std::size_t t) {
    return data_[(train * channels_ + channel) * timesteps_ + t];
  }
  std::int8_t at(std::size_t train, std::size_t channel, std::size_t t) const {
    return data_[(train * channels_ + channel) * timesteps_ + t];
  }

  std::span<std::int8_t> raw() { return data_; }
  std::span<const std::int8_t> raw() const { return data_; }

  // Throws Shape if any element is outside {-1, 0, +1}.
  void check_ternary() const;

  friend bool operator==(const SpikeTensor&, const SpikeTensor&) = default;

 private:
  std::size_t trains_ = 0;
  std::size_t channels_ = 0;
  std::size_t timesteps_ = 0;
  double time_step_ms_ = 1.0;
  std::size_t window_steps_ = 1;
  std::vector<std::int8_t> data_;
};

enum class Scheme {
  RateUniform,
  RateNormal,
  RateBeta,
  TtfsLinear,
  TtfsLog,
  Binary,
  DeltaMod,
};

const char* to_string(Scheme scheme);
std::optional<Scheme> parse_scheme(const std::string& name);

// Threshold banks for delta modulation. Each channel is wired to one bank;
// all banks have the same length (the number of output trains).
struct ThresholdBanks {
  std::vector<std::vector<double>> banks;
  std::vector<std::size_t> channel_bank;  // empty: default wiring

  static ThresholdBanks recgym_default();
  static ThresholdBanks single(std::vector<double> bank);

  std::size_t trains() const { return banks.empty() ? 0 : banks.front().size(); }
  const std::vector<double>& for_channel(std::size_t channel) const;
  // Throws ThresholdOrder on non-increasing or non-positive thresholds, and
  // Shape on mismatched bank lengths or bad wiring.
  void validate() const;
};

inline constexpr double kRecGymImuThresholds[] = {0.0004, 0.0008, 0.0016,
                                                  0.0032, 0.0064};
inline constexpr double kRecGymHbcThresholds[] = {0.0001, 0.0002, 0.0004,
                                                  0.0008, 0.0016};

struct EncodingConfig {
  Scheme scheme = Scheme::RateUniform;
  std::size_t steps_per_sample = 50;
  std::size_t n_bits = 6;
  ThresholdBanks thresholds = ThresholdBanks::recgym_default();
  std::size_t interp_factor = 5;
  double normal_mu = 0.5;
  double normal_var = 0.2;
  double beta_shape = 0.75;
  std::uint64_t seed = 0;

  void validate() const;
};

// Seeded uniform variate stream. Bits come straight from mt19937_64, whose
// output sequence is fixed by the standard; the conversion to double is done
// here so results do not depend on the library's distribution classes.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next_u64() { return engine_(); }
  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  bool bernoulli(double p) { return uniform() < p; }
  // Box-Muller; consumes two variates.
  double normal(double mean = 0.0, double stddev = 1.0);
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  // Child stream for worker `index`; independent of the parent's position.
  Rng child(std::uint64_t index) const;

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace spikenc
