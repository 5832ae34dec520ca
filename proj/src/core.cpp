#include "spikenc/core.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace spikenc {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::OutOfRange: return "OutOfRange";
    case ErrorKind::RaggedChannels: return "RaggedChannels";
    case ErrorKind::NonFiniteValue: return "NonFiniteValue";
    case ErrorKind::Domain: return "DomainError";
    case ErrorKind::Shape: return "ShapeError";
    case ErrorKind::ThresholdOrder: return "ThresholdOrderError";
    case ErrorKind::MultipleSpikesInWindow: return "MultipleSpikesInWindow";
    case ErrorKind::InconsistentSpikes: return "InconsistentSpikes";
    case ErrorKind::Index: return "IndexError";
    case ErrorKind::Parse: return "ParseError";
    case ErrorKind::MissingColumn: return "MissingColumn";
    case ErrorKind::Label: return "LabelError";
    case ErrorKind::BadMagic: return "BadMagic";
    case ErrorKind::VersionMismatch: return "VersionMismatch";
    case ErrorKind::TruncatedPayload: return "TruncatedPayload";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::Divergence: return "DivergenceError";
    case ErrorKind::Io: return "IoError";
  }
  return "Unknown";
}

Signal::Signal(std::size_t channels, std::size_t samples, double sample_rate_hz,
               double fill)
    : channels_(channels),
      samples_(samples),
      sample_rate_hz_(sample_rate_hz),
      data_(channels * samples, fill) {
  if (!(sample_rate_hz > 0.0)) {
    throw Error(ErrorKind::Domain, "sample rate must be positive");
  }
}

Signal::Signal(std::vector<std::vector<double>> rows, double sample_rate_hz,
               std::vector<std::string> channel_names)
    : channels_(rows.size()),
      samples_(rows.empty() ? 0 : rows.front().size()),
      sample_rate_hz_(sample_rate_hz),
      names_(std::move(channel_names)) {
  if (!(sample_rate_hz > 0.0)) {
    throw Error(ErrorKind::Domain, "sample rate must be positive");
  }
  data_.reserve(channels_ * samples_);
  for (std::size_t c = 0; c < rows.size(); ++c) {
    if (rows[c].size() != samples_) {
      std::ostringstream msg;
      msg << "channel " << c << " has " << rows[c].size()
          << " samples, expected " << samples_;
      throw Error(ErrorKind::RaggedChannels, msg.str());
    }
    data_.insert(data_.end(), rows[c].begin(), rows[c].end());
  }
  if (!names_.empty() && names_.size() != channels_) {
    throw Error(ErrorKind::Shape, "channel name count does not match channels");
  }
}

namespace {

std::optional<SignalIssue> check_value(std::size_t c, std::size_t i, double v) {
  if (!std::isfinite(v)) {
    std::ostringstream msg;
    msg << "non-finite value at channel " << c << ", index " << i;
    return SignalIssue{ErrorKind::NonFiniteValue, c, i, v, msg.str()};
  }
  if (v < 0.0 || v > 1.0) {
    std::ostringstream msg;
    msg << "value " << v << " outside [0,1] at channel " << c << ", index "
        << i;
    return SignalIssue{ErrorKind::OutOfRange, c, i, v, msg.str()};
  }
  return std::nullopt;
}

}  // namespace

std::optional<SignalIssue> validate_signal(
    const std::vector<std::vector<double>>& rows) {
  for (std::size_t c = 1; c < rows.size(); ++c) {
    if (rows[c].size() != rows[0].size()) {
      std::ostringstream msg;
      msg << "channel " << c << " has " << rows[c].size()
          << " samples, channel 0 has " << rows[0].size();
      return SignalIssue{ErrorKind::RaggedChannels, c, rows[c].size(), 0.0,
                         msg.str()};
    }
  }
  for (std::size_t c = 0; c < rows.size(); ++c) {
    for (std::size_t i = 0; i < rows[c].size(); ++i) {
      if (auto issue = check_value(c, i, rows[c][i])) return issue;
    }
  }
  return std::nullopt;
}

std::optional<SignalIssue> validate_signal(const Signal& signal) {
  for (std::size_t c = 0; c < signal.channels(); ++c) {
    for (std::size_t i = 0; i < signal.samples(); ++i) {
      if (auto issue = check_value(c, i, signal.at(c, i))) return issue;
    }
  }
  return std::nullopt;
}

void require_valid(const Signal& signal) {
  if (auto issue = validate_signal(signal)) {
    throw Error(issue->kind, issue->message);
  }
}

SpikeTensor::SpikeTensor(std::size_t trains, std::size_t channels,
                         std::size_t timesteps, double time_step_ms,
                         std::size_t window_steps)
    : trains_(trains),
      channels_(channels),
      timesteps_(timesteps),
      time_step_ms_(time_step_ms),
      window_steps_(window_steps),
      data_(trains * channels * timesteps, 0) {
  if (!(time_step_ms > 0.0) || window_steps == 0) {
    throw Error(ErrorKind::Shape,
                "time step must be positive and window_steps >= 1");
  }
}

void SpikeTensor::check_ternary() const {
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (data_[i] < -1 || data_[i] > 1) {
      throw Error(ErrorKind::Shape, "spike value outside {-1,0,+1} at flat index " +
                                        std::to_string(i));
    }
  }
}

const char* to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::RateUniform: return "rate-uniform";
    case Scheme::RateNormal: return "rate-normal";
    case Scheme::RateBeta: return "rate-beta";
    case Scheme::TtfsLinear: return "ttfs-linear";
    case Scheme::TtfsLog: return "ttfs-log";
    case Scheme::Binary: return "binary";
    case Scheme::DeltaMod: return "delta";
  }
  return "unknown";
}

std::optional<Scheme> parse_scheme(const std::string& name) {
  for (auto s : {Scheme::RateUniform, Scheme::RateNormal, Scheme::RateBeta,
                 Scheme::TtfsLinear, Scheme::TtfsLog, Scheme::Binary,
                 Scheme::DeltaMod}) {
    if (name == to_string(s)) return s;
  }
  return std::nullopt;
}

ThresholdBanks ThresholdBanks::recgym_default() {
  ThresholdBanks banks;
  banks.banks.emplace_back(std::begin(kRecGymImuThresholds),
                           std::end(kRecGymImuThresholds));
  banks.banks.emplace_back(std::begin(kRecGymHbcThresholds),
                           std::end(kRecGymHbcThresholds));
  return banks;
}

ThresholdBanks ThresholdBanks::single(std::vector<double> bank) {
  ThresholdBanks banks;
  banks.banks.push_back(std::move(bank));
  return banks;
}

const std::vector<double>& ThresholdBanks::for_channel(
    std::size_t channel) const {
  if (!channel_bank.empty()) {
    if (channel >= channel_bank.size()) {
      throw Error(ErrorKind::Shape,
                  "no threshold bank wired to channel " + std::to_string(channel));
    }
    return banks.at(channel_bank[channel]);
  }
  // Six inertial channels first, capacitance after.
  return channel < 6 ? banks.front() : banks.back();
}

void ThresholdBanks::validate() const {
  if (banks.empty() || banks.front().empty()) {
    throw Error(ErrorKind::Shape, "at least one non-empty threshold bank required");
  }
  for (const auto& bank : banks) {
    if (bank.size() != banks.front().size()) {
      throw Error(ErrorKind::Shape, "threshold banks differ in length");
    }
    for (std::size_t i = 0; i < bank.size(); ++i) {
      if (!(bank[i] > 0.0) || !std::isfinite(bank[i])) {
        throw Error(ErrorKind::ThresholdOrder, "thresholds must be positive");
      }
      if (i > 0 && !(bank[i] > bank[i - 1])) {
        throw Error(ErrorKind::ThresholdOrder,
                    "thresholds must be strictly increasing");
      }
    }
  }
  for (auto b : channel_bank) {
    if (b >= banks.size()) {
      throw Error(ErrorKind::Shape, "channel wired to a missing threshold bank");
    }
  }
}

void EncodingConfig::validate() const {
  if (steps_per_sample == 0) {
    throw Error(ErrorKind::Domain, "steps_per_sample must be >= 1");
  }
  if (n_bits == 0 || n_bits > 16) {
    throw Error(ErrorKind::Domain, "n_bits must be in [1, 16]");
  }
  if (interp_factor == 0) {
    throw Error(ErrorKind::Domain, "interp_factor must be >= 1");
  }
  if (!(beta_shape > 0.0 && beta_shape <= 1.0)) {
    throw Error(ErrorKind::Domain, "beta_shape must be in (0, 1]");
  }
  if (!(normal_var > 0.0)) {
    throw Error(ErrorKind::Domain, "normal_var must be positive");
  }
  if (scheme == Scheme::DeltaMod) thresholds.validate();
}

double Rng::normal(double mean, double stddev) {
  // 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return mean + stddev * std::sqrt(-2.0 * std::log(u1)) *
                    std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n <= 1) return 0;
  // Rejection keeps the result unbiased.
  const std::uint64_t limit = (~std::uint64_t{0} / n) * n;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

Rng Rng::child(std::uint64_t index) const {
  return Rng(mix_seed(seed_, index));
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 finalizer over the combined words.
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace spikenc
