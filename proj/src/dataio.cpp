#include "spikenc/dataio.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

namespace spikenc {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// CSV

std::vector<std::string> CsvSchema::default_vocabulary() {
  return {"Adductor",  "ArmCurl", "BenchPress",   "LegCurl",
          "LegPress",  "Null",    "Riding",       "RopeSkipping",
          "Running",   "Squat",   "StairClimber", "Walking"};
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) {
      cell.pop_back();
    }
    const auto first = cell.find_first_not_of(' ');
    cells.push_back(first == std::string::npos ? std::string{}
                                               : cell.substr(first));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::size_t column_index(const std::vector<std::string>& header,
                         const std::string& name) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) {
    throw Error(ErrorKind::MissingColumn, "missing column '" + name + "'");
  }
  return static_cast<std::size_t>(it - header.begin());
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ", ";
    out += items[i];
  }
  return out;
}

}  // namespace

std::vector<SessionRecord> parse_csv(std::istream& in, const CsvSchema& schema) {
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorKind::Parse, "empty CSV input: header row expected");
  }
  const auto header = split_line(line);
  std::vector<std::size_t> sensor_idx;
  for (const auto& name : schema.sensor_columns) {
    sensor_idx.push_back(column_index(header, name));
  }
  const std::size_t label_idx = column_index(header, schema.label_column);
  const std::size_t user_idx = column_index(header, schema.user_column);

  std::vector<SessionRecord> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_line(line);
    if (cells.size() < header.size()) {
      throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": expected " +
                                        std::to_string(header.size()) +
                                        " cells, got " +
                                        std::to_string(cells.size()));
    }
    SessionRecord rec;
    rec.values.reserve(sensor_idx.size());
    for (std::size_t k = 0; k < sensor_idx.size(); ++k) {
      const auto& cell = cells[sensor_idx[k]];
      double v = 0.0;
      const auto [ptr, ec] =
          std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc{} || ptr != cell.data() + cell.size() ||
          cell.empty() || !std::isfinite(v)) {
        throw Error(ErrorKind::Parse,
                    "line " + std::to_string(line_no) + ", column '" +
                        schema.sensor_columns[k] + "': not a number: '" + cell +
                        "'");
      }
      rec.values.push_back(v);
    }
    const auto& label = cells[label_idx];
    const auto it =
        std::find(schema.vocabulary.begin(), schema.vocabulary.end(), label);
    if (it == schema.vocabulary.end()) {
      throw Error(ErrorKind::Label, "line " + std::to_string(line_no) +
                                        ": unknown label '" + label +
                                        "'; vocabulary: " +
                                        join(schema.vocabulary));
    }
    rec.label = static_cast<std::size_t>(it - schema.vocabulary.begin());
    rec.user = cells[user_idx];
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<SessionRecord> load_csv(const fs::path& path,
                                    const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorKind::Io, "cannot open " + path.string());
  }
  return parse_csv(in, schema);
}

// ---------------------------------------------------------------------------
// Normalization

double NormStats::apply(std::size_t channel, double v) const {
  const double lo = min[channel];
  const double hi = max[channel];
  if (!(hi > lo)) return 0.5;
  return std::clamp((v - lo) / (hi - lo), 0.0, 1.0);
}

NormStats fit_normalization(std::span<const SessionRecord> train) {
  NormStats stats;
  if (train.empty()) return stats;
  const std::size_t channels = train.front().values.size();
  stats.min.assign(channels, std::numeric_limits<double>::infinity());
  stats.max.assign(channels, -std::numeric_limits<double>::infinity());
  for (const auto& rec : train) {
    if (rec.values.size() != channels) {
      throw Error(ErrorKind::RaggedChannels, "records differ in channel count");
    }
    for (std::size_t c = 0; c < channels; ++c) {
      stats.min[c] = std::min(stats.min[c], rec.values[c]);
      stats.max[c] = std::max(stats.max[c], rec.values[c]);
    }
  }
  for (std::size_t c = 0; c < channels; ++c) {
    if (!(stats.max[c] > stats.min[c])) stats.degenerate.push_back(c);
  }
  return stats;
}

void apply_normalization(std::span<SessionRecord> records,
                         const NormStats& stats) {
  for (auto& rec : records) {
    if (rec.values.size() != stats.min.size()) {
      throw Error(ErrorKind::Shape, "record channel count differs from stats");
    }
    for (std::size_t c = 0; c < rec.values.size(); ++c) {
      rec.values[c] = stats.apply(c, rec.values[c]);
    }
  }
}

NormStats normalize(std::span<SessionRecord> train,
                    std::span<SessionRecord> test) {
  auto stats = fit_normalization(train);
  apply_normalization(train, stats);
  apply_normalization(test, stats);
  return stats;
}

// ---------------------------------------------------------------------------
// Windowing

WindowedDataset window(std::span<const SessionRecord> records,
                       const WindowSpec& spec,
                       std::vector<std::string> class_names) {
  WindowedDataset out;
  out.class_names = class_names.empty() ? CsvSchema::default_vocabulary()
                                        : std::move(class_names);
  const auto length =
      static_cast<std::size_t>(std::llround(spec.sample_rate_hz * spec.seconds));
  const auto stride = std::max<std::size_t>(
      1, static_cast<std::size_t>(
             std::llround(spec.sample_rate_hz * spec.stride_seconds)));
  if (length == 0) return out;

  std::map<std::string, std::size_t> fold_of;
  std::size_t begin = 0;
  while (begin < records.size()) {
    // A session is a maximal run of rows from one user.
    std::size_t end = begin;
    while (end < records.size() && records[end].user == records[begin].user) {
      ++end;
    }
    const auto [it, inserted] =
        fold_of.emplace(records[begin].user, out.users.size());
    if (inserted) out.users.push_back(records[begin].user);
    const std::size_t fold = it->second;

    for (std::size_t start = begin; start + length <= end; start += stride) {
      const std::size_t label = records[start].label;
      bool uniform = true;
      for (std::size_t i = start; i < start + length; ++i) {
        if (records[i].label != label) {
          uniform = false;
          break;
        }
      }
      if (!uniform) continue;
      const std::size_t channels = records[start].values.size();
      Signal sig(channels, length, spec.sample_rate_hz);
      for (std::size_t i = 0; i < length; ++i) {
        for (std::size_t c = 0; c < channels; ++c) {
          sig.at(c, i) = records[start + i].values[c];
        }
      }
      out.examples.push_back({std::move(sig), label, fold});
    }
    begin = end;
  }
  return out;
}

std::pair<WindowedDataset, WindowedDataset> split_leave_one_out(
    const WindowedDataset& data, std::size_t test_fold) {
  WindowedDataset train{{}, data.class_names, data.users};
  WindowedDataset test{{}, data.class_names, data.users};
  for (const auto& ex : data.examples) {
    (ex.fold == test_fold ? test : train).examples.push_back(ex);
  }
  return {std::move(train), std::move(test)};
}

// ---------------------------------------------------------------------------
// Resampling

Signal interpolate_linear(const Signal& signal, std::size_t factor) {
  if (factor == 0) {
    throw Error(ErrorKind::Domain, "interpolation factor must be >= 1");
  }
  if (factor == 1) return signal;
  const std::size_t n = signal.samples();
  const std::size_t out_n = n < 2 ? n : (n - 1) * factor + 1;
  Signal out(signal.channels(), out_n,
             signal.sample_rate_hz() * static_cast<double>(factor));
  const double f = static_cast<double>(factor);
  for (std::size_t c = 0; c < signal.channels(); ++c) {
    for (std::size_t m = 0; m + 1 < n; ++m) {
      const double a = signal.at(c, m);
      const double b = signal.at(c, m + 1);
      out.at(c, m * factor) = a;
      for (std::size_t k = 1; k < factor; ++k) {
        const double w = static_cast<double>(k) / f;
        out.at(c, m * factor + k) = a + (b - a) * w;
      }
    }
    if (n > 0) out.at(c, out_n - 1) = signal.at(c, n - 1);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic data

namespace {

double l2(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

struct Prototype {
  std::vector<double> offset, amplitude, frequency;
};

std::vector<Prototype> make_prototypes(const SynthSpec& spec) {
  Rng rng(mix_seed(spec.seed, 0xC1A55));
  std::vector<Prototype> protos;
  std::vector<std::vector<double>> offsets;
  for (std::size_t k = 0; k < spec.classes; ++k) {
    Prototype p;
    // Rejection sampling until the new prototype clears the margin.
    for (int attempt = 0;; ++attempt) {
      p.offset.assign(spec.channels, 0.0);
      for (auto& o : p.offset) o = 0.35 + 0.3 * rng.uniform();
      bool ok = true;
      for (const auto& other : offsets) ok = ok && l2(other, p.offset) >= spec.margin;
      if (ok) break;
      if (attempt > 10000) {
        throw Error(ErrorKind::Domain, "cannot place class prototypes at margin " +
                                           std::to_string(spec.margin));
      }
    }
    p.amplitude.resize(spec.channels);
    p.frequency.resize(spec.channels);
    for (std::size_t c = 0; c < spec.channels; ++c) {
      p.amplitude[c] = 0.03 + 0.07 * rng.uniform();
      p.frequency[c] = 0.5 + 1.5 * rng.uniform();
    }
    offsets.push_back(p.offset);
    protos.push_back(std::move(p));
  }
  return protos;
}

}  // namespace

std::vector<std::vector<double>> synth_class_offsets(const SynthSpec& spec) {
  std::vector<std::vector<double>> out;
  for (auto& p : make_prototypes(spec)) out.push_back(std::move(p.offset));
  return out;
}

WindowedDataset synth_dataset(const SynthSpec& spec) {
  const auto protos = make_prototypes(spec);
  WindowedDataset out;
  for (std::size_t k = 0; k < spec.classes; ++k) {
    out.class_names.push_back("class" + std::to_string(k));
  }
  const std::size_t users = std::max<std::size_t>(1, spec.users);
  for (std::size_t u = 0; u < users; ++u) {
    out.users.push_back("user" + std::to_string(u));
  }
  const auto length =
      static_cast<std::size_t>(std::llround(spec.sample_rate_hz * spec.seconds));

  Rng user_rng(mix_seed(spec.seed, 0x05E25));
  std::vector<std::vector<double>> user_shift(users,
                                              std::vector<double>(spec.channels));
  for (auto& shift : user_shift) {
    for (auto& s : shift) s = user_rng.normal(0.0, 0.01);
  }

  std::size_t index = 0;
  for (std::size_t i = 0; i < spec.samples_per_class; ++i) {
    for (std::size_t k = 0; k < spec.classes; ++k, ++index) {
      Rng rng = Rng(spec.seed).child(index);
      const std::size_t fold = i % users;
      const auto& p = protos[k];
      Signal sig(spec.channels, length, spec.sample_rate_hz);
      for (std::size_t c = 0; c < spec.channels; ++c) {
        const double phase = 2.0 * std::numbers::pi * rng.uniform();
        const double amp = p.amplitude[c] * (0.8 + 0.4 * rng.uniform());
        const double freq = p.frequency[c] * (0.9 + 0.2 * rng.uniform());
        for (std::size_t t = 0; t < length; ++t) {
          const double time = static_cast<double>(t) / spec.sample_rate_hz;
          double v = p.offset[c] + user_shift[fold][c] +
                     amp * std::sin(2.0 * std::numbers::pi * freq * time + phase);
          if (spec.noise_std > 0.0) v += rng.normal(0.0, spec.noise_std);
          sig.at(c, t) = std::clamp(v, 0.0, 1.0);
        }
      }
      out.examples.push_back({std::move(sig), k, fold});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Spike files

nlohmann::json to_json(const EncodingConfig& cfg) {
  nlohmann::json banks = nlohmann::json::array();
  for (const auto& b : cfg.thresholds.banks) banks.push_back(b);
  return {
      {"scheme", to_string(cfg.scheme)},
      {"steps_per_sample", cfg.steps_per_sample},
      {"n_bits", cfg.n_bits},
      {"thresholds", banks},
      {"channel_bank", cfg.thresholds.channel_bank},
      {"interp_factor", cfg.interp_factor},
      {"normal_mu", cfg.normal_mu},
      {"normal_var", cfg.normal_var},
      {"beta_shape", cfg.beta_shape},
      {"seed", cfg.seed},
  };
}

EncodingConfig encoding_config_from_json(const nlohmann::json& j) {
  EncodingConfig cfg;
  const auto scheme = parse_scheme(j.at("scheme").get<std::string>());
  if (!scheme) {
    throw Error(ErrorKind::Parse, "unknown scheme in config");
  }
  cfg.scheme = *scheme;
  cfg.steps_per_sample = j.value("steps_per_sample", cfg.steps_per_sample);
  cfg.n_bits = j.value("n_bits", cfg.n_bits);
  if (j.contains("thresholds")) {
    cfg.thresholds.banks =
        j.at("thresholds").get<std::vector<std::vector<double>>>();
  }
  cfg.thresholds.channel_bank =
      j.value("channel_bank", std::vector<std::size_t>{});
  cfg.interp_factor = j.value("interp_factor", cfg.interp_factor);
  cfg.normal_mu = j.value("normal_mu", cfg.normal_mu);
  cfg.normal_var = j.value("normal_var", cfg.normal_var);
  cfg.beta_shape = j.value("beta_shape", cfg.beta_shape);
  cfg.seed = j.value("seed", cfg.seed);
  return cfg;
}

namespace {

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  using U = std::make_unsigned_t<
      std::conditional_t<std::is_floating_point_v<T>, std::uint64_t, T>>;
  U bits;
  if constexpr (std::is_floating_point_v<T>) {
    bits = std::bit_cast<std::uint64_t>(static_cast<double>(value));
  } else {
    bits = static_cast<U>(value);
  }
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
}

template <typename U>
U get_le(std::span<const std::uint8_t> bytes, std::size_t& pos) {
  if (pos + sizeof(U) > bytes.size()) {
    throw Error(ErrorKind::TruncatedPayload, "spike file header truncated");
  }
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    v |= static_cast<U>(static_cast<U>(bytes[pos + i]) << (8 * i));
  }
  pos += sizeof(U);
  return v;
}

}  // namespace

std::vector<std::uint8_t> serialize_spikes(const SpikeTensor& tensor) {
  std::vector<std::uint8_t> out;
  out.reserve(4 + 2 + 1 + 12 + 8 + tensor.size());
  out.insert(out.end(), std::begin(kSpikeMagic), std::end(kSpikeMagic));
  put_le<std::uint16_t>(out, kSpikeFormatVersion);
  put_le<std::uint8_t>(out, 3);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(tensor.trains()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(tensor.channels()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(tensor.timesteps()));
  put_le<double>(out, tensor.time_step_ms());
  for (auto v : tensor.raw()) out.push_back(static_cast<std::uint8_t>(v));
  return out;
}

SpikeTensor deserialize_spikes(std::span<const std::uint8_t> bytes,
                               std::size_t window_steps) {
  if (bytes.size() < 4 || !std::equal(std::begin(kSpikeMagic),
                                      std::end(kSpikeMagic), bytes.begin(),
                                      [](char a, std::uint8_t b) {
                                        return static_cast<std::uint8_t>(a) == b;
                                      })) {
    throw Error(ErrorKind::BadMagic, "not an SPK1 spike file");
  }
  std::size_t pos = 4;
  const auto version = get_le<std::uint16_t>(bytes, pos);
  if (version != kSpikeFormatVersion) {
    throw Error(ErrorKind::VersionMismatch,
                "unsupported spike format version " + std::to_string(version));
  }
  const auto ndim = get_le<std::uint8_t>(bytes, pos);
  if (ndim != 3) {
    throw Error(ErrorKind::Shape, "expected 3 dimensions, file has " +
                                      std::to_string(ndim));
  }
  std::uint64_t dims[3];
  for (auto& d : dims) d = get_le<std::uint32_t>(bytes, pos);
  const double step = std::bit_cast<double>(get_le<std::uint64_t>(bytes, pos));
  const std::uint64_t count = dims[0] * dims[1] * dims[2];
  if (bytes.size() - pos < count) {
    throw Error(ErrorKind::TruncatedPayload,
                "payload holds " + std::to_string(bytes.size() - pos) +
                    " bytes, header declares " + std::to_string(count));
  }
  SpikeTensor tensor(dims[0], dims[1], dims[2], step, window_steps);
  auto raw = tensor.raw();
  for (std::size_t i = 0; i < count; ++i) {
    raw[i] = static_cast<std::int8_t>(bytes[pos + i]);
  }
  tensor.check_ternary();
  return tensor;
}

fs::path sidecar_path(const fs::path& path) {
  auto p = path;
  p.replace_extension(".json");
  return p;
}

void write_file_atomic(const fs::path& path,
                       std::span<const std::uint8_t> bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorKind::Io, "write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    throw Error(ErrorKind::Io, "cannot rename to " + path.string() + ": " +
                                   ec.message());
  }
}

void write_file_atomic(const fs::path& path, const std::string& text) {
  write_file_atomic(
      path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()),
                      text.size()));
}

std::vector<std::uint8_t> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_spikes(const SpikeTensor& tensor, const SpikeFileMeta& meta,
                  const fs::path& path) {
  write_file_atomic(path, serialize_spikes(tensor));
  nlohmann::json side = meta.extra;
  side["format"] = "SPK1";
  side["window_steps"] = tensor.window_steps();
  if (meta.config) side["encoding"] = to_json(*meta.config);
  if (meta.label) side["label"] = *meta.label;
  write_file_atomic(sidecar_path(path), side.dump(2) + "\n");
}

std::pair<SpikeTensor, SpikeFileMeta> read_spikes(const fs::path& path) {
  SpikeFileMeta meta;
  const auto side = sidecar_path(path);
  if (fs::exists(side)) {
    std::ifstream in(side);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::Parse, "bad sidecar " + side.string() + ": " + e.what());
    }
    meta.window_steps = j.value("window_steps", std::size_t{1});
    if (j.contains("encoding")) {
      meta.config = encoding_config_from_json(j.at("encoding"));
    }
    if (j.contains("label")) meta.label = j.at("label").get<std::size_t>();
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (it.key() != "format" && it.key() != "window_steps" &&
          it.key() != "encoding" && it.key() != "label") {
        meta.extra[it.key()] = it.value();
      }
    }
  }
  const auto bytes = read_file(path);
  return {deserialize_spikes(bytes, meta.window_steps), std::move(meta)};
}

}  // namespace spikenc
