#include "spikenc/evaluation.hpp"

#include <charconv>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "spikenc/decoders.hpp"
#include "spikenc/encoders.hpp"

namespace spikenc {

std::optional<SchemeVariant> parse_variant(const std::string& name,
                                           const EncodingConfig& base) {
  SchemeVariant v{name, base};
  if (auto s = parse_scheme(name)) {
    v.config.scheme = *s;
    if (*s == Scheme::Binary) v.name = "binary" + std::to_string(base.n_bits);
    return v;
  }
  if (name.rfind("binary", 0) == 0 && name.size() > 6) {
    std::size_t bits = 0;
    const char* first = name.data() + 6;
    const char* last = name.data() + name.size();
    const auto [ptr, ec] = std::from_chars(first, last, bits);
    if (ec != std::errc{} || ptr != last || bits == 0 || bits > 16) {
      return std::nullopt;
    }
    v.config.scheme = Scheme::Binary;
    v.config.n_bits = bits;
    return v;
  }
  return std::nullopt;
}

std::vector<SchemeVariant> standard_variants(const EncodingConfig& base) {
  std::vector<SchemeVariant> out;
  for (const char* name : {"rate-uniform", "rate-normal", "rate-beta",
                           "ttfs-linear", "ttfs-log", "binary6", "binary10",
                           "delta"}) {
    out.push_back(*parse_variant(name, base));
  }
  return out;
}

ModelSetup default_model_setup(Scheme scheme) {
  ModelSetup setup;
  setup.train.learning_rate = 1e-3;
  setup.train.batch_size = 32;
  setup.train.loss = {0.9, 0.1};
  switch (scheme) {
    case Scheme::RateUniform:
    case Scheme::RateNormal:
    case Scheme::RateBeta:
      setup.params = {1.0, 0.25, 0.1};
      setup.weight_gain = 0.5;
      break;
    case Scheme::TtfsLinear:
    case Scheme::TtfsLog:
      setup.params = {1.0, 0.25, 0.1};
      setup.weight_gain = 1.0;
      break;
    case Scheme::Binary:
      setup.params = {1.0, 0.5, 0.5};
      setup.weight_gain = 1.0;
      break;
    case Scheme::DeltaMod:
      setup.params = {1.0, 0.25, 0.1};
      setup.weight_gain = 1.0;
      break;
  }
  return setup;
}

std::vector<SpikeSample> encode_dataset(const WindowedDataset& data,
                                        const EncodingConfig& cfg) {
  std::vector<SpikeSample> out;
  out.reserve(data.examples.size());
  for (std::size_t i = 0; i < data.examples.size(); ++i) {
    EncodingConfig c = cfg;
    c.seed = mix_seed(cfg.seed, i);
    out.push_back({encode(data.examples[i].signal, c), data.examples[i].label});
  }
  return out;
}

double dataset_snr_db(const WindowedDataset& data, const EncodingConfig& cfg,
                      std::span<const SpikeSample> encoded) {
  SnrAccumulator acc;
  for (std::size_t i = 0; i < data.examples.size(); ++i) {
    const auto& sig = data.examples[i].signal;
    if (cfg.scheme == Scheme::DeltaMod) {
      std::vector<double> initial(sig.channels());
      for (std::size_t c = 0; c < sig.channels(); ++c) initial[c] = sig.at(c, 0);
      const auto reference = interpolate_linear(sig, cfg.interp_factor);
      acc.add(reference,
              decode(encoded[i].spikes, cfg, sig.sample_rate_hz(), initial));
    } else {
      acc.add(sig, decode(encoded[i].spikes, cfg, sig.sample_rate_hz()));
    }
  }
  return acc.db();
}

EvalRow evaluate_variant(const WindowedDataset& data,
                         const SchemeVariant& variant, const EvalOptions& opts,
                         const ProgressFn& progress) {
  if (data.examples.empty()) {
    throw Error(ErrorKind::EmptyDataset, "dataset has no windows");
  }
  EvalRow row;
  row.scheme = variant.name;
  const auto encoded = encode_dataset(data, variant.config);
  const auto& first = encoded.front().spikes;
  row.shape = {first.trains(), first.channels(), first.timesteps()};
  row.time_step_ms = first.time_step_ms();

  std::size_t spikes = 0;
  std::size_t positions = 0;
  for (const auto& s : encoded) {
    for (auto v : s.spikes.raw()) spikes += v != 0 ? 1 : 0;
    positions += s.spikes.size();
  }
  row.afr_percent =
      100.0 * static_cast<double>(spikes) / static_cast<double>(positions);
  row.snr_db = dataset_snr_db(data, variant.config, encoded);
  if (!opts.train_model) return row;

  std::vector<SpikeSample> train_set, test_set;
  for (std::size_t i = 0; i < encoded.size(); ++i) {
    (data.examples[i].fold == opts.test_fold ? test_set : train_set)
        .push_back(encoded[i]);
  }
  if (train_set.empty() || test_set.empty()) {
    throw Error(ErrorKind::EmptyDataset,
                "fold " + std::to_string(opts.test_fold) +
                    " leaves an empty train or test split");
  }

  auto setup = default_model_setup(variant.config.scheme);
  if (opts.epochs) setup.train.epochs = *opts.epochs;
  if (opts.learning_rate) setup.train.learning_rate = *opts.learning_rate;
  if (opts.batch_size) setup.train.batch_size = *opts.batch_size;
  if (opts.train_seed) setup.train.seed = *opts.train_seed;
  if (opts.stop_accuracy) setup.train.stop_accuracy = *opts.stop_accuracy;
  if (opts.hidden) setup.hidden = *opts.hidden;

  std::vector<std::size_t> sizes{feature_count(first)};
  sizes.insert(sizes.end(), setup.hidden.begin(), setup.hidden.end());
  sizes.push_back(data.num_classes());
  auto net = CubaNetwork::create(sizes, setup.params, setup.train.seed,
                                 setup.weight_gain);
  net.dropout_p = setup.dropout_p;

  const auto result =
      train(net, train_set, test_set, setup.train, [&](const EpochStats& e) {
        if (!progress) return;
        std::ostringstream msg;
        msg << variant.name << " epoch " << e.epoch << " loss " << e.loss
            << " train " << e.train_accuracy << " test " << e.test_accuracy;
        progress(msg.str());
      });
  row.best_epoch = result.best_epoch;
  row.accuracy = result.best_test_accuracy;

  std::vector<double> p_list{0.0};
  p_list.insert(p_list.end(), opts.noise_p.begin(), opts.noise_p.end());
  std::vector<std::uint64_t> seeds;
  for (std::size_t s = 0; s < std::max<std::size_t>(1, opts.noise_seeds); ++s) {
    seeds.push_back(mix_seed(opts.noise_seed, s));
  }
  auto sweep = robustness_sweep(result.net, test_set, p_list,
                                default_noise_mode(variant.config.scheme), seeds);
  sweep.erase(sweep.begin());
  row.robustness = std::move(sweep);
  return row;
}

nlohmann::json to_json(const EvalRow& row) {
  nlohmann::json j;
  j["scheme"] = row.scheme;
  j["tensor_shape"] = row.shape;
  j["time_step_ms"] = row.time_step_ms;
  j["afr_percent"] = row.afr_percent;
  if (std::isfinite(row.snr_db)) {
    j["snr_db"] = row.snr_db;
  } else {
    j["snr_db"] = "inf";
  }
  j["accuracy"] = row.accuracy ? nlohmann::json(*row.accuracy) : nlohmann::json();
  j["best_epoch"] = row.best_epoch;
  auto drops = nlohmann::json::array();
  for (const auto& r : row.robustness) {
    drops.push_back({{"p", r.p},
                     {"accuracy", r.accuracy},
                     {"accuracy_drop", r.accuracy_drop}});
  }
  j["robustness"] = drops;
  j["dynamic_energy_mj"] = "not measured";
  j["execution_time_ms"] = "not measured";
  return j;
}

std::string report_csv(const std::vector<EvalRow>& rows,
                       std::span<const double> noise_p) {
  std::ostringstream out;
  out << "scheme,tensor_shape,time_step_ms,afr_percent,snr_db,accuracy";
  for (double p : noise_p) out << ",drop_p" << p;
  out << ",dynamic_energy_mj,execution_time_ms\n";
  out << std::setprecision(6);
  for (const auto& r : rows) {
    out << r.scheme << ",\"(";
    for (std::size_t i = 0; i < r.shape.size(); ++i) {
      out << (i ? "," : "") << r.shape[i];
    }
    out << ")\"," << r.time_step_ms << "," << r.afr_percent << ",";
    if (std::isfinite(r.snr_db)) {
      out << r.snr_db;
    } else {
      out << "inf";
    }
    out << ",";
    if (r.accuracy) out << *r.accuracy;
    for (std::size_t k = 0; k < noise_p.size(); ++k) {
      out << ",";
      if (k < r.robustness.size()) out << r.robustness[k].accuracy_drop;
    }
    out << ",not measured,not measured\n";
  }
  return out.str();
}

}  // namespace spikenc
