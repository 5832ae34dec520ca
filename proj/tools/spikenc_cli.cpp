// spikenc command-line tool: encode, evaluate, train, infer, perturb.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "spikenc/dataio.hpp"
#include "spikenc/encoders.hpp"
#include "spikenc/evaluation.hpp"
#include "spikenc/metrics.hpp"
#include "spikenc/snn.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace spikenc;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitDivergence = 4;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Divergence: return kExitDivergence;
    case ErrorKind::Domain: return kExitUsage;
    default: return kExitData;
  }
}

std::vector<double> parse_doubles(const std::string& text, char sep = ',') {
  std::vector<double> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, sep)) {
    if (item.empty()) continue;
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw UsageError("not a number: '" + item + "'");
    out.push_back(v);
  }
  return out;
}

std::vector<std::size_t> parse_sizes(const std::string& text) {
  std::vector<std::size_t> out;
  for (double h : parse_doubles(text)) {
    if (!(h >= 1.0) || h != static_cast<double>(static_cast<std::size_t>(h))) {
      throw UsageError("layer sizes must be positive integers");
    }
    out.push_back(static_cast<std::size_t>(h));
  }
  return out;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// "a,b,c" is one bank for every channel; "a,b;c,d" gives the IMU bank
// (channels 0-5) and the HBC bank (channel 6).
ThresholdBanks parse_thresholds(const std::string& text) {
  ThresholdBanks banks;
  for (const auto& part : split(text, ';')) banks.banks.push_back(parse_doubles(part));
  if (banks.banks.empty() || banks.banks.size() > 2) {
    throw UsageError("--thresholds takes one or two comma lists separated by ';'");
  }
  return banks;
}

struct EncodingFlags {
  std::string scheme = "rate-uniform";
  std::size_t steps = 50;
  std::size_t bits = 6;
  std::string thresholds;
  std::size_t interp = 5;
  std::uint64_t seed = 0;
  double mu = 0.5;
  double var = 0.2;
  double beta_shape = 0.75;

  void add(CLI::App* app, bool with_scheme) {
    if (with_scheme) {
      app->add_option("--scheme", scheme,
                      "rate-uniform|rate-normal|rate-beta|ttfs-linear|ttfs-log|binary|binaryN|delta")
          ->capture_default_str();
    }
    app->add_option("--steps", steps, "time steps per sample (rate, ttfs)")->capture_default_str();
    app->add_option("--bits", bits, "bits for binary encoding")->capture_default_str();
    app->add_option("--thresholds", thresholds, "delta thresholds, e.g. 0.1,0.2 or imu;hbc");
    app->add_option("--interp", interp, "delta interpolation factor")->capture_default_str();
    app->add_option("--seed", seed, "encoding seed")->capture_default_str();
    app->add_option("--mu", mu, "normal mapping mean")->capture_default_str();
    app->add_option("--var", var, "normal mapping variance")->capture_default_str();
    app->add_option("--beta-shape", beta_shape, "combined beta shape")->capture_default_str();
  }

  EncodingConfig base() const {
    EncodingConfig cfg;
    cfg.steps_per_sample = steps;
    cfg.n_bits = bits;
    if (!thresholds.empty()) cfg.thresholds = parse_thresholds(thresholds);
    cfg.interp_factor = interp;
    cfg.seed = seed;
    cfg.normal_mu = mu;
    cfg.normal_var = var;
    cfg.beta_shape = beta_shape;
    return cfg;
  }

  SchemeVariant variant(const std::string& name) const {
    auto v = parse_variant(name, base());
    if (!v) throw UsageError("unknown scheme '" + name + "'");
    v->config.validate();
    return *v;
  }
};

struct DataFlags {
  std::string input;  // CSV path; empty or "synthetic" selects the generator
  SynthSpec synth;
  double window_s = 2.0;
  double stride_s = 2.0;
  double rate_hz = 20.0;

  void add(CLI::App* app) {
    app->add_option("--classes", synth.classes, "synthetic classes")->capture_default_str();
    app->add_option("--samples-per-class", synth.samples_per_class, "synthetic windows per class")
        ->capture_default_str();
    app->add_option("--users", synth.users, "synthetic user cohorts")->capture_default_str();
    app->add_option("--synth-seed", synth.seed, "synthetic dataset seed")->capture_default_str();
    app->add_option("--window", window_s, "window length in seconds")->capture_default_str();
    app->add_option("--stride", stride_s, "window stride in seconds")->capture_default_str();
    app->add_option("--rate", rate_hz, "CSV sample rate in Hz")->capture_default_str();
  }

  bool synthetic() const { return input.empty() || input == "synthetic"; }

  // For CSV input the normalization is fitted on every user except
  // `held_out` (all users when it is unset).
  WindowedDataset load(std::optional<std::size_t> held_out = {}) const {
    if (synthetic()) {
      SynthSpec s = synth;
      s.sample_rate_hz = rate_hz;
      s.seconds = window_s;
      return synth_dataset(s);
    }
    auto records = load_csv(input);
    if (records.empty()) throw Error(ErrorKind::EmptyDataset, input + " has no rows");
    std::vector<std::string> users;
    for (const auto& r : records) {
      if (std::find(users.begin(), users.end(), r.user) == users.end()) users.push_back(r.user);
    }
    std::vector<SessionRecord> fit_on;
    for (const auto& r : records) {
      if (!held_out || *held_out >= users.size() || r.user != users[*held_out]) {
        fit_on.push_back(r);
      }
    }
    apply_normalization(records, fit_normalization(fit_on));
    return window(records, {rate_hz, window_s, stride_s});
  }

  json describe() const {
    if (!synthetic()) {
      return {{"source", input}, {"sample_rate_hz", rate_hz},
              {"window_s", window_s}, {"stride_s", stride_s}};
    }
    return {{"source", "synthetic"},
            {"classes", synth.classes},
            {"samples_per_class", synth.samples_per_class},
            {"channels", synth.channels},
            {"users", synth.users},
            {"sample_rate_hz", rate_hz},
            {"window_s", window_s},
            {"margin", synth.margin},
            {"noise_std", synth.noise_std},
            {"seed", synth.seed}};
  }
};

void write_json(const std::string& out, const json& j) {
  const std::string text = j.dump(2) + "\n";
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    write_file_atomic(out, text);
  }
}

// ---------------------------------------------------------------------------

struct EncodeCmd {
  EncodingFlags enc;
  DataFlags data;
  std::string out;

  void add(CLI::App& root) {
    auto* app = root.add_subcommand("encode", "encode windows into SPK1 spike files");
    enc.add(app, true);
    data.add(app);
    app->add_option("input", data.input, "CSV file (omit or 'synthetic' for generated data)");
    app->add_option("output", out, "output directory");
    app->add_option("--out", out, "output directory");
    app->callback([this] { run(); });
  }

  void run() {
    const auto variant = enc.variant(enc.scheme);
    const auto ds = data.load();
    if (ds.examples.empty()) throw Error(ErrorKind::EmptyDataset, "dataset has no windows");
    const auto encoded = encode_dataset(ds, variant.config);
    std::size_t spikes = 0, positions = 0;
    for (const auto& s : encoded) {
      for (auto v : s.spikes.raw()) spikes += v != 0;
      positions += s.spikes.size();
    }
    if (!out.empty()) {
      fs::create_directories(out);
      for (std::size_t i = 0; i < encoded.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "window_%05zu.spk", i);
        // The per-window seed is recorded so a rate file can be regenerated.
        EncodingConfig cfg = variant.config;
        cfg.seed = mix_seed(variant.config.seed, i);
        SpikeFileMeta meta{cfg, encoded[i].label, encoded[i].spikes.window_steps(), json::object()};
        meta.extra["scheme_name"] = variant.name;
        meta.extra["class_name"] = ds.class_names.at(encoded[i].label);
        meta.extra["user"] = ds.users.at(ds.examples[i].fold);
        meta.extra["window_index"] = i;
        meta.extra["version"] = SPIKENC_VERSION;
        write_spikes(encoded[i].spikes, meta, fs::path(out) / name);
      }
    }
    const auto& shape = encoded.front().spikes;
    std::printf("scheme=%s windows=%zu shape=(%zu,%zu,%zu) AFR=%.3f%%\n", variant.name.c_str(),
                encoded.size(), shape.trains(), shape.channels(), shape.timesteps(),
                100.0 * static_cast<double>(spikes) / static_cast<double>(positions));
  }
};

struct EvaluateCmd {
  EncodingFlags enc;
  DataFlags data;
  std::string schemes;
  std::string report = "json";
  std::string out;
  std::string noise_p = "0.001,0.01,0.1";
  EvalOptions opts;
  std::size_t epochs = 100;
  double lr = 1e-3;
  std::size_t batch = 32;
  std::uint64_t train_seed = 0;
  bool no_train = false;
  bool verbose = false;
  std::string hidden = "256,64";

  void add(CLI::App& root) {
    auto* app = root.add_subcommand("evaluate", "AFR, SNR, accuracy and robustness per scheme");
    enc.add(app, false);
    data.add(app);
    app->add_option("input", data.input, "CSV file (omit or 'synthetic' for generated data)");
    app->add_option("--schemes", schemes, "comma list; default: all eight variants");
    app->add_option("--report", report, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
    app->add_option("--out", out, "report path (default stdout)");
    app->add_option("--noise-p", noise_p, "comma list of spike error probabilities")
        ->capture_default_str();
    app->add_option("--noise-seeds", opts.noise_seeds, "noise seeds per p")->capture_default_str();
    app->add_option("--noise-seed", opts.noise_seed, "base noise seed")->capture_default_str();
    app->add_option("--test-fold", opts.test_fold, "held-out user fold")->capture_default_str();
    app->add_option("--epochs", epochs, "training epochs")->capture_default_str();
    app->add_option("--lr", lr, "learning rate")->capture_default_str();
    app->add_option("--batch", batch, "batch size")->capture_default_str();
    app->add_option("--train-seed", train_seed, "weight init and shuffling seed")
        ->capture_default_str();
    app->add_option("--stop-accuracy", opts.stop_accuracy,
                    "stop training once held-out accuracy reaches this");
    app->add_option("--hidden", hidden, "hidden layer sizes")->capture_default_str();
    app->add_flag("--no-train", no_train, "skip training and robustness");
    app->add_flag("-v,--verbose", verbose, "per-epoch progress on stderr");
    app->callback([this] { run(); });
  }

  void run() {
    std::vector<SchemeVariant> variants;
    if (schemes.empty()) {
      for (const auto& v : standard_variants(enc.base())) variants.push_back(enc.variant(v.name));
    } else {
      for (const auto& name : split(schemes, ',')) variants.push_back(enc.variant(name));
    }
    opts.noise_p = parse_doubles(noise_p);
    for (double p : opts.noise_p) {
      if (!(p >= 0.0 && p <= 1.0)) throw UsageError("--noise-p values must lie in [0, 1]");
    }
    opts.epochs = epochs;
    opts.learning_rate = lr;
    opts.batch_size = batch;
    opts.train_seed = train_seed;
    opts.train_model = !no_train;
    opts.hidden = parse_sizes(hidden);

    const auto ds = data.load(opts.test_fold);
    std::vector<EvalRow> rows;
    ProgressFn progress;
    if (verbose) progress = [](const std::string& m) { std::cerr << m << "\n"; };
    for (const auto& v : variants) rows.push_back(evaluate_variant(ds, v, opts, progress));

    json config = {{"encoding", to_json(enc.base())},
                   {"dataset", data.describe()},
                   {"schemes", json::array()},
                   {"noise_p", opts.noise_p},
                   {"noise_seeds", opts.noise_seeds},
                   {"noise_seed", opts.noise_seed},
                   {"test_fold", opts.test_fold},
                   {"train", nullptr}};
    for (const auto& v : variants) {
      json s = to_json(v.config);
      s["name"] = v.name;
      if (opts.train_model) {
        const auto setup = default_model_setup(v.config.scheme);
        s["neuron"] = {{"threshold", setup.params.threshold},
                       {"current_decay", setup.params.current_decay},
                       {"voltage_decay", setup.params.voltage_decay},
                       {"weight_gain", setup.weight_gain},
                       {"dropout_p", setup.dropout_p}};
        s["hidden"] = *opts.hidden;
      }
      config["schemes"].push_back(s);
    }
    if (opts.train_model) {
      TrainConfig tc = default_model_setup(Scheme::RateUniform).train;
      tc.epochs = epochs;
      tc.learning_rate = lr;
      tc.batch_size = batch;
      tc.seed = train_seed;
      if (opts.stop_accuracy) tc.stop_accuracy = *opts.stop_accuracy;
      config["train"] = to_json(tc);
    }

    if (report == "csv") {
      std::string text = "# version: " + std::string(SPIKENC_VERSION) + "\n# config: " +
                         config.dump() + "\n" + report_csv(rows, opts.noise_p);
      if (out.empty() || out == "-") {
        std::cout << text;
      } else {
        write_file_atomic(out, text);
      }
      return;
    }
    json j = {{"version", SPIKENC_VERSION}, {"config", config}, {"rows", json::array()}};
    for (const auto& r : rows) j["rows"].push_back(to_json(r));
    write_json(out, j);
  }
};

struct TrainCmd {
  EncodingFlags enc;
  DataFlags data;
  std::string out = "model.cuba";
  std::size_t epochs = 100;
  double lr = 1e-3;
  std::size_t batch = 32;
  std::uint64_t train_seed = 0;
  std::optional<double> stop_accuracy;
  std::optional<std::size_t> test_fold;
  std::string hidden = "256,64";
  bool verbose = false;

  void add(CLI::App& root) {
    auto* app = root.add_subcommand("train", "train a CUBA classifier on encoded windows");
    enc.add(app, true);
    data.add(app);
    app->add_option("input", data.input, "CSV file (omit or 'synthetic' for generated data)");
    app->add_option("--out", out, "checkpoint path")->capture_default_str();
    app->add_option("--epochs", epochs, "training epochs")->capture_default_str();
    app->add_option("--lr", lr, "learning rate")->capture_default_str();
    app->add_option("--batch", batch, "batch size")->capture_default_str();
    app->add_option("--train-seed", train_seed, "weight init and shuffling seed")
        ->capture_default_str();
    app->add_option("--hidden", hidden, "hidden layer sizes")->capture_default_str();
    app->add_option("--test-fold", test_fold, "held-out user fold (default: train on all)");
    app->add_option("--stop-accuracy", stop_accuracy, "stop once held-out accuracy reaches this");
    app->add_flag("-v,--verbose", verbose, "per-epoch progress on stderr");
    app->callback([this] { run(); });
  }

  void run() {
    const auto variant = enc.variant(enc.scheme);
    const auto ds = data.load(test_fold);
    if (ds.examples.empty()) throw Error(ErrorKind::EmptyDataset, "dataset has no windows");
    const auto encoded = encode_dataset(ds, variant.config);
    std::vector<SpikeSample> train_set, test_set;
    for (std::size_t i = 0; i < encoded.size(); ++i) {
      const bool held = test_fold && ds.examples[i].fold == *test_fold;
      (held ? test_set : train_set).push_back(encoded[i]);
    }

    auto setup = default_model_setup(variant.config.scheme);
    setup.train.epochs = epochs;
    setup.train.learning_rate = lr;
    setup.train.batch_size = batch;
    setup.train.seed = train_seed;
    if (stop_accuracy) setup.train.stop_accuracy = *stop_accuracy;
    std::vector<std::size_t> sizes{feature_count(encoded.front().spikes)};
    for (auto h : parse_sizes(hidden)) sizes.push_back(h);
    sizes.push_back(ds.num_classes());
    auto net = CubaNetwork::create(sizes, setup.params, setup.train.seed, setup.weight_gain);
    net.dropout_p = setup.dropout_p;

    std::string history = "epoch,loss,train_accuracy,test_accuracy\n";
    const auto result = train(net, train_set, test_set, setup.train, [&](const EpochStats& e) {
      std::ostringstream line;
      line << e.epoch << "," << e.loss << "," << e.train_accuracy << "," << e.test_accuracy
           << "\n";
      history += line.str();
      if (verbose) std::cerr << line.str();
    });

    json sidecar = {{"version", SPIKENC_VERSION},
                    {"encoding", to_json(variant.config)},
                    {"scheme_name", variant.name},
                    {"dataset", data.describe()},
                    {"train", to_json(setup.train)},
                    {"test_fold", test_fold ? json(*test_fold) : json()},
                    {"layer_sizes", result.net.layer_sizes()},
                    {"class_names", ds.class_names},
                    {"best_epoch", result.best_epoch},
                    {"best_test_accuracy", result.best_test_accuracy},
                    {"dataset_fingerprint", dataset_fingerprint(train_set)}};
    save_checkpoint(result.net, out, sidecar);
    write_file_atomic(fs::path(out).string() + ".epochs.csv", history);
    std::printf("best_epoch=%zu accuracy=%.4f checkpoint=%s\n", result.best_epoch,
                result.best_test_accuracy, out.c_str());
  }
};

struct InferCmd {
  std::string checkpoint;
  std::vector<std::string> files;

  void add(CLI::App& root) {
    auto* app = root.add_subcommand("infer", "classify spike files; one JSON object per line");
    app->add_option("--checkpoint", checkpoint, "checkpoint path")->required();
    app->add_option("files", files, "SPK1 files")->required();
    app->callback([this] { run(); });
  }

  void run() {
    const auto net = load_checkpoint(checkpoint);
    std::vector<std::string> names;
    const auto side = sidecar_path(checkpoint);
    if (fs::exists(side)) {
      const auto bytes = read_file(side);
      const auto j = json::parse(bytes.begin(), bytes.end());
      if (j.contains("class_names")) names = j["class_names"].get<std::vector<std::string>>();
    }
    for (const auto& f : files) {
      const auto [tensor, meta] = read_spikes(f);
      const auto r = forward(net, tensor);
      const auto c = classify_rates(r.rates);
      json j = {{"file", f}, {"class", c.label}, {"rates", r.rates}, {"no_spike", c.no_spike}};
      if (c.label < names.size()) j["class_name"] = names[c.label];
      if (meta.label) j["label"] = *meta.label;
      std::cout << j.dump() << "\n";
    }
  }
};

struct PerturbCmd {
  std::string input;
  std::string out;
  double p = 0.0;
  std::uint64_t seed = 0;
  std::string mode;

  void add(CLI::App& root) {
    auto* app = root.add_subcommand("perturb", "inject spike errors into a spike file");
    app->add_option("input", input, "SPK1 file")->required();
    app->add_option("output", out, "output SPK1 file");
    app->add_option("--out", out, "output SPK1 file");
    app->add_option("--noise-p", p, "error probability per position")->required();
    app->add_option("--seed", seed, "noise seed")->capture_default_str();
    app->add_option("--mode", mode, "flip or signed (default from the file's scheme)")
        ->check(CLI::IsMember({"flip", "signed"}));
    app->callback([this] { run(); });
  }

  void run() {
    if (out.empty()) throw UsageError("perturb needs an output path");
    auto [tensor, meta] = read_spikes(input);
    NoiseMode m = NoiseMode::FlipBinary;
    if (!mode.empty()) {
      m = mode == "signed" ? NoiseMode::SignedPerturb : NoiseMode::FlipBinary;
    } else if (meta.config) {
      m = default_noise_mode(meta.config->scheme);
    }
    const auto noisy = inject_noise(tensor, {p, seed, m});
    meta.extra["noise"] = {{"p", p},
                           {"seed", seed},
                           {"mode", m == NoiseMode::SignedPerturb ? "signed" : "flip"},
                           {"version", SPIKENC_VERSION}};
    write_spikes(noisy, meta, out);
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spike encoding toolkit"};
  app.set_version_flag("--version", SPIKENC_VERSION);
  app.require_subcommand(1);
  EncodeCmd encode;
  EvaluateCmd evaluate;
  TrainCmd train_cmd;
  InferCmd infer;
  PerturbCmd perturb;
  encode.add(app);
  evaluate.add(app);
  train_cmd.add(app);
  infer.add(app);
  perturb.add(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << to_string(e.kind()) << ": " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const json::exception& e) {
    std::cerr << "Parse: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return 0;
}
