#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>

#include "spikenc/dataio.hpp"
#include "spikenc/decoders.hpp"
#include "spikenc/encoders.hpp"
#include "spikenc/evaluation.hpp"
#include "spikenc/metrics.hpp"
#include "spikenc/snn.hpp"

namespace py = pybind11;
using namespace spikenc;

namespace {

using F64Array = py::array_t<double, py::array::c_style | py::array::forcecast>;
using I8Array = py::array_t<std::int8_t, py::array::c_style | py::array::forcecast>;

Signal signal_from(const F64Array& a, double rate) {
  if (a.ndim() == 1) {
    std::vector<double> row(a.data(), a.data() + a.shape(0));
    return Signal({std::move(row)}, rate);
  }
  if (a.ndim() != 2) throw Error(ErrorKind::Shape, "signal must be 1-D or (channels, samples)");
  const auto c = static_cast<std::size_t>(a.shape(0));
  const auto n = static_cast<std::size_t>(a.shape(1));
  std::vector<std::vector<double>> rows(c);
  for (std::size_t i = 0; i < c; ++i) rows[i].assign(a.data() + i * n, a.data() + (i + 1) * n);
  return Signal(rows, rate);
}

F64Array to_array(const Signal& s) {
  F64Array out({s.channels(), s.samples()});
  std::memcpy(out.mutable_data(), s.values().data(), s.values().size() * sizeof(double));
  return out;
}

I8Array spikes_array(const SpikeTensor& t) {
  I8Array out({t.trains(), t.channels(), t.timesteps()});
  std::memcpy(out.mutable_data(), t.raw().data(), t.size());
  return out;
}

SpikeTensor tensor_from(const I8Array& a, double time_step_ms, std::size_t window_steps) {
  if (a.ndim() != 3) throw Error(ErrorKind::Shape, "spike array must be (trains, channels, timesteps)");
  SpikeTensor t(a.shape(0), a.shape(1), a.shape(2), time_step_ms, window_steps);
  std::memcpy(t.raw().data(), a.data(), t.size());
  t.check_ternary();
  return t;
}

EncodingConfig make_config(const std::string& scheme, std::size_t steps, std::size_t bits,
                           std::optional<std::vector<std::vector<double>>> thresholds,
                           std::size_t interp, double mu, double var, double beta_shape,
                           std::uint64_t seed) {
  auto v = parse_variant(scheme);
  if (!v) throw Error(ErrorKind::Domain, "unknown scheme '" + scheme + "'");
  EncodingConfig cfg = v->config;
  cfg.steps_per_sample = steps;
  if (scheme == "binary") cfg.n_bits = bits;
  if (thresholds) {
    cfg.thresholds = {};
    cfg.thresholds.banks = *thresholds;
  }
  cfg.interp_factor = interp;
  cfg.normal_mu = mu;
  cfg.normal_var = var;
  cfg.beta_shape = beta_shape;
  cfg.seed = seed;
  cfg.validate();
  return cfg;
}

NoiseMode parse_mode(const std::string& mode) {
  if (mode == "flip") return NoiseMode::FlipBinary;
  if (mode == "signed") return NoiseMode::SignedPerturb;
  throw Error(ErrorKind::Domain, "noise mode must be 'flip' or 'signed'");
}

std::vector<SpikeSample> samples_from(const std::vector<std::pair<SpikeTensor, std::size_t>>& in) {
  std::vector<SpikeSample> out;
  out.reserve(in.size());
  for (const auto& [t, y] : in) out.push_back({t, y});
  return out;
}

}  // namespace

PYBIND11_MODULE(_spikenc, m) {
  m.doc() = "Spike encoders, decoders, metrics and a CUBA LIF classifier";
  m.attr("__version__") = SPIKENC_VERSION;

  // Raised as SpikencError("<Kind>: message") with a .kind attribute.
  static py::handle error_type = py::exception<Error>(m, "SpikencError", PyExc_ValueError).release();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object err = error_type(std::string(to_string(e.kind())) + ": " + e.what());
      err.attr("kind") = to_string(e.kind());
      PyErr_SetObject(error_type.ptr(), err.ptr());
    }
  });

  py::class_<EncodingConfig>(m, "EncodingConfig")
      .def(py::init(&make_config), py::arg("scheme") = "rate-uniform",
           py::arg("steps_per_sample") = 50, py::arg("n_bits") = 6,
           py::arg("thresholds") = std::nullopt, py::arg("interp_factor") = 5,
           py::arg("normal_mu") = 0.5, py::arg("normal_var") = 0.2,
           py::arg("beta_shape") = 0.75, py::arg("seed") = 0)
      .def_property_readonly("scheme", [](const EncodingConfig& c) { return to_string(c.scheme); })
      .def_readwrite("steps_per_sample", &EncodingConfig::steps_per_sample)
      .def_readwrite("n_bits", &EncodingConfig::n_bits)
      .def_readwrite("interp_factor", &EncodingConfig::interp_factor)
      .def_readwrite("seed", &EncodingConfig::seed)
      .def_property_readonly("thresholds",
                             [](const EncodingConfig& c) { return c.thresholds.banks; })
      .def("to_json", [](const EncodingConfig& c) { return to_json(c).dump(); })
      .def("__repr__", [](const EncodingConfig& c) {
        return "EncodingConfig(" + to_json(c).dump() + ")";
      });

  py::class_<SpikeTensor>(m, "SpikeTensor")
      .def(py::init(&tensor_from), py::arg("array"), py::arg("time_step_ms"),
           py::arg("window_steps") = 1)
      .def_property_readonly("array", &spikes_array)
      .def_property_readonly("shape",
                             [](const SpikeTensor& t) {
                               return py::make_tuple(t.trains(), t.channels(), t.timesteps());
                             })
      .def_property_readonly("time_step_ms", &SpikeTensor::time_step_ms)
      .def_property_readonly("window_steps", &SpikeTensor::window_steps)
      .def("__eq__", [](const SpikeTensor& a, const SpikeTensor& b) { return a == b; });

  m.def("map_value_to_rate",
        [](double v, const EncodingConfig& c) {
          return map_value_to_rate(v, RateMapping::from_config(c));
        },
        py::arg("value"), py::arg("config"));
  m.def("rate_ppf",
        [](double p, const EncodingConfig& c) { return rate_ppf(p, RateMapping::from_config(c)); },
        py::arg("rate"), py::arg("config"));

  m.def("encode",
        [](const F64Array& x, const EncodingConfig& c, double rate) {
          return encode(signal_from(x, rate), c);
        },
        py::arg("signal"), py::arg("config"), py::arg("sample_rate_hz") = 20.0);
  m.def("decode",
        [](const SpikeTensor& t, const EncodingConfig& c, double rate,
           std::optional<std::vector<double>> initial) {
          const std::vector<double> init = initial.value_or(std::vector<double>{});
          return to_array(decode(t, c, rate, init));
        },
        py::arg("spikes"), py::arg("config"), py::arg("sample_rate_hz") = 20.0,
        py::arg("initial_values") = std::nullopt);
  m.def("interpolate_linear",
        [](const F64Array& x, std::size_t factor) {
          return to_array(interpolate_linear(signal_from(x, 1.0), factor));
        },
        py::arg("signal"), py::arg("factor"));

  m.def("afr", &afr, py::arg("spikes"));
  m.def("snr_db",
        [](const F64Array& a, const F64Array& b) {
          return snr_db(signal_from(a, 1.0), signal_from(b, 1.0));
        },
        py::arg("original"), py::arg("reconstructed"));
  m.def("inject_noise",
        [](const SpikeTensor& t, double p, std::uint64_t seed, const std::string& mode) {
          return inject_noise(t, {p, seed, parse_mode(mode)});
        },
        py::arg("spikes"), py::arg("p"), py::arg("seed") = 0, py::arg("mode") = "flip");

  m.def("synth_dataset",
        [](std::size_t classes, std::size_t per_class, std::size_t users, std::uint64_t seed) {
          SynthSpec spec;
          spec.classes = classes;
          spec.samples_per_class = per_class;
          spec.users = users;
          spec.seed = seed;
          const auto ds = synth_dataset(spec);
          const std::size_t n = ds.examples.size();
          const std::size_t c = spec.channels;
          const std::size_t s = n ? ds.examples[0].signal.samples() : 0;
          F64Array x({n, c, s});
          py::array_t<std::int64_t> y(n), fold(n);
          for (std::size_t i = 0; i < n; ++i) {
            const auto& v = ds.examples[i].signal.values();
            std::memcpy(x.mutable_data() + i * c * s, v.data(), v.size() * sizeof(double));
            y.mutable_data()[i] = static_cast<std::int64_t>(ds.examples[i].label);
            fold.mutable_data()[i] = static_cast<std::int64_t>(ds.examples[i].fold);
          }
          return py::make_tuple(x, y, fold);
        },
        py::arg("classes") = 3, py::arg("samples_per_class") = 100, py::arg("users") = 5,
        py::arg("seed") = 1, "Returns (signals[N, C, S], labels[N], folds[N]).");

  m.def("write_spikes",
        [](const SpikeTensor& t, const std::filesystem::path& path,
           std::optional<EncodingConfig> cfg, std::optional<std::size_t> label) {
          write_spikes(t, {cfg, label, t.window_steps(), nlohmann::json::object()}, path);
        },
        py::arg("spikes"), py::arg("path"), py::arg("config") = std::nullopt,
        py::arg("label") = std::nullopt);
  m.def("read_spikes",
        [](const std::filesystem::path& path) {
          auto [t, meta] = read_spikes(path);
          py::dict info;
          info["label"] = meta.label ? py::cast(*meta.label) : py::none();
          info["config"] = meta.config ? py::cast(*meta.config) : py::none();
          return py::make_tuple(t, info);
        },
        py::arg("path"));

  py::class_<CubaNetwork>(m, "CubaNetwork")
      .def_static(
          "create",
          [](const std::vector<std::size_t>& sizes, double threshold, double current_decay,
             double voltage_decay, std::uint64_t seed, double weight_gain, double dropout_p) {
            auto net = CubaNetwork::create(sizes, {threshold, current_decay, voltage_decay}, seed,
                                           weight_gain);
            net.dropout_p = dropout_p;
            return net;
          },
          py::arg("sizes"), py::arg("threshold") = 1.0, py::arg("current_decay") = 0.25,
          py::arg("voltage_decay") = 0.1, py::arg("seed") = 0, py::arg("weight_gain") = 1.0,
          py::arg("dropout_p") = 0.1)
      .def_property_readonly("layer_sizes", &CubaNetwork::layer_sizes)
      .def("forward", [](const CubaNetwork& n, const SpikeTensor& t) { return forward(n, t).rates; })
      .def("classify", [](const CubaNetwork& n, const SpikeTensor& t) { return classify(n, t).label; })
      .def("save",
           [](const CubaNetwork& n, const std::filesystem::path& p) {
             save_checkpoint(n, p, {{"version", SPIKENC_VERSION}});
           })
      .def_static("load", &load_checkpoint);

  m.def("train",
        [](const CubaNetwork& net, const std::vector<std::pair<SpikeTensor, std::size_t>>& train_set,
           const std::vector<std::pair<SpikeTensor, std::size_t>>& test_set, std::size_t epochs,
           double lr, std::size_t batch, std::uint64_t seed, double stop_accuracy) {
          TrainConfig cfg;
          cfg.epochs = epochs;
          cfg.learning_rate = lr;
          cfg.batch_size = batch;
          cfg.seed = seed;
          cfg.stop_accuracy = stop_accuracy;
          const auto tr = samples_from(train_set);
          const auto te = samples_from(test_set);
          TrainResult res;
          {
            py::gil_scoped_release release;
            res = train(net, tr, te, cfg);
          }
          py::list history;
          for (const auto& e : res.history) {
            py::dict d;
            d["epoch"] = e.epoch;
            d["loss"] = e.loss;
            d["train_accuracy"] = e.train_accuracy;
            d["test_accuracy"] = e.test_accuracy;
            history.append(d);
          }
          return py::make_tuple(res.net, history);
        },
        py::arg("net"), py::arg("train_set"), py::arg("test_set") = std::vector<std::pair<SpikeTensor, std::size_t>>{},
        py::arg("epochs") = 100, py::arg("learning_rate") = 1e-3, py::arg("batch_size") = 32,
        py::arg("seed") = 0, py::arg("stop_accuracy") = 2.0,
        "Returns (best network, per-epoch history).");
}
