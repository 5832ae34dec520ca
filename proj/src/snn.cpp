#include "spikenc/snn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "spikenc/dataio.hpp"

namespace spikenc {

void CubaParams::validate() const {
  if (!(threshold > 0.0)) {
    throw Error(ErrorKind::Domain, "threshold must be positive");
  }
  if (!(current_decay > 0.0 && current_decay <= 1.0) ||
      !(voltage_decay > 0.0 && voltage_decay <= 1.0)) {
    throw Error(ErrorKind::Domain, "decays must lie in (0, 1]");
  }
}

void LossSpec::validate() const {
  if (!(true_rate > 0.0 && true_rate <= 1.0) ||
      !(false_rate >= 0.0 && false_rate < 1.0) || !(false_rate < true_rate)) {
    throw Error(ErrorKind::Domain,
                "loss rates need 0 <= false_rate < true_rate <= 1");
  }
}

void TrainConfig::validate() const {
  if (epochs == 0) throw Error(ErrorKind::Domain, "epochs must be >= 1");
  if (batch_size == 0) throw Error(ErrorKind::Domain, "batch_size must be >= 1");
  if (!(learning_rate > 0.0)) {
    throw Error(ErrorKind::Domain, "learning rate must be positive");
  }
  if (!(surrogate_slope > 0.0)) {
    throw Error(ErrorKind::Domain, "surrogate slope must be positive");
  }
  loss.validate();
}

void cuba_step(const DenseLayer& layer, LayerState& state,
               std::span<const double> spikes_in, std::span<double> spikes_out) {
  if (spikes_in.size() != layer.inputs || spikes_out.size() != layer.outputs ||
      state.current.size() != layer.outputs ||
      state.voltage.size() != layer.outputs) {
    throw Error(ErrorKind::Shape, "cuba_step: dimension mismatch");
  }
  const double keep_u = 1.0 - layer.params.current_decay;
  const double keep_v = 1.0 - layer.params.voltage_decay;
  for (std::size_t o = 0; o < layer.outputs; ++o) {
    state.current[o] *= keep_u;
  }
  for (std::size_t i = 0; i < layer.inputs; ++i) {
    const double x = spikes_in[i];
    if (x == 0.0) continue;
    const double* row = &layer.weights[i * layer.outputs];
    for (std::size_t o = 0; o < layer.outputs; ++o) state.current[o] += x * row[o];
  }
  for (std::size_t o = 0; o < layer.outputs; ++o) {
    double v = keep_v * state.voltage[o] + state.current[o];
    if (v >= layer.params.threshold) {
      spikes_out[o] = 1.0;
      v = 0.0;
    } else {
      spikes_out[o] = 0.0;
    }
    state.voltage[o] = v;
  }
}

CubaNetwork CubaNetwork::create(const std::vector<std::size_t>& sizes,
                                const CubaParams& params, std::uint64_t seed,
                                double weight_gain) {
  if (sizes.size() < 2) {
    throw Error(ErrorKind::Shape, "network needs at least input and output sizes");
  }
  params.validate();
  CubaNetwork net;
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    DenseLayer layer;
    layer.inputs = sizes[l];
    layer.outputs = sizes[l + 1];
    layer.params = params;
    layer.weights.resize(layer.inputs * layer.outputs);
    const double scale =
        weight_gain * params.threshold / std::sqrt(static_cast<double>(layer.inputs));
    for (auto& w : layer.weights) w = rng.normal(0.0, scale);
    net.layers.push_back(std::move(layer));
  }
  return net;
}

std::vector<std::size_t> CubaNetwork::layer_sizes() const {
  std::vector<std::size_t> sizes;
  if (layers.empty()) return sizes;
  sizes.push_back(layers.front().inputs);
  for (const auto& l : layers) sizes.push_back(l.outputs);
  return sizes;
}

void CubaNetwork::validate() const {
  if (layers.empty()) throw Error(ErrorKind::Shape, "network has no layers");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    layer.params.validate();
    if (layer.weights.size() != layer.inputs * layer.outputs) {
      throw Error(ErrorKind::Shape, "weight matrix size mismatch");
    }
    if (l > 0 && layers[l - 1].outputs != layer.inputs) {
      throw Error(ErrorKind::Shape, "layer sizes do not chain");
    }
  }
  if (!(dropout_p >= 0.0 && dropout_p < 1.0)) {
    throw Error(ErrorKind::Domain, "dropout must lie in [0, 1)");
  }
}

std::size_t feature_count(const SpikeTensor& tensor) {
  return tensor.trains() * tensor.channels();
}

namespace {

// Input spikes regrouped per time step as sparse (feature, value) events.
struct InputEvents {
  std::size_t timesteps = 0;
  std::size_t features = 0;
  std::vector<std::uint32_t> offsets;
  std::vector<std::uint32_t> index;
  std::vector<double> value;

  explicit InputEvents(const SpikeTensor& t)
      : timesteps(t.timesteps()), features(feature_count(t)) {
    offsets.reserve(timesteps + 1);
    offsets.push_back(0);
    for (std::size_t s = 0; s < timesteps; ++s) {
      for (std::size_t tr = 0; tr < t.trains(); ++tr) {
        for (std::size_t c = 0; c < t.channels(); ++c) {
          const int v = t.at(tr, c, s);
          if (v != 0) {
            index.push_back(static_cast<std::uint32_t>(tr * t.channels() + c));
            value.push_back(v);
          }
        }
      }
      offsets.push_back(static_cast<std::uint32_t>(index.size()));
    }
  }
};

enum class Mode { Hard, Soft };

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Full state history of one run, kept for the backward pass.
struct Trace {
  std::size_t timesteps = 0;
  // Per layer: pre-reset voltage and activation, timesteps x outputs.
  std::vector<std::vector<double>> vpre;
  std::vector<std::vector<double>> act;
  // Per hidden layer: dropout scale applied to each output (empty = none).
  std::vector<std::vector<double>> keep;
};

struct Simulator {
  const CubaNetwork& net;
  Mode mode;
  double slope;

  // Runs all layers over all steps. Returns the output activations
  // (timesteps x classes). When `trace` is set, records everything needed by
  // backward(). `dropout_rng` enables dropout on hidden outputs.
  std::vector<double> run(const InputEvents& in, Trace* trace,
                          Rng* dropout_rng) const {
    const std::size_t T = in.timesteps;
    const std::size_t L = net.layers.size();
    std::vector<LayerState> states;
    for (const auto& l : net.layers) states.emplace_back(l.outputs);
    if (trace) {
      trace->timesteps = T;
      trace->vpre.assign(L, {});
      trace->act.assign(L, {});
      trace->keep.assign(L, {});
      for (std::size_t l = 0; l < L; ++l) {
        trace->vpre[l].resize(T * net.layers[l].outputs);
        trace->act[l].resize(T * net.layers[l].outputs);
      }
    }
    std::vector<std::vector<double>> keep(L);
    if (dropout_rng && net.dropout_p > 0.0) {
      // One mask per sample, fixed over time.
      const double scale = 1.0 / (1.0 - net.dropout_p);
      for (std::size_t l = 0; l + 1 < L; ++l) {
        keep[l].resize(net.layers[l].outputs);
        for (auto& k : keep[l]) {
          k = dropout_rng->uniform() < net.dropout_p ? 0.0 : scale;
        }
      }
      if (trace) trace->keep = keep;
    }

    std::vector<double> output(T * net.classes());
    std::vector<std::vector<double>> act(L);
    for (std::size_t l = 0; l < L; ++l) act[l].resize(net.layers[l].outputs);

    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t l = 0; l < L; ++l) {
        const auto& layer = net.layers[l];
        auto& st = states[l];
        const double keep_u = 1.0 - layer.params.current_decay;
        const double keep_v = 1.0 - layer.params.voltage_decay;
        const double theta = layer.params.threshold;
        const std::size_t n = layer.outputs;
        for (std::size_t o = 0; o < n; ++o) st.current[o] *= keep_u;
        if (l == 0) {
          for (auto e = in.offsets[t]; e < in.offsets[t + 1]; ++e) {
            const double x = in.value[e];
            const double* row = &layer.weights[in.index[e] * n];
            for (std::size_t o = 0; o < n; ++o) st.current[o] += x * row[o];
          }
        } else {
          const auto& prev = act[l - 1];
          const auto& k = keep[l - 1];
          for (std::size_t i = 0; i < layer.inputs; ++i) {
            double x = prev[i];
            if (x == 0.0) continue;
            if (!k.empty()) x *= k[i];
            if (x == 0.0) continue;
            const double* row = &layer.weights[i * n];
            for (std::size_t o = 0; o < n; ++o) st.current[o] += x * row[o];
          }
        }
        auto& a = act[l];
        for (std::size_t o = 0; o < n; ++o) {
          const double vp = keep_v * st.voltage[o] + st.current[o];
          double s;
          if (mode == Mode::Hard) {
            s = vp >= theta ? 1.0 : 0.0;
          } else {
            s = sigmoid(slope * (vp - theta));
          }
          st.voltage[o] = vp * (1.0 - s);
          a[o] = s;
          if (trace) {
            trace->vpre[l][t * n + o] = vp;
            trace->act[l][t * n + o] = s;
          }
        }
      }
      std::copy(act[L - 1].begin(), act[L - 1].end(),
                output.begin() + static_cast<std::ptrdiff_t>(t * net.classes()));
    }
    return output;
  }

  // Accumulates d(loss)/d(weights) * weight into `grads` given the gradient
  // of the loss with respect to each output activation.
  void backward(const InputEvents& in, const Trace& trace,
                std::vector<double> g_act, double weight,
                std::vector<std::vector<double>>& grads) const {
    const std::size_t T = trace.timesteps;
    const std::size_t L = net.layers.size();
    std::vector<double> du, lam_u, lam_v;
    for (std::size_t l = L; l-- > 0;) {
      const auto& layer = net.layers[l];
      const std::size_t n = layer.outputs;
      const std::size_t n_in = layer.inputs;
      const double a_u = 1.0 - layer.params.current_decay;
      const double a_v = 1.0 - layer.params.voltage_decay;
      const double theta = layer.params.threshold;
      du.assign(n, 0.0);
      lam_u.assign(n, 0.0);
      lam_v.assign(n, 0.0);
      auto& gw = grads[l];
      std::vector<double> g_in;
      if (l > 0) g_in.assign(T * n_in, 0.0);
      const std::vector<double>* prev_keep =
          l > 0 && !trace.keep[l - 1].empty() ? &trace.keep[l - 1] : nullptr;

      for (std::size_t t = T; t-- > 0;) {
        const double* vp = &trace.vpre[l][t * n];
        const double* s = &trace.act[l][t * n];
        const double* gs = &g_act[t * n];
        bool any = false;
        for (std::size_t o = 0; o < n; ++o) {
          double fprime;
          double d_s = gs[o];
          if (mode == Mode::Soft) {
            fprime = slope * s[o] * (1.0 - s[o]);
            d_s -= lam_v[o] * vp[o];  // reset path v = vpre * (1 - s)
          } else {
            const double z = 1.0 + slope * std::abs(vp[o] - theta);
            fprime = 1.0 / (z * z);
          }
          const double d_vp = d_s * fprime + lam_v[o] * (1.0 - s[o]);
          const double d_u = d_vp + lam_u[o];
          du[o] = d_u;
          lam_v[o] = a_v * d_vp;
          lam_u[o] = a_u * d_u;
          any = any || d_u != 0.0;
        }
        if (!any) continue;
        if (l == 0) {
          for (auto e = in.offsets[t]; e < in.offsets[t + 1]; ++e) {
            const double x = in.value[e] * weight;
            double* row = &gw[in.index[e] * n];
            for (std::size_t o = 0; o < n; ++o) row[o] += x * du[o];
          }
        } else {
          const double* x_prev = &trace.act[l - 1][t * n_in];
          double* gi = &g_in[t * n_in];
          for (std::size_t i = 0; i < n_in; ++i) {
            const double* wrow = &layer.weights[i * n];
            double x = x_prev[i];
            if (prev_keep) x *= (*prev_keep)[i];
            if (x != 0.0) {
              double* row = &gw[i * n];
              const double xw = x * weight;
              for (std::size_t o = 0; o < n; ++o) row[o] += xw * du[o];
            }
            double acc = 0.0;
            for (std::size_t o = 0; o < n; ++o) acc += wrow[o] * du[o];
            gi[i] = prev_keep ? acc * (*prev_keep)[i] : acc;
          }
        }
      }
      if (l > 0) g_act = std::move(g_in);
    }
  }
};

// Loss and d(loss)/d(output activation) for one run.
double loss_and_grad(std::span<const double> output, std::size_t T,
                     std::size_t C, std::size_t label, const LossSpec& spec,
                     std::vector<double>* g_out) {
  std::vector<double> rates(C, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t c = 0; c < C; ++c) rates[c] += output[t * C + c];
  }
  for (auto& r : rates) r /= static_cast<double>(T);
  const double loss = spike_rate_loss(rates, label, spec);
  if (g_out) {
    g_out->assign(T * C, 0.0);
    for (std::size_t c = 0; c < C; ++c) {
      const double target = c == label ? spec.true_rate : spec.false_rate;
      const double g = 2.0 * (rates[c] - target) /
                       (static_cast<double>(C) * static_cast<double>(T));
      for (std::size_t t = 0; t < T; ++t) (*g_out)[t * C + c] = g;
    }
  }
  return loss;
}

void check_input(const CubaNetwork& net, const SpikeTensor& input) {
  if (feature_count(input) != net.inputs()) {
    throw Error(ErrorKind::Shape,
                "input has " + std::to_string(feature_count(input)) +
                    " features per step, network expects " +
                    std::to_string(net.inputs()));
  }
  if (input.timesteps() == 0) {
    throw Error(ErrorKind::Shape, "input has no time steps");
  }
}

std::vector<std::vector<double>> zero_grads(const CubaNetwork& net) {
  std::vector<std::vector<double>> g;
  for (const auto& l : net.layers) g.emplace_back(l.weights.size(), 0.0);
  return g;
}

}  // namespace

ForwardResult forward(const CubaNetwork& net, const SpikeTensor& input) {
  check_input(net, input);
  const InputEvents events(input);
  const Simulator sim{net, Mode::Hard, 1.0};
  const auto out = sim.run(events, nullptr, nullptr);
  ForwardResult result;
  result.timesteps = input.timesteps();
  result.classes = net.classes();
  result.raster.resize(out.size());
  result.rates.assign(result.classes, 0.0);
  for (std::size_t t = 0; t < result.timesteps; ++t) {
    for (std::size_t c = 0; c < result.classes; ++c) {
      const double s = out[t * result.classes + c];
      result.raster[t * result.classes + c] = s != 0.0 ? 1 : 0;
      result.rates[c] += s;
    }
  }
  for (auto& r : result.rates) r /= static_cast<double>(result.timesteps);
  return result;
}

Classification classify_rates(std::span<const double> rates) {
  Classification c;
  if (rates.empty()) {
    c.no_spike = true;
    return c;
  }
  double best = rates[0];
  for (std::size_t i = 1; i < rates.size(); ++i) {
    if (rates[i] > best) {
      best = rates[i];
      c.label = i;
    }
  }
  c.no_spike = best == 0.0;
  return c;
}

Classification classify(const CubaNetwork& net, const SpikeTensor& input) {
  return classify_rates(forward(net, input).rates);
}

double spike_rate_loss(std::span<const double> rates, std::size_t label,
                       const LossSpec& spec) {
  if (label >= rates.size()) {
    throw Error(ErrorKind::Index, "label " + std::to_string(label) +
                                      " out of range for " +
                                      std::to_string(rates.size()) + " classes");
  }
  double sum = 0.0;
  for (std::size_t c = 0; c < rates.size(); ++c) {
    const double target = c == label ? spec.true_rate : spec.false_rate;
    sum += (rates[c] - target) * (rates[c] - target);
  }
  return sum / static_cast<double>(rates.size());
}

double accuracy(const CubaNetwork& net, std::span<const SpikeSample> samples) {
  if (samples.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& s : samples) {
    correct += classify(net, s.spikes).label == s.label ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(samples.size());
}

Gradients compute_gradients(const CubaNetwork& net, const SpikeSample& sample,
                            const TrainConfig& cfg) {
  check_input(net, sample.spikes);
  const InputEvents events(sample.spikes);
  const Simulator sim{net, cfg.soft_mode ? Mode::Soft : Mode::Hard,
                      cfg.surrogate_slope};
  Trace trace;
  const auto out = sim.run(events, &trace, nullptr);
  std::vector<double> g_out;
  Gradients g;
  g.loss = loss_and_grad(out, events.timesteps, net.classes(), sample.label,
                         cfg.loss, &g_out);
  g.layers = zero_grads(net);
  sim.backward(events, trace, std::move(g_out), 1.0, g.layers);
  return g;
}

double sample_loss(const CubaNetwork& net, const SpikeSample& sample,
                   const TrainConfig& cfg) {
  check_input(net, sample.spikes);
  const InputEvents events(sample.spikes);
  const Simulator sim{net, cfg.soft_mode ? Mode::Soft : Mode::Hard,
                      cfg.surrogate_slope};
  const auto out = sim.run(events, nullptr, nullptr);
  return loss_and_grad(out, events.timesteps, net.classes(), sample.label,
                       cfg.loss, nullptr);
}

GradCheckResult gradient_check(const CubaNetwork& net, const SpikeSample& sample,
                               const TrainConfig& cfg, std::size_t samples,
                               std::uint64_t seed) {
  GradCheckResult result;
  if (!cfg.soft_mode) {
    result.status = GradCheckStatus::NonDifferentiable;
    return result;
  }
  const auto analytic = compute_gradients(net, sample, cfg);
  constexpr double h = 1e-5;
  Rng rng(seed);
  CubaNetwork probe = net;
  std::size_t total = 0;
  for (const auto& l : net.layers) total += l.weights.size();
  for (std::size_t k = 0; k < samples; ++k) {
    std::size_t flat = rng.below(total);
    std::size_t l = 0;
    while (flat >= probe.layers[l].weights.size()) {
      flat -= probe.layers[l].weights.size();
      ++l;
    }
    double& w = probe.layers[l].weights[flat];
    const double saved = w;
    w = saved + h;
    const double up = sample_loss(probe, sample, cfg);
    w = saved - h;
    const double down = sample_loss(probe, sample, cfg);
    w = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double a = analytic.layers[l][flat];
    const double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
    result.max_relative_error =
        std::max(result.max_relative_error, std::abs(a - numeric) / denom);
    ++result.checked;
  }
  return result;
}

TrainResult train(const CubaNetwork& initial,
                  std::span<const SpikeSample> train_set,
                  std::span<const SpikeSample> test_set, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
  cfg.validate();
  initial.validate();
  if (train_set.empty()) {
    throw Error(ErrorKind::EmptyDataset, "training set is empty");
  }
  for (const auto& s : train_set) {
    check_input(initial, s.spikes);
    if (s.label >= initial.classes()) {
      throw Error(ErrorKind::Index, "label out of range");
    }
    if (s.spikes.timesteps() != train_set.front().spikes.timesteps()) {
      throw Error(ErrorKind::Shape, "training tensors differ in shape");
    }
  }
  const auto selection = test_set.empty() ? train_set : test_set;

  std::vector<InputEvents> events;
  events.reserve(train_set.size());
  for (const auto& s : train_set) events.emplace_back(s.spikes);

  CubaNetwork net = initial;
  const Simulator sim{net, cfg.soft_mode ? Mode::Soft : Mode::Hard,
                      cfg.surrogate_slope};
  auto m = zero_grads(net);
  auto v = zero_grads(net);
  auto grads = zero_grads(net);
  std::size_t step = 0;

  Rng rng(cfg.seed);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  result.net = net;
  result.best_test_accuracy = -1.0;
  Trace trace;
  std::vector<double> g_out;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Fisher-Yates with our own variates.
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng.below(i)]);
    }
    double epoch_loss = 0.0;
    std::size_t correct = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      const double weight = 1.0 / static_cast<double>(end - begin);
      for (auto& g : grads) std::fill(g.begin(), g.end(), 0.0);
      for (std::size_t b = begin; b < end; ++b) {
        const std::size_t idx = order[b];
        const auto out = sim.run(events[idx], &trace, &rng);
        const double loss =
            loss_and_grad(out, events[idx].timesteps, net.classes(),
                          train_set[idx].label, cfg.loss, &g_out);
        if (!std::isfinite(loss)) {
          throw Error(ErrorKind::Divergence,
                      "non-finite loss at epoch " + std::to_string(epoch));
        }
        epoch_loss += loss;
        std::vector<double> rates(net.classes(), 0.0);
        for (std::size_t t = 0; t < events[idx].timesteps; ++t) {
          for (std::size_t c = 0; c < net.classes(); ++c) {
            rates[c] += out[t * net.classes() + c];
          }
        }
        correct += classify_rates(rates).label == train_set[idx].label ? 1 : 0;
        sim.backward(events[idx], trace, g_out, weight, grads);
      }
      ++step;
      const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
      for (std::size_t l = 0; l < net.layers.size(); ++l) {
        auto& w = net.layers[l].weights;
        for (std::size_t i = 0; i < w.size(); ++i) {
          const double g = grads[l][i];
          if (!std::isfinite(g)) {
            throw Error(ErrorKind::Divergence, "non-finite gradient");
          }
          m[l][i] = cfg.beta1 * m[l][i] + (1.0 - cfg.beta1) * g;
          v[l][i] = cfg.beta2 * v[l][i] + (1.0 - cfg.beta2) * g * g;
          w[i] -= cfg.learning_rate * (m[l][i] / bc1) /
                  (std::sqrt(v[l][i] / bc2) + cfg.epsilon);
        }
      }
    }
    EpochStats stats;
    stats.epoch = epoch + 1;
    stats.loss = epoch_loss / static_cast<double>(train_set.size());
    stats.train_accuracy =
        static_cast<double>(correct) / static_cast<double>(train_set.size());
    stats.test_accuracy = accuracy(net, selection);
    result.history.push_back(stats);
    if (on_epoch) on_epoch(stats);
    if (stats.test_accuracy > result.best_test_accuracy) {
      result.best_test_accuracy = stats.test_accuracy;
      result.best_epoch = stats.epoch;
      result.net = net;
    }
    if (stats.test_accuracy >= cfg.stop_accuracy) break;
  }
  return result;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr char kCheckpointMagic[4] = {'C', 'U', 'B', 'A'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f32(std::vector<std::uint8_t>& out, double v) {
  put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
}

struct Reader {
  std::span<const std::uint8_t> bytes;
  std::size_t pos = 0;

  std::uint32_t u(std::size_t width) {
    if (pos + width > bytes.size()) {
      throw Error(ErrorKind::TruncatedPayload, "checkpoint truncated");
    }
    std::uint32_t v = 0;
    for (std::size_t i = 0; i < width; ++i) {
      v |= static_cast<std::uint32_t>(bytes[pos + i]) << (8 * i);
    }
    pos += width;
    return v;
  }
  double f32() { return std::bit_cast<float>(u(4)); }
};

}  // namespace

std::vector<std::uint8_t> serialize_network(const CubaNetwork& net) {
  net.validate();
  std::vector<std::uint8_t> out(std::begin(kCheckpointMagic),
                                std::end(kCheckpointMagic));
  out.push_back(static_cast<std::uint8_t>(kCheckpointVersion & 0xff));
  out.push_back(static_cast<std::uint8_t>(kCheckpointVersion >> 8));
  out.push_back(static_cast<std::uint8_t>(net.layers.size()));
  for (auto s : net.layer_sizes()) put_u32(out, static_cast<std::uint32_t>(s));
  put_f32(out, net.dropout_p);
  for (const auto& layer : net.layers) {
    put_f32(out, layer.params.threshold);
    put_f32(out, layer.params.current_decay);
    put_f32(out, layer.params.voltage_decay);
    for (std::size_t o = 0; o < layer.outputs; ++o) {
      for (std::size_t i = 0; i < layer.inputs; ++i) {
        put_f32(out, layer.weight(i, o));
      }
    }
  }
  return out;
}

CubaNetwork deserialize_network(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 ||
      !std::equal(std::begin(kCheckpointMagic), std::end(kCheckpointMagic),
                  bytes.begin(), [](char a, std::uint8_t b) {
                    return static_cast<std::uint8_t>(a) == b;
                  })) {
    throw Error(ErrorKind::BadMagic, "not a CUBA checkpoint");
  }
  Reader r{bytes, 4};
  const auto version = r.u(2);
  if (version != kCheckpointVersion) {
    throw Error(ErrorKind::VersionMismatch,
                "unsupported checkpoint version " + std::to_string(version));
  }
  const auto n_layers = r.u(1);
  std::vector<std::size_t> sizes;
  for (std::uint32_t i = 0; i <= n_layers; ++i) sizes.push_back(r.u(4));
  CubaNetwork net;
  net.dropout_p = r.f32();
  for (std::uint32_t l = 0; l < n_layers; ++l) {
    DenseLayer layer;
    layer.inputs = sizes[l];
    layer.outputs = sizes[l + 1];
    layer.params.threshold = r.f32();
    layer.params.current_decay = r.f32();
    layer.params.voltage_decay = r.f32();
    layer.weights.resize(layer.inputs * layer.outputs);
    for (std::size_t o = 0; o < layer.outputs; ++o) {
      for (std::size_t i = 0; i < layer.inputs; ++i) layer.weight(i, o) = r.f32();
    }
    net.layers.push_back(std::move(layer));
  }
  net.validate();
  return net;
}

nlohmann::json to_json(const TrainConfig& cfg) {
  return {{"epochs", cfg.epochs},
          {"learning_rate", cfg.learning_rate},
          {"batch_size", cfg.batch_size},
          {"optimizer",
           {{"name", "adam"},
            {"beta1", cfg.beta1},
            {"beta2", cfg.beta2},
            {"epsilon", cfg.epsilon}}},
          {"surrogate_slope", cfg.surrogate_slope},
          {"soft_mode", cfg.soft_mode},
          {"loss", {{"true_rate", cfg.loss.true_rate},
                    {"false_rate", cfg.loss.false_rate}}},
          {"seed", cfg.seed},
          {"stop_accuracy", cfg.stop_accuracy}};
}

void save_checkpoint(const CubaNetwork& net, const std::filesystem::path& path,
                     const nlohmann::json& sidecar) {
  write_file_atomic(path, serialize_network(net));
  write_file_atomic(sidecar_path(path), sidecar.dump(2) + "\n");
}

CubaNetwork load_checkpoint(const std::filesystem::path& path) {
  return deserialize_network(read_file(path));
}

std::uint64_t dataset_fingerprint(std::span<const SpikeSample> samples) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](std::uint8_t b) {
    h ^= b;
    h *= 0x100000001b3ull;
  };
  for (const auto& s : samples) {
    for (auto v : s.spikes.raw()) mix(static_cast<std::uint8_t>(v));
    for (int i = 0; i < 8; ++i) mix(static_cast<std::uint8_t>(s.label >> (8 * i)));
  }
  return h;
}

}  // namespace spikenc
