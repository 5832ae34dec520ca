#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <functional>
#include <unistd.h>
#include <fstream>
#include <sstream>

#include "spikenc/dataio.hpp"

using namespace spikenc;
namespace fs = std::filesystem;

namespace {

const char* kHeader = "acc_x,acc_y,acc_z,gyro_x,gyro_y,gyro_z,hbc,label,user\n";

fs::path temp_dir() {
  auto dir = fs::temp_directory_path() / ("spikenc_test_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir;
}

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::Io;
}

std::vector<SessionRecord> rows(std::size_t n, std::size_t label, const std::string& user) {
  std::vector<SessionRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({std::vector<double>(7, 0.1 * static_cast<double>(i % 10)), label, user});
  }
  return out;
}

}  // namespace

TEST_CASE("parse_csv reads well-formed rows") {
  std::istringstream in(std::string(kHeader) +
                        "1,2,3,4,5,6,7,Squat,u1\n"
                        "0.5,-1,2e-3,4,5,6,7,Squat,u1\n"
                        "1,2,3,4,5,6,7.5,Running,u2\n");
  const auto recs = parse_csv(in);
  REQUIRE(recs.size() == 3);
  CHECK(recs[1].values[1] == -1.0);
  CHECK(recs[1].values[2] == 2e-3);
  CHECK(recs[2].label == 8);
  CHECK(recs[2].user == "u2");
}

TEST_CASE("parse_csv reports the row of a bad cell") {
  std::istringstream in(std::string(kHeader) + "1,2,3,4,5,6,7,Squat,u1\n1,2,x,4,5,6,7,Squat,u1\n");
  try {
    parse_csv(in);
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Parse);
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("parse_csv rejects unknown labels and missing columns") {
  std::istringstream bad_label(std::string(kHeader) + "1,2,3,4,5,6,7,Yoga,u1\n");
  try {
    parse_csv(bad_label);
    FAIL("expected LabelError");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Label);
    CHECK(std::string(e.what()).find("Walking") != std::string::npos);
  }
  std::istringstream missing("acc_x,acc_y,label,user\n1,2,Squat,u\n");
  CHECK(kind_of([&] { parse_csv(missing); }) == ErrorKind::MissingColumn);
}

TEST_CASE("load_csv from disk") {
  const auto path = temp_dir() / "three.csv";
  {
    std::ofstream out(path);
    out << kHeader << "1,2,3,4,5,6,7,Null,a\n2,2,3,4,5,6,7,Null,a\n3,2,3,4,5,6,7,Null,a\n";
  }
  CHECK(load_csv(path).size() == 3);
  CHECK(kind_of([&] { load_csv(temp_dir() / "missing.csv"); }) == ErrorKind::Io);
}

TEST_CASE("normalize maps the training range onto [0,1]") {
  std::vector<SessionRecord> train{{{-2.0, 5.0}, 0, "a"}, {{2.0, 5.0}, 0, "a"},
                                   {{0.0, 5.0}, 0, "a"}};
  std::vector<SessionRecord> test{{{3.0, 1.0}, 0, "b"}, {{-9.0, 5.0}, 0, "b"}};
  const auto stats = normalize(train, test);
  CHECK(train[2].values[0] == 0.5);
  CHECK(train[0].values[0] == 0.0);
  CHECK(train[1].values[0] == 1.0);
  REQUIRE(stats.degenerate.size() == 1);
  CHECK(stats.degenerate[0] == 1);
  CHECK(train[0].values[1] == 0.5);
  CHECK(test[0].values[0] == 1.0);
  CHECK(test[1].values[0] == 0.0);
}

TEST_CASE("normalize is idempotent on the training split") {
  Rng rng(3);
  std::vector<SessionRecord> train;
  for (int i = 0; i < 50; ++i) {
    train.push_back({{rng.normal(0, 3), rng.normal(10, 1), rng.uniform()}, 0, "a"});
  }
  normalize(train);
  const auto once = train;
  normalize(train);
  for (std::size_t i = 0; i < train.size(); ++i) {
    for (std::size_t c = 0; c < 3; ++c) {
      REQUIRE(train[i].values[c] == doctest::Approx(once[i].values[c]).epsilon(1e-15));
    }
  }
}

TEST_CASE("window counts") {
  const auto session = rows(200, 3, "u");
  const auto ds = window(session, {});
  CHECK(ds.examples.size() == 5);
  CHECK(ds.examples[0].signal.samples() == 40);
  CHECK(ds.examples[0].signal.channels() == 7);
  CHECK(ds.examples[0].label == 3);

  CHECK(window(rows(39, 0, "u"), {}).examples.empty());

  auto mixed = rows(40, 1, "u");
  for (std::size_t i = 20; i < 40; ++i) mixed[i].label = 2;
  CHECK(window(mixed, {}).examples.empty());
}

TEST_CASE("windows never straddle users and carry fold ids") {
  auto recs = rows(60, 0, "alice");
  const auto bob = rows(80, 1, "bob");
  recs.insert(recs.end(), bob.begin(), bob.end());
  const auto ds = window(recs, {20.0, 2.0, 1.0});
  REQUIRE(ds.num_folds() == 2);
  std::size_t alice = 0, bob_n = 0;
  for (const auto& ex : ds.examples) (ex.fold == 0 ? alice : bob_n)++;
  CHECK(alice == 2);  // starts 0 and 20
  CHECK(bob_n == 3);  // starts 0, 20, 40
  const auto [train, test] = split_leave_one_out(ds, 1);
  CHECK(train.examples.size() == 2);
  CHECK(test.examples.size() == 3);
}

TEST_CASE("linear interpolation") {
  const auto up = interpolate_linear(Signal({{0.0, 1.0}}, 20.0), 5);
  REQUIRE(up.samples() == 6);
  const double want[] = {0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
  for (std::size_t i = 0; i < 6; ++i) CHECK(up.at(0, i) == doctest::Approx(want[i]));
  CHECK(up.sample_rate_hz() == 100.0);

  const Signal s({{0.3, 0.1, 0.9}}, 20.0);
  CHECK(interpolate_linear(s, 1) == s);

  const auto flat = interpolate_linear(Signal({std::vector<double>(10, 0.4)}, 20.0), 4);
  for (std::size_t i = 0; i < flat.samples(); ++i) CHECK(flat.at(0, i) == 0.4);
}

TEST_CASE("interpolation keeps originals at stride positions and monotone segments") {
  Rng rng(12);
  std::vector<double> v(30);
  for (auto& x : v) x = rng.uniform();
  const auto up = interpolate_linear(Signal({v}, 20.0), 5);
  for (std::size_t m = 0; m < v.size(); ++m) REQUIRE(up.at(0, m * 5) == v[m]);
  for (std::size_t m = 0; m + 1 < v.size(); ++m) {
    for (std::size_t k = 0; k < 5; ++k) {
      const double d = up.at(0, m * 5 + k + 1) - up.at(0, m * 5 + k);
      REQUIRE(d * (v[m + 1] - v[m]) >= 0.0);
    }
  }
}

TEST_CASE("synthetic dataset counts, determinism and separability") {
  SynthSpec spec;
  spec.classes = 3;
  spec.samples_per_class = 100;
  const auto a = synth_dataset(spec);
  CHECK(a.examples.size() == 300);
  CHECK(a.num_classes() == 3);
  CHECK(a.num_folds() == spec.users);
  const auto b = synth_dataset(spec);
  bool same = a.examples.size() == b.examples.size();
  for (std::size_t i = 0; same && i < a.examples.size(); ++i) {
    same = a.examples[i].signal == b.examples[i].signal &&
           a.examples[i].label == b.examples[i].label;
  }
  CHECK(same);
  for (const auto& ex : a.examples) {
    REQUIRE_FALSE(validate_signal(ex.signal).has_value());
    REQUIRE(ex.signal.samples() == 40);
  }

  // Class-mean signals (averaged over samples and time) differ by at least
  // the margin, less the shrinkage from noise and user shifts.
  std::vector<std::vector<double>> mean(3, std::vector<double>(7, 0.0));
  std::vector<std::size_t> count(3, 0);
  for (const auto& ex : a.examples) {
    for (std::size_t c = 0; c < 7; ++c) {
      double s = 0;
      for (double x : ex.signal.channel(c)) s += x;
      mean[ex.label][c] += s / 40.0;
    }
    ++count[ex.label];
  }
  for (std::size_t k = 0; k < 3; ++k) {
    for (auto& m : mean[k]) m /= static_cast<double>(count[k]);
  }
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = i + 1; j < 3; ++j) {
      double d = 0;
      for (std::size_t c = 0; c < 7; ++c) d += std::pow(mean[i][c] - mean[j][c], 2);
      CHECK(std::sqrt(d) >= 0.8 * spec.margin);
    }
  }
  const auto offsets = synth_class_offsets(spec);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = i + 1; j < 3; ++j) {
      double d = 0;
      for (std::size_t c = 0; c < 7; ++c) d += std::pow(offsets[i][c] - offsets[j][c], 2);
      CHECK(std::sqrt(d) >= spec.margin);
    }
  }
}

TEST_CASE("spike files round trip bit-exactly (random tensors)") {
  const auto dir = temp_dir();
  Rng rng(99);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t trains = 1 + rng.below(4);
    const std::size_t channels = 1 + rng.below(8);
    const std::size_t steps = 1 + rng.below(64);
    SpikeTensor t(trains, channels, steps, 0.5 + rng.uniform() * 50, 1 + rng.below(50));
    for (auto& v : t.raw()) v = static_cast<std::int8_t>(static_cast<int>(rng.below(3)) - 1);
    const auto bytes = serialize_spikes(t);
    REQUIRE(deserialize_spikes(bytes, t.window_steps()) == t);
  }
  SpikeTensor t(2, 7, 40, 50.0, 1);
  t.at(1, 6, 39) = -1;
  EncodingConfig cfg;
  cfg.scheme = Scheme::Binary;
  cfg.n_bits = 2;
  const auto path = dir / "w0.spk";
  write_spikes(t, {cfg, 4, 1, {}}, path);
  const auto [back, meta] = read_spikes(path);
  CHECK(back == t);
  REQUIRE(meta.label.has_value());
  CHECK(*meta.label == 4);
  REQUIRE(meta.config.has_value());
  CHECK(meta.config->scheme == Scheme::Binary);
  CHECK(meta.config->n_bits == 2);
  CHECK(to_json(*meta.config) == to_json(cfg));
}

TEST_CASE("spike file header layout") {
  SpikeTensor t(1, 2, 3, 1.0, 1);
  t.at(0, 1, 2) = -1;
  const auto b = serialize_spikes(t);
  REQUIRE(b.size() == 4 + 2 + 1 + 12 + 8 + 6);
  CHECK(std::string(b.begin(), b.begin() + 4) == "SPK1");
  CHECK(b[4] == 1);
  CHECK(b[5] == 0);
  CHECK(b[6] == 3);
  CHECK(b[7] == 1);
  CHECK(b[11] == 2);
  CHECK(b[15] == 3);
  // 1.0 as little-endian IEEE double.
  CHECK(b[19 + 7] == 0x3f);
  CHECK(b[19 + 6] == 0xf0);
  CHECK(b.back() == 0xff);
}

TEST_CASE("spike file errors") {
  SpikeTensor t(1, 2, 3, 1.0, 1);
  auto b = serialize_spikes(t);
  auto bad = b;
  bad[0] = 'X';
  CHECK(kind_of([&] { deserialize_spikes(bad); }) == ErrorKind::BadMagic);
  auto version = b;
  version[4] = 9;
  CHECK(kind_of([&] { deserialize_spikes(version); }) == ErrorKind::VersionMismatch);
  auto shorter = b;
  shorter.pop_back();
  CHECK(kind_of([&] { deserialize_spikes(shorter); }) == ErrorKind::TruncatedPayload);
  std::vector<std::uint8_t> stub(b.begin(), b.begin() + 10);
  CHECK(kind_of([&] { deserialize_spikes(stub); }) == ErrorKind::TruncatedPayload);
}
