// Copyright 2026 ifcorrnet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"

#include "ifcorrnet/config.hpp"

using namespace ifcn;
namespace fs = std::filesystem;

namespace {

std::string write_temp_json(const std::string& name, const std::string& body) {
  const fs::path dir = fs::temp_directory_path() / "ifcn_config_test";
  fs::create_directories(dir);
  const std::string path = (dir / name).string();
  std::ofstream f(path, std::ios::trunc);
  f << body;
  return path;
}

}  // namespace

TEST_CASE("defaults round trip through every section") {
  const RunConfig rc = RunConfig::load("", {});
  const ModelConfig m = rc.model();
  CHECK(m.L == 3);
  CHECK(m.C == 96);
  CHECK(m.B == 6);
  CHECK(m.C_H == 192);
  CHECK(m.K == 7);
  CHECK(m.n_heads == 4);
  CHECK(m.input_variant == InputVariant::kIfCorr);
  CHECK(m.output_variant == OutputVariant::kMfFilter);
  CHECK(m.beta == 0.5);
  CHECK(m.n_fft == 512);
  CHECK(m.hop == 256);

  const LossConfig l = rc.loss();
  CHECK(l.fft_sizes == std::vector<int>({256, 512, 768, 1024}));
  CHECK(l.weight_time == 1.0);
  CHECK(l.weight_tf == 1.0);

  const TrainConfig t = rc.train();
  CHECK(t.lr == 1e-3);
  CHECK(t.weight_decay == 1e-2);
  CHECK(t.beta1 == 0.9);
  CHECK(t.beta2 == 0.98);
  CHECK(t.grad_clip == 5.0);
  CHECK(t.segment_seconds == 4.0);
  CHECK(t.batch_size == 2);
  CHECK(t.schedule == "constant");

  const DataConfig d = rc.data();
  CHECK(d.n_utts == 20);
  CHECK(d.noise_kind == NoiseKind::kHumWhite);
  CHECK(d.rir_method == RirMethod::kExpDecayNoise);
}

TEST_CASE("a config file overlays the defaults") {
  const std::string path = write_temp_json(
      "good.json",
      R"({"model": {"C": 32, "C_H": 64}, "train": {"lr": 5e-4}, "loss": {"fft_sizes": [128, 256]}})");
  const RunConfig rc = RunConfig::load(path, {});
  CHECK(rc.model().C == 32);
  CHECK(rc.model().C_H == 64);
  CHECK(rc.model().B == 6);  // untouched default
  CHECK(rc.train().lr == 5e-4);
  CHECK(rc.loss().fft_sizes == std::vector<int>({128, 256}));
}

TEST_CASE("unknown keys are rejected with their dotted path") {
  const std::string path =
      write_temp_json("bad_key.json", R"({"model": {"hidden_dim": 32}})");
  try {
    RunConfig::load(path, {});
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("model.hidden_dim") != std::string::npos);
  }
  const std::string top = write_temp_json("bad_top.json", R"({"nonsense": 1})");
  CHECK_THROWS_AS(RunConfig::load(top, {}), ConfigError);
  const std::string broken = write_temp_json("broken.json", "{not json");
  CHECK_THROWS_AS(RunConfig::load(broken, {}), ConfigError);
  CHECK_THROWS_AS(RunConfig::load("/nonexistent/nowhere.json", {}), ConfigError);
}

TEST_CASE("dotted overrides parse JSON values and fall back to strings") {
  const RunConfig rc = RunConfig::load(
      "", {"train.lr=0.01", "model.C=48", "train.schedule=warmup-decay",
           "loss.fft_sizes=[128,256]", "data.t60_grid=[0.2,0.4]",
           "model.input_variant=sf-raw", "model.output_variant=sf-mask"});
  CHECK(rc.train().lr == 0.01);
  CHECK(rc.model().C == 48);
  CHECK(rc.train().schedule == "warmup-decay");
  CHECK(rc.loss().fft_sizes == std::vector<int>({128, 256}));
  CHECK(rc.data().t60_grid == std::vector<double>({0.2, 0.4}));
  CHECK(rc.model().input_variant == InputVariant::kSfRaw);
  CHECK(rc.model().output_variant == OutputVariant::kSfMask);
}

TEST_CASE("override errors are loud") {
  CHECK_THROWS_AS(RunConfig::load("", {"train.lr"}), ConfigError);        // no '='
  CHECK_THROWS_AS(RunConfig::load("", {"train.nope=1"}), ConfigError);    // unknown
  CHECK_THROWS_AS(RunConfig::load("", {"nope.lr=1"}), ConfigError);       // unknown section
  CHECK_THROWS_AS(RunConfig::load("", {"train={}"}), ConfigError);        // section assignment
  CHECK_THROWS_AS(RunConfig::load("", {"=5"}), ConfigError);              // empty key
}

TEST_CASE("section getters validate their contents") {
  CHECK_THROWS_AS(RunConfig::load("", {"model.K=4"}).model(), ConfigError);
  CHECK_THROWS_AS(RunConfig::load("", {"model.input_variant=bogus"}).model(), ConfigError);
  CHECK_THROWS_AS(
      RunConfig::load("", {"model.input_variant=if-corr", "model.output_variant=sf-mask"})
          .model(),
      ConfigError);
  CHECK_THROWS_AS(RunConfig::load("", {"loss.fft_sizes=[]"}).loss(), ConfigError);
  CHECK_THROWS_AS(RunConfig::load("", {"data.t60_min=0.9", "data.t60_max=0.2"}).data(),
                  ConfigError);
  CHECK_THROWS_AS(RunConfig::load("", {"model.C=\"wide\""}).model(), ConfigError);
}

TEST_CASE("set_seed pins both training and data seeds") {
  RunConfig rc = RunConfig::load("", {});
  rc.set_seed(99);
  CHECK(rc.train().seed == 99);
  CHECK(rc.data().seed == 99);
}

TEST_CASE("echo writes deterministic bytes") {
  const fs::path dir = fs::temp_directory_path() / "ifcn_config_echo";
  fs::remove_all(dir);

  const RunConfig rc = RunConfig::load("", {"train.lr=0.002"});
  rc.echo((dir / "a").string());
  rc.echo((dir / "b").string());

  auto slurp = [](const fs::path& p) {
    std::ifstream f(p);
    REQUIRE(f.good());
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
  };
  const std::string a = slurp(dir / "a" / "resolved.json");
  const std::string b = slurp(dir / "b" / "resolved.json");
  CHECK(a == b);
  CHECK(a.back() == '\n');
  CHECK(a.find("\"lr\": 0.002") != std::string::npos);

  // Round trip: the echoed file loads back to the same tree.
  const RunConfig back = RunConfig::load((dir / "a" / "resolved.json").string(), {});
  CHECK(back.tree == rc.tree);
  fs::remove_all(dir);
}
