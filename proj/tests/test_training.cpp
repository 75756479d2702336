// Copyright 2026 ifcorrnet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "doctest.h"

#include "ifcorrnet/config.hpp"
#include "ifcorrnet/rng.hpp"
#include "ifcorrnet/training.hpp"

using namespace ifcn;
namespace fs = std::filesystem;

namespace {

ModelConfig tiny_model_cfg() {
  ModelConfig c;
  c.L = 0;
  c.C = 4;
  c.B = 1;
  c.C_H = 8;
  c.K = 3;
  c.n_heads = 2;
  c.input_variant = InputVariant::kSfRaw;
  c.output_variant = OutputVariant::kSfMask;
  return c;
}

LossConfig tiny_loss_cfg() {
  LossConfig c;
  c.fft_sizes = {256, 512};
  return c;
}

TrainConfig tiny_train_cfg() {
  TrainConfig c;
  c.max_epochs = 2;
  c.segment_seconds = 1.0;
  c.batch_size = 2;
  c.val_fraction = 0.25;
  c.seed = 5;
  return c;
}

std::vector<ManifestRow> tiny_dataset(const fs::path& dir, uint64_t seed = 13) {
  DataConfig cfg;
  cfg.n_utts = 4;
  cfg.utt_seconds = 1.1;
  cfg.rir_seconds = 0.2;
  cfg.seed = seed;
  return make_dataset(cfg, dir.string());
}

std::string file_bytes(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(f.good());
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void check_params_equal(Model& a, Model& b) {
  auto pa = a.params(), pb = b.params();
  REQUIRE(pa.size() == pb.size());
  for (size_t i = 0; i < pa.size(); ++i) {
    REQUIRE(pa[i]->name == pb[i]->name);
    REQUIRE(pa[i]->value.shape == pb[i]->value.shape);
    for (size_t j = 0; j < pa[i]->value.data.size(); ++j)
      CHECK(pa[i]->value.data[j] == pb[i]->value.data[j]);
  }
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("two identical runs agree bitwise, step for step") {
  TempDir tmp("ifcn_train_repro");
  const auto rows = tiny_dataset(tmp.path / "data");

  Model a(tiny_model_cfg()), b(tiny_model_cfg());
  a.init_params(1);
  b.init_params(1);
  const TrainConfig tc = tiny_train_cfg();
  const LossConfig lc = tiny_loss_cfg();

  const TrainResult ra = train(a, tc, lc, rows, (tmp.path / "runA").string());
  const TrainResult rb = train(b, tc, lc, rows, (tmp.path / "runB").string());

  // 4 utts, 1 held out, batch 2 -> 2 batches/epoch, 2 epochs.
  CHECK(ra.steps == 4);
  CHECK(ra.epochs == 2);
  CHECK(rb.steps == 4);
  CHECK(ra.final_train_loss == rb.final_train_loss);
  CHECK(ra.best_val_loss == rb.best_val_loss);
  check_params_equal(a, b);
  CHECK(file_bytes((tmp.path / "runA" / "train_log.jsonl").string()) ==
        file_bytes((tmp.path / "runB" / "train_log.jsonl").string()));
  CHECK(file_bytes((tmp.path / "runA" / "last.ckpt").string()) ==
        file_bytes((tmp.path / "runB" / "last.ckpt").string()));

  // The log is JSONL with the expected fields and consecutive steps.
  std::ifstream log((tmp.path / "runA" / "train_log.jsonl").string());
  std::string line;
  int64_t expect_step = 1;
  while (std::getline(log, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j.at("step").get<int64_t>() == expect_step);
    CHECK(j.at("loss_total").get<double>() ==
          doctest::Approx(j.at("loss_time").get<double>() + j.at("loss_tf").get<double>()));
    CHECK(j.at("lr").get<double>() == 1e-3);
    ++expect_step;
  }
  CHECK(expect_step == 5);
}

TEST_CASE("resuming from the last checkpoint matches the straight run bitwise") {
  TempDir tmp("ifcn_train_resume");
  const auto rows = tiny_dataset(tmp.path / "data");
  const LossConfig lc = tiny_loss_cfg();

  Model straight(tiny_model_cfg());
  straight.init_params(2);
  TrainConfig tc = tiny_train_cfg();
  tc.max_epochs = 2;
  train(straight, tc, lc, rows, (tmp.path / "straight").string());

  Model part(tiny_model_cfg());
  part.init_params(2);
  TrainConfig tc1 = tc;
  tc1.max_epochs = 1;
  train(part, tc1, lc, rows, (tmp.path / "resumed").string());

  Model fresh(tiny_model_cfg());
  fresh.init_params(999);  // overwritten by the checkpoint on resume
  const TrainResult rr =
      train(fresh, tc, lc, rows, (tmp.path / "resumed").string(), /*resume=*/true);
  CHECK(rr.steps == 4);
  CHECK(rr.epochs == 2);

  check_params_equal(straight, fresh);
  CHECK(file_bytes((tmp.path / "straight" / "last.ckpt").string()) ==
        file_bytes((tmp.path / "resumed" / "last.ckpt").string()));
  CHECK(file_bytes((tmp.path / "straight" / "last.state").string()) ==
        file_bytes((tmp.path / "resumed" / "last.state").string()));
  CHECK(file_bytes((tmp.path / "straight" / "train_log.jsonl").string()) ==
        file_bytes((tmp.path / "resumed" / "train_log.jsonl").string()));
}

TEST_CASE("zero epochs snapshots the initial model") {
  TempDir tmp("ifcn_train_zero");
  const auto rows = tiny_dataset(tmp.path / "data");

  Model m(tiny_model_cfg());
  m.init_params(3);
  TrainConfig tc = tiny_train_cfg();
  tc.max_epochs = 0;
  const TrainResult r = train(m, tc, tiny_loss_cfg(), rows, (tmp.path / "run").string());
  CHECK(r.steps == 0);
  CHECK(std::isnan(r.best_val_loss));
  CHECK(fs::exists(tmp.path / "run" / "last.ckpt"));
  CHECK(fs::exists(tmp.path / "run" / "last.state"));
  CHECK_FALSE(fs::exists(tmp.path / "run" / "best.ckpt"));

  Model loaded = Model::load_checkpoint((tmp.path / "run" / "last.ckpt").string());
  check_params_equal(m, loaded);
}

TEST_CASE("a non-finite loss aborts and names the batch") {
  TempDir tmp("ifcn_train_nan");
  const auto rows = tiny_dataset(tmp.path / "data");

  Model m(tiny_model_cfg());
  m.init_params(4);
  for (auto& v : m.in1.w.value.data) v = 1e200;

  try {
    train(m, tiny_train_cfg(), tiny_loss_cfg(), rows, (tmp.path / "run").string());
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("step 1") != std::string::npos);
    CHECK(msg.find("utt") != std::string::npos);
  }
}

TEST_CASE("broken validation files cannot bend the trajectory") {
  TempDir tmp("ifcn_train_valiso");
  const auto rows = tiny_dataset(tmp.path / "data");

  // Variant manifest whose held-out row (the last one) points at garbage.
  auto broken = rows;
  const std::string bogus = (tmp.path / "data" / "corrupt.wav").string();
  std::ofstream(bogus) << "this is not audio";
  broken.back().mixture_path = bogus;

  Model a(tiny_model_cfg()), b(tiny_model_cfg());
  a.init_params(6);
  b.init_params(6);
  const TrainConfig tc = tiny_train_cfg();
  const LossConfig lc = tiny_loss_cfg();
  const TrainResult ra = train(a, tc, lc, rows, (tmp.path / "clean").string());
  const TrainResult rb = train(b, tc, lc, broken, (tmp.path / "broken").string());

  check_params_equal(a, b);
  CHECK(ra.steps == rb.steps);
  // The broken run fell back to the train loss for model selection but still
  // produced a best checkpoint.
  CHECK(fs::exists(tmp.path / "broken" / "best.ckpt"));
}

TEST_CASE("the warmup-decay schedule shapes the logged learning rate") {
  TempDir tmp("ifcn_train_sched");
  const auto rows = tiny_dataset(tmp.path / "data");

  Model m(tiny_model_cfg());
  m.init_params(7);
  TrainConfig tc = tiny_train_cfg();
  tc.schedule = "warmup-decay";
  tc.warmup_steps = 2;
  train(m, tc, tiny_loss_cfg(), rows, (tmp.path / "run").string());

  std::ifstream log((tmp.path / "run" / "train_log.jsonl").string());
  std::string line;
  int64_t t = 1;
  while (std::getline(log, line)) {
    const auto j = nlohmann::json::parse(line);
    const double want =
        tc.lr * std::min(static_cast<double>(t) / 2.0, std::sqrt(2.0 / static_cast<double>(t)));
    CHECK(j.at("lr").get<double>() == doctest::Approx(want).epsilon(1e-15));
    ++t;
  }
  CHECK(t == 5);
}

TEST_CASE("optimizer state round trips exactly") {
  TempDir tmp("ifcn_train_state");
  Model m(tiny_model_cfg());
  m.init_params(8);

  OptimState s;
  s.step = 17;
  s.epoch = 3;
  s.best_val = 0.125;
  s.has_best = true;
  Rng rng(9);
  for (Param* p : m.params()) {
    Tensor mm = Tensor::zeros(p->value.shape), vv = Tensor::zeros(p->value.shape);
    for (auto& x : mm.data) x = rng.normal();
    for (auto& x : vv.data) x = std::abs(rng.normal());
    s.m.push_back(std::move(mm));
    s.v.push_back(std::move(vv));
  }
  const std::string path = (tmp.path / "opt.state").string();
  save_optim_state(s, m, path);
  const OptimState r = load_optim_state(m, path);
  CHECK(r.step == 17);
  CHECK(r.epoch == 3);
  CHECK(r.best_val == 0.125);
  CHECK(r.has_best);
  for (size_t i = 0; i < s.m.size(); ++i) {
    for (size_t j = 0; j < s.m[i].data.size(); ++j) {
      CHECK(r.m[i].data[j] == s.m[i].data[j]);
      CHECK(r.v[i].data[j] == s.v[i].data[j]);
    }
  }
}

TEST_CASE("inference matches input length and repeats exactly") {
  Model m(tiny_model_cfg());
  m.init_params(10);
  Rng rng(11);
  for (auto& v : m.head.w.value.data) v = 0.01 * rng.normal();

  const Waveform x = speechlike_clean(1.3, 12);
  const Waveform y1 = infer(m, x);
  const Waveform y2 = infer(m, x);
  REQUIRE(y1.size() == x.size());
  CHECK(y1.sample_rate == x.sample_rate);
  for (size_t i = 0; i < y1.size(); ++i) {
    CHECK(std::isfinite(y1.samples[i]));
    CHECK(y1.samples[i] == y2.samples[i]);
  }
}

TEST_CASE("train config validation rejects bad settings") {
  const LossConfig lc = tiny_loss_cfg();
  TrainConfig tc = tiny_train_cfg();
  tc.batch_size = 0;
  CHECK_THROWS_AS(tc.validate(lc), ConfigError);
  tc = tiny_train_cfg();
  tc.segment_seconds = 0.01;  // 160 samples, below the 512 FFT
  CHECK_THROWS_AS(tc.validate(lc), ConfigError);
  tc = tiny_train_cfg();
  tc.schedule = "bogus";
  CHECK_THROWS_AS(tc.validate(lc), ConfigError);
  tc = tiny_train_cfg();
  tc.val_fraction = 1.0;
  CHECK_THROWS_AS(tc.validate(lc), ConfigError);
  tc = tiny_train_cfg();
  tc.lr = 0.0;
  CHECK_THROWS_AS(tc.validate(lc), ConfigError);
}
