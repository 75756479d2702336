// Copyright 2026 ifcorrnet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "ifcorrnet/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "ifcorrnet/rng.hpp"
#include "ifcorrnet/wav_io.hpp"

namespace ifcn {

using nlohmann::json;

void TrainConfig::validate(const LossConfig& loss) const {
  loss.validate();
  IFCN_CHECK_CFG(lr > 0.0, "train: lr must be positive");
  IFCN_CHECK_CFG(weight_decay >= 0.0, "train: weight_decay must be >= 0");
  IFCN_CHECK_CFG(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0,
                 "train: betas must lie in [0, 1)");
  IFCN_CHECK_CFG(adam_eps > 0.0, "train: adam_eps must be positive");
  IFCN_CHECK_CFG(max_epochs >= 0, "train: max_epochs must be >= 0");
  IFCN_CHECK_CFG(batch_size >= 1, "train: batch_size must be >= 1");
  IFCN_CHECK_CFG(segment_samples() >= loss.max_fft(),
                 "train: segment shorter than the largest loss FFT");
  IFCN_CHECK_CFG(val_fraction >= 0.0 && val_fraction < 1.0,
                 "train: val_fraction must lie in [0, 1)");
  IFCN_CHECK_CFG(schedule == "constant" || schedule == "warmup-decay",
                 "train: schedule must be constant or warmup-decay");
  IFCN_CHECK_CFG(schedule != "warmup-decay" || warmup_steps > 0,
                 "train: warmup_steps must be positive for warmup-decay");
}

namespace {

double lr_at(const TrainConfig& cfg, int64_t step) {
  if (cfg.schedule == "constant") return cfg.lr;
  const double t = static_cast<double>(step);
  const double w = static_cast<double>(cfg.warmup_steps);
  return cfg.lr * std::min(t / w, std::sqrt(w / t));
}

struct LoadedUtt {
  std::string id;
  Waveform mixture;
  Waveform target;
};

// Crop both signals at the same stateless random offset; shorter utterances
// are zero-padded up to the segment length.
void crop_pair(const LoadedUtt& u, int64_t seg, uint64_t seed, uint64_t epoch,
               uint64_t utt_index, Waveform* mix, Waveform* tgt) {
  IFCN_CHECK_DATA(u.mixture.size() == u.target.size(),
                  "train: mixture/target length mismatch for " + u.id);
  const int64_t len = u.mixture.size();
  Rng rng(hash_seed(hash_seed(seed, 0x63726f70ULL), hash_seed(epoch, utt_index)));
  const int64_t max_start = std::max<int64_t>(0, len - seg);
  const int64_t start = static_cast<int64_t>(rng.uniform_int(static_cast<uint64_t>(max_start + 1)));

  mix->sample_rate = u.mixture.sample_rate;
  mix->samples.assign(static_cast<size_t>(seg), 0.0);
  tgt->sample_rate = u.target.sample_rate;
  tgt->samples.assign(static_cast<size_t>(seg), 0.0);
  const int64_t ncopy = std::min(seg, len - start);
  for (int64_t i = 0; i < ncopy; ++i) {
    mix->samples[static_cast<size_t>(i)] = u.mixture.samples[static_cast<size_t>(start + i)];
    tgt->samples[static_cast<size_t>(i)] = u.target.samples[static_cast<size_t>(start + i)];
  }
}

double global_grad_norm(const std::vector<Param*>& params) {
  double sq = 0.0;
  for (Param* p : params) {
    for (double g : p->grad.data) sq += g * g;
  }
  return std::sqrt(sq);
}

void adamw_step(const std::vector<Param*>& params, OptimState& st, const TrainConfig& cfg,
                double lr) {
  const int64_t t = st.step;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  for (size_t i = 0; i < params.size(); ++i) {
    Param& p = *params[i];
    Tensor& m = st.m[i];
    Tensor& v = st.v[i];
    for (size_t k = 0; k < p.value.data.size(); ++k) {
      const double g = p.grad.data[k];
      m.data[k] = cfg.beta1 * m.data[k] + (1.0 - cfg.beta1) * g;
      v.data[k] = cfg.beta2 * v.data[k] + (1.0 - cfg.beta2) * g * g;
      const double mhat = m.data[k] / bc1;
      const double vhat = v.data[k] / bc2;
      p.value.data[k] -=
          lr * (mhat / (std::sqrt(vhat) + cfg.adam_eps) + cfg.weight_decay * p.value.data[k]);
    }
  }
}

// Validation failures (unreadable or malformed files) are skipped rather
// than fatal so the held-out split can never alter the training trajectory.
double validation_loss(Model& model, const LossConfig& loss_cfg,
                       const std::vector<ManifestRow>& val_rows) {
  double total = 0.0;
  int64_t n = 0;
  for (const auto& row : val_rows) {
    try {
      Waveform mix = read_waveform(row.mixture_path);
      Waveform tgt = read_waveform(row.target_path);
      IFCN_CHECK_DATA(mix.size() == tgt.size(), "length mismatch");
      IFCN_CHECK_DATA(mix.size() >= loss_cfg.max_fft(), "too short for loss");
      Waveform out = model.enhance(mix);
      total += total_loss(out, tgt, loss_cfg).total;
      ++n;
    } catch (const std::exception&) {
      continue;
    }
  }
  return n > 0 ? total / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

void save_optim_state(const OptimState& s, Model& model, const std::string& path) {
  const auto params = model.params();
  IFCN_CHECK(s.m.size() == params.size() && s.v.size() == params.size(),
             "optim state does not match the model parameter list");

  json tensors = json::array();
  for (size_t i = 0; i < params.size(); ++i) {
    tensors.push_back({{"name", params[i]->name}, {"shape", params[i]->value.shape}});
  }
  json header{{"format", "ifst"}, {"version", 1},      {"step", s.step},
              {"epoch", s.epoch}, {"has_best", s.has_best}, {"tensors", tensors}};
  if (s.has_best && std::isfinite(s.best_val)) header["best_val"] = s.best_val;

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  IFCN_CHECK_DATA(f.good(), "cannot write optimizer state: " + path);
  const std::string hs = header.dump();
  const uint32_t version = 1;
  const uint64_t hlen = hs.size();
  f.write("IFST", 4);
  f.write(reinterpret_cast<const char*>(&version), sizeof version);
  f.write(reinterpret_cast<const char*>(&hlen), sizeof hlen);
  f.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  for (const Tensor& t : s.m) {
    f.write(reinterpret_cast<const char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * sizeof(double)));
  }
  for (const Tensor& t : s.v) {
    f.write(reinterpret_cast<const char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * sizeof(double)));
  }
  IFCN_CHECK_DATA(f.good(), "optimizer state write failed: " + path);
}

OptimState load_optim_state(Model& model, const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  IFCN_CHECK_DATA(f.good(), "cannot read optimizer state: " + path);
  char magic[4];
  f.read(magic, 4);
  IFCN_CHECK_DATA(f.good() && std::memcmp(magic, "IFST", 4) == 0,
                  "not an optimizer state file: " + path);
  uint32_t version = 0;
  uint64_t hlen = 0;
  f.read(reinterpret_cast<char*>(&version), sizeof version);
  f.read(reinterpret_cast<char*>(&hlen), sizeof hlen);
  IFCN_CHECK_DATA(f.good() && version == 1, "unsupported optimizer state version");
  std::string hs(hlen, '\0');
  f.read(hs.data(), static_cast<std::streamsize>(hlen));
  IFCN_CHECK_DATA(f.good(), "truncated optimizer state header");
  const json header = json::parse(hs);

  OptimState s;
  s.step = header.at("step").get<int64_t>();
  s.epoch = header.at("epoch").get<int>();
  s.has_best = header.at("has_best").get<bool>();
  s.best_val = header.contains("best_val") ? header.at("best_val").get<double>()
                                           : std::numeric_limits<double>::infinity();

  const auto params = model.params();
  const json& tensors = header.at("tensors");
  IFCN_CHECK_DATA(tensors.size() == params.size(),
                  "optimizer state tensor count does not match the model");
  for (size_t i = 0; i < params.size(); ++i) {
    IFCN_CHECK_DATA(tensors[i].at("name").get<std::string>() == params[i]->name,
                    "optimizer state tensor order mismatch at " + params[i]->name);
    IFCN_CHECK_DATA(tensors[i].at("shape").get<std::vector<int64_t>>() == params[i]->value.shape,
                    "optimizer state shape mismatch at " + params[i]->name);
  }
  auto read_set = [&](std::vector<Tensor>* dst) {
    dst->clear();
    dst->reserve(params.size());
    for (size_t i = 0; i < params.size(); ++i) {
      Tensor t = Tensor::zeros(params[i]->value.shape);
      f.read(reinterpret_cast<char*>(t.data.data()),
             static_cast<std::streamsize>(t.data.size() * sizeof(double)));
      dst->push_back(std::move(t));
    }
  };
  read_set(&s.m);
  read_set(&s.v);
  IFCN_CHECK_DATA(f.good(), "truncated optimizer state tensors");
  return s;
}

TrainResult train(Model& model, const TrainConfig& cfg, const LossConfig& loss_cfg,
                  const std::vector<ManifestRow>& manifest, const std::string& out_dir,
                  bool resume) {
  cfg.validate(loss_cfg);
  IFCN_CHECK_DATA(!manifest.empty(), "train: empty manifest");
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const std::string last_ckpt = (fs::path(out_dir) / "last.ckpt").string();
  const std::string last_state = (fs::path(out_dir) / "last.state").string();
  const std::string best_ckpt = (fs::path(out_dir) / "best.ckpt").string();
  const std::string best_state = (fs::path(out_dir) / "best.state").string();
  const std::string log_path = (fs::path(out_dir) / "train_log.jsonl").string();

  // Held-out tail for validation; at least one utterance stays in training.
  const int64_t n = static_cast<int64_t>(manifest.size());
  int64_t n_val = static_cast<int64_t>(std::floor(cfg.val_fraction * static_cast<double>(n)));
  n_val = std::min(n_val, n - 1);
  const int64_t n_train = n - n_val;
  std::vector<ManifestRow> val_rows(manifest.begin() + n_train, manifest.end());

  std::vector<LoadedUtt> train_utts;
  train_utts.reserve(static_cast<size_t>(n_train));
  for (int64_t i = 0; i < n_train; ++i) {
    LoadedUtt u;
    u.id = manifest[static_cast<size_t>(i)].id;
    u.mixture = read_waveform(manifest[static_cast<size_t>(i)].mixture_path);
    u.target = read_waveform(manifest[static_cast<size_t>(i)].target_path);
    IFCN_CHECK_DATA(u.mixture.size() == u.target.size(),
                    "train: mixture/target length mismatch for " + u.id);
    train_utts.push_back(std::move(u));
  }

  const auto params = model.params();
  OptimState st;
  if (resume && fs::exists(last_ckpt) && fs::exists(last_state)) {
    Model loaded = Model::load_checkpoint(last_ckpt);
    const auto src = loaded.params();
    IFCN_CHECK_DATA(src.size() == params.size(), "resume: checkpoint does not match the model");
    for (size_t i = 0; i < params.size(); ++i) {
      IFCN_CHECK_DATA(src[i]->name == params[i]->name &&
                          src[i]->value.shape == params[i]->value.shape,
                      "resume: parameter mismatch at " + params[i]->name);
      params[i]->value = src[i]->value;
    }
    st = load_optim_state(model, last_state);
  } else {
    st.best_val = std::numeric_limits<double>::infinity();
    st.has_best = false;
    for (Param* p : params) {
      st.m.push_back(Tensor::zeros(p->value.shape));
      st.v.push_back(Tensor::zeros(p->value.shape));
    }
  }

  std::ofstream log(log_path, st.step > 0 ? std::ios::app : std::ios::trunc);
  IFCN_CHECK_DATA(log.good(), "cannot open training log: " + log_path);

  TrainResult res;
  res.last_checkpoint = last_ckpt;
  res.best_checkpoint = best_ckpt;

  if (cfg.max_epochs == 0 && st.step == 0) {
    model.save_checkpoint(last_ckpt);
    save_optim_state(st, model, last_state);
    res.best_val_loss = std::numeric_limits<double>::quiet_NaN();
    return res;
  }

  const int64_t seg = cfg.segment_samples();
  double last_train_loss = 0.0;

  for (int epoch = st.epoch; epoch < cfg.max_epochs; ++epoch) {
    // Deterministic per-epoch order.
    std::vector<int64_t> order(static_cast<size_t>(n_train));
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(hash_seed(cfg.seed, 0x73687566ULL, static_cast<uint64_t>(epoch)));
    for (int64_t i = n_train - 1; i > 0; --i) {
      const int64_t j = static_cast<int64_t>(shuffle_rng.uniform_int(static_cast<uint64_t>(i + 1)));
      std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(j)]);
    }

    double epoch_loss = 0.0;
    int64_t epoch_batches = 0;
    for (int64_t pos = 0; pos < n_train; pos += cfg.batch_size) {
      const int64_t bn = std::min<int64_t>(cfg.batch_size, n_train - pos);
      for (Param* p : params) p->zero_grad();

      LossParts batch_parts;
      std::string batch_ids;
      for (int64_t k = 0; k < bn; ++k) {
        const int64_t idx = order[static_cast<size_t>(pos + k)];
        const LoadedUtt& u = train_utts[static_cast<size_t>(idx)];
        if (!batch_ids.empty()) batch_ids += ",";
        batch_ids += u.id;

        Waveform mix, tgt;
        crop_pair(u, seg, cfg.seed, static_cast<uint64_t>(epoch), static_cast<uint64_t>(idx),
                  &mix, &tgt);

        TapeCtx cx;
        auto out = model.forward(cx, mix);
        // Catch an exploded estimate before the loss graph feeds it to an
        // STFT, whose input validation would mask the numeric failure.
        for (double v : cx.val(out.wave).data) {
          if (!std::isfinite(v)) {
            throw NumericError("non-finite loss at step " + std::to_string(st.step + 1) +
                               " on batch [" + batch_ids + "]");
          }
        }
        LossParts parts;
        auto loss = total_loss_graph(cx, out.wave, tgt, loss_cfg, &parts);
        if (!std::isfinite(parts.total)) {
          throw NumericError("non-finite loss at step " + std::to_string(st.step + 1) +
                             " on batch [" + batch_ids + "]");
        }
        auto scaled = cx.scale(loss, 1.0 / static_cast<double>(bn));
        cx.backward(scaled);

        batch_parts.time += parts.time / static_cast<double>(bn);
        batch_parts.tf += parts.tf / static_cast<double>(bn);
        batch_parts.total += parts.total / static_cast<double>(bn);
      }

      const double gnorm = global_grad_norm(params);
      if (!std::isfinite(gnorm)) {
        throw NumericError("non-finite gradient at step " + std::to_string(st.step + 1) +
                           " on batch [" + batch_ids + "]");
      }
      if (cfg.grad_clip > 0.0 && gnorm > cfg.grad_clip) {
        const double scale = cfg.grad_clip / gnorm;
        for (Param* p : params) {
          for (double& g : p->grad.data) g *= scale;
        }
      }

      ++st.step;
      const double lr = lr_at(cfg, st.step);
      adamw_step(params, st, cfg, lr);

      json line{{"step", st.step},
                {"loss_time", batch_parts.time},
                {"loss_tf", batch_parts.tf},
                {"loss_total", batch_parts.total},
                {"lr", lr}};
      log << line.dump() << "\n";
      epoch_loss += batch_parts.total;
      ++epoch_batches;
    }
    log.flush();

    st.epoch = epoch + 1;
    last_train_loss = epoch_batches > 0 ? epoch_loss / static_cast<double>(epoch_batches) : 0.0;

    double val = validation_loss(model, loss_cfg, val_rows);
    if (std::isnan(val)) val = last_train_loss;  // no usable held-out split
    if (!st.has_best || val < st.best_val) {
      st.best_val = val;
      st.has_best = true;
      model.save_checkpoint(best_ckpt);
      save_optim_state(st, model, best_state);
    }
    model.save_checkpoint(last_ckpt);
    save_optim_state(st, model, last_state);
  }

  res.steps = st.step;
  res.epochs = st.epoch;
  res.final_train_loss = last_train_loss;
  res.best_val_loss = st.has_best ? st.best_val : std::numeric_limits<double>::quiet_NaN();
  return res;
}

Waveform infer(Model& model, const Waveform& x) {
  Waveform y = model.enhance(x);
  IFCN_CHECK(y.size() == x.size(), "infer: output length mismatch");
  return y;
}

}  // namespace ifcn
