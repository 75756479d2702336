// Copyright 2026 ifcorrnet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ifcorrnet/data_synth.hpp"
#include "ifcorrnet/losses.hpp"
#include "ifcorrnet/model.hpp"

namespace ifcn {

struct TrainConfig {
  double lr = 1e-3;
  double weight_decay = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double adam_eps = 1e-8;
  double grad_clip = 5.0;  // global norm; <= 0 disables
  int max_epochs = 40;
  double segment_seconds = 4.0;
  int batch_size = 2;
  uint64_t seed = 0;
  double val_fraction = 0.25;          // held-out tail of the manifest
  std::string schedule = "constant";   // constant | warmup-decay
  int warmup_steps = 500;

  int64_t segment_samples() const {
    return static_cast<int64_t>(segment_seconds * kSampleRate + 0.5);
  }
  void validate(const LossConfig& loss) const;
};

struct TrainResult {
  int64_t steps = 0;
  int epochs = 0;
  double final_train_loss = 0.0;
  double best_val_loss = 0.0;
  std::string last_checkpoint;
  std::string best_checkpoint;
};

// Runs AdamW over 4 s random crops. Writes last.ckpt/.state every epoch,
// best.ckpt/.state on validation improvement, and appends JSON lines
// {step, loss_time, loss_tf, loss_total, lr} to train_log.jsonl in out_dir.
//
// Crop offsets and the epoch shuffle are stateless functions of
// (seed, epoch, utterance index), so resuming from last.ckpt reproduces a
// straight-through run bitwise. With resume=true an existing last.ckpt in
// out_dir is loaded and training continues from the stored epoch.
//
// max_epochs == 0 writes the initial checkpoint and returns. A non-finite
// loss raises NumericError naming the offending batch.
TrainResult train(Model& model, const TrainConfig& cfg, const LossConfig& loss_cfg,
                  const std::vector<ManifestRow>& manifest, const std::string& out_dir,
                  bool resume = false);

// Full-utterance enhancement, output length-matched to the input.
Waveform infer(Model& model, const Waveform& x);

// Optimizer state sidecar (step count, epoch, best validation loss, Adam
// moment tensors in Model::params() order).
struct OptimState {
  int64_t step = 0;
  int epoch = 0;
  double best_val = 0.0;
  bool has_best = false;
  std::vector<Tensor> m;
  std::vector<Tensor> v;
};

void save_optim_state(const OptimState& s, Model& model, const std::string& path);
OptimState load_optim_state(Model& model, const std::string& path);

}  // namespace ifcn
