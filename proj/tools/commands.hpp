// Copyright 2026 ifcorrnet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ifcorrnet/config.hpp"
#include "ifcorrnet/metrics.hpp"

namespace ifcn::cli {

// Each command echoes the resolved configuration into its output directory
// and is deterministic in (config, seed, inputs).

void cmd_synth_data(const RunConfig& rc, const std::string& out_dir);

void cmd_train(const RunConfig& rc, const std::string& manifest_path,
               const std::string& out_dir, bool resume);

void cmd_infer(const std::string& ckpt_path, const std::string& wav_in,
               const std::string& out_dir);

// Without a checkpoint this scores the raw mixtures, the no-processing row.
void cmd_evaluate(const RunConfig& rc, const std::string& manifest_path,
                  const std::string& out_dir, const std::optional<std::string>& ckpt_path);

// Trains and scores the four input/output variant combinations under the
// same seed and data; writes ablation.csv (one row per variant).
void cmd_ablate(const RunConfig& rc, const std::optional<std::string>& manifest_path,
                const std::string& out_dir);

// Trains and scores one model per tap count; writes tap_sweep.csv.
void cmd_tap_sweep(const RunConfig& rc, const std::vector<int>& taps,
                   const std::optional<std::string>& manifest_path, const std::string& out_dir);

// Scores est-vs-target over a manifest, one row per entry in manifest order.
std::vector<MetricRow> evaluate_manifest(Model* model, const std::vector<ManifestRow>& rows);

}  // namespace ifcn::cli
