// Copyright 2026 ifcorrnet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "ifcorrnet/data_synth.hpp"
#include "ifcorrnet/losses.hpp"
#include "ifcorrnet/model.hpp"
#include "ifcorrnet/training.hpp"

namespace ifcn {

// Declarative run configuration: a JSON document with sections model, loss,
// train, and data. Keys absent from the default tree are rejected, so typos
// fail loudly instead of silently running defaults.
struct RunConfig {
  nlohmann::json tree;

  static nlohmann::json default_tree();

  // Defaults overlaid with an optional config file, then dotted-key
  // overrides ("train.lr=5e-4"); values parse as JSON when possible and
  // fall back to strings.
  static RunConfig load(const std::string& config_path,
                        const std::vector<std::string>& overrides);

  ModelConfig model() const;
  LossConfig loss() const;
  TrainConfig train() const;
  DataConfig data() const;

  // Both training and data synthesis follow one seed unless overridden
  // individually.
  void set_seed(uint64_t seed);

  // Deterministic bytes: sorted keys, 2-space indent, trailing newline.
  void echo(const std::string& dir) const;
  std::string dump() const;
};

}  // namespace ifcn
