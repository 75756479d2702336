// Copyright 2026 ifcorrnet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "commands.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
  uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;
};

void add_common(CLI::App* cmd, CommonOpts* o) {
  cmd->add_option("--config", o->config_path, "JSON config file");
  cmd->add_option("--set", o->overrides, "dotted-key override, e.g. train.lr=5e-4")
      ->take_all();
  o->seed_opt = cmd->add_option("--seed", o->seed, "seed for training and data synthesis");
  cmd->add_option("--out", o->out_dir, "output directory")->required();
}

ifcn::RunConfig resolve(const CommonOpts& o) {
  ifcn::RunConfig rc = ifcn::RunConfig::load(o.config_path, o.overrides);
  if (o.seed_opt && o.seed_opt->count() > 0) rc.set_seed(o.seed);
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ifcorrnet: correlation-input multi-frame filtering dereverberation"};
  app.require_subcommand(1);

  CommonOpts synth_o, train_o, eval_o, ablate_o, sweep_o;
  std::string train_manifest, eval_manifest, infer_ckpt, infer_in, infer_out;
  std::optional<std::string> eval_ckpt, ablate_manifest, sweep_manifest;
  std::string eval_ckpt_s, ablate_manifest_s, sweep_manifest_s;
  bool train_resume = false;
  std::vector<int> sweep_taps;

  CLI::App* synth = app.add_subcommand("synth-data", "generate a reverberant dataset");
  add_common(synth, &synth_o);

  CLI::App* train = app.add_subcommand("train", "train a model on a manifest");
  add_common(train, &train_o);
  train->add_option("--manifest", train_manifest, "manifest.jsonl path")->required();
  train->add_flag("--resume", train_resume, "continue from last.ckpt in --out");

  CLI::App* infer = app.add_subcommand("infer", "enhance one WAV file");
  infer->add_option("--ckpt", infer_ckpt, "model checkpoint")->required();
  infer->add_option("--in", infer_in, "input WAV")->required();
  infer->add_option("--out", infer_out, "output directory")->required();

  CLI::App* evaluate = app.add_subcommand("evaluate", "score a manifest");
  add_common(evaluate, &eval_o);
  evaluate->add_option("--manifest", eval_manifest, "manifest.jsonl path")->required();
  evaluate->add_option("--ckpt", eval_ckpt_s,
                       "model checkpoint; omitted scores the raw mixtures");

  CLI::App* ablate = app.add_subcommand("ablate", "compare input/output variants");
  add_common(ablate, &ablate_o);
  ablate->add_option("--manifest", ablate_manifest_s,
                     "existing manifest; omitted synthesizes into <out>/data");

  CLI::App* sweep = app.add_subcommand("tap-sweep", "compare filter tap counts");
  add_common(sweep, &sweep_o);
  sweep->add_option("--taps", sweep_taps, "L values, e.g. --taps 0,1,3")
      ->required()
      ->delimiter(',');
  sweep->add_option("--manifest", sweep_manifest_s,
                    "existing manifest; omitted synthesizes into <out>/data");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (!eval_ckpt_s.empty()) eval_ckpt = eval_ckpt_s;
  if (!ablate_manifest_s.empty()) ablate_manifest = ablate_manifest_s;
  if (!sweep_manifest_s.empty()) sweep_manifest = sweep_manifest_s;

  try {
    if (synth->parsed()) {
      ifcn::cli::cmd_synth_data(resolve(synth_o), synth_o.out_dir);
    } else if (train->parsed()) {
      ifcn::cli::cmd_train(resolve(train_o), train_manifest, train_o.out_dir, train_resume);
    } else if (infer->parsed()) {
      ifcn::cli::cmd_infer(infer_ckpt, infer_in, infer_out);
    } else if (evaluate->parsed()) {
      ifcn::cli::cmd_evaluate(resolve(eval_o), eval_manifest, eval_o.out_dir, eval_ckpt);
    } else if (ablate->parsed()) {
      ifcn::cli::cmd_ablate(resolve(ablate_o), ablate_manifest, ablate_o.out_dir);
    } else if (sweep->parsed()) {
      ifcn::cli::cmd_tap_sweep(resolve(sweep_o), sweep_taps, sweep_manifest, sweep_o.out_dir);
    }
  } catch (const ifcn::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ifcn::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const ifcn::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
