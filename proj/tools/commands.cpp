// Copyright 2026 ifcorrnet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "commands.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "ifcorrnet/training.hpp"
#include "ifcorrnet/wav_io.hpp"

namespace ifcn::cli {

namespace fs = std::filesystem;

void cmd_synth_data(const RunConfig& rc, const std::string& out_dir) {
  rc.echo(out_dir);
  const auto rows = make_dataset(rc.data(), out_dir);
  std::cout << "wrote " << rows.size() << " utterances to " << out_dir << "\n";
}

void cmd_train(const RunConfig& rc, const std::string& manifest_path,
               const std::string& out_dir, bool resume) {
  rc.echo(out_dir);
  const auto rows = read_manifest(manifest_path);
  Model model(rc.model());
  const TrainConfig tc = rc.train();
  model.init_params(tc.seed);
  const TrainResult r = train(model, tc, rc.loss(), rows, out_dir, resume);
  std::cout << "trained " << r.steps << " steps over " << r.epochs
            << " epochs; best val loss " << r.best_val_loss << "\n"
            << "last: " << r.last_checkpoint << "\nbest: " << r.best_checkpoint << "\n";
}

void cmd_infer(const std::string& ckpt_path, const std::string& wav_in,
               const std::string& out_dir) {
  fs::create_directories(out_dir);
  Model model = Model::load_checkpoint(ckpt_path);
  const Waveform x = read_waveform(wav_in);
  const Waveform y = infer(model, x);
  const std::string out_path =
      (fs::path(out_dir) / (fs::path(wav_in).stem().string() + "_enhanced.wav")).string();
  write_wav(out_path, y);
  std::cout << "wrote " << out_path << "\n";
}

std::vector<MetricRow> evaluate_manifest(Model* model, const std::vector<ManifestRow>& rows) {
  std::vector<MetricRow> out;
  out.reserve(rows.size());
  for (const ManifestRow& r : rows) {
    const Waveform mix = read_waveform(r.mixture_path);
    const Waveform ref = read_waveform(r.target_path);
    const Waveform est = model ? infer(*model, mix) : mix;
    out.push_back({r.id, evaluate_pair(est, ref)});
  }
  return out;
}

void cmd_evaluate(const RunConfig& rc, const std::string& manifest_path,
                  const std::string& out_dir, const std::optional<std::string>& ckpt_path) {
  rc.echo(out_dir);
  const auto rows = read_manifest(manifest_path);
  IFCN_CHECK_DATA(!rows.empty(), "evaluate: empty manifest");

  std::optional<Model> model;
  if (ckpt_path) model.emplace(Model::load_checkpoint(*ckpt_path));
  const auto report = evaluate_manifest(model ? &*model : nullptr, rows);

  write_metrics_csv(report, (fs::path(out_dir) / "metrics.csv").string());
  write_metrics_json(report, (fs::path(out_dir) / "metrics.json").string());
  const MetricResult agg = aggregate_metrics(report);
  std::cout << "n=" << report.size() << " cd=" << agg.cd << " llr=" << agg.llr
            << " fwsnr=" << agg.fwsnr << " srmr=" << agg.srmr << " si_sdr=" << agg.si_sdr
            << "\n";
}

namespace {

std::vector<ManifestRow> rows_for(const RunConfig& rc,
                                  const std::optional<std::string>& manifest_path,
                                  const std::string& out_dir) {
  if (manifest_path) return read_manifest(*manifest_path);
  return make_dataset(rc.data(), (fs::path(out_dir) / "data").string());
}

// Train one configuration in its own subdirectory and score it on the full
// manifest with the best available checkpoint.
MetricResult train_and_score(const RunConfig& rc, const ModelConfig& mc,
                             const std::vector<ManifestRow>& rows, const std::string& run_dir) {
  Model model(mc);
  const TrainConfig tc = rc.train();
  model.init_params(tc.seed);
  train(model, tc, rc.loss(), rows, run_dir, /*resume=*/false);

  const std::string best = (fs::path(run_dir) / "best.ckpt").string();
  const std::string last = (fs::path(run_dir) / "last.ckpt").string();
  Model scored = Model::load_checkpoint(fs::exists(best) ? best : last);
  const auto report = evaluate_manifest(&scored, rows);
  write_metrics_csv(report, (fs::path(run_dir) / "metrics.csv").string());
  return aggregate_metrics(report);
}

void write_table_header(std::ofstream& f, const std::string& key_col) {
  f << key_col << ",input_channels,output_channels,cd,llr,fwsnr,srmr,si_sdr\n";
}

void write_table_row(std::ofstream& f, const std::string& key, const ModelConfig& mc,
                     const MetricResult& m) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%s,%d,%d,%.6f,%.6f,%.6f,%.6f,%.6f", key.c_str(),
                mc.input_channels(), mc.output_channels(), m.cd, m.llr, m.fwsnr, m.srmr,
                m.si_sdr);
  f << buf << "\n";
}

}  // namespace

void cmd_ablate(const RunConfig& rc, const std::optional<std::string>& manifest_path,
                const std::string& out_dir) {
  rc.echo(out_dir);
  const auto rows = rows_for(rc, manifest_path, out_dir);
  IFCN_CHECK_DATA(!rows.empty(), "ablate: empty manifest");

  struct VariantSpec {
    const char* name;
    InputVariant in;
    OutputVariant out;
  };
  const VariantSpec variants[] = {
      {"if-corr+mf-filter", InputVariant::kIfCorr, OutputVariant::kMfFilter},
      {"sf-raw+mf-filter", InputVariant::kSfRaw, OutputVariant::kMfFilter},
      {"sf-raw+sf-mask", InputVariant::kSfRaw, OutputVariant::kSfMask},
      {"sf-raw+mapping", InputVariant::kSfRaw, OutputVariant::kMapping},
  };

  std::ofstream table((fs::path(out_dir) / "ablation.csv").string(), std::ios::trunc);
  IFCN_CHECK_DATA(table.good(), "ablate: cannot write ablation.csv");
  write_table_header(table, "variant");
  for (const VariantSpec& v : variants) {
    ModelConfig mc = rc.model();
    mc.input_variant = v.in;
    mc.output_variant = v.out;
    mc.validate();
    std::cout << v.name << ": " << mc.input_channels() << " -> " << mc.output_channels()
              << " channels\n";
    const MetricResult m =
        train_and_score(rc, mc, rows, (fs::path(out_dir) / v.name).string());
    write_table_row(table, v.name, mc, m);
  }
  IFCN_CHECK_DATA(table.good(), "ablate: ablation.csv write failed");
  std::cout << "wrote " << (fs::path(out_dir) / "ablation.csv").string() << "\n";
}

void cmd_tap_sweep(const RunConfig& rc, const std::vector<int>& taps,
                   const std::optional<std::string>& manifest_path, const std::string& out_dir) {
  IFCN_CHECK_CFG(!taps.empty(), "tap-sweep: need at least one L value");
  rc.echo(out_dir);
  const auto rows = rows_for(rc, manifest_path, out_dir);
  IFCN_CHECK_DATA(!rows.empty(), "tap-sweep: empty manifest");

  std::ofstream table((fs::path(out_dir) / "tap_sweep.csv").string(), std::ios::trunc);
  IFCN_CHECK_DATA(table.good(), "tap-sweep: cannot write tap_sweep.csv");
  write_table_header(table, "L");
  for (int L : taps) {
    ModelConfig mc = rc.model();
    mc.L = L;
    mc.validate();
    std::cout << "L=" << L << ": " << mc.input_channels() << " -> " << mc.output_channels()
              << " channels\n";
    const MetricResult m =
        train_and_score(rc, mc, rows, (fs::path(out_dir) / ("L" + std::to_string(L))).string());
    write_table_row(table, std::to_string(L), mc, m);
  }
  IFCN_CHECK_DATA(table.good(), "tap-sweep: tap_sweep.csv write failed");
  std::cout << "wrote " << (fs::path(out_dir) / "tap_sweep.csv").string() << "\n";
}

}  // namespace ifcn::cli
