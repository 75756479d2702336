// Copyright 2026 ifcorrnet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"

#include "ifcorrnet/data_synth.hpp"
#include "ifcorrnet/metrics.hpp"
#include "ifcorrnet/rng.hpp"

using namespace ifcn;

namespace {

Waveform add_noise(const Waveform& x, double scale, uint64_t seed) {
  Waveform y = x;
  Rng rng(seed);
  for (auto& v : y.samples) v += scale * rng.normal();
  return y;
}

Waveform am_tone(double seconds, double carrier_hz, double mod_hz, double depth) {
  Waveform w;
  const auto n = static_cast<size_t>(seconds * kSampleRate);
  w.samples.resize(n);
  for (size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / kSampleRate;
    const double env = 1.0 + depth * std::sin(2.0 * M_PI * mod_hz * t);
    w.samples[i] = 0.3 * env * std::sin(2.0 * M_PI * carrier_hz * t);
  }
  return w;
}

}  // namespace

TEST_CASE("identical signals score perfectly on every metric") {
  const Waveform x = speechlike_clean(1.5, 1);
  const MetricResult m = evaluate_pair(x, x);
  CHECK(m.cd == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(m.llr == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(m.fwsnr == doctest::Approx(35.0).epsilon(1e-9));
  CHECK(m.si_sdr == 100.0);
}

TEST_CASE("cepstral distance and llr ignore a global gain") {
  const Waveform ref = speechlike_clean(1.5, 2);
  Waveform scaled = ref;
  for (auto& v : scaled.samples) v *= 0.3;
  CHECK(cepstral_distance(scaled, ref) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(llr(scaled, ref) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("metrics degrade monotonically with additive noise") {
  const Waveform ref = speechlike_clean(2.0, 3);
  const Waveform mild = add_noise(ref, 0.01, 4);
  const Waveform harsh = add_noise(ref, 0.1, 4);

  CHECK(cepstral_distance(mild, ref) < cepstral_distance(harsh, ref));
  CHECK(llr(mild, ref) < llr(harsh, ref));
  CHECK(fw_seg_snr(mild, ref) > fw_seg_snr(harsh, ref));
  CHECK(si_sdr(mild, ref) > si_sdr(harsh, ref));
  CHECK(cepstral_distance(harsh, ref) > 0.1);
  CHECK(fw_seg_snr(mild, ref) > fw_seg_snr(harsh, ref) + 3.0);
}

TEST_CASE("srmr prefers strongly modulated signals") {
  const Waveform modulated = am_tone(1.5, 1000.0, 4.0, 0.9);
  const Waveform flat = am_tone(1.5, 1000.0, 4.0, 0.0);
  CHECK(srmr(modulated) > 2.0 * srmr(flat));

  Waveform silent;
  silent.samples.assign(16000, 0.0);
  CHECK(srmr(silent) == 0.0);
}

TEST_CASE("reverberation lowers srmr of speech-like audio") {
  const Waveform clean = speechlike_clean(2.0, 5);
  RirSpec spec;
  spec.t60 = 1.0;
  spec.length = 12000;
  const auto rir = make_rir(spec);
  auto rev = fft_convolve(clean.samples, rir);
  rev.resize(clean.samples.size());
  Waveform wet;
  wet.samples = rev;
  CHECK(srmr(wet) < srmr(clean));
}

TEST_CASE("speech-like audio out-modulates stationary noise") {
  const Waveform speech = speechlike_clean(2.0, 6);
  Waveform noise;
  noise.samples.resize(speech.samples.size());
  Rng rng(7);
  for (auto& v : noise.samples) v = 0.3 * rng.normal();
  CHECK(srmr(speech) > srmr(noise));
}

TEST_CASE("alignment undoes small shifts before scoring") {
  const Waveform ref = speechlike_clean(1.5, 8);
  for (int lag : {-120, -7, 60, 160}) {
    Waveform shifted;
    shifted.samples.assign(ref.samples.size(), 0.0);
    for (size_t i = 0; i < ref.samples.size(); ++i) {
      const int64_t j = static_cast<int64_t>(i) + lag;
      if (j >= 0 && j < static_cast<int64_t>(ref.samples.size()))
        shifted.samples[static_cast<size_t>(j)] = ref.samples[i];
    }
    const Waveform back = align_to_reference(shifted, ref);
    // Everything except the edge exposed by the shift matches exactly.
    size_t mismatches = 0;
    for (size_t i = 0; i < ref.samples.size(); ++i)
      if (back.samples[i] != ref.samples[i]) ++mismatches;
    CHECK(mismatches <= static_cast<size_t>(std::abs(lag)));

    // The exposed edge bounds si-sdr near 10*log10(len/|lag|); anything above
    // 15 dB means the bulk of the signal lined back up.
    const MetricResult m = evaluate_pair(shifted, ref);
    CHECK(m.si_sdr > 15.0);
    const MetricResult raw = evaluate_pair(shifted, ref, /*align=*/false);
    if (std::abs(lag) > 30) CHECK(m.si_sdr > raw.si_sdr);
  }
}

TEST_CASE("spearman handles perfect order, reversal, and ties") {
  CHECK(spearman_rho({1, 2, 3, 4}, {10, 20, 30, 40}) == doctest::Approx(1.0));
  CHECK(spearman_rho({1, 2, 3, 4}, {8, 6, 4, 2}) == doctest::Approx(-1.0));
  // Monotone but nonlinear is still rank-perfect.
  CHECK(spearman_rho({1, 2, 3, 4}, {1, 10, 100, 1000}) == doctest::Approx(1.0));
  // Ties get average ranks.
  const double rho = spearman_rho({1, 2, 2, 3}, {1, 2, 3, 4});
  CHECK(rho > 0.8);
  CHECK(rho < 1.0);
}

TEST_CASE("metric rows aggregate and serialize") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "ifcn_metrics_test";
  fs::create_directories(dir);

  std::vector<MetricRow> rows(2);
  rows[0].id = "utt00000";
  rows[0].m = {1.0, 0.5, 10.0, 4.0, 5.0};
  rows[1].id = "utt00001";
  rows[1].m = {3.0, 1.5, 20.0, 6.0, 15.0};

  const MetricResult agg = aggregate_metrics(rows);
  CHECK(agg.cd == doctest::Approx(2.0));
  CHECK(agg.llr == doctest::Approx(1.0));
  CHECK(agg.fwsnr == doctest::Approx(15.0));
  CHECK(agg.srmr == doctest::Approx(5.0));
  CHECK(agg.si_sdr == doctest::Approx(10.0));

  const std::string csv_path = (dir / "metrics.csv").string();
  write_metrics_csv(rows, csv_path);
  std::ifstream csv(csv_path);
  std::string line;
  REQUIRE(std::getline(csv, line));
  CHECK(line == "id,cd,llr,fwsnr,srmr,si_sdr");
  REQUIRE(std::getline(csv, line));
  CHECK(line == "utt00000,1.000000,0.500000,10.000000,4.000000,5.000000");
  REQUIRE(std::getline(csv, line));
  CHECK(line == "utt00001,3.000000,1.500000,20.000000,6.000000,15.000000");
  CHECK_FALSE(std::getline(csv, line));

  const std::string json_path = (dir / "metrics.json").string();
  write_metrics_json(rows, json_path);
  std::ifstream jf(json_path);
  std::stringstream ss;
  ss << jf.rdbuf();
  const std::string body = ss.str();
  CHECK(body.find("\"n\": 2") != std::string::npos);
  CHECK(body.find("\"cd\"") != std::string::npos);
  CHECK(body.find("\"si_sdr\"") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("metrics move the right way as reverberation grows") {
  // Mini version of the full directional study: two decay times, one source.
  const Waveform clean = speechlike_clean(2.0, 9);
  auto degrade = [&](double t60) {
    RirSpec spec;
    spec.t60 = t60;
    spec.length = 8000;
    spec.seed = 17;
    const auto rir = make_rir(spec);
    auto rev = fft_convolve(clean.samples, rir);
    rev.resize(clean.samples.size());
    Waveform wet;
    wet.samples = rev;
    return wet;
  };
  const Waveform mild = degrade(0.2);
  const Waveform strong = degrade(0.9);
  const MetricResult a = evaluate_pair(mild, clean);
  const MetricResult b = evaluate_pair(strong, clean);
  CHECK(b.cd >= a.cd);
  CHECK(b.llr >= a.llr);
  CHECK(b.fwsnr <= a.fwsnr);
  CHECK(b.srmr <= a.srmr);
}

TEST_CASE("metric inputs are validated") {
  Waveform a = speechlike_clean(1.0, 10);
  Waveform b = a;
  b.samples.resize(8000);
  CHECK_THROWS_AS(evaluate_pair(a, b), DataError);
  Waveform tiny;
  tiny.samples.assign(100, 0.1);
  CHECK_THROWS_AS(evaluate_pair(tiny, tiny), DataError);
  Waveform wrong_rate = a;
  wrong_rate.sample_rate = 8000;
  CHECK_THROWS_AS(evaluate_pair(wrong_rate, wrong_rate), DataError);
}
