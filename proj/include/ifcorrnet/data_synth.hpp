// Copyright 2026 ifcorrnet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ifcorrnet/signal.hpp"

namespace ifcn {

enum class RirMethod { kExpDecayNoise, kImageMethod };
enum class NoiseKind { kWhite, kPink, kHumWhite };

std::string to_string(RirMethod m);
std::string to_string(NoiseKind k);
RirMethod rir_method_from_string(const std::string& s);
NoiseKind noise_kind_from_string(const std::string& s);

struct RirSpec {
  double t60 = 0.4;           // seconds
  int direct_delay = 0;       // samples before the direct impulse
  RirMethod method = RirMethod::kExpDecayNoise;
  uint64_t seed = 0;
  int length = 12000;         // samples
  double drr_db = 0.0;        // direct-to-reverberant energy ratio
  // Image-method geometry (meters).
  std::array<double, 3> room = {6.0, 4.0, 3.0};
  std::array<double, 3> src = {2.0, 1.5, 1.2};
  std::array<double, 3> mic = {4.0, 2.5, 1.6};

  void validate() const;  // t60 in [0.05, 2.0]
};

std::vector<double> make_rir(const RirSpec& spec);

// Zeroes the response outside [peak, peak + window_ms).
std::vector<double> direct_part(const std::vector<double>& rir, double window_ms = 2.5);

// Reverberation time from Schroeder backward integration: least-squares slope
// of the energy-decay curve between -5 and -25 dB, extrapolated to 60 dB.
double schroeder_t60(const std::vector<double>& rir, int fs = kSampleRate);

std::vector<double> fft_convolve(const std::vector<double>& a, const std::vector<double>& b);

struct MixtureSample {
  Waveform mixture;  // reverberant speech plus noise
  Waveform target;   // clean convolved with the direct part of the RIR
  Waveform clean;
  std::vector<double> rir;
  double t60 = 0.0;
  double snr_db = 0.0;
  NoiseKind noise_kind = NoiseKind::kWhite;
  uint64_t seed = 0;
};

// snr_db may be +infinity to skip noise entirely. The noise is scaled so the
// reverberant-speech-to-noise power ratio hits snr_db exactly.
MixtureSample make_mixture(const Waveform& clean, const std::vector<double>& rir,
                           double snr_db, NoiseKind kind, uint64_t seed);

// Filtered-noise stand-in for speech: white noise through a slowly varying
// AR(8) all-pole filter with 2-8 Hz amplitude modulation.
Waveform speechlike_clean(double seconds, uint64_t seed);

struct DataConfig {
  int n_utts = 20;
  double utt_seconds = 2.0;
  double t60_min = 0.2;
  double t60_max = 0.8;
  double snr_db = 20.0;
  double drr_db = 0.0;
  double rir_seconds = 0.75;
  NoiseKind noise_kind = NoiseKind::kHumWhite;
  RirMethod rir_method = RirMethod::kExpDecayNoise;
  uint64_t seed = 0;
  // When nonempty, t60 cycles through this grid instead of sampling
  // uniformly from [t60_min, t60_max].
  std::vector<double> t60_grid;

  void validate() const;
};

struct ManifestRow {
  std::string id;
  std::string mixture_path;
  std::string target_path;
  std::string clean_path;
  double t60 = 0.0;
  double snr_db = 0.0;
  uint64_t seed = 0;
};

// Writes WAV triplets under out_dir plus manifest.jsonl; returns the rows.
// Deterministic in (config, out_dir): utterance i is seeded hash(seed, i).
std::vector<ManifestRow> make_dataset(const DataConfig& cfg, const std::string& out_dir);

std::vector<ManifestRow> read_manifest(const std::string& path);
void write_manifest(const std::vector<ManifestRow>& rows, const std::string& path);

}  // namespace ifcn
