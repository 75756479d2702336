// Copyright 2026 ifcorrnet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <complex>
#include <string>
#include <vector>

#include "ifcorrnet/common.hpp"

namespace ifcn {

struct Waveform {
  std::vector<double> samples;
  int sample_rate = kSampleRate;

  int64_t size() const { return static_cast<int64_t>(samples.size()); }
};

// One-sided complex STFT, row-major (t, f) with F = n_fft/2 + 1.
//
// Framing convention: the input is reflect-padded by n_fft/2 on both ends and
// frame t starts at padded sample t*hop, i.e. it is centered on original
// sample t*hop. T = floor(len/hop) + 1.
struct ComplexSpectrogram {
  int n_fft = 0;
  int hop = 0;
  std::string window = "hann";
  int64_t orig_len = 0;  // pre-padding signal length, used by istft to trim
  int64_t T = 0;
  int64_t F = 0;
  std::vector<std::complex<double>> values;  // (t, f)

  std::complex<double>& at(int64_t t, int64_t f) { return values[static_cast<size_t>(t * F + f)]; }
  const std::complex<double>& at(int64_t t, int64_t f) const {
    return values[static_cast<size_t>(t * F + f)];
  }
};

// Periodic Hann window of length n: 0.5 * (1 - cos(2*pi*i/n)).
std::vector<double> hann_window(int n);

// Number of frames produced by stft for a signal of the given length.
int64_t stft_num_frames(int64_t len, int hop);

ComplexSpectrogram stft(const Waveform& x, int n_fft = 512, int hop = 256);

Waveform istft(const ComplexSpectrogram& S);

// Scale-invariant SDR in dB, capped at +100 to stay finite when est == ref.
double si_sdr(const Waveform& est, const Waveform& ref);

// Reflect padding without edge repetition: [d c b | a b c d e | d c b].
// Requires len > pad.
std::vector<double> reflect_pad(const std::vector<double>& x, int pad);

// Window-square overlap-add weight at each padded sample position; the
// denominator of WOLA synthesis. All positions that survive trimming are
// covered; values are clamped at 1e-12 before division.
std::vector<double> wola_denominator(const std::vector<double>& window, int hop,
                                     int64_t T, int64_t padded_len);

}  // namespace ifcn
