// Copyright 2026 ifcorrnet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "ifcorrnet/signal.hpp"

#include <algorithm>
#include <cmath>

#include "ifcorrnet/fft.hpp"

namespace ifcn {

std::vector<double> hann_window(int n) {
  std::vector<double> w(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    w[static_cast<size_t>(i)] = 0.5 * (1.0 - std::cos(2.0 * M_PI * i / n));
  }
  return w;
}

int64_t stft_num_frames(int64_t len, int hop) { return len / hop + 1; }

std::vector<double> reflect_pad(const std::vector<double>& x, int pad) {
  int64_t n = static_cast<int64_t>(x.size());
  IFCN_CHECK(n > pad, "reflect_pad: signal shorter than pad amount");
  std::vector<double> out(static_cast<size_t>(n + 2 * pad));
  for (int64_t j = 0; j < n + 2 * pad; ++j) {
    int64_t src = j - pad;
    if (src < 0) src = -src;
    if (src >= n) src = 2 * (n - 1) - src;
    out[static_cast<size_t>(j)] = x[static_cast<size_t>(src)];
  }
  return out;
}

std::vector<double> wola_denominator(const std::vector<double>& window, int hop,
                                     int64_t T, int64_t padded_len) {
  std::vector<double> den(static_cast<size_t>(padded_len), 0.0);
  int n_fft = static_cast<int>(window.size());
  for (int64_t t = 0; t < T; ++t) {
    int64_t start = t * hop;
    for (int i = 0; i < n_fft && start + i < padded_len; ++i) {
      den[static_cast<size_t>(start + i)] += window[static_cast<size_t>(i)] * window[static_cast<size_t>(i)];
    }
  }
  return den;
}

ComplexSpectrogram stft(const Waveform& x, int n_fft, int hop) {
  IFCN_CHECK_DATA(!x.samples.empty(), "stft: empty signal");
  IFCN_CHECK_CFG(n_fft > 0 && n_fft % 2 == 0, "stft: n_fft must be positive and even");
  IFCN_CHECK_CFG(hop > 0 && n_fft % hop == 0, "stft: hop must divide n_fft");
  IFCN_CHECK_DATA(x.size() >= n_fft, "stft: signal shorter than n_fft");
  for (double v : x.samples) {
    IFCN_CHECK_DATA(std::isfinite(v), "stft: non-finite sample in input");
  }

  const int pad = n_fft / 2;
  std::vector<double> padded = reflect_pad(x.samples, pad);
  std::vector<double> win = hann_window(n_fft);

  ComplexSpectrogram S;
  S.n_fft = n_fft;
  S.hop = hop;
  S.orig_len = x.size();
  S.T = stft_num_frames(x.size(), hop);
  S.F = n_fft / 2 + 1;
  S.values.assign(static_cast<size_t>(S.T * S.F), {0.0, 0.0});

  std::vector<double> frame(static_cast<size_t>(n_fft));
  for (int64_t t = 0; t < S.T; ++t) {
    int64_t start = t * hop;
    for (int i = 0; i < n_fft; ++i) {
      frame[static_cast<size_t>(i)] =
          padded[static_cast<size_t>(start + i)] * win[static_cast<size_t>(i)];
    }
    rfft(frame.data(), &S.values[static_cast<size_t>(t * S.F)], n_fft);
  }
  return S;
}

Waveform istft(const ComplexSpectrogram& S) {
  IFCN_CHECK(S.T > 0 && S.F == S.n_fft / 2 + 1, "istft: malformed spectrogram");
  IFCN_CHECK(S.window == "hann", "istft: unsupported window: " + S.window);
  std::vector<double> win = hann_window(S.n_fft);

  // NOLA condition: every hop-phase must carry window-square mass, otherwise
  // synthesis cannot normalize. Hann with 50% overlap qualifies.
  {
    IFCN_CHECK_CFG(S.hop > 0 && S.hop <= S.n_fft && S.n_fft % S.hop == 0,
                   "istft: hop must divide n_fft");
    std::vector<double> phase(static_cast<size_t>(S.hop), 0.0);
    for (int i = 0; i < S.n_fft; ++i) {
      phase[static_cast<size_t>(i % S.hop)] += win[static_cast<size_t>(i)] * win[static_cast<size_t>(i)];
    }
    double mn = *std::min_element(phase.begin(), phase.end());
    IFCN_CHECK_CFG(mn >= 1e-8, "istft: window/hop pair violates the overlap-add condition");
  }

  const int pad = S.n_fft / 2;
  const int64_t padded_len = S.orig_len + S.n_fft;
  std::vector<double> acc(static_cast<size_t>(padded_len), 0.0);
  std::vector<double> frame(static_cast<size_t>(S.n_fft));

  for (int64_t t = 0; t < S.T; ++t) {
    irfft(&S.values[static_cast<size_t>(t * S.F)], frame.data(), S.n_fft);
    int64_t start = t * S.hop;
    for (int i = 0; i < S.n_fft && start + i < padded_len; ++i) {
      acc[static_cast<size_t>(start + i)] +=
          frame[static_cast<size_t>(i)] / S.n_fft * win[static_cast<size_t>(i)];
    }
  }

  std::vector<double> den = wola_denominator(win, S.hop, S.T, padded_len);
  Waveform out;
  out.sample_rate = kSampleRate;
  out.samples.resize(static_cast<size_t>(S.orig_len));
  for (int64_t i = 0; i < S.orig_len; ++i) {
    double d = den[static_cast<size_t>(i + pad)];
    out.samples[static_cast<size_t>(i)] = acc[static_cast<size_t>(i + pad)] / std::max(d, 1e-12);
  }
  return out;
}

double si_sdr(const Waveform& est, const Waveform& ref) {
  IFCN_CHECK(est.size() == ref.size(), "si_sdr: length mismatch");
  double rr = 0.0, er = 0.0;
  for (size_t i = 0; i < ref.samples.size(); ++i) {
    rr += ref.samples[i] * ref.samples[i];
    er += est.samples[i] * ref.samples[i];
  }
  IFCN_CHECK(rr > 0.0, "si_sdr: zero reference");
  double alpha = er / rr;
  double sig = 0.0, err = 0.0;
  for (size_t i = 0; i < ref.samples.size(); ++i) {
    double s = alpha * ref.samples[i];
    double e = est.samples[i] - s;
    sig += s * s;
    err += e * e;
  }
  if (sig <= 0.0) return -100.0;         // estimate carries none of the reference
  if (err <= sig * 1e-10) return 100.0;  // cap instead of +inf
  double v = 10.0 * std::log10(sig / err);
  return std::clamp(v, -100.0, 100.0);
}

}  // namespace ifcn
