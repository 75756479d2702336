// Copyright 2026 ifcorrnet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "ifcorrnet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <numeric>

#include "json.hpp"

#include "ifcorrnet/fft.hpp"

namespace ifcn {

namespace {

constexpr int kFrameLen = 400;  // 25 ms at 16 kHz
constexpr int kFrameHop = 160;  // 10 ms
constexpr int kLpcOrder = 12;
constexpr int kCepsOrder = 16;
constexpr int kBands = 23;
constexpr double kBandLo = 125.0;
constexpr double kBandHi = 8000.0;

void check_pair(const Waveform& est, const Waveform& ref) {
  IFCN_CHECK_DATA(est.size() == ref.size(), "metrics: signal lengths differ");
  IFCN_CHECK_DATA(ref.size() >= kFrameLen, "metrics: signal shorter than one frame");
  IFCN_CHECK_DATA(est.sample_rate == kSampleRate && ref.sample_rate == kSampleRate,
                  "metrics: expected 16 kHz audio");
}

int num_frames(int64_t n) {
  return n < kFrameLen ? 0 : 1 + static_cast<int>((n - kFrameLen) / kFrameHop);
}

std::vector<double> hamming(int n) {
  std::vector<double> w(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    w[static_cast<size_t>(i)] = 0.54 - 0.46 * std::cos(2.0 * M_PI * i / (n - 1));
  }
  return w;
}

// Autocorrelation-method LPC. Silent or numerically degenerate frames fall
// back to the flat all-pole model a = [1, 0, ...] so a zeroed-out estimate
// still scores (badly) instead of failing. a[0] is fixed at 1.
void lpc_frame(const double* x, const std::vector<double>& win,
               std::array<double, kLpcOrder + 1>* r_out,
               std::array<double, kLpcOrder + 1>* a_out) {
  std::array<double, kFrameLen> xw;
  for (int i = 0; i < kFrameLen; ++i) xw[static_cast<size_t>(i)] = x[i] * win[static_cast<size_t>(i)];

  auto& r = *r_out;
  for (int lag = 0; lag <= kLpcOrder; ++lag) {
    double s = 0.0;
    for (int i = lag; i < kFrameLen; ++i) s += xw[static_cast<size_t>(i)] * xw[static_cast<size_t>(i - lag)];
    r[static_cast<size_t>(lag)] = s;
  }

  auto& a = *a_out;
  a.fill(0.0);
  a[0] = 1.0;
  if (r[0] <= 1e-20) return;

  double err = r[0];
  std::array<double, kLpcOrder + 1> prev;
  for (int m = 1; m <= kLpcOrder; ++m) {
    double acc = r[static_cast<size_t>(m)];
    for (int i = 1; i < m; ++i) acc += a[static_cast<size_t>(i)] * r[static_cast<size_t>(m - i)];
    const double k = -acc / err;
    if (!(std::abs(k) < 1.0) || err <= 0.0) {
      a.fill(0.0);
      a[0] = 1.0;
      return;
    }
    prev = a;
    a[static_cast<size_t>(m)] = k;
    for (int i = 1; i < m; ++i) {
      a[static_cast<size_t>(i)] = prev[static_cast<size_t>(i)] + k * prev[static_cast<size_t>(m - i)];
    }
    err *= 1.0 - k * k;
  }
}

// Cepstrum of the all-pole model 1/A(z), orders 1..kCepsOrder.
std::array<double, kCepsOrder + 1> lpc_cepstrum(const std::array<double, kLpcOrder + 1>& a) {
  std::array<double, kCepsOrder + 1> c{};
  for (int n = 1; n <= kCepsOrder; ++n) {
    double s = n <= kLpcOrder ? -a[static_cast<size_t>(n)] : 0.0;
    for (int k = std::max(1, n - kLpcOrder); k < n; ++k) {
      s -= (static_cast<double>(k) / n) * c[static_cast<size_t>(k)] * a[static_cast<size_t>(n - k)];
    }
    c[static_cast<size_t>(n)] = s;
  }
  return c;
}

// a' R a for the Toeplitz autocorrelation matrix defined by r.
double lpc_quadratic(const std::array<double, kLpcOrder + 1>& a,
                     const std::array<double, kLpcOrder + 1>& r) {
  double total = 0.0;
  for (int lag = 0; lag <= kLpcOrder; ++lag) {
    double s = 0.0;
    for (int i = 0; i + lag <= kLpcOrder; ++i) {
      s += a[static_cast<size_t>(i)] * a[static_cast<size_t>(i + lag)];
    }
    total += (lag == 0 ? 1.0 : 2.0) * r[static_cast<size_t>(lag)] * s;
  }
  return total;
}

// Frames whose reference energy is within 40 dB of the loudest frame.
std::vector<bool> active_frames(const Waveform& ref) {
  const int M = num_frames(ref.size());
  std::vector<double> e(static_cast<size_t>(M), 0.0);
  double emax = 0.0;
  for (int m = 0; m < M; ++m) {
    const double* x = ref.samples.data() + static_cast<int64_t>(m) * kFrameHop;
    double s = 0.0;
    for (int i = 0; i < kFrameLen; ++i) s += x[i] * x[i];
    e[static_cast<size_t>(m)] = s;
    emax = std::max(emax, s);
  }
  std::vector<bool> act(static_cast<size_t>(M), false);
  const double thresh = emax * 1e-4;  // 40 dB below the peak frame
  for (int m = 0; m < M; ++m) act[static_cast<size_t>(m)] = e[static_cast<size_t>(m)] > thresh && emax > 0.0;
  return act;
}

}  // namespace

double cepstral_distance(const Waveform& est, const Waveform& ref) {
  check_pair(est, ref);
  const int M = num_frames(ref.size());
  const auto win = hamming(kFrameLen);
  const auto act = active_frames(ref);

  double sum = 0.0;
  int64_t n = 0;
  for (int m = 0; m < M; ++m) {
    if (!act[static_cast<size_t>(m)]) continue;
    const int64_t off = static_cast<int64_t>(m) * kFrameHop;
    std::array<double, kLpcOrder + 1> rr, re, ar, ae;
    lpc_frame(ref.samples.data() + off, win, &rr, &ar);
    lpc_frame(est.samples.data() + off, win, &re, &ae);
    const auto cr = lpc_cepstrum(ar);
    const auto ce = lpc_cepstrum(ae);
    double d2 = 0.0;
    for (int k = 1; k <= kCepsOrder; ++k) {
      const double d = ce[static_cast<size_t>(k)] - cr[static_cast<size_t>(k)];
      d2 += d * d;
    }
    const double cd = 10.0 / std::log(10.0) * std::sqrt(2.0 * d2);
    sum += std::clamp(cd, 0.0, 10.0);
    ++n;
  }
  IFCN_CHECK_DATA(n > 0, "cepstral_distance: no analyzable frames");
  return sum / static_cast<double>(n);
}

double llr(const Waveform& est, const Waveform& ref) {
  check_pair(est, ref);
  const int M = num_frames(ref.size());
  const auto win = hamming(kFrameLen);
  const auto act = active_frames(ref);

  std::vector<double> vals;
  vals.reserve(static_cast<size_t>(M));
  for (int m = 0; m < M; ++m) {
    if (!act[static_cast<size_t>(m)]) continue;
    const int64_t off = static_cast<int64_t>(m) * kFrameHop;
    std::array<double, kLpcOrder + 1> rr, re, ar, ae;
    lpc_frame(ref.samples.data() + off, win, &rr, &ar);
    lpc_frame(est.samples.data() + off, win, &re, &ae);
    const double num = lpc_quadratic(ae, rr);
    const double den = lpc_quadratic(ar, rr);
    if (den <= 0.0 || num <= 0.0) continue;
    vals.push_back(std::log(num / den));
  }
  IFCN_CHECK_DATA(!vals.empty(), "llr: no analyzable frames");

  // Mean of the smallest 95% of frame values guards against outlier frames.
  std::sort(vals.begin(), vals.end());
  const size_t keep = std::max<size_t>(1, static_cast<size_t>(std::floor(0.95 * static_cast<double>(vals.size()))));
  double s = std::accumulate(vals.begin(), vals.begin() + static_cast<int64_t>(keep), 0.0);
  return std::max(0.0, s / static_cast<double>(keep));
}

namespace {

double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
double mel_to_hz(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }

// Triangular mel filterbank over a one-sided power spectrum.
std::vector<std::vector<double>> mel_filterbank(int n_fft, int fs) {
  const int nb = n_fft / 2 + 1;
  std::vector<double> edges(kBands + 2);
  const double mlo = hz_to_mel(kBandLo), mhi = hz_to_mel(kBandHi);
  for (int i = 0; i < kBands + 2; ++i) {
    edges[static_cast<size_t>(i)] = mel_to_hz(mlo + (mhi - mlo) * i / (kBands + 1));
  }
  std::vector<std::vector<double>> fb(kBands, std::vector<double>(static_cast<size_t>(nb), 0.0));
  for (int j = 0; j < kBands; ++j) {
    const double lo = edges[static_cast<size_t>(j)], mid = edges[static_cast<size_t>(j + 1)],
                 hi = edges[static_cast<size_t>(j + 2)];
    for (int k = 0; k < nb; ++k) {
      const double f = static_cast<double>(k) * fs / n_fft;
      double w = 0.0;
      if (f >= lo && f <= mid && mid > lo) w = (f - lo) / (mid - lo);
      else if (f > mid && f <= hi && hi > mid) w = (hi - f) / (hi - mid);
      fb[static_cast<size_t>(j)][static_cast<size_t>(k)] = w;
    }
  }
  return fb;
}

}  // namespace

double fw_seg_snr(const Waveform& est, const Waveform& ref) {
  check_pair(est, ref);
  constexpr int kNfft = 512;
  const int M = num_frames(ref.size());
  const auto win = hamming(kFrameLen);
  const auto act = active_frames(ref);
  const auto fb = mel_filterbank(kNfft, kSampleRate);

  auto band_mags = [&](const double* x) {
    std::array<double, kNfft> buf{};
    for (int i = 0; i < kFrameLen; ++i) buf[static_cast<size_t>(i)] = x[i] * win[static_cast<size_t>(i)];
    std::array<std::complex<double>, kNfft / 2 + 1> spec;
    rfft(buf.data(), spec.data(), kNfft);
    std::vector<double> bands(kBands, 0.0);
    for (int j = 0; j < kBands; ++j) {
      double e = 0.0;
      for (int k = 0; k <= kNfft / 2; ++k) {
        e += fb[static_cast<size_t>(j)][static_cast<size_t>(k)] * std::norm(spec[static_cast<size_t>(k)]);
      }
      bands[static_cast<size_t>(j)] = std::sqrt(e);
    }
    return bands;
  };

  double total = 0.0;
  int64_t n = 0;
  for (int m = 0; m < M; ++m) {
    if (!act[static_cast<size_t>(m)]) continue;
    const int64_t off = static_cast<int64_t>(m) * kFrameHop;
    const auto br = band_mags(ref.samples.data() + off);
    const auto be = band_mags(est.samples.data() + off);
    double wsum = 0.0, snr_sum = 0.0;
    for (int j = 0; j < kBands; ++j) {
      const double xr = br[static_cast<size_t>(j)], xe = be[static_cast<size_t>(j)];
      if (xr <= 0.0) continue;
      const double d = (xr - xe) * (xr - xe);
      const double snr = 10.0 * std::log10(xr * xr / std::max(d, 1e-300));
      const double w = std::pow(xr * xr, 0.2);
      snr_sum += w * std::clamp(snr, -10.0, 35.0);
      wsum += w;
    }
    if (wsum <= 0.0) continue;
    total += snr_sum / wsum;
    ++n;
  }
  IFCN_CHECK_DATA(n > 0, "fw_seg_snr: no analyzable frames");
  return total / static_cast<double>(n);
}

namespace {

double erb_bandwidth(double fc) { return 24.7 * (4.37 * fc / 1000.0 + 1.0); }
double hz_to_erb_number(double f) { return 21.4 * std::log10(4.37 * f / 1000.0 + 1.0); }
double erb_number_to_hz(double e) { return (std::pow(10.0, e / 21.4) - 1.0) * 1000.0 / 4.37; }

}  // namespace

double srmr(const Waveform& x) {
  IFCN_CHECK_DATA(x.size() >= kSampleRate / 2, "srmr: need at least 0.5 s of audio");
  IFCN_CHECK_DATA(x.sample_rate == kSampleRate, "srmr: expected 16 kHz audio");
  const int64_t len = x.size();
  size_t n = 1;
  while (n < static_cast<size_t>(len)) n <<= 1;

  std::vector<double> padded(n, 0.0);
  std::copy(x.samples.begin(), x.samples.end(), padded.begin());
  std::vector<std::complex<double>> spec(n / 2 + 1);
  rfft(padded.data(), spec.data(), static_cast<int>(n));

  // Channel centers equally spaced on the ERB-number scale.
  std::array<double, kBands> fc;
  const double elo = hz_to_erb_number(kBandLo), ehi = hz_to_erb_number(kBandHi);
  for (int j = 0; j < kBands; ++j) {
    fc[static_cast<size_t>(j)] = erb_number_to_hz(elo + (ehi - elo) * j / (kBands - 1));
  }

  // Modulation bands: geometric spacing 4..128 Hz, rectangular bins with
  // geometric-midpoint edges.
  constexpr int kMod = 8;
  const double ratio = std::pow(32.0, 1.0 / 7.0);
  std::array<double, kMod> fm;
  for (int b = 0; b < kMod; ++b) fm[static_cast<size_t>(b)] = 4.0 * std::pow(ratio, b);
  std::array<double, kMod + 1> medges;
  medges[0] = fm[0] / std::sqrt(ratio);
  for (int b = 1; b < kMod; ++b) medges[static_cast<size_t>(b)] = std::sqrt(fm[static_cast<size_t>(b - 1)] * fm[static_cast<size_t>(b)]);
  medges[kMod] = fm[kMod - 1] * std::sqrt(ratio);

  constexpr int kDecim = 25;  // 16 kHz -> 640 Hz envelope rate
  const double env_fs = static_cast<double>(kSampleRate) / kDecim;
  const int64_t dec_len = (len + kDecim - 1) / kDecim;
  const int win_len = static_cast<int>(std::min<int64_t>(dec_len, 640));  // 1 s of envelope
  const int hop = std::max(1, win_len / 2);
  const auto mwin = hamming(win_len);
  int mfft = 1;
  while (mfft < 2 * win_len) mfft <<= 1;

  std::vector<std::complex<double>> analytic_spec(n, 0.0);
  std::vector<std::complex<double>> analytic(n);
  std::array<double, kMod> energy{};

  for (int j = 0; j < kBands; ++j) {
    const double b = 1.019 * erb_bandwidth(fc[static_cast<size_t>(j)]);
    // Fourth-order gammatone magnitude response, applied one-sided so the
    // inverse transform is the analytic band signal; |analytic| is the
    // Hilbert envelope.
    std::fill(analytic_spec.begin(), analytic_spec.end(), std::complex<double>(0.0, 0.0));
    for (size_t k = 1; k + 1 < n / 2 + 1; ++k) {
      const double f = static_cast<double>(k) * kSampleRate / static_cast<double>(n);
      const double u = (f - fc[static_cast<size_t>(j)]) / b;
      const double g = 1.0 / ((1.0 + u * u) * (1.0 + u * u));
      analytic_spec[k] = 2.0 * g * spec[k];
    }
    analytic = analytic_spec;
    cfft(analytic.data(), static_cast<int>(n), +1);

    // Envelope, boxcar lowpass, decimate.
    std::vector<double> env(static_cast<size_t>(dec_len));
    for (int64_t i = 0; i < dec_len; ++i) {
      double s = 0.0;
      int cnt = 0;
      for (int64_t t = i * kDecim; t < std::min<int64_t>(len, (i + 1) * kDecim); ++t) {
        s += std::abs(analytic[static_cast<size_t>(t)]) / static_cast<double>(n);
        ++cnt;
      }
      env[static_cast<size_t>(i)] = s / std::max(1, cnt);
    }

    // Per-window modulation spectrum, mean removed so the DC lobe does not
    // leak into the lowest band.
    std::vector<double> frame(static_cast<size_t>(mfft), 0.0);
    std::vector<std::complex<double>> mspec(static_cast<size_t>(mfft / 2 + 1));
    for (int64_t start = 0; start + win_len <= dec_len; start += hop) {
      double mean = 0.0;
      for (int i = 0; i < win_len; ++i) mean += env[static_cast<size_t>(start + i)];
      mean /= win_len;
      std::fill(frame.begin(), frame.end(), 0.0);
      for (int i = 0; i < win_len; ++i) {
        frame[static_cast<size_t>(i)] = (env[static_cast<size_t>(start + i)] - mean) * mwin[static_cast<size_t>(i)];
      }
      rfft(frame.data(), mspec.data(), mfft);
      for (int k = 1; k <= mfft / 2; ++k) {
        const double f = static_cast<double>(k) * env_fs / mfft;
        if (f < medges[0] || f >= medges[kMod]) continue;
        int band = 0;
        while (band + 1 < kMod && f >= medges[static_cast<size_t>(band + 1)]) ++band;
        energy[static_cast<size_t>(band)] += std::norm(mspec[static_cast<size_t>(k)]);
      }
    }
  }

  const double num = energy[0] + energy[1] + energy[2] + energy[3];
  const double den = energy[4] + energy[5] + energy[6] + energy[7];
  if (num + den <= 0.0) return 0.0;  // silent input
  return num / std::max(den, 1e-300);
}

Waveform align_to_reference(const Waveform& est, const Waveform& ref, int max_lag) {
  IFCN_CHECK_DATA(est.size() == ref.size(), "align: signal lengths differ");
  IFCN_CHECK(max_lag >= 0, "align: negative search range");
  const int64_t n = ref.size();
  int best_lag = 0;
  double best = -1.0;
  for (int lag = -max_lag; lag <= max_lag; ++lag) {
    double c = 0.0;
    const int64_t lo = std::max<int64_t>(0, -lag);
    const int64_t hi = std::min<int64_t>(n, n - lag);
    for (int64_t i = lo; i < hi; ++i) c += ref.samples[static_cast<size_t>(i)] * est.samples[static_cast<size_t>(i + lag)];
    if (std::abs(c) > best) {
      best = std::abs(c);
      best_lag = lag;
    }
  }
  Waveform out;
  out.sample_rate = est.sample_rate;
  out.samples.assign(static_cast<size_t>(n), 0.0);
  for (int64_t i = 0; i < n; ++i) {
    const int64_t src = i + best_lag;
    if (src >= 0 && src < n) out.samples[static_cast<size_t>(i)] = est.samples[static_cast<size_t>(src)];
  }
  return out;
}

MetricResult evaluate_pair(const Waveform& est, const Waveform& ref, bool align) {
  Waveform aligned;
  const Waveform* use = &est;
  if (align) {
    aligned = align_to_reference(est, ref);
    use = &aligned;
  }
  MetricResult r;
  r.cd = cepstral_distance(*use, ref);
  r.llr = llr(*use, ref);
  r.fwsnr = fw_seg_snr(*use, ref);
  r.srmr = srmr(*use);
  r.si_sdr = si_sdr(*use, ref);
  return r;
}

double spearman_rho(const std::vector<double>& x, const std::vector<double>& y) {
  IFCN_CHECK(x.size() == y.size() && x.size() >= 2, "spearman: need two equal-length series");
  auto ranks = [](const std::vector<double>& v) {
    const size_t n = v.size();
    std::vector<size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return v[a] < v[b]; });
    std::vector<double> r(n);
    size_t i = 0;
    while (i < n) {
      size_t j = i;
      while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
      for (size_t k = i; k <= j; ++k) r[idx[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  IFCN_CHECK(sxx > 0.0 && syy > 0.0, "spearman: constant series");
  return sxy / std::sqrt(sxx * syy);
}

MetricResult aggregate_metrics(const std::vector<MetricRow>& rows) {
  IFCN_CHECK(!rows.empty(), "aggregate_metrics: empty report");
  MetricResult m;
  for (const auto& r : rows) {
    m.cd += r.m.cd;
    m.llr += r.m.llr;
    m.fwsnr += r.m.fwsnr;
    m.srmr += r.m.srmr;
    m.si_sdr += r.m.si_sdr;
  }
  const double n = static_cast<double>(rows.size());
  m.cd /= n;
  m.llr /= n;
  m.fwsnr /= n;
  m.srmr /= n;
  m.si_sdr /= n;
  return m;
}

void write_metrics_csv(const std::vector<MetricRow>& rows, const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  IFCN_CHECK_DATA(f.good(), "cannot write metrics csv: " + path);
  f << "id,cd,llr,fwsnr,srmr,si_sdr\n";
  f.precision(6);
  f.setf(std::ios::fixed);
  for (const auto& r : rows) {
    f << r.id << ',' << r.m.cd << ',' << r.m.llr << ',' << r.m.fwsnr << ',' << r.m.srmr
      << ',' << r.m.si_sdr << "\n";
  }
  IFCN_CHECK_DATA(f.good(), "metrics csv write failed: " + path);
}

void write_metrics_json(const std::vector<MetricRow>& rows, const std::string& path) {
  const MetricResult m = aggregate_metrics(rows);
  nlohmann::json j{{"n", rows.size()}, {"cd", m.cd},     {"llr", m.llr},
                   {"fwsnr", m.fwsnr}, {"srmr", m.srmr}, {"si_sdr", m.si_sdr}};
  std::ofstream f(path, std::ios::trunc);
  IFCN_CHECK_DATA(f.good(), "cannot write metrics json: " + path);
  f << j.dump(2) << "\n";
  IFCN_CHECK_DATA(f.good(), "metrics json write failed: " + path);
}

}  // namespace ifcn
