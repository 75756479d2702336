// Copyright 2026 ifcorrnet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <string>
#include <vector>

#include "ifcorrnet/signal.hpp"

namespace ifcn {

// Speech quality metrics in the REVERB style. These are self-contained
// approximations of the reference tools: frame sizes, LPC order, band
// counts and clamps are fixed here so numbers are comparable across runs,
// but they are not expected to match any external toolkit digit for digit.

struct MetricResult {
  double cd = 0.0;      // cepstral distance, lower is better
  double llr = 0.0;     // log-likelihood ratio, lower is better
  double fwsnr = 0.0;   // frequency-weighted segmental SNR in dB, higher is better
  double srmr = 0.0;    // modulation energy ratio, higher is better
  double si_sdr = 0.0;  // scale-invariant SDR in dB, higher is better
};

struct MetricRow {
  std::string id;
  MetricResult m;
};

// Frame-wise LPC(12) cepstral distance over orders 1..16, 25 ms frames with
// 10 ms shift, averaged over frames whose reference energy is within 40 dB
// of the loudest frame. Each frame's distance is clamped to [0, 10].
double cepstral_distance(const Waveform& est, const Waveform& ref);

// Frame-wise LPC(12) log-likelihood ratio ln(ae' R ar ae / ar' R ar) with R
// the reference autocorrelation matrix; mean of the smallest 95% of frame
// values, clamped to >= 0.
double llr(const Waveform& est, const Waveform& ref);

// Segmental SNR over a 23-band mel filterbank (125 Hz to 8 kHz), per-band
// SNR clamped to [-10, 35] dB and weighted by (reference band energy)^0.2.
double fw_seg_snr(const Waveform& est, const Waveform& ref);

// Non-intrusive modulation-energy ratio: 23-channel gammatone filterbank
// (125 Hz to 8 kHz, ERB-spaced), Hilbert envelopes downsampled to 640 Hz,
// modulation spectra pooled into 8 bands with centers spaced geometrically
// from 4 to 128 Hz; returns (bands 1..4) / (bands 5..8) energy.
double srmr(const Waveform& x);

// Shifts est by the lag in [-max_lag, max_lag] samples that maximizes the
// cross-correlation with ref, zero-padding the exposed edge. 160 samples is
// 10 ms at 16 kHz.
Waveform align_to_reference(const Waveform& est, const Waveform& ref, int max_lag = 160);

// All five metrics on one pair; when align is true the estimate is first
// shifted onto the reference (srmr is computed on the estimate alone).
MetricResult evaluate_pair(const Waveform& est, const Waveform& ref, bool align = true);

// Spearman rank correlation with average ranks for ties.
double spearman_rho(const std::vector<double>& x, const std::vector<double>& y);

MetricResult aggregate_metrics(const std::vector<MetricRow>& rows);

// CSV columns: id, cd, llr, fwsnr, srmr, si_sdr.
void write_metrics_csv(const std::vector<MetricRow>& rows, const std::string& path);
// JSON object with per-metric means plus the row count.
void write_metrics_json(const std::vector<MetricRow>& rows, const std::string& path);

}  // namespace ifcn
