// Copyright 2026 ifcorrnet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <cmath>
#include <complex>

#include "doctest.h"

#include "ifcorrnet/filtering.hpp"
#include "ifcorrnet/rng.hpp"

using namespace ifcn;

namespace {

Waveform random_wave(int64_t n, uint64_t seed, double scale = 0.3) {
  Waveform w;
  w.samples.resize(static_cast<size_t>(n));
  Rng rng(seed);
  for (auto& v : w.samples) v = scale * rng.normal();
  return w;
}

DeepFilter one_hot_filter(int L, int64_t T, int64_t F) {
  DeepFilter w;
  w.L = L;
  w.T = T;
  w.F = F;
  w.variant = OutputVariant::kMfFilter;
  w.w.assign(static_cast<size_t>(T * F * w.taps()), {0.0, 0.0});
  for (int64_t t = 0; t < T; ++t)
    for (int64_t f = 0; f < F; ++f) w.at(t, f, L) = {1.0, 0.0};
  return w;
}

double spec_max_abs_diff(const ComplexSpectrogram& a, const ComplexSpectrogram& b) {
  double m = 0.0;
  for (size_t i = 0; i < a.values.size(); ++i)
    m = std::max(m, std::abs(a.values[i] - b.values[i]));
  return m;
}

}  // namespace

TEST_CASE("filter_from_head splits real and imaginary channel blocks") {
  const int L = 1, taps = 3;
  const int64_t T = 4, F = 5;
  Tensor head({2 * taps, T, F});
  Rng rng(1);
  for (auto& v : head.data) v = rng.normal();

  const DeepFilter w = filter_from_head(head, OutputVariant::kMfFilter, L);
  CHECK(w.L == L);
  CHECK(w.T == T);
  CHECK(w.F == F);
  for (int64_t t = 0; t < T; ++t) {
    for (int64_t f = 0; f < F; ++f) {
      for (int m = 0; m < taps; ++m) {
        const double re = head.data[static_cast<size_t>((m * T + t) * F + f)];
        const double im =
            head.data[static_cast<size_t>(((m + taps) * T + t) * F + f)];
        CHECK(w.at(t, f, m) == std::complex<double>(re, im));
      }
    }
  }
}

TEST_CASE("one-hot center tap passes the spectrogram through untouched") {
  const Waveform x = random_wave(4096, 2);
  const auto X = stft(x, 512, 256);
  for (int L : {0, 1, 3}) {
    const auto stack = build_stack(X, L);
    const auto filt = one_hot_filter(L, X.T, X.F);
    const auto out = apply_filter(filt, stack, X);
    CHECK(spec_max_abs_diff(out.Y, X) <= 1e-15);
    const auto y = istft(out.Y);
    REQUIRE(y.size() == x.size());
    double d = 0.0;
    for (size_t i = 0; i < x.size(); ++i)
      d = std::max(d, std::abs(y.samples[i] - x.samples[i]));
    CHECK(d <= 1e-6);
  }
}

TEST_CASE("filter application is an unconjugated weighted sum") {
  const Waveform x = random_wave(2048, 3);
  const auto X = stft(x, 512, 256);
  const int L = 1;
  const auto stack = build_stack(X, L);

  DeepFilter w = one_hot_filter(L, X.T, X.F);
  Rng rng(4);
  for (auto& z : w.w) z = {rng.normal(), rng.normal()};
  const auto out = apply_filter(w, stack, X);
  for (int64_t t = 0; t < X.T; ++t) {
    for (int64_t f = 0; f < X.F; ++f) {
      std::complex<double> acc(0.0, 0.0);
      for (int m = 0; m < w.taps(); ++m) acc += w.at(t, f, m) * stack.at(t, f, m);
      CHECK(std::abs(out.Y.at(t, f) - acc) <= 1e-12);
    }
  }
}

TEST_CASE("single-frame mask equals a zero-context multi-frame filter") {
  const Waveform x = random_wave(2048, 5);
  const auto X = stft(x, 512, 256);
  const auto stack = build_stack(X, 0);

  Tensor head({2, X.T, X.F});
  Rng rng(6);
  for (auto& v : head.data) v = rng.normal();

  const DeepFilter mask = filter_from_head(head, OutputVariant::kSfMask, 0);
  const DeepFilter mf = filter_from_head(head, OutputVariant::kMfFilter, 0);
  const auto ym = apply_filter(mask, stack, X);
  const auto yf = apply_filter(mf, stack, X);
  CHECK(spec_max_abs_diff(ym.Y, yf.Y) == 0.0);
}

TEST_CASE("mapping output is the spectrum itself") {
  const Waveform x = random_wave(2048, 7);
  const auto X = stft(x, 512, 256);
  Tensor head({2, X.T, X.F});
  Rng rng(8);
  for (auto& v : head.data) v = rng.normal();
  const DeepFilter w = filter_from_head(head, OutputVariant::kMapping, 0);
  const auto stack = build_stack(X, 0);
  const auto out = apply_filter(w, stack, X);
  for (int64_t t = 0; t < X.T; ++t) {
    for (int64_t f = 0; f < X.F; ++f) {
      const std::complex<double> want(
          head.data[static_cast<size_t>(t * X.F + f)],
          head.data[static_cast<size_t>((X.T + t) * X.F + f)]);
      CHECK(out.Y.at(t, f) == want);
    }
  }
}

TEST_CASE("oracle recovers a planted time-invariant filter") {
  const Waveform x = random_wave(32000, 9);
  const auto X = stft(x, 512, 256);
  const int L = 1;
  const auto stack = build_stack(X, L);

  // Plant a per-frequency filter and synthesize the target with it.
  Rng rng(10);
  std::vector<std::complex<double>> g(static_cast<size_t>(X.F) * 3);
  for (auto& z : g) z = {0.5 * rng.normal(), 0.5 * rng.normal()};
  ComplexSpectrogram target = X;
  for (int64_t t = 0; t < X.T; ++t) {
    for (int64_t f = 0; f < X.F; ++f) {
      std::complex<double> acc(0.0, 0.0);
      for (int m = 0; m < 3; ++m)
        acc += g[static_cast<size_t>(f * 3 + m)] * stack.at(t, f, m);
      target.values[static_cast<size_t>(t * X.F + f)] = acc;
    }
  }

  const DeepFilter w = oracle_ls_filter(stack, target);
  const auto out = apply_filter(w, stack, X);
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < out.Y.values.size(); ++i) {
    num += std::norm(out.Y.values[i] - target.values[i]);
    den += std::norm(target.values[i]);
  }
  CHECK(std::sqrt(num / den) <= 1e-4);
}

TEST_CASE("oracle returns the one-hot filter when the target is the center tap") {
  const Waveform x = random_wave(32000, 11);
  const auto X = stft(x, 512, 256);
  const int L = 2;
  const auto stack = build_stack(X, L);
  const DeepFilter w = oracle_ls_filter(stack, X);
  double worst = 0.0;
  for (int64_t f = 1; f < X.F - 1; ++f) {
    for (int m = 0; m < w.taps(); ++m) {
      const std::complex<double> want = (m == L) ? 1.0 : 0.0;
      worst = std::max(worst, std::abs(w.at(0, f, m) - want));
    }
  }
  CHECK(worst <= 1e-4);
}

TEST_CASE("oracle solution beats nearby perturbations of itself") {
  const Waveform x = random_wave(16000, 12);
  const auto X = stft(x, 512, 256);
  const auto stack = build_stack(X, 1);
  Rng rng(13);
  ComplexSpectrogram target = X;
  for (auto& z : target.values) z *= std::complex<double>(rng.normal(), rng.normal());

  const DeepFilter w = oracle_ls_filter(stack, target);
  const double base = oracle_objective(w, stack, target);
  for (int trial = 0; trial < 8; ++trial) {
    // The oracle minimizes over time-invariant filters, so the perturbation
    // must share one offset across frames to stay in the feasible set.
    DeepFilter p = w;
    for (int64_t f = 0; f < p.F; ++f) {
      for (int m = 0; m < p.taps(); ++m) {
        const std::complex<double> d(1e-3 * rng.normal(), 1e-3 * rng.normal());
        for (int64_t t = 0; t < p.T; ++t) p.at(t, f, m) += d;
      }
    }
    CHECK(oracle_objective(p, stack, target) >= base);
  }
}

TEST_CASE("oracle filter strictly improves a single-echo mixture") {
  const Waveform clean = random_wave(32000, 14);
  Waveform mix = clean;
  const int64_t delay = 320;
  for (int64_t n = delay; n < static_cast<int64_t>(mix.size()); ++n)
    mix.samples[static_cast<size_t>(n)] +=
        0.7 * clean.samples[static_cast<size_t>(n - delay)];

  const auto Xm = stft(mix, 512, 256);
  const auto Xc = stft(clean, 512, 256);
  const auto stack = build_stack(Xm, 2);
  const DeepFilter w = oracle_ls_filter(stack, Xc);
  const auto out = apply_filter(w, stack, Xm);
  const Waveform est = istft(out.Y);

  const double before = si_sdr(mix, clean);
  const double after = si_sdr(est, clean);
  CHECK(after > before + 3.0);
}
