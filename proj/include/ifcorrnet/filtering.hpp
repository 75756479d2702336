// Copyright 2026 ifcorrnet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <complex>
#include <vector>

#include "ifcorrnet/features.hpp"
#include "ifcorrnet/model.hpp"
#include "ifcorrnet/signal.hpp"

namespace ifcn {

// Per-bin complex filter across 2L+1 adjacent frames. L=0 holds a plain
// single-frame mask; the Mapping variant stores the spectrum itself.
struct DeepFilter {
  int L = 0;
  int64_t T = 0;
  int64_t F = 0;
  OutputVariant variant = OutputVariant::kMfFilter;
  std::vector<std::complex<double>> w;  // (t, f, tap)

  int taps() const { return 2 * L + 1; }
  std::complex<double>& at(int64_t t, int64_t f, int m) {
    return w[static_cast<size_t>((t * F + f) * taps() + m)];
  }
  const std::complex<double>& at(int64_t t, int64_t f, int m) const {
    return w[static_cast<size_t>((t * F + f) * taps() + m)];
  }
};

struct FilteredSpectrum {
  ComplexSpectrogram Y;
  OutputVariant source = OutputVariant::kMfFilter;
};

// Reinterprets a network head tensor (2*taps, T, F), real block then
// imaginary block, as a DeepFilter.
DeepFilter filter_from_head(const Tensor& head, OutputVariant variant, int L);

// Y[t,f] = sum_m w[t,f,m] * stack[t,f,m]; plain transpose, no conjugation.
// Mapping filters pass through as the spectrum itself.
FilteredSpectrum apply_filter(const DeepFilter& w, const MultiFrameStack& stack,
                              const ComplexSpectrogram& geometry);

// Regularized least-squares filter fitted against a target spectrogram:
// per frequency bin (or one global filter when per_frequency is false), solve
// (A^H A + lambda I) w = A^H t with rows of A the stacks across time and
// lambda = 1e-6 * trace(A^H A) / taps. Time-invariant; a diagnostic oracle,
// not the learned time-varying filter.
DeepFilter oracle_ls_filter(const MultiFrameStack& stack, const ComplexSpectrogram& target,
                            bool per_frequency = true);

// The regularized objective the oracle minimizes, for optimality probes:
// sum_bins |w^T x - target|^2 + lambda * sum_f ||w_f||^2.
double oracle_objective(const DeepFilter& w, const MultiFrameStack& stack,
                        const ComplexSpectrogram& target);

}  // namespace ifcn
