// Copyright 2026 ifcorrnet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <complex>
#include <vector>

namespace ifcn {

// Thin wrappers over FFTW (double precision). Plans are cached per size and
// created with FFTW_UNALIGNED so execution on caller buffers is thread-safe.

// Real-to-complex forward DFT, unnormalized: out[k] = sum_n in[n] e^{-i2pi kn/N},
// k = 0..N/2. out must hold n/2+1 entries.
void rfft(const double* in, std::complex<double>* out, int n);

// Complex-to-real inverse DFT, unnormalized: out[n] = sum over the full
// Hermitian spectrum implied by in[0..N/2]. Imag parts of in[0] and in[N/2]
// are ignored. Divide by N externally for a true inverse.
void irfft(const std::complex<double>* in, double* out, int n);

// In-place complex forward (sign -1) or inverse (sign +1) DFT, unnormalized.
void cfft(std::complex<double>* buf, int n, int sign);

}  // namespace ifcn
