// Copyright 2026 ifcorrnet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <string>
#include <vector>

#include "ifcorrnet/signal.hpp"

namespace ifcn {

struct WavData {
  std::vector<double> samples;  // mono, [-1, 1) nominal
  int sample_rate = 0;
};

// Reads a mono RIFF/WAVE file. Supports PCM16 (scaled by 1/32768) and IEEE
// float32. Throws DataError on anything else.
WavData read_wav(const std::string& path);

// Writes PCM16 (values clipped to [-1, 1)) when float32=false, IEEE float32
// otherwise.
void write_wav(const std::string& path, const std::vector<double>& samples,
               int sample_rate, bool float32 = true);

// Waveform-typed conveniences over the same formats.
Waveform read_waveform(const std::string& path);
void write_wav(const std::string& path, const Waveform& w, bool float32 = true);

}  // namespace ifcn
