// Copyright 2026 ifcorrnet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "ifcorrnet/wav_io.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "ifcorrnet/common.hpp"

namespace ifcn {
namespace {

uint32_t rd_u32(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}
uint16_t rd_u16(const uint8_t* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}
void wr_u32(std::vector<uint8_t>& v, uint32_t x) {
  v.push_back(static_cast<uint8_t>(x & 0xff));
  v.push_back(static_cast<uint8_t>((x >> 8) & 0xff));
  v.push_back(static_cast<uint8_t>((x >> 16) & 0xff));
  v.push_back(static_cast<uint8_t>((x >> 24) & 0xff));
}
void wr_u16(std::vector<uint8_t>& v, uint16_t x) {
  v.push_back(static_cast<uint8_t>(x & 0xff));
  v.push_back(static_cast<uint8_t>((x >> 8) & 0xff));
}
void wr_tag(std::vector<uint8_t>& v, const char* t) {
  v.insert(v.end(), t, t + 4);
}

}  // namespace

WavData read_wav(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  IFCN_CHECK_DATA(f.good(), "cannot open wav file: " + path);
  std::vector<uint8_t> buf((std::istreambuf_iterator<char>(f)),
                           std::istreambuf_iterator<char>());
  IFCN_CHECK_DATA(buf.size() >= 44, "wav too short: " + path);
  IFCN_CHECK_DATA(std::memcmp(buf.data(), "RIFF", 4) == 0 &&
                      std::memcmp(buf.data() + 8, "WAVE", 4) == 0,
                  "not a RIFF/WAVE file: " + path);

  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  size_t data_off = 0, data_len = 0;
  size_t pos = 12;
  while (pos + 8 <= buf.size()) {
    const uint8_t* hdr = buf.data() + pos;
    uint32_t len = rd_u32(hdr + 4);
    size_t body = pos + 8;
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      IFCN_CHECK_DATA(len >= 16 && body + 16 <= buf.size(), "bad fmt chunk: " + path);
      format = rd_u16(buf.data() + body);
      channels = rd_u16(buf.data() + body + 2);
      rate = rd_u32(buf.data() + body + 4);
      bits = rd_u16(buf.data() + body + 14);
      if (format == 0xFFFE && len >= 40) {  // WAVE_FORMAT_EXTENSIBLE
        format = rd_u16(buf.data() + body + 24);
      }
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      data_off = body;
      data_len = len;
      if (data_off + data_len > buf.size()) data_len = buf.size() - data_off;
    }
    pos = body + len + (len & 1);
  }
  IFCN_CHECK_DATA(data_off != 0, "wav has no data chunk: " + path);
  IFCN_CHECK_DATA(channels == 1, "expected mono wav, got " +
                                     std::to_string(channels) + " channels: " + path);

  WavData out;
  out.sample_rate = static_cast<int>(rate);
  if (format == 1 && bits == 16) {
    size_t n = data_len / 2;
    out.samples.resize(n);
    for (size_t i = 0; i < n; ++i) {
      int16_t s = static_cast<int16_t>(rd_u16(buf.data() + data_off + 2 * i));
      out.samples[i] = static_cast<double>(s) / 32768.0;
    }
  } else if (format == 3 && bits == 32) {
    size_t n = data_len / 4;
    out.samples.resize(n);
    for (size_t i = 0; i < n; ++i) {
      uint32_t u = rd_u32(buf.data() + data_off + 4 * i);
      float v;
      std::memcpy(&v, &u, 4);
      out.samples[i] = static_cast<double>(v);
    }
  } else {
    throw DataError("unsupported wav format (want PCM16 or float32): " + path);
  }
  return out;
}

void write_wav(const std::string& path, const std::vector<double>& samples,
               int sample_rate, bool float32) {
  std::vector<uint8_t> v;
  uint32_t nbytes = static_cast<uint32_t>(samples.size() * (float32 ? 4 : 2));
  wr_tag(v, "RIFF");
  wr_u32(v, 36 + nbytes);
  wr_tag(v, "WAVE");
  wr_tag(v, "fmt ");
  wr_u32(v, 16);
  wr_u16(v, float32 ? 3 : 1);
  wr_u16(v, 1);
  wr_u32(v, static_cast<uint32_t>(sample_rate));
  uint32_t block = float32 ? 4u : 2u;
  wr_u32(v, static_cast<uint32_t>(sample_rate) * block);
  wr_u16(v, static_cast<uint16_t>(block));
  wr_u16(v, float32 ? 32 : 16);
  wr_tag(v, "data");
  wr_u32(v, nbytes);
  if (float32) {
    for (double s : samples) {
      float x = static_cast<float>(s);
      uint32_t u;
      std::memcpy(&u, &x, 4);
      wr_u32(v, u);
    }
  } else {
    for (double s : samples) {
      double scaled = std::nearbyint(s * 32768.0);
      if (scaled > 32767.0) scaled = 32767.0;
      if (scaled < -32768.0) scaled = -32768.0;
      wr_u16(v, static_cast<uint16_t>(static_cast<int16_t>(scaled)));
    }
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  IFCN_CHECK_DATA(f.good(), "cannot write wav file: " + path);
  f.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size()));
  IFCN_CHECK_DATA(f.good(), "short write on wav file: " + path);
}

Waveform read_waveform(const std::string& path) {
  WavData d = read_wav(path);
  Waveform w;
  w.sample_rate = d.sample_rate;
  w.samples = std::move(d.samples);
  return w;
}

void write_wav(const std::string& path, const Waveform& w, bool float32) {
  write_wav(path, w.samples, w.sample_rate, float32);
}

}  // namespace ifcn
