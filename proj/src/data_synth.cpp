// Copyright 2026 ifcorrnet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "ifcorrnet/data_synth.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>

#include "json.hpp"

#include "ifcorrnet/fft.hpp"
#include "ifcorrnet/rng.hpp"
#include "ifcorrnet/wav_io.hpp"

namespace ifcn {

using nlohmann::json;

std::string to_string(RirMethod m) {
  return m == RirMethod::kExpDecayNoise ? "exp-decay-noise" : "image-method";
}

std::string to_string(NoiseKind k) {
  switch (k) {
    case NoiseKind::kWhite: return "white";
    case NoiseKind::kPink: return "pink";
    default: return "hum+white";
  }
}

RirMethod rir_method_from_string(const std::string& s) {
  if (s == "exp-decay-noise") return RirMethod::kExpDecayNoise;
  if (s == "image-method") return RirMethod::kImageMethod;
  throw ConfigError("unknown RIR method: " + s);
}

NoiseKind noise_kind_from_string(const std::string& s) {
  if (s == "white") return NoiseKind::kWhite;
  if (s == "pink") return NoiseKind::kPink;
  if (s == "hum+white") return NoiseKind::kHumWhite;
  throw ConfigError("unknown noise kind: " + s);
}

void RirSpec::validate() const {
  IFCN_CHECK_CFG(t60 >= 0.05 && t60 <= 2.0, "rir: t60 outside [0.05, 2.0] s");
  IFCN_CHECK_CFG(direct_delay >= 0 && direct_delay < length, "rir: bad direct delay");
  IFCN_CHECK_CFG(length > 0, "rir: length must be positive");
}

namespace {

std::vector<double> exp_decay_rir(const RirSpec& spec) {
  const int fs = kSampleRate;
  std::vector<double> h(static_cast<size_t>(spec.length), 0.0);
  h[static_cast<size_t>(spec.direct_delay)] = 1.0;

  Rng rng(hash_seed(spec.seed, 0x7261696eULL));
  std::vector<double> tail(static_cast<size_t>(spec.length), 0.0);
  double tail_energy = 0.0;
  for (int n = spec.direct_delay + 1; n < spec.length; ++n) {
    const double env = std::exp(-3.0 * std::log(10.0) * n / (spec.t60 * fs));
    const double v = rng.normal() * env;
    tail[static_cast<size_t>(n)] = v;
    tail_energy += v * v;
  }
  if (tail_energy > 0.0) {
    // Direct energy is 1; pick the tail gain from the requested ratio.
    const double g = std::sqrt(std::pow(10.0, -spec.drr_db / 10.0) / tail_energy);
    for (int n = spec.direct_delay + 1; n < spec.length; ++n) {
      h[static_cast<size_t>(n)] += g * tail[static_cast<size_t>(n)];
    }
  }
  return h;
}

std::vector<double> image_method_rir(const RirSpec& spec) {
  const int fs = kSampleRate;
  const double c = 343.0;
  const auto& Lr = spec.room;
  for (int i = 0; i < 3; ++i) {
    IFCN_CHECK_CFG(Lr[static_cast<size_t>(i)] > 0.0 &&
                       spec.src[static_cast<size_t>(i)] > 0.0 &&
                       spec.src[static_cast<size_t>(i)] < Lr[static_cast<size_t>(i)] &&
                       spec.mic[static_cast<size_t>(i)] > 0.0 &&
                       spec.mic[static_cast<size_t>(i)] < Lr[static_cast<size_t>(i)],
                   "rir: source/mic must lie inside the room");
  }

  // Sabine: t60 = 0.1611 V / (alpha S); uniform wall absorption.
  const double V = Lr[0] * Lr[1] * Lr[2];
  const double S = 2.0 * (Lr[0] * Lr[1] + Lr[1] * Lr[2] + Lr[0] * Lr[2]);
  double alpha = 0.1611 * V / (S * spec.t60);
  alpha = std::min(alpha, 0.9999);
  const double beta = std::sqrt(1.0 - alpha);

  std::vector<double> h(static_cast<size_t>(spec.length), 0.0);
  const double max_dist = c * (spec.length - 1) / fs;
  std::array<int, 3> order;
  for (int i = 0; i < 3; ++i) {
    order[static_cast<size_t>(i)] =
        static_cast<int>(std::ceil(max_dist / (2.0 * Lr[static_cast<size_t>(i)]))) + 1;
  }

  for (int nx = -order[0]; nx <= order[0]; ++nx) {
    for (int ny = -order[1]; ny <= order[1]; ++ny) {
      for (int nz = -order[2]; nz <= order[2]; ++nz) {
        for (int q = 0; q < 8; ++q) {
          const int qx = q & 1, qy = (q >> 1) & 1, qz = (q >> 2) & 1;
          const double ix = (1 - 2 * qx) * spec.src[0] + 2 * nx * Lr[0];
          const double iy = (1 - 2 * qy) * spec.src[1] + 2 * ny * Lr[1];
          const double iz = (1 - 2 * qz) * spec.src[2] + 2 * nz * Lr[2];
          const double dx = ix - spec.mic[0], dy = iy - spec.mic[1], dz = iz - spec.mic[2];
          const double d = std::sqrt(dx * dx + dy * dy + dz * dz);
          if (d < 1e-6) continue;
          const int refl = std::abs(nx - qx) + std::abs(nx) + std::abs(ny - qy) +
                           std::abs(ny) + std::abs(nz - qz) + std::abs(nz);
          const int idx = spec.direct_delay + static_cast<int>(std::lround(d / c * fs));
          if (idx >= spec.length) continue;
          h[static_cast<size_t>(idx)] += std::pow(beta, refl) / (4.0 * M_PI * d);
        }
      }
    }
  }
  // Normalize so the direct peak is 1, matching the exp-decay convention.
  double peak = 0.0;
  for (double v : h) peak = std::max(peak, std::abs(v));
  IFCN_CHECK(peak > 0.0, "rir: image method produced an empty response");
  for (double& v : h) v /= peak;
  return h;
}

}  // namespace

std::vector<double> make_rir(const RirSpec& spec) {
  spec.validate();
  return spec.method == RirMethod::kExpDecayNoise ? exp_decay_rir(spec)
                                                  : image_method_rir(spec);
}

std::vector<double> direct_part(const std::vector<double>& rir, double window_ms) {
  IFCN_CHECK(!rir.empty(), "direct_part: empty RIR");
  size_t peak = 0;
  for (size_t i = 1; i < rir.size(); ++i) {
    if (std::abs(rir[i]) > std::abs(rir[peak])) peak = i;
  }
  const size_t win = static_cast<size_t>(std::lround(window_ms * kSampleRate / 1000.0));
  std::vector<double> out(rir.size(), 0.0);
  for (size_t i = peak; i < std::min(rir.size(), peak + win); ++i) out[i] = rir[i];
  return out;
}

double schroeder_t60(const std::vector<double>& rir, int fs) {
  IFCN_CHECK(rir.size() >= 2, "schroeder_t60: RIR too short");
  std::vector<double> edc(rir.size());
  double acc = 0.0;
  for (size_t i = rir.size(); i-- > 0;) {
    acc += rir[i] * rir[i];
    edc[i] = acc;
  }
  IFCN_CHECK(acc > 0.0, "schroeder_t60: silent RIR");

  // Least-squares line through the decay curve between -5 and -25 dB.
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int64_t n = 0;
  for (size_t i = 0; i < edc.size(); ++i) {
    const double db = 10.0 * std::log10(edc[i] / acc + 1e-300);
    if (db > -5.0 || db < -25.0) continue;
    const double t = static_cast<double>(i) / fs;
    sx += t;
    sy += db;
    sxx += t * t;
    sxy += t * db;
    ++n;
  }
  IFCN_CHECK(n >= 2, "schroeder_t60: decay range too short to fit");
  const double denom = static_cast<double>(n) * sxx - sx * sx;
  IFCN_CHECK(std::abs(denom) > 1e-30, "schroeder_t60: degenerate fit");
  const double slope = (static_cast<double>(n) * sxy - sx * sy) / denom;  // dB per second
  IFCN_CHECK(slope < 0.0, "schroeder_t60: non-decaying response");
  return -60.0 / slope;
}

std::vector<double> fft_convolve(const std::vector<double>& a, const std::vector<double>& b) {
  IFCN_CHECK(!a.empty() && !b.empty(), "fft_convolve: empty input");
  const size_t out_len = a.size() + b.size() - 1;
  size_t n = 1;
  while (n < out_len) n <<= 1;

  std::vector<double> pa(n, 0.0), pb(n, 0.0);
  std::copy(a.begin(), a.end(), pa.begin());
  std::copy(b.begin(), b.end(), pb.begin());
  std::vector<std::complex<double>> fa(n / 2 + 1), fb(n / 2 + 1);
  rfft(pa.data(), fa.data(), static_cast<int>(n));
  rfft(pb.data(), fb.data(), static_cast<int>(n));
  for (size_t i = 0; i < fa.size(); ++i) fa[i] *= fb[i];
  std::vector<double> out_full(n);
  irfft(fa.data(), out_full.data(), static_cast<int>(n));
  std::vector<double> out(out_full.begin(), out_full.begin() + static_cast<int64_t>(out_len));
  for (double& v : out) v /= static_cast<double>(n);
  return out;
}

namespace {

std::vector<double> make_noise(int64_t len, NoiseKind kind, Rng& rng) {
  std::vector<double> n(static_cast<size_t>(len));
  for (double& v : n) v = rng.normal();
  if (kind == NoiseKind::kWhite) return n;

  if (kind == NoiseKind::kPink) {
    // Spectral 1/sqrt(f) shaping of the white draw.
    size_t m = 1;
    while (m < n.size()) m <<= 1;
    std::vector<double> p(m, 0.0);
    std::copy(n.begin(), n.end(), p.begin());
    std::vector<std::complex<double>> spec(m / 2 + 1);
    rfft(p.data(), spec.data(), static_cast<int>(m));
    for (size_t k = 1; k < spec.size(); ++k) spec[k] /= std::sqrt(static_cast<double>(k));
    spec[0] = 0.0;
    std::vector<double> shaped(m);
    irfft(spec.data(), shaped.data(), static_cast<int>(m));
    for (size_t i = 0; i < n.size(); ++i) n[i] = shaped[i] / static_cast<double>(m);
    return n;
  }

  // hum+white: 120 Hz tone at the white noise's RMS, random phase.
  double p = 0.0;
  for (double v : n) p += v * v;
  const double rms = std::sqrt(p / static_cast<double>(len));
  const double phase = rng.uniform(0.0, 2.0 * M_PI);
  const double amp = rms * std::sqrt(2.0);  // sine of equal power
  for (int64_t i = 0; i < len; ++i) {
    n[static_cast<size_t>(i)] +=
        amp * std::sin(2.0 * M_PI * 120.0 * static_cast<double>(i) / kSampleRate + phase);
  }
  return n;
}

}  // namespace

MixtureSample make_mixture(const Waveform& clean, const std::vector<double>& rir,
                           double snr_db, NoiseKind kind, uint64_t seed) {
  IFCN_CHECK_DATA(clean.size() >= kSampleRate, "make_mixture: clean signal shorter than 1 s");
  double clean_power = 0.0;
  for (double v : clean.samples) clean_power += v * v;
  IFCN_CHECK_DATA(clean_power > 0.0, "make_mixture: silent clean input");

  const int64_t len = clean.size();
  std::vector<double> reverb = fft_convolve(clean.samples, rir);
  reverb.resize(static_cast<size_t>(len));
  std::vector<double> direct = fft_convolve(clean.samples, direct_part(rir));
  direct.resize(static_cast<size_t>(len));

  MixtureSample s;
  s.clean = clean;
  s.rir = rir;
  s.snr_db = snr_db;
  s.noise_kind = kind;
  s.seed = seed;
  s.target.sample_rate = clean.sample_rate;
  s.target.samples = std::move(direct);
  s.mixture.sample_rate = clean.sample_rate;
  s.mixture.samples = reverb;

  if (!std::isinf(snr_db)) {
    double p_rev = 0.0;
    for (double v : reverb) p_rev += v * v;
    p_rev /= static_cast<double>(len);
    Rng rng(hash_seed(seed, 0x6e6f6973ULL));
    std::vector<double> noise = make_noise(len, kind, rng);
    double p_noise = 0.0;
    for (double v : noise) p_noise += v * v;
    p_noise /= static_cast<double>(len);
    IFCN_CHECK(p_noise > 0.0, "make_mixture: zero noise power");
    const double scale = std::sqrt(p_rev / (p_noise * std::pow(10.0, snr_db / 10.0)));
    for (int64_t i = 0; i < len; ++i) {
      s.mixture.samples[static_cast<size_t>(i)] += scale * noise[static_cast<size_t>(i)];
    }
  }
  return s;
}

Waveform speechlike_clean(double seconds, uint64_t seed) {
  IFCN_CHECK_CFG(seconds > 0.0, "speechlike_clean: duration must be positive");
  const int fs = kSampleRate;
  const int64_t len = static_cast<int64_t>(std::lround(seconds * fs));
  Rng rng(hash_seed(seed, 0x636c65616eULL));

  constexpr int kOrder = 8;
  const int64_t seg = fs / 4;          // new spectral shape every 250 ms
  const int64_t fade = fs / 100;       // 10 ms crossfade
  std::vector<double> out(static_cast<size_t>(len), 0.0);

  // Excitation shared across segments so crossfaded regions stay coherent.
  std::vector<double> excitation(static_cast<size_t>(len));
  for (double& v : excitation) v = rng.normal();

  auto ar_coeffs = [&]() {
    // Stable AR(8) from reflection coefficients via the Levinson recursion.
    std::array<double, kOrder + 1> a{};
    a[0] = 1.0;
    std::array<double, kOrder + 1> prev{};
    for (int m = 1; m <= kOrder; ++m) {
      const double k = rng.uniform(-0.65, 0.65);
      prev = a;
      a[static_cast<size_t>(m)] = k;
      for (int i = 1; i < m; ++i) {
        a[static_cast<size_t>(i)] =
            prev[static_cast<size_t>(i)] + k * prev[static_cast<size_t>(m - i)];
      }
    }
    return a;
  };

  const int64_t n_segs = (len + seg - 1) / seg;
  std::vector<double> prev_tail;  // filter continuation for the crossfade
  std::array<double, kOrder> state{};
  for (int64_t si = 0; si < n_segs; ++si) {
    const auto a = ar_coeffs();
    const int64_t start = si * seg;
    const int64_t stop = std::min(len, start + seg + (si + 1 < n_segs ? fade : 0));
    std::array<double, kOrder> st = (si == 0) ? std::array<double, kOrder>{} : state;
    std::vector<double> y(static_cast<size_t>(stop - start));
    for (int64_t i = start; i < stop; ++i) {
      double v = excitation[static_cast<size_t>(i)];
      for (int k = 1; k <= kOrder; ++k) v -= a[static_cast<size_t>(k)] * st[static_cast<size_t>(k - 1)];
      for (int k = kOrder - 1; k > 0; --k) st[static_cast<size_t>(k)] = st[static_cast<size_t>(k - 1)];
      st[0] = v;
      y[static_cast<size_t>(i - start)] = v;
      if (i == std::min(len, start + seg) - 1) state = st;
    }
    for (int64_t i = start; i < stop; ++i) {
      double v = y[static_cast<size_t>(i - start)];
      if (si > 0 && i - start < fade && !prev_tail.empty()) {
        const double w = static_cast<double>(i - start) / static_cast<double>(fade);
        const double pv = prev_tail[static_cast<size_t>(i - start)];
        v = (1.0 - w) * pv + w * v;
      }
      if (i < std::min(len, start + seg)) out[static_cast<size_t>(i)] = v;
    }
    prev_tail.assign(y.end() - std::min<int64_t>(fade, static_cast<int64_t>(y.size())), y.end());
  }

  // 2-8 Hz amplitude modulation with a floor, mimicking syllabic rhythm.
  const double fm = rng.uniform(2.0, 8.0);
  const double phi = rng.uniform(0.0, 2.0 * M_PI);
  for (int64_t i = 0; i < len; ++i) {
    const double m =
        0.3 + 0.7 * (0.5 + 0.5 * std::sin(2.0 * M_PI * fm * static_cast<double>(i) / fs + phi));
    out[static_cast<size_t>(i)] *= m;
  }

  // Normalize to a conservative peak.
  double peak = 0.0;
  for (double v : out) peak = std::max(peak, std::abs(v));
  if (peak > 0.0) {
    for (double& v : out) v *= 0.5 / peak;
  }

  Waveform w;
  w.sample_rate = fs;
  w.samples = std::move(out);
  return w;
}

void DataConfig::validate() const {
  IFCN_CHECK_CFG(n_utts >= 0, "data: n_utts must be >= 0");
  IFCN_CHECK_CFG(utt_seconds >= 1.0, "data: utterances must be at least 1 s");
  IFCN_CHECK_CFG(t60_min >= 0.05 && t60_max <= 2.0 && t60_min <= t60_max,
                 "data: t60 range invalid");
  IFCN_CHECK_CFG(rir_seconds > 0.0 && rir_seconds <= 4.0, "data: rir length invalid");
  for (double t : t60_grid) {
    IFCN_CHECK_CFG(t >= 0.05 && t <= 2.0, "data: t60 grid value outside [0.05, 2.0]");
  }
}

std::vector<ManifestRow> make_dataset(const DataConfig& cfg, const std::string& out_dir) {
  cfg.validate();
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  std::vector<ManifestRow> rows;
  rows.reserve(static_cast<size_t>(cfg.n_utts));
  for (int i = 0; i < cfg.n_utts; ++i) {
    const uint64_t utt_seed = hash_seed(cfg.seed, static_cast<uint64_t>(i));
    Rng rng(utt_seed);

    double t60;
    if (!cfg.t60_grid.empty()) {
      t60 = cfg.t60_grid[static_cast<size_t>(i) % cfg.t60_grid.size()];
    } else {
      t60 = rng.uniform(cfg.t60_min, cfg.t60_max);
    }

    RirSpec rs;
    rs.t60 = t60;
    rs.method = cfg.rir_method;
    rs.seed = hash_seed(utt_seed, 1);
    rs.length = static_cast<int>(std::lround(cfg.rir_seconds * kSampleRate));
    rs.drr_db = cfg.drr_db;

    Waveform clean = speechlike_clean(cfg.utt_seconds, hash_seed(utt_seed, 2));
    MixtureSample s =
        make_mixture(clean, make_rir(rs), cfg.snr_db, cfg.noise_kind, hash_seed(utt_seed, 3));

    char id[32];
    std::snprintf(id, sizeof(id), "utt%05d", i);
    ManifestRow r;
    r.id = id;
    r.mixture_path = (fs::path(out_dir) / (r.id + "_mix.wav")).string();
    r.target_path = (fs::path(out_dir) / (r.id + "_target.wav")).string();
    r.clean_path = (fs::path(out_dir) / (r.id + "_clean.wav")).string();
    r.t60 = t60;
    r.snr_db = cfg.snr_db;
    r.seed = utt_seed;
    write_wav(r.mixture_path, s.mixture);
    write_wav(r.target_path, s.target);
    write_wav(r.clean_path, s.clean);
    rows.push_back(std::move(r));
  }

  write_manifest(rows, (fs::path(out_dir) / "manifest.jsonl").string());
  return rows;
}

void write_manifest(const std::vector<ManifestRow>& rows, const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  IFCN_CHECK_DATA(f.good(), "cannot write manifest: " + path);
  for (const ManifestRow& r : rows) {
    json j{{"id", r.id},
           {"mixture_path", r.mixture_path},
           {"target_path", r.target_path},
           {"clean_path", r.clean_path},
           {"t60", r.t60},
           {"snr_db", r.snr_db},
           {"seed", r.seed}};
    f << j.dump() << "\n";
  }
  IFCN_CHECK_DATA(f.good(), "manifest write failed: " + path);
}

std::vector<ManifestRow> read_manifest(const std::string& path) {
  std::ifstream f(path);
  IFCN_CHECK_DATA(f.good(), "cannot read manifest: " + path);
  std::vector<ManifestRow> rows;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    ManifestRow r;
    r.id = j.at("id").get<std::string>();
    r.mixture_path = j.at("mixture_path").get<std::string>();
    r.target_path = j.at("target_path").get<std::string>();
    r.clean_path = j.at("clean_path").get<std::string>();
    r.t60 = j.at("t60").get<double>();
    r.snr_db = j.at("snr_db").get<double>();
    r.seed = j.at("seed").get<uint64_t>();
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace ifcn
