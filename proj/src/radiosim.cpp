#include "rfauth/radiosim.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

#include "rfauth/rng.hpp"

namespace rfauth {

namespace {

constexpr std::uint64_t kHeaderSeed = 0x5244464845414452ull;  // preamble stream tag
constexpr std::uint64_t kProfileStream = 1;
constexpr std::uint64_t kFrameStream = 2;

double scaled_draw(Rng& rng, const ParamRange& range, double separation_scale) {
  const double draw = rng.uniform(range.lo, range.hi);
  return range.midpoint() + (draw - range.midpoint()) * separation_scale;
}

}  // namespace

void ImpairmentProfile::validate(double nonlin_max) const {
  if (phase_noise_std < 0.0) throw std::invalid_argument("phase_noise_std must be >= 0");
  if (std::isnan(snr_db) || snr_db == -std::numeric_limits<double>::infinity()) {
    throw std::invalid_argument("snr_db must be a number (+inf disables noise)");
  }
  if (std::abs(nonlin_coeff) > nonlin_max) {
    throw std::invalid_argument("nonlin_coeff " + std::to_string(nonlin_coeff) +
                                " exceeds configured max " + std::to_string(nonlin_max));
  }
}

void SimConfig::validate() const {
  if (n_devices == 0 || frames_per_device == 0 || raw_frame_len == 0) {
    throw std::invalid_argument("simulator geometry fields must be positive");
  }
  if (separation_scale < 0.0) throw std::invalid_argument("separation_scale must be >= 0");
  for (const ParamRange* r : {&gain_imbalance_db, &phase_imbalance_deg, &dc_offset, &cfo_norm,
                              &phase_noise_std, &nonlin_coeff, &snr_db}) {
    if (!(r->lo <= r->hi)) throw std::invalid_argument("impairment range is not well-ordered");
  }
  if (phase_noise_std.lo < 0.0) throw std::invalid_argument("phase_noise_std range must be >= 0");
}

IQFrame reference_header(std::size_t len) {
  if (len == 0) throw std::invalid_argument("reference_header: len must be positive");
  const float a = static_cast<float>(1.0 / std::numbers::sqrt2);
  Rng rng(kHeaderSeed);
  IQFrame f;
  f.samples.reserve(len);
  for (std::size_t i = 0; i < len; ++i) {
    const std::uint64_t bits = rng.next_u64();
    f.samples.emplace_back(bits & 1 ? a : -a, bits & 2 ? a : -a);
  }
  return f;
}

ImpairmentProfile sample_profile(const SimConfig& config, std::size_t device_index) {
  if (device_index >= config.n_devices) {
    throw std::invalid_argument("sample_profile: device_index out of range");
  }
  Rng rng(mix_seed(config.master_seed, kProfileStream, device_index));
  ImpairmentProfile p;
  p.gain_imbalance_db = scaled_draw(rng, config.gain_imbalance_db, config.separation_scale);
  p.phase_imbalance_deg = scaled_draw(rng, config.phase_imbalance_deg, config.separation_scale);
  p.dc_offset_i = scaled_draw(rng, config.dc_offset, config.separation_scale);
  p.dc_offset_q = scaled_draw(rng, config.dc_offset, config.separation_scale);
  p.cfo_norm = scaled_draw(rng, config.cfo_norm, config.separation_scale);
  p.phase_noise_std = std::max(0.0, scaled_draw(rng, config.phase_noise_std, config.separation_scale));
  p.nonlin_coeff = scaled_draw(rng, config.nonlin_coeff, config.separation_scale);
  p.snr_db = scaled_draw(rng, config.snr_db, config.separation_scale);
  return p;
}

IQFrame apply_impairments(const IQFrame& clean, const ImpairmentProfile& profile,
                          std::uint64_t frame_seed) {
  const std::size_t n = clean.size();
  const double g = std::pow(10.0, profile.gain_imbalance_db / 20.0);
  const double phi = profile.phase_imbalance_deg * std::numbers::pi / 180.0;
  const double cos_phi = std::cos(phi), sin_phi = std::sin(phi);

  std::vector<std::complex<double>> s(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double i0 = clean.samples[k].real();
    const double q0 = clean.samples[k].imag();
    // modulator IQ imbalance
    double i1 = g * i0;
    double q1 = q0 * cos_phi + i0 * sin_phi;
    // cubic AM/AM compression
    const double p = i1 * i1 + q1 * q1;
    const double c = 1.0 - profile.nonlin_coeff * p;
    s[k] = std::complex<double>(i1 * c, q1 * c);
  }

  Rng rng(frame_seed);
  double walk = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double theta = profile.cfo_norm * static_cast<double>(k);
    walk += (profile.phase_noise_std > 0.0) ? rng.normal(0.0, profile.phase_noise_std) : 0.0;
    s[k] *= std::polar(1.0, theta + walk);
    s[k] += std::complex<double>(profile.dc_offset_i, profile.dc_offset_q);
  }

  if (std::isfinite(profile.snr_db)) {
    double power = 0.0;
    for (const auto& v : s) power += std::norm(v);
    power /= static_cast<double>(n);
    const double noise_sigma = std::sqrt(power * std::pow(10.0, -profile.snr_db / 10.0) / 2.0);
    for (auto& v : s) {
      v += std::complex<double>(rng.normal(0.0, noise_sigma), rng.normal(0.0, noise_sigma));
    }
  }

  IQFrame out;
  out.samples.reserve(n);
  for (const auto& v : s) {
    out.samples.emplace_back(static_cast<float>(v.real()), static_cast<float>(v.imag()));
  }
  return out;
}

std::vector<DeviceCapture> synthesize_fleet(const SimConfig& config) {
  config.validate();
  const IQFrame header = reference_header(config.raw_frame_len);
  std::vector<DeviceCapture> fleet;
  fleet.reserve(config.n_devices);
  for (std::size_t d = 0; d < config.n_devices; ++d) {
    const ImpairmentProfile profile = sample_profile(config, d);
    DeviceCapture capture;
    capture.device_id = static_cast<std::uint16_t>(d + 1);
    capture.role = DeviceRole::Genuine;
    capture.frames.reserve(config.frames_per_device);
    for (std::size_t f = 0; f < config.frames_per_device; ++f) {
      const std::uint64_t frame_seed = mix_seed(config.master_seed, kFrameStream,
                                                d * config.frames_per_device + f);
      capture.frames.push_back(apply_impairments(header, profile, frame_seed));
    }
    fleet.push_back(std::move(capture));
  }
  return fleet;
}

}  // namespace rfauth
