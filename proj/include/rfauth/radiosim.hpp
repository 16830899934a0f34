#pragma once

#include <cstdint>
#include <vector>

#include "rfauth/iqdata.hpp"

namespace rfauth {

/// Transmit-chain imperfections that fingerprint one simulated device.
/// snr_db may be +infinity to disable additive noise entirely.
struct ImpairmentProfile {
  double gain_imbalance_db = 0.0;   // I-arm amplitude error
  double phase_imbalance_deg = 0.0; // quadrature skew
  double dc_offset_i = 0.0;
  double dc_offset_q = 0.0;
  double cfo_norm = 0.0;            // radians per sample
  double phase_noise_std = 0.0;     // per-sample random-walk increment, radians
  double nonlin_coeff = 0.0;        // cubic AM/AM compression
  double snr_db = 25.0;

  void validate(double nonlin_max = 1.0) const;
};

struct ParamRange {
  double lo = 0.0;
  double hi = 0.0;

  double midpoint() const { return 0.5 * (lo + hi); }
};

struct SimConfig {
  std::size_t n_devices = 10;
  std::size_t frames_per_device = 19920;
  std::size_t raw_frame_len = 72;

  ParamRange gain_imbalance_db{-0.5, 0.5};
  ParamRange phase_imbalance_deg{-3.0, 3.0};
  ParamRange dc_offset{-0.02, 0.02};
  ParamRange cfo_norm{-0.005, 0.005};
  ParamRange phase_noise_std{0.0, 0.01};
  ParamRange nonlin_coeff{0.0, 0.05};
  ParamRange snr_db{25.0, 25.0};

  double separation_scale = 1.0;
  std::uint64_t master_seed = 1;

  void validate() const;
};

/// Fixed QPSK pseudo-random preamble shared by every device; unit-magnitude
/// constellation points at (+-1/sqrt 2, +-1/sqrt 2).
IQFrame reference_header(std::size_t len);

/// Draws a device's impairments from the configured ranges. separation_scale
/// shrinks every draw toward the range midpoint (0 collapses all devices onto
/// the same profile).
ImpairmentProfile sample_profile(const SimConfig& config, std::size_t device_index);

/// Applies the transmit chain in order: IQ imbalance, cubic nonlinearity,
/// CFO rotation, phase-noise random walk, DC offset, AWGN. The random-walk
/// and noise draws are seeded by frame_seed.
IQFrame apply_impairments(const IQFrame& clean, const ImpairmentProfile& profile,
                          std::uint64_t frame_seed);

/// One capture per device, frames_per_device impaired copies of the reference
/// header each. Device ids are 1-based; roles are left at genuine for the
/// caller to assign.
std::vector<DeviceCapture> synthesize_fleet(const SimConfig& config);

}  // namespace rfauth
