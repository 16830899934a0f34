#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "rfauth/tensor.hpp"

namespace rfauth {

enum class DeviceRole : std::uint8_t {
  Genuine = 0,
  Rogue = 1,
  ValidationOnly = 2,
  Synthetic = 3,
};

const char* role_name(DeviceRole role);

/// One captured frame of complex baseband samples (real = I, imag = Q).
struct IQFrame {
  std::vector<std::complex<float>> samples;

  std::size_t size() const { return samples.size(); }
  bool all_finite() const;
};

/// All frames captured from one device. Every frame has the same length.
struct DeviceCapture {
  std::uint16_t device_id = 0;
  DeviceRole role = DeviceRole::Genuine;
  std::vector<IQFrame> frames;

  /// Common frame length; throws if frames disagree.
  std::size_t frame_len() const;
};

/// Per-channel training-set statistics used to standardize all splits.
struct StandardizationStats {
  double mean_i = 0.0;
  double mean_q = 0.0;
  double std_i = 1.0;
  double std_q = 1.0;
};

struct SplitRecord {
  IQFrame frame;
  std::uint16_t device_id = 0;
  DeviceRole role = DeviceRole::Genuine;
};

struct DatasetSplit {
  std::vector<SplitRecord> train;
  std::vector<SplitRecord> validation;
  std::vector<SplitRecord> test;
};

/// Concatenates each run of group_size consecutive frames into one long frame.
/// Leftover frames that do not fill a group are dropped.
DeviceCapture merge_frames(const DeviceCapture& capture, std::size_t group_size);

/// Pools all genuine frames, shuffles them with the seed, and slices
/// floor(train_ratio*N) / floor(val_ratio*N) / remainder. The validation-only
/// device goes entirely to validation and rogue devices entirely to test.
DatasetSplit split_dataset(const std::vector<DeviceCapture>& captures,
                           double train_ratio, double val_ratio, std::uint64_t seed);

/// Per-channel mean and population standard deviation over every sample of
/// every frame. Throws on an empty set or a zero-variance channel.
StandardizationStats fit_standardizer(std::span<const IQFrame> frames);
StandardizationStats fit_standardizer(std::span<const SplitRecord> records);

IQFrame apply_standardizer(const IQFrame& frame, const StandardizationStats& stats);
IQFrame invert_standardizer(const IQFrame& frame, const StandardizationStats& stats);
void apply_standardizer_inplace(std::vector<SplitRecord>& records,
                                const StandardizationStats& stats);

/// Lays a frame out as a (len, 2, 1) tensor: axis 0 sample index, axis 1 I/Q.
nn::Tensor to_model_input(const IQFrame& frame, std::size_t expected_len);
IQFrame from_model_input(const nn::Tensor& input);

/// Stacks records into a (N, len, 2, 1) batch tensor.
nn::Tensor records_to_batch(std::span<const SplitRecord> records, std::size_t expected_len);
/// Stacks frames into a (N, len, 2) batch tensor (the adversarial models' layout).
nn::Tensor frames_to_batch_2d(std::span<const IQFrame> frames, std::size_t expected_len);

/// IQCAP container: 32-byte header ("IQC1", version, device id, role,
/// frame count, frame length) followed by interleaved float32 (i, q) pairs.
void save_capture(const DeviceCapture& capture, const std::filesystem::path& path);
DeviceCapture load_capture(const std::filesystem::path& path);

}  // namespace rfauth
