#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "rfauth/iqdata.hpp"
#include "rfauth/model.hpp"

namespace rfauth::nn {

enum class ModelKind : std::uint8_t {
  Cnn = 0,
  GanGenerator = 1,
  GanDiscriminator = 2,
};

struct Calibration {
  double temperature = 1.0;
  double theta = 0.0;
};

/// Self-contained inference bundle: layer specs, parameter tensors (stored as
/// little-endian float32), and whatever metadata the model needs downstream —
/// standardizer statistics, the calibrated (T, theta) pair, and the
/// device-id-to-class mapping.
struct Checkpoint {
  ModelKind kind = ModelKind::Cnn;
  Model model;
  std::optional<StandardizationStats> stats;
  std::optional<Calibration> calibration;
  std::vector<std::uint16_t> class_devices;

  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);
};

}  // namespace rfauth::nn
