#include "rfauth/iqdata.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "rfauth/errors.hpp"
#include "rfauth/rng.hpp"

namespace rfauth {

namespace {

constexpr char kMagic[4] = {'I', 'Q', 'C', '1'};
constexpr std::uint16_t kFormatVersion = 1;
constexpr std::size_t kHeaderBytes = 32;

void put_u16(std::vector<std::uint8_t>& buf, std::uint16_t v) {
  buf.push_back(static_cast<std::uint8_t>(v & 0xff));
  buf.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

std::uint16_t get_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

float get_f32(const std::uint8_t* p) {
  std::uint32_t bits = get_u32(p);
  float f;
  std::memcpy(&f, &bits, 4);
  return f;
}

}  // namespace

const char* role_name(DeviceRole role) {
  switch (role) {
    case DeviceRole::Genuine: return "genuine";
    case DeviceRole::Rogue: return "rogue";
    case DeviceRole::ValidationOnly: return "validation_only";
    case DeviceRole::Synthetic: return "synthetic";
  }
  return "unknown";
}

bool IQFrame::all_finite() const {
  for (const auto& s : samples) {
    if (!std::isfinite(s.real()) || !std::isfinite(s.imag())) return false;
  }
  return true;
}

std::size_t DeviceCapture::frame_len() const {
  if (frames.empty()) throw std::invalid_argument("capture has no frames");
  const std::size_t len = frames.front().size();
  for (const auto& f : frames) {
    if (f.size() != len) throw std::invalid_argument("capture frames have mixed lengths");
  }
  return len;
}

DeviceCapture merge_frames(const DeviceCapture& capture, std::size_t group_size) {
  if (group_size == 0) throw std::invalid_argument("merge_frames: group_size must be positive");
  if (capture.frames.empty()) throw std::invalid_argument("merge_frames: capture is empty");
  const std::size_t in_len = capture.frame_len();
  const std::size_t n_out = capture.frames.size() / group_size;

  DeviceCapture out;
  out.device_id = capture.device_id;
  out.role = capture.role;
  out.frames.reserve(n_out);
  for (std::size_t k = 0; k < n_out; ++k) {
    IQFrame merged;
    merged.samples.reserve(group_size * in_len);
    for (std::size_t g = 0; g < group_size; ++g) {
      const auto& src = capture.frames[k * group_size + g].samples;
      merged.samples.insert(merged.samples.end(), src.begin(), src.end());
    }
    out.frames.push_back(std::move(merged));
  }
  return out;
}

DatasetSplit split_dataset(const std::vector<DeviceCapture>& captures,
                           double train_ratio, double val_ratio, std::uint64_t seed) {
  std::size_t n_genuine_devices = 0, n_rogue_devices = 0, n_validation_devices = 0;
  for (const auto& c : captures) {
    switch (c.role) {
      case DeviceRole::Genuine: ++n_genuine_devices; break;
      case DeviceRole::Rogue: ++n_rogue_devices; break;
      case DeviceRole::ValidationOnly: ++n_validation_devices; break;
      case DeviceRole::Synthetic:
        throw std::invalid_argument("split_dataset: synthetic captures are appended later, not split");
    }
  }
  if (n_genuine_devices == 0 || n_rogue_devices == 0 || n_validation_devices != 1) {
    throw std::invalid_argument(
        "split_dataset: need >=1 genuine, >=1 rogue and exactly 1 validation_only device, got " +
        std::to_string(n_genuine_devices) + "/" + std::to_string(n_rogue_devices) + "/" +
        std::to_string(n_validation_devices));
  }

  std::vector<SplitRecord> pool;
  for (const auto& c : captures) {
    if (c.role != DeviceRole::Genuine) continue;
    for (const auto& f : c.frames) pool.push_back({f, c.device_id, c.role});
  }
  Rng rng(seed);
  rng.shuffle(pool);

  const std::size_t n = pool.size();
  const std::size_t n_train = static_cast<std::size_t>(std::floor(train_ratio * static_cast<double>(n)));
  const std::size_t n_val = static_cast<std::size_t>(std::floor(val_ratio * static_cast<double>(n)));
  if (n_train + n_val > n) throw std::invalid_argument("split_dataset: ratios exceed 1");

  DatasetSplit split;
  split.train.assign(pool.begin(), pool.begin() + n_train);
  split.validation.assign(pool.begin() + n_train, pool.begin() + n_train + n_val);
  split.test.assign(pool.begin() + n_train + n_val, pool.end());

  for (const auto& c : captures) {
    if (c.role == DeviceRole::ValidationOnly) {
      for (const auto& f : c.frames) split.validation.push_back({f, c.device_id, c.role});
    }
  }
  for (const auto& c : captures) {
    if (c.role == DeviceRole::Rogue) {
      for (const auto& f : c.frames) split.test.push_back({f, c.device_id, c.role});
    }
  }
  return split;
}

namespace {

StandardizationStats fit_from_sums(std::size_t n, double sum_i, double sum_q,
                                   double sumsq_i, double sumsq_q) {
  if (n == 0) throw std::invalid_argument("fit_standardizer: no samples");
  const double dn = static_cast<double>(n);
  StandardizationStats stats;
  stats.mean_i = sum_i / dn;
  stats.mean_q = sum_q / dn;
  const double var_i = sumsq_i / dn - stats.mean_i * stats.mean_i;
  const double var_q = sumsq_q / dn - stats.mean_q * stats.mean_q;
  if (var_i <= 0.0 || var_q <= 0.0) {
    throw NumericalError("fit_standardizer: degenerate channel variance (I=" +
                         std::to_string(var_i) + ", Q=" + std::to_string(var_q) + ")");
  }
  stats.std_i = std::sqrt(var_i);
  stats.std_q = std::sqrt(var_q);
  return stats;
}

}  // namespace

StandardizationStats fit_standardizer(std::span<const IQFrame> frames) {
  std::size_t n = 0;
  double si = 0, sq = 0, ssi = 0, ssq = 0;
  for (const auto& f : frames) {
    for (const auto& s : f.samples) {
      si += s.real();
      sq += s.imag();
      ssi += static_cast<double>(s.real()) * s.real();
      ssq += static_cast<double>(s.imag()) * s.imag();
      ++n;
    }
  }
  return fit_from_sums(n, si, sq, ssi, ssq);
}

StandardizationStats fit_standardizer(std::span<const SplitRecord> records) {
  std::size_t n = 0;
  double si = 0, sq = 0, ssi = 0, ssq = 0;
  for (const auto& r : records) {
    for (const auto& s : r.frame.samples) {
      si += s.real();
      sq += s.imag();
      ssi += static_cast<double>(s.real()) * s.real();
      ssq += static_cast<double>(s.imag()) * s.imag();
      ++n;
    }
  }
  return fit_from_sums(n, si, sq, ssi, ssq);
}

IQFrame apply_standardizer(const IQFrame& frame, const StandardizationStats& stats) {
  IQFrame out;
  out.samples.reserve(frame.size());
  for (const auto& s : frame.samples) {
    out.samples.emplace_back(static_cast<float>((s.real() - stats.mean_i) / stats.std_i),
                             static_cast<float>((s.imag() - stats.mean_q) / stats.std_q));
  }
  return out;
}

IQFrame invert_standardizer(const IQFrame& frame, const StandardizationStats& stats) {
  IQFrame out;
  out.samples.reserve(frame.size());
  for (const auto& s : frame.samples) {
    out.samples.emplace_back(static_cast<float>(s.real() * stats.std_i + stats.mean_i),
                             static_cast<float>(s.imag() * stats.std_q + stats.mean_q));
  }
  return out;
}

void apply_standardizer_inplace(std::vector<SplitRecord>& records,
                                const StandardizationStats& stats) {
  for (auto& r : records) r.frame = apply_standardizer(r.frame, stats);
}

nn::Tensor to_model_input(const IQFrame& frame, std::size_t expected_len) {
  if (frame.size() != expected_len) {
    throw std::invalid_argument("to_model_input: frame length " + std::to_string(frame.size()) +
                                " does not match expected " + std::to_string(expected_len));
  }
  nn::Tensor t({expected_len, 2, 1});
  for (std::size_t i = 0; i < expected_len; ++i) {
    t.data[2 * i] = frame.samples[i].real();
    t.data[2 * i + 1] = frame.samples[i].imag();
  }
  return t;
}

IQFrame from_model_input(const nn::Tensor& input) {
  if (input.ndim() != 3 || input.dim(1) != 2 || input.dim(2) != 1) {
    throw std::invalid_argument("from_model_input: expected shape (len, 2, 1), got " +
                                input.shape_str());
  }
  IQFrame f;
  const std::size_t len = input.dim(0);
  f.samples.reserve(len);
  for (std::size_t i = 0; i < len; ++i) {
    f.samples.emplace_back(static_cast<float>(input.data[2 * i]),
                           static_cast<float>(input.data[2 * i + 1]));
  }
  return f;
}

nn::Tensor records_to_batch(std::span<const SplitRecord> records, std::size_t expected_len) {
  if (records.empty()) throw std::invalid_argument("records_to_batch: empty record set");
  nn::Tensor t({records.size(), expected_len, 2, 1});
  double* out = t.ptr();
  for (const auto& r : records) {
    if (r.frame.size() != expected_len) {
      throw std::invalid_argument("records_to_batch: frame length mismatch");
    }
    for (const auto& s : r.frame.samples) {
      *out++ = s.real();
      *out++ = s.imag();
    }
  }
  return t;
}

nn::Tensor frames_to_batch_2d(std::span<const IQFrame> frames, std::size_t expected_len) {
  if (frames.empty()) throw std::invalid_argument("frames_to_batch_2d: empty frame set");
  nn::Tensor t({frames.size(), expected_len, 2});
  double* out = t.ptr();
  for (const auto& f : frames) {
    if (f.size() != expected_len) {
      throw std::invalid_argument("frames_to_batch_2d: frame length mismatch");
    }
    for (const auto& s : f.samples) {
      *out++ = s.real();
      *out++ = s.imag();
    }
  }
  return t;
}

void save_capture(const DeviceCapture& capture, const std::filesystem::path& path) {
  const std::size_t frame_len = capture.frames.empty() ? 0 : capture.frame_len();
  std::vector<std::uint8_t> header;
  header.reserve(kHeaderBytes);
  header.insert(header.end(), kMagic, kMagic + 4);
  put_u16(header, kFormatVersion);
  put_u16(header, capture.device_id);
  header.push_back(static_cast<std::uint8_t>(capture.role));
  header.insert(header.end(), 7, 0);
  put_u32(header, static_cast<std::uint32_t>(capture.frames.size()));
  put_u32(header, static_cast<std::uint32_t>(frame_len));
  header.insert(header.end(), 8, 0);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("save_capture: cannot open " + path.string());
  out.write(reinterpret_cast<const char*>(header.data()), static_cast<std::streamsize>(header.size()));

  std::vector<std::uint8_t> buf;
  buf.reserve(frame_len * 8);
  for (const auto& f : capture.frames) {
    buf.clear();
    for (const auto& s : f.samples) {
      std::uint32_t bi, bq;
      const float fi = s.real(), fq = s.imag();
      std::memcpy(&bi, &fi, 4);
      std::memcpy(&bq, &fq, 4);
      put_u32(buf, bi);
      put_u32(buf, bq);
    }
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  }
  if (!out) throw std::runtime_error("save_capture: write failed for " + path.string());
}

DeviceCapture load_capture(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_capture: cannot open " + path.string());

  std::uint8_t header[kHeaderBytes];
  in.read(reinterpret_cast<char*>(header), kHeaderBytes);
  if (in.gcount() != static_cast<std::streamsize>(kHeaderBytes)) {
    throw FormatError("truncated IQCAP header", static_cast<std::size_t>(in.gcount()));
  }
  if (std::memcmp(header, kMagic, 4) != 0) throw FormatError("bad IQCAP magic", 0);
  const std::uint16_t version = get_u16(header + 4);
  if (version != kFormatVersion) {
    throw FormatError("unsupported IQCAP version " + std::to_string(version), 4);
  }

  DeviceCapture capture;
  capture.device_id = get_u16(header + 6);
  const std::uint8_t role = header[8];
  if (role > static_cast<std::uint8_t>(DeviceRole::Synthetic)) {
    throw FormatError("unknown device role " + std::to_string(role), 8);
  }
  capture.role = static_cast<DeviceRole>(role);
  const std::uint32_t frame_count = get_u32(header + 16);
  const std::uint32_t frame_len = get_u32(header + 20);

  capture.frames.reserve(frame_count);
  std::vector<std::uint8_t> buf(static_cast<std::size_t>(frame_len) * 8);
  for (std::uint32_t k = 0; k < frame_count; ++k) {
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() != static_cast<std::streamsize>(buf.size())) {
      throw FormatError("truncated IQCAP payload in frame " + std::to_string(k),
                        kHeaderBytes + static_cast<std::size_t>(k) * frame_len * 8 +
                            static_cast<std::size_t>(in.gcount()));
    }
    IQFrame f;
    f.samples.reserve(frame_len);
    for (std::uint32_t i = 0; i < frame_len; ++i) {
      f.samples.emplace_back(get_f32(buf.data() + 8 * i), get_f32(buf.data() + 8 * i + 4));
    }
    capture.frames.push_back(std::move(f));
  }
  return capture;
}

}  // namespace rfauth
