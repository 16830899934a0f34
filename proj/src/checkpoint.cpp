#include "rfauth/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "rfauth/errors.hpp"

namespace rfauth::nn {

namespace {

constexpr char kMagic[4] = {'R', 'F', 'C', 'K'};
constexpr std::uint16_t kVersion = 1;

constexpr std::uint8_t kHasStats = 1;
constexpr std::uint8_t kHasCalibration = 2;
constexpr std::uint8_t kHasClassMap = 4;

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path) : out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw std::runtime_error("checkpoint: cannot open " + path.string() + " for write");
  }
  void u8(std::uint8_t v) { out_.put(static_cast<char>(v)); }
  void u16(std::uint16_t v) {
    for (int i = 0; i < 2; ++i) u8(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
  }
  void f32(float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    u32(bits);
  }
  void f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>((bits >> (8 * i)) & 0xff));
  }
  void bytes(const char* p, std::size_t n) { out_.write(p, static_cast<std::streamsize>(n)); }
  bool ok() const { return static_cast<bool>(out_); }

 private:
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : in_(path, std::ios::binary) {
    if (!in_) throw std::runtime_error("checkpoint: cannot open " + path.string());
  }
  std::uint8_t u8() {
    int c = in_.get();
    if (c == EOF) throw FormatError("truncated checkpoint", offset_);
    ++offset_;
    return static_cast<std::uint8_t>(c);
  }
  std::uint16_t u16() {
    std::uint16_t v = u8();
    v |= static_cast<std::uint16_t>(u8()) << 8;
    return v;
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
    return v;
  }
  float f32() {
    std::uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  double f64() {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(u8()) << (8 * i);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  std::size_t offset() const { return offset_; }

 private:
  std::ifstream in_;
  std::size_t offset_ = 0;
};

void write_shape(Writer& w, const std::vector<std::size_t>& shape) {
  w.u8(static_cast<std::uint8_t>(shape.size()));
  for (std::size_t d : shape) w.u32(static_cast<std::uint32_t>(d));
}

std::vector<std::size_t> read_shape(Reader& r) {
  const std::uint8_t nd = r.u8();
  std::vector<std::size_t> shape(nd);
  for (auto& d : shape) d = r.u32();
  return shape;
}

void write_tensor(Writer& w, const Tensor& t) {
  write_shape(w, t.shape);
  for (double v : t.data) w.f32(static_cast<float>(v));
}

Tensor read_tensor(Reader& r) {
  Tensor t(read_shape(r));
  for (double& v : t.data) v = r.f32();
  return t;
}

}  // namespace

void Checkpoint::save(const std::filesystem::path& path) const {
  Writer w(path);
  w.bytes(kMagic, 4);
  w.u16(kVersion);
  w.u8(static_cast<std::uint8_t>(kind));
  std::uint8_t flags = 0;
  if (stats) flags |= kHasStats;
  if (calibration) flags |= kHasCalibration;
  if (!class_devices.empty()) flags |= kHasClassMap;
  w.u8(flags);

  write_shape(w, model.input_shape);
  w.u32(static_cast<std::uint32_t>(model.specs.size()));
  for (const LayerSpec& s : model.specs) {
    w.u8(static_cast<std::uint8_t>(s.kind));
    w.u8(static_cast<std::uint8_t>(s.act));
    w.f64(s.act_alpha);
    w.u32(static_cast<std::uint32_t>(s.units));
    w.u32(static_cast<std::uint32_t>(s.kernel));
    w.f64(s.l2);
    w.f64(s.rate);
    w.f64(s.bn_momentum);
    w.f64(s.bn_eps);
    write_shape(w, s.target_shape);
  }

  std::vector<const Tensor*> tensors;
  for (std::size_t i = 0; i < model.specs.size(); ++i) {
    const LayerParams& p = model.params[i];
    switch (model.specs[i].kind) {
      case LayerKind::Conv2D:
      case LayerKind::Conv1D:
      case LayerKind::Dense:
        tensors.push_back(&p.w);
        tensors.push_back(&p.b);
        break;
      case LayerKind::BatchNorm:
        tensors.push_back(&p.w);
        tensors.push_back(&p.b);
        tensors.push_back(&p.run_mean);
        tensors.push_back(&p.run_var);
        break;
      default:
        break;
    }
  }
  w.u32(static_cast<std::uint32_t>(tensors.size()));
  for (const Tensor* t : tensors) write_tensor(w, *t);

  if (stats) {
    w.f64(stats->mean_i);
    w.f64(stats->mean_q);
    w.f64(stats->std_i);
    w.f64(stats->std_q);
  }
  if (calibration) {
    w.f64(calibration->temperature);
    w.f64(calibration->theta);
  }
  if (!class_devices.empty()) {
    w.u32(static_cast<std::uint32_t>(class_devices.size()));
    for (std::uint16_t d : class_devices) w.u16(d);
  }
  if (!w.ok()) throw std::runtime_error("checkpoint: write failed for " + path.string());
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  Reader r(path);
  char magic[4];
  for (char& c : magic) c = static_cast<char>(r.u8());
  if (std::memcmp(magic, kMagic, 4) != 0) throw FormatError("bad checkpoint magic", 0);
  const std::uint16_t version = r.u16();
  if (version != kVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version), 4);
  }

  Checkpoint ck;
  const std::uint8_t kind = r.u8();
  if (kind > static_cast<std::uint8_t>(ModelKind::GanDiscriminator)) {
    throw FormatError("unknown model kind " + std::to_string(kind), 6);
  }
  ck.kind = static_cast<ModelKind>(kind);
  const std::uint8_t flags = r.u8();

  ck.model.input_shape = read_shape(r);
  const std::uint32_t n_layers = r.u32();
  for (std::uint32_t i = 0; i < n_layers; ++i) {
    LayerSpec s;
    const std::uint8_t k = r.u8();
    if (k > static_cast<std::uint8_t>(LayerKind::Act)) {
      throw FormatError("unknown layer kind " + std::to_string(k), r.offset() - 1);
    }
    s.kind = static_cast<LayerKind>(k);
    s.act = static_cast<Activation>(r.u8());
    s.act_alpha = r.f64();
    s.units = r.u32();
    s.kernel = r.u32();
    s.l2 = r.f64();
    s.rate = r.f64();
    s.bn_momentum = r.f64();
    s.bn_eps = r.f64();
    s.target_shape = read_shape(r);
    ck.model.specs.push_back(std::move(s));
  }

  const std::uint32_t n_tensors = r.u32();
  std::vector<Tensor> tensors;
  tensors.reserve(n_tensors);
  for (std::uint32_t i = 0; i < n_tensors; ++i) tensors.push_back(read_tensor(r));

  ck.model.params.assign(ck.model.specs.size(), LayerParams{});
  std::size_t ti = 0;
  for (std::size_t i = 0; i < ck.model.specs.size(); ++i) {
    LayerParams& p = ck.model.params[i];
    const LayerKind k = ck.model.specs[i].kind;
    const std::size_t need =
        (k == LayerKind::BatchNorm) ? 4
        : (k == LayerKind::Conv2D || k == LayerKind::Conv1D || k == LayerKind::Dense) ? 2
                                                                                      : 0;
    if (ti + need > tensors.size()) {
      throw FormatError("checkpoint tensor list shorter than layer specs require", r.offset());
    }
    if (need >= 2) {
      p.w = std::move(tensors[ti++]);
      p.b = std::move(tensors[ti++]);
    }
    if (need == 4) {
      p.run_mean = std::move(tensors[ti++]);
      p.run_var = std::move(tensors[ti++]);
    }
  }
  if (ti != tensors.size()) {
    throw FormatError("checkpoint has extra parameter tensors", r.offset());
  }

  if (flags & kHasStats) {
    StandardizationStats st;
    st.mean_i = r.f64();
    st.mean_q = r.f64();
    st.std_i = r.f64();
    st.std_q = r.f64();
    ck.stats = st;
  }
  if (flags & kHasCalibration) {
    Calibration cal;
    cal.temperature = r.f64();
    cal.theta = r.f64();
    ck.calibration = cal;
  }
  if (flags & kHasClassMap) {
    const std::uint32_t n = r.u32();
    ck.class_devices.resize(n);
    for (auto& d : ck.class_devices) d = r.u16();
  }
  ck.model.layer_shapes();  // validates the spec chain
  return ck;
}

}  // namespace rfauth::nn
