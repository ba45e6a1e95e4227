#include <bit>
#include <cstring>
#include <fmt/format.h>
#include <fstream>

#include "nutrisight/digest.h"
#include "nutrisight/error.h"
#include "nutrisight/fusion.h"
#include "nutrisight/image_io.h"

// Layout (all integers and reals little-endian):
//   "NSFP" | u32 version | u32 flags | u64 seed | f64 ridge_lambda
//   u8 active[3] | u8 reserved | f32 logits[3]
//   u32 embedding_dim | u32 layer_count | (u32 rows, u32 cols) * layer_count
//   per layer: f32 weight[rows*cols] (row-major) then f32 bias[rows]
//   32-byte SHA-256 of everything above

namespace nutrisight::fusion {
namespace {

constexpr char kMagic[4] = {'N', 'S', 'F', 'P'};
constexpr std::uint32_t kFlagNormalize = 1u << 0;
constexpr std::uint32_t kFlagRidgeAll = 1u << 1;

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  template <typename U>
  void le(U v) {
    static_assert(std::is_unsigned_v<U>);
    for (std::size_t i = 0; i < sizeof(U); ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { le(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v)); }
  std::vector<std::uint8_t>& data() { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}
  void need(std::size_t n) const {
    if (pos_ + n > in_.size()) fail(ErrorKind::kFormat, "parameter file is truncated");
  }
  template <typename U>
  U le() {
    need(sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(in_[pos_ + i]) << (8 * i);
    pos_ += sizeof(U);
    return v;
  }
  float f32() { return std::bit_cast<float>(le<std::uint32_t>()); }
  double f64() { return std::bit_cast<double>(le<std::uint64_t>()); }
  std::span<const std::uint8_t> take(std::size_t n) {
    need(n);
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> save_params(const FusionModelParams& params) {
  params.validate();
  Writer w;
  w.bytes(kMagic, 4);
  w.le(kParamsFormatVersion);
  std::uint32_t flags = 0;
  if (params.normalize_embeddings) flags |= kFlagNormalize;
  if (params.ridge_scope == RidgeScope::kAllLayers) flags |= kFlagRidgeAll;
  w.le(flags);
  w.le(static_cast<std::uint64_t>(params.seed));
  w.f64(params.ridge_lambda);
  for (bool a : params.active) w.le(static_cast<std::uint8_t>(a ? 1 : 0));
  w.le(std::uint8_t{0});
  for (float l : params.weight_logits) w.f32(l);
  w.le(static_cast<std::uint32_t>(params.architecture.embedding_dim));
  w.le(static_cast<std::uint32_t>(params.layers.size()));
  for (const auto& l : params.layers) {
    w.le(static_cast<std::uint32_t>(l.weight.rows()));
    w.le(static_cast<std::uint32_t>(l.weight.cols()));
  }
  for (const auto& l : params.layers) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) w.f32(l.weight(r, c));
    }
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) w.f32(l.bias(r));
  }
  const Sha256 digest = sha256(w.data());
  w.bytes(digest.data(), digest.size());
  return std::move(w.data());
}

FusionModelParams load_params(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  const auto magic = r.take(4);
  if (std::memcmp(magic.data(), kMagic, 4) != 0) fail(ErrorKind::kFormat, "not a fusion parameter file");
  const auto version = r.le<std::uint32_t>();
  if (version != kParamsFormatVersion) {
    fail(ErrorKind::kFormat, fmt::format("parameter file version mismatch: expected {}, found {}",
                                         kParamsFormatVersion, version));
  }
  FusionModelParams p;
  const auto flags = r.le<std::uint32_t>();
  p.normalize_embeddings = (flags & kFlagNormalize) != 0;
  p.ridge_scope = (flags & kFlagRidgeAll) != 0 ? RidgeScope::kAllLayers : RidgeScope::kFinalLayer;
  p.seed = r.le<std::uint64_t>();
  p.ridge_lambda = r.f64();
  for (auto& a : p.active) a = r.le<std::uint8_t>() != 0;
  r.le<std::uint8_t>();
  for (auto& l : p.weight_logits) l = r.f32();
  p.architecture.embedding_dim = static_cast<int>(r.le<std::uint32_t>());
  const auto n_layers = r.le<std::uint32_t>();
  if (n_layers < 2 || n_layers > 64) fail(ErrorKind::kFormat, "implausible layer count in parameter file");
  std::vector<std::pair<std::uint32_t, std::uint32_t>> shapes(n_layers);
  for (auto& [rows, cols] : shapes) {
    rows = r.le<std::uint32_t>();
    cols = r.le<std::uint32_t>();
    if (rows == 0 || cols == 0 || rows > (1u << 16) || cols > (1u << 16)) {
      fail(ErrorKind::kFormat, "implausible layer shape in parameter file");
    }
  }
  p.architecture.hidden.clear();
  for (std::size_t i = 0; i + 1 < shapes.size(); ++i) p.architecture.hidden.push_back(static_cast<int>(shapes[i].first));
  for (const auto& [rows, cols] : shapes) {
    r.need((static_cast<std::size_t>(rows) * cols + rows) * 4);
    Layer<float> l{Mat<float>(rows, cols), Vec<float>(rows)};
    for (std::uint32_t i = 0; i < rows; ++i) {
      for (std::uint32_t j = 0; j < cols; ++j) l.weight(i, j) = r.f32();
    }
    for (std::uint32_t i = 0; i < rows; ++i) l.bias(i) = r.f32();
    p.layers.push_back(std::move(l));
  }
  const std::size_t body = r.pos();
  const auto stored = r.take(32);
  const Sha256 actual = sha256(bytes.first(body));
  if (std::memcmp(stored.data(), actual.data(), 32) != 0) fail(ErrorKind::kFormat, "parameter file digest mismatch");
  if (r.pos() != bytes.size()) fail(ErrorKind::kFormat, "trailing bytes after parameter file digest");
  try {
    p.validate();
  } catch (const Error& e) {
    fail(ErrorKind::kFormat, std::string("parameter file is inconsistent: ") + e.what());
  }
  return p;
}

void write_params(const std::filesystem::path& path, const FusionModelParams& params) {
  const auto bytes = save_params(params);
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::kStorage, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

FusionModelParams read_params(const std::filesystem::path& path) {
  return load_params(read_file_bytes(path));
}

std::string params_digest(const FusionModelParams& params) {
  const auto bytes = save_params(params);
  return to_hex(std::span(bytes).last(32));
}

bool bitwise_equal(const FusionModelParams& a, const FusionModelParams& b) {
  return save_params(a) == save_params(b);
}

}  // namespace nutrisight::fusion
