#include "nutrisight/image_io.h"

#include <png.h>

#include <cctype>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "nutrisight/error.h"

namespace nutrisight {
namespace {

bool is_png(std::span<const std::uint8_t> bytes) {
  static constexpr std::uint8_t kSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  return bytes.size() >= 8 && std::memcmp(bytes.data(), kSig, 8) == 0;
}

RgbImage decode_png(std::span<const std::uint8_t> bytes) {
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size())) {
    fail(ErrorKind::kFormat, std::string("png decode failed: ") + img.message);
  }
  img.format = PNG_FORMAT_RGB;
  if (img.width < 1 || img.height < 1) {
    png_image_free(&img);
    fail(ErrorKind::kFormat, "png has zero size");
  }
  RgbImage out(static_cast<int>(img.width), static_cast<int>(img.height));
  if (!png_image_finish_read(&img, nullptr, out.bytes().data(), 0, nullptr)) {
    const std::string msg = img.message;
    png_image_free(&img);
    fail(ErrorKind::kFormat, "png decode failed: " + msg);
  }
  return out;
}

// Minimal P6 reader: header tokens may be separated by whitespace and comments.
RgbImage decode_ppm(std::span<const std::uint8_t> bytes) {
  std::size_t pos = 2;
  const auto next_token = [&]() -> long {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
    long v = 0;
    bool any = false;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + (bytes[pos] - '0');
      if (v > 1 << 20) fail(ErrorKind::kFormat, "ppm header value too large");
      ++pos;
      any = true;
    }
    if (!any) fail(ErrorKind::kFormat, "malformed ppm header");
    return v;
  };
  const long w = next_token();
  const long h = next_token();
  const long maxval = next_token();
  if (maxval != 255) fail(ErrorKind::kFormat, "only 8-bit ppm is supported");
  ++pos;  // single whitespace after maxval
  if (w < 1 || h < 1) fail(ErrorKind::kFormat, "ppm has zero size");
  const std::size_t need = static_cast<std::size_t>(w) * h * 3;
  if (bytes.size() < pos + need) fail(ErrorKind::kFormat, "truncated ppm data");
  RgbImage out(static_cast<int>(w), static_cast<int>(h));
  std::memcpy(out.bytes().data(), bytes.data() + pos, need);
  return out;
}

}  // namespace

RgbImage decode_image(std::span<const std::uint8_t> bytes) {
  if (is_png(bytes)) return decode_png(bytes);
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') return decode_ppm(bytes);
  fail(ErrorKind::kFormat, "unrecognised image encoding");
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kStorage, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

RgbImage read_image(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return decode_image(bytes);
}

std::vector<std::uint8_t> encode_png(const RgbImage& image) {
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width());
  img.height = static_cast<png_uint_32>(image.height());
  img.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_get_memory_size(img, size, 0, image.bytes().data(), 0, nullptr)) {
    fail(ErrorKind::kFormat, std::string("png encode failed: ") + img.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&img, out.data(), &size, 0, image.bytes().data(), 0, nullptr)) {
    fail(ErrorKind::kFormat, std::string("png encode failed: ") + img.message);
  }
  out.resize(size);
  return out;
}

void write_png(const std::filesystem::path& path, const RgbImage& image) {
  const auto bytes = encode_png(image);
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::kStorage, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void write_pgm(const std::filesystem::path& path, int width, int height,
               std::span<const std::uint8_t> values) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::kStorage, "cannot write " + path.string());
  out << "P5\n" << width << ' ' << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size()));
}

}  // namespace nutrisight

#include "nutrisight/digest.h"

namespace nutrisight {

std::string image_digest(const RgbImage& image) {
  std::vector<std::uint8_t> buf;
  buf.reserve(image.bytes().size() + 8);
  for (int v : {image.width(), image.height()}) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
  }
  buf.insert(buf.end(), image.bytes().begin(), image.bytes().end());
  return to_hex(sha256(buf));
}

}  // namespace nutrisight
