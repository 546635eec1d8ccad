#include "polyinr/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>

#include "polyinr/checkpoint.hpp"

namespace polyinr {

std::uint8_t to_u8(double v) {
  const double scaled = std::round((v + 1.0) / 2.0 * 255.0);  // std::round is half-away
  return static_cast<std::uint8_t>(std::clamp(scaled, 0.0, 255.0));
}

float from_u8(std::uint8_t u) { return static_cast<float>(2.0 * u / 255.0 - 1.0); }

std::string encode_png(const ImageBuffer<float>& image) {
  if (image.pixel_count() == 0) throw ArgumentError("cannot encode an empty image");
  if (!image.pixels().all_finite()) throw ArgumentError("cannot encode non-finite pixels");
  std::vector<std::uint8_t> raw(image.pixels().size());
  for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = to_u8(image.pixels()[i]);

  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width());
  png.height = static_cast<png_uint_32>(image.height());
  png.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&png, nullptr, &size, 0, raw.data(), 0, nullptr)) {
    throw IoError(std::string("png encode failed: ") + png.message);
  }
  std::string out(size, '\0');
  if (!png_image_write_to_memory(&png, out.data(), &size, 0, raw.data(), 0, nullptr)) {
    throw IoError(std::string("png encode failed: ") + png.message);
  }
  out.resize(size);
  return out;
}

ImageBuffer<float> decode_png(const std::string& bytes) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size())) {
    throw FormatError(std::string("not a readable PNG: ") + png.message);
  }
  png.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> raw(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, raw.data(), 0, nullptr)) {
    png_image_free(&png);
    throw FormatError(std::string("PNG decode failed: ") + png.message);
  }
  ImageBuffer<float> img(png.height, png.width);
  for (std::size_t i = 0; i < raw.size(); ++i) img.pixels()[i] = from_u8(raw[i]);
  return img;
}

void write_png(const std::filesystem::path& path, const ImageBuffer<float>& image) {
  write_file_atomic(path, encode_png(image));
}

ImageBuffer<float> read_png(const std::filesystem::path& path) {
  try {
    return decode_png(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::vector<std::filesystem::path> list_png_files(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) throw IoError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    auto ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png") out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.filename().string() < b.filename().string();
  });
  return out;
}

std::vector<ImageBuffer<float>> load_png_directory(const std::filesystem::path& dir) {
  std::vector<ImageBuffer<float>> out;
  for (const auto& p : list_png_files(dir)) out.push_back(read_png(p));
  return out;
}

}  // namespace polyinr
