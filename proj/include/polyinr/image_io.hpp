#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "polyinr/generator.hpp"

namespace polyinr {

// u = clamp(round((v + 1) / 2 * 255), 0, 255), halves rounded away from zero.
std::uint8_t to_u8(double v);
// v = 2u / 255 - 1
float from_u8(std::uint8_t u);

// 8-bit RGB PNG. Non-finite pixels are an argument error.
std::string encode_png(const ImageBuffer<float>& image);
// Any PNG libpng can read is converted to 8-bit RGB first. Bad data raises
// FormatError.
ImageBuffer<float> decode_png(const std::string& bytes);

void write_png(const std::filesystem::path& path, const ImageBuffer<float>& image);
ImageBuffer<float> read_png(const std::filesystem::path& path);

// Every *.png in dir, sorted by file name.
std::vector<std::filesystem::path> list_png_files(const std::filesystem::path& dir);
std::vector<ImageBuffer<float>> load_png_directory(const std::filesystem::path& dir);

}  // namespace polyinr
