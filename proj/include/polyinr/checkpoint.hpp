#pragma once

#include <filesystem>
#include <string>

#include "polyinr/generator.hpp"

namespace polyinr {

// PINR container, all integers little-endian:
//   "PINR" | u32 version = 1 | u64 json length | config JSON
//   then per record: u32 name length | name | u32 rank | u64 dims[rank] | f32 data
// Generator files carry kind "generator" and one record per parameter in
// canonical order. Affine files carry kind "affine" and one record per level.

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string config_to_json(const GeneratorConfig& config);
// Unknown keys and wrong types are argument errors.
GeneratorConfig config_from_json(const std::string& text);

std::string encode_checkpoint(const Generator& gen);
Generator decode_checkpoint(const std::string& bytes);

std::string encode_affine(const AffineParams<float>& affine);
AffineParams<float> decode_affine(const std::string& bytes);

// Writes go to a sibling temp file that is renamed over path.
void save_checkpoint(const std::filesystem::path& path, const Generator& gen);
Generator load_checkpoint(const std::filesystem::path& path);

void save_affine(const std::filesystem::path& path, const AffineParams<float>& affine);
AffineParams<float> load_affine(const std::filesystem::path& path);

// Shared file helpers; failures raise IoError.
std::string read_file(const std::filesystem::path& path);
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);

}  // namespace polyinr
