#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "drivegaze/raster.hpp"

namespace drivegaze::image_io {

// Grayscale PFM: "Pf", scale −1 (little-endian float32), rows stored bottom-up.
std::string encode_pfm(const SaliencyMap& map);
SaliencyMap decode_pfm(std::string_view bytes);
void write_pfm(const std::filesystem::path& path, const SaliencyMap& map);
SaliencyMap read_pfm(const std::filesystem::path& path);

// 8-bit binary PGM (P5). Saliency export scales by 255 and rounds.
std::string encode_pgm(const GrayFrame& frame);
GrayFrame decode_pgm(std::string_view bytes);
GrayFrame to_gray(const SaliencyMap& map);
void write_pgm(const std::filesystem::path& path, const GrayFrame& frame);
GrayFrame read_pgm(const std::filesystem::path& path);

// Packed bitmap (P4); a set bit marks a fixated pixel.
std::string encode_pbm(const FixationMap& map);
FixationMap decode_pbm(std::string_view bytes);
void write_pbm(const std::filesystem::path& path, const FixationMap& map);
FixationMap read_pbm(const std::filesystem::path& path);

}  // namespace drivegaze::image_io
