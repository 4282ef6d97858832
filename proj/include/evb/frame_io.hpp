#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "evb/event_model.hpp"

namespace evb {

/// Decodes an 8-bit binary PGM (P5, maxval 255). Pixels map to v/255.
Image decode_pgm(std::span<const std::uint8_t> data);
Image read_pgm(const std::filesystem::path& path);

/// Encodes as P5; values are clamped to [0,1] and rounded to the nearest level.
std::vector<std::uint8_t> encode_pgm(const Image& image);
void write_pgm(const Image& image, const std::filesystem::path& path);

/// Loads "timestamps.txt" plus "000000.pgm", "000001.pgm", ... from `dir`.
FrameStream load_frame_stream(const std::filesystem::path& dir);
void write_frame_stream(const FrameStream& frames, const std::filesystem::path& dir);

std::string frame_file_name(std::size_t index);

}  // namespace evb
