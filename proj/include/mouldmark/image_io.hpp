#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mouldmark/image.hpp"

namespace mouldmark {

enum class ImageFormat { Png, Jpeg, Pnm, Unknown };

/// Sniffs the magic bytes of an encoded image.
ImageFormat detect_format(std::span<const std::uint8_t> bytes);

/// Decodes PNG, JPEG or binary/ASCII PGM/PPM. Intensities are divided by the
/// maximum representable value of the source bit depth. Throws
/// Error(UnsupportedFormat) for anything else.
RgbImage decode_image(std::span<const std::uint8_t> bytes);
RgbImage read_image(const std::filesystem::path& path);

/// Gray convenience: single-channel sources come back unchanged.
GrayImage read_gray(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_png(const GrayImage& img);
std::vector<std::uint8_t> encode_png(const RgbImage& img);
/// Binary P5, maxval 255.
std::vector<std::uint8_t> encode_pgm(const GrayImage& img);

/// Writes PNG or PGM depending on the extension (.png, .pgm).
void write_image(const std::filesystem::path& path, const GrayImage& img);
void write_image(const std::filesystem::path& path, const RgbImage& img);

/// Linear min/max stretch of a signed field into [0, 1] for display; a
/// constant field maps to 0.5.
GrayImage normalize_for_display(const Field& field);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace mouldmark
