#pragma once

#include <filesystem>

#include "forge/image.hpp"

namespace forge {

/// Decodes a PNG or JPEG file into a float image (channels divided by 255).
/// Throws IoError when the file cannot be read, FormatError when it cannot
/// be decoded.
Image load_image(const std::filesystem::path& path);

/// Quantizes (round half away from zero) and writes a PNG.
void save_png(const Image& img, const std::filesystem::path& path);

}  // namespace forge
