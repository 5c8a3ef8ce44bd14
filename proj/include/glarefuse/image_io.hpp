#pragma once

#include "glarefuse/image.hpp"

#include <filesystem>

namespace glarefuse {

// PNG or JPEG, decided by file signature. Gray and RGB only; alpha is dropped.
ImageBuffer read_image(const std::filesystem::path& path);

void write_png(const std::filesystem::path& path, const ImageBuffer& img);

}  // namespace glarefuse
