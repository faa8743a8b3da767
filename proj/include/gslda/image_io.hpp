#pragma once

#include <filesystem>

#include "gslda/features.hpp"

namespace gslda {

// Binary PGM (P5), maxval <= 255. Comments in the header are skipped.
GrayImage read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const GrayImage& image);

}  // namespace gslda
