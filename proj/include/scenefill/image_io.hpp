#pragma once

#include <filesystem>

#include "scenefill/core.hpp"

namespace scenefill {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Reads an 8-bit PNG as gray (k=1) or RGB (k=3); values divided by 255.
Frame read_png(const std::filesystem::path& path);

/// Writes a frame as 8-bit PNG (rounded, clamped to [0,1]).
void write_png(const std::filesystem::path& path, const Frame& f);

/// Nonzero pixels are masked.
Mask read_mask_png(const std::filesystem::path& path);
void write_mask_png(const std::filesystem::path& path, const Mask& m);

}  // namespace scenefill
