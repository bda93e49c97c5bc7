#pragma once

#include <string>

#include "resshift/tensor.hpp"

namespace resshift {

// 8-bit binary PGM (P5, 1 channel) / PPM (P6, 3 channels). Values map
// linearly between [0, 1] and [0, 255]; writing clamps first.
Tensor read_image_file(const std::string& path);
void write_image_file(const std::string& path, const Tensor& img);

bool has_image_extension(const std::string& path);

}  // namespace resshift
