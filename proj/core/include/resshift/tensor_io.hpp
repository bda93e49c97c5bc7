#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "resshift/tensor.hpp"

namespace resshift {

// RSTEN container: magic "RSTEN", u32 ndim, u32 dims, little-endian
// float64 payload.
void write_tensor(std::ostream& os, const Tensor& t);
void write_tensor_file(const std::string& path, const Tensor& t);
Tensor read_tensor(std::istream& is);
Tensor read_tensor_file(const std::string& path);

// Dataset convention: one (n, c, h, w) tensor per file.
std::vector<Tensor> split_first_axis(const Tensor& stacked);
Tensor stack_first_axis(const std::vector<Tensor>& items);

}  // namespace resshift
