#include "resshift/tensor_io.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace resshift {

namespace {

constexpr char kMagic[5] = {'R', 'S', 'T', 'E', 'N'};

}  // namespace

void write_tensor(std::ostream& os, const Tensor& t) {
  os.write(kMagic, sizeof(kMagic));
  const std::uint32_t ndim = static_cast<std::uint32_t>(t.ndim());
  os.write(reinterpret_cast<const char*>(&ndim), sizeof(ndim));
  for (int d : t.shape()) {
    const std::uint32_t dim = static_cast<std::uint32_t>(d);
    os.write(reinterpret_cast<const char*>(&dim), sizeof(dim));
  }
  os.write(reinterpret_cast<const char*>(t.data()),
           static_cast<std::streamsize>(t.size() * sizeof(double)));
}

void write_tensor_file(const std::string& path, const Tensor& t) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("write_tensor_file: cannot open " + path);
  write_tensor(os, t);
  if (!os) throw std::runtime_error("write_tensor_file: write failed for " + path);
}

Tensor read_tensor(std::istream& is) {
  char magic[5];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("read_tensor: bad RSTEN magic");
  }
  std::uint32_t ndim = 0;
  is.read(reinterpret_cast<char*>(&ndim), sizeof(ndim));
  if (!is || ndim == 0 || ndim > 8) {
    throw std::runtime_error("read_tensor: invalid dimension count");
  }
  std::vector<int> shape(ndim);
  for (auto& d : shape) {
    std::uint32_t dim = 0;
    is.read(reinterpret_cast<char*>(&dim), sizeof(dim));
    if (!is || dim == 0) throw std::runtime_error("read_tensor: invalid dimension");
    d = static_cast<int>(dim);
  }
  Tensor t(shape);
  is.read(reinterpret_cast<char*>(t.data()),
          static_cast<std::streamsize>(t.size() * sizeof(double)));
  if (!is) throw std::runtime_error("read_tensor: truncated payload");
  return t;
}

Tensor read_tensor_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("read_tensor_file: cannot open " + path);
  return read_tensor(is);
}

std::vector<Tensor> split_first_axis(const Tensor& stacked) {
  if (stacked.ndim() < 2) {
    throw std::invalid_argument("split_first_axis: need at least 2 dims, got " +
                                stacked.shape_str());
  }
  const int n = stacked.shape()[0];
  std::vector<int> item_shape(stacked.shape().begin() + 1, stacked.shape().end());
  std::size_t item_size = 1;
  for (int d : item_shape) item_size *= static_cast<std::size_t>(d);
  std::vector<Tensor> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    Tensor item(item_shape);
    std::memcpy(item.data(), stacked.data() + static_cast<std::size_t>(i) * item_size,
                item_size * sizeof(double));
    out.push_back(std::move(item));
  }
  return out;
}

Tensor stack_first_axis(const std::vector<Tensor>& items) {
  if (items.empty()) throw std::invalid_argument("stack_first_axis: empty list");
  for (const auto& t : items) require_same_shape(items.front(), t, "stack_first_axis");
  std::vector<int> shape;
  shape.push_back(static_cast<int>(items.size()));
  shape.insert(shape.end(), items.front().shape().begin(), items.front().shape().end());
  Tensor out(shape);
  const std::size_t item_size = items.front().size();
  for (std::size_t i = 0; i < items.size(); ++i) {
    std::memcpy(out.data() + i * item_size, items[i].data(), item_size * sizeof(double));
  }
  return out;
}

}  // namespace resshift
