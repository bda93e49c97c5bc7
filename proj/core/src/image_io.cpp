#include "resshift/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace resshift {

namespace {

// skips whitespace and '#' comment lines between header tokens
int read_header_int(std::istream& is) {
  for (;;) {
    const int ch = is.peek();
    if (ch == std::char_traits<char>::eof()) break;
    if (ch == '#') {
      std::string line;
      std::getline(is, line);
      continue;
    }
    if (std::isspace(ch)) {
      is.get();
      continue;
    }
    break;
  }
  int value = 0;
  if (!(is >> value)) throw std::runtime_error("image: malformed header");
  return value;
}

}  // namespace

bool has_image_extension(const std::string& path) {
  const auto dot = path.rfind('.');
  if (dot == std::string::npos) return false;
  const std::string ext = path.substr(dot + 1);
  return ext == "pgm" || ext == "ppm";
}

Tensor read_image_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("read_image_file: cannot open " + path);
  char p = 0, kind = 0;
  is.get(p);
  is.get(kind);
  if (p != 'P' || (kind != '5' && kind != '6')) {
    throw std::runtime_error("read_image_file: " + path + " is not binary PGM/PPM");
  }
  const int width = read_header_int(is);
  const int height = read_header_int(is);
  const int maxval = read_header_int(is);
  if (width < 1 || height < 1 || maxval != 255) {
    throw std::runtime_error("read_image_file: unsupported header in " + path);
  }
  is.get();  // single whitespace after maxval
  const int channels = kind == '5' ? 1 : 3;
  std::vector<unsigned char> raw(static_cast<std::size_t>(width) * height * channels);
  is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!is) throw std::runtime_error("read_image_file: truncated pixel data in " + path);
  Tensor img({channels, height, width});
  // interleaved bytes -> channel planes
  std::size_t idx = 0;
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      for (int ch = 0; ch < channels; ++ch) {
        img.at(ch, r, c) = raw[idx++] / 255.0;
      }
    }
  }
  return img;
}

void write_image_file(const std::string& path, const Tensor& img) {
  if (img.ndim() != 3 || (img.channels() != 1 && img.channels() != 3)) {
    throw std::invalid_argument("write_image_file: need (1,h,w) or (3,h,w), got " +
                                img.shape_str());
  }
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("write_image_file: cannot open " + path);
  const int channels = img.channels(), height = img.height(), width = img.width();
  os << (channels == 1 ? "P5" : "P6") << "\n" << width << " " << height << "\n255\n";
  std::vector<unsigned char> raw;
  raw.reserve(static_cast<std::size_t>(width) * height * channels);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      for (int ch = 0; ch < channels; ++ch) {
        const double v = std::clamp(img.at(ch, r, c), 0.0, 1.0);
        raw.push_back(static_cast<unsigned char>(std::lround(v * 255.0)));
      }
    }
  }
  os.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!os) throw std::runtime_error("write_image_file: write failed for " + path);
}

}  // namespace resshift
