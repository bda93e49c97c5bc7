#include "resshift/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace resshift {

namespace {

std::size_t checked_element_count(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d <= 0) throw std::invalid_argument("Tensor: dimensions must be positive");
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

}  // namespace

Tensor::Tensor(std::vector<int> shape, double fill)
    : shape_(std::move(shape)), data_(checked_element_count(shape_), fill) {}

Tensor Tensor::scalar(double value) {
  Tensor t(std::vector<int>{1});
  t.data_[0] = value;
  return t;
}

Tensor Tensor::from_values(std::vector<int> shape, std::vector<double> values) {
  Tensor t(std::move(shape));
  if (t.size() != values.size()) {
    throw std::invalid_argument("Tensor::from_values: element count does not match shape");
  }
  t.data_ = std::move(values);
  return t;
}

int Tensor::channels() const {
  if (ndim() != 3) throw std::invalid_argument("Tensor: channels() requires a (c,h,w) tensor, got " + shape_str());
  return shape_[0];
}

int Tensor::height() const {
  if (ndim() != 3) throw std::invalid_argument("Tensor: height() requires a (c,h,w) tensor, got " + shape_str());
  return shape_[1];
}

int Tensor::width() const {
  if (ndim() != 3) throw std::invalid_argument("Tensor: width() requires a (c,h,w) tensor, got " + shape_str());
  return shape_[2];
}

double& Tensor::at(int c, int h, int w) {
  return data_[(static_cast<std::size_t>(c) * shape_[1] + h) * shape_[2] + w];
}

double Tensor::at(int c, int h, int w) const {
  return data_[(static_cast<std::size_t>(c) * shape_[1] + h) * shape_[2] + w];
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

double Tensor::min_value() const {
  return *std::min_element(data_.begin(), data_.end());
}

double Tensor::max_value() const {
  return *std::max_element(data_.begin(), data_.end());
}

double Tensor::mean() const {
  if (data_.empty()) return 0.0;
  return std::accumulate(data_.begin(), data_.end(), 0.0) / static_cast<double>(data_.size());
}

void Tensor::clamp(double lo, double hi) {
  for (double& v : data_) v = std::clamp(v, lo, hi);
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (i) os << ",";
    os << shape_[i];
  }
  os << ")";
  return os.str();
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* where) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument(std::string(where) + ": shape mismatch " + a.shape_str() +
                                " vs " + b.shape_str());
  }
}

Tensor operator+(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "Tensor::operator+");
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}

Tensor operator-(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "Tensor::operator-");
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
  return out;
}

Tensor operator*(double s, const Tensor& a) {
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= s;
  return out;
}

Tensor add_scaled(const Tensor& a, double s, const Tensor& b) {
  require_same_shape(a, b, "add_scaled");
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += s * b[i];
  return out;
}

double mse(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mse");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.size());
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

}  // namespace resshift
