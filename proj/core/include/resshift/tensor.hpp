#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace resshift {

// Dense row-major array of doubles. Image maps use (channels, height, width).
// HQ/LQ signal tensors live in [0, 1]; diffusion intermediates are unbounded.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape, double fill = 0.0);

  static Tensor scalar(double value);
  static Tensor from_values(std::vector<int> shape, std::vector<double> values);

  const std::vector<int>& shape() const { return shape_; }
  int ndim() const { return static_cast<int>(shape_.size()); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  // (c, h, w) access; requires ndim() == 3
  int channels() const;
  int height() const;
  int width() const;
  double& at(int c, int h, int w);
  double at(int c, int h, int w) const;

  bool all_finite() const;
  double min_value() const;
  double max_value() const;
  double mean() const;
  void clamp(double lo, double hi);

  std::string shape_str() const;

 private:
  std::vector<int> shape_;
  std::vector<double> data_;
};

Tensor operator+(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a, const Tensor& b);
Tensor operator*(double s, const Tensor& a);

// a + s * b
Tensor add_scaled(const Tensor& a, double s, const Tensor& b);

double mse(const Tensor& a, const Tensor& b);
double max_abs_diff(const Tensor& a, const Tensor& b);

void require_same_shape(const Tensor& a, const Tensor& b, const char* where);

}  // namespace resshift
