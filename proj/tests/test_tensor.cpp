#include "doctest.h"

#include <cmath>
#include <stdexcept>

#include "resshift/tensor.hpp"

using namespace resshift;

TEST_CASE("construction and element count") {
  const Tensor t({2, 3, 4}, 0.5);
  CHECK(t.size() == 24);
  CHECK(t.channels() == 2);
  CHECK(t.height() == 3);
  CHECK(t.width() == 4);
  CHECK(t.shape_str() == "(2,3,4)");
  CHECK_THROWS_AS(Tensor({2, 0, 4}), std::invalid_argument);
  CHECK_THROWS_AS(Tensor::from_values({2, 2}, {1.0, 2.0, 3.0}), std::invalid_argument);
}

TEST_CASE("indexed access is row-major") {
  Tensor t({2, 2, 3});
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(i);
  CHECK(t.at(0, 0, 0) == 0.0);
  CHECK(t.at(0, 1, 2) == 5.0);
  CHECK(t.at(1, 0, 0) == 6.0);
  CHECK(t.at(1, 1, 1) == 10.0);
}

TEST_CASE("arithmetic helpers") {
  const Tensor a = Tensor::from_values({3}, {1.0, 2.0, 3.0});
  const Tensor b = Tensor::from_values({3}, {0.5, 0.5, 0.5});
  CHECK((a + b)[0] == 1.5);
  CHECK((a - b)[2] == 2.5);
  CHECK((2.0 * a)[1] == 4.0);
  CHECK(add_scaled(a, -2.0, b)[0] == 0.0);
  CHECK(mse(a, b) == doctest::Approx((0.25 + 2.25 + 6.25) / 3.0));
  CHECK(max_abs_diff(a, b) == 2.5);
  CHECK_THROWS_AS(a + Tensor({2}), std::invalid_argument);
}

TEST_CASE("range utilities") {
  Tensor t = Tensor::from_values({4}, {-1.0, 0.2, 0.8, 3.0});
  CHECK(t.min_value() == -1.0);
  CHECK(t.max_value() == 3.0);
  CHECK(t.mean() == doctest::Approx(0.75));
  t.clamp(0.0, 1.0);
  CHECK(t.min_value() == 0.0);
  CHECK(t.max_value() == 1.0);
  CHECK(t.all_finite());
  t[1] = std::nan("");
  CHECK_FALSE(t.all_finite());
}
