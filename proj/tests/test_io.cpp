#include "doctest.h"

#include <cstdio>
#include <stdexcept>
#include <fstream>
#include <sstream>

#include "resshift/image_io.hpp"
#include "resshift/rng.hpp"
#include "resshift/tensor_io.hpp"

using namespace resshift;

TEST_CASE("rsten round trip over random shapes") {
  Prng rng(1);
  for (int trial = 0; trial < 12; ++trial) {
    std::vector<int> shape;
    const int ndim = 1 + static_cast<int>(rng.uniform_index(4));
    for (int d = 0; d < ndim; ++d) shape.push_back(1 + static_cast<int>(rng.uniform_index(7)));
    Tensor t(shape);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.normal();

    std::stringstream buf;
    write_tensor(buf, t);
    const Tensor back = read_tensor(buf);
    CHECK(back.shape() == t.shape());
    CHECK(max_abs_diff(back, t) == 0.0);
  }
}

TEST_CASE("rsten rejects corruption") {
  std::stringstream bad_magic("XSTEN????");
  CHECK_THROWS_WITH_AS(read_tensor(bad_magic), doctest::Contains("magic"), std::runtime_error);

  Tensor t({2, 2}, 0.5);
  std::stringstream buf;
  write_tensor(buf, t);
  std::string bytes = buf.str();
  bytes.resize(bytes.size() - 7);  // chop payload
  std::stringstream truncated(bytes);
  CHECK_THROWS_WITH_AS(read_tensor(truncated), doctest::Contains("truncated"),
                       std::runtime_error);
}

TEST_CASE("split and stack along the first axis invert each other") {
  Prng rng(2);
  Tensor stacked({5, 2, 3, 3});
  for (std::size_t i = 0; i < stacked.size(); ++i) stacked[i] = rng.uniform();
  const auto items = split_first_axis(stacked);
  REQUIRE(items.size() == 5);
  CHECK(items[0].shape() == std::vector<int>{2, 3, 3});
  const Tensor back = stack_first_axis(items);
  CHECK(back.shape() == stacked.shape());
  CHECK(max_abs_diff(back, stacked) == 0.0);
}

TEST_CASE("pgm/ppm round trip with 8-bit quantization") {
  Prng rng(3);
  for (const int channels : {1, 3}) {
    CAPTURE(channels);
    Tensor img({channels, 5, 7});
    for (std::size_t i = 0; i < img.size(); ++i) img[i] = rng.uniform();
    const std::string path = channels == 1 ? "io_test.pgm" : "io_test.ppm";
    write_image_file(path, img);
    const Tensor back = read_image_file(path);
    CHECK(back.shape() == img.shape());
    CHECK(max_abs_diff(back, img) <= 0.5 / 255.0 + 1e-12);

    // writing the quantized image again is exact
    write_image_file(path, back);
    const Tensor again = read_image_file(path);
    CHECK(max_abs_diff(again, back) == 0.0);
    std::remove(path.c_str());
  }
}

TEST_CASE("image io rejects malformed files") {
  {
    std::ofstream os("io_bad.pgm", std::ios::binary);
    os << "P7 nonsense";
  }
  CHECK_THROWS_AS(read_image_file("io_bad.pgm"), std::runtime_error);
  std::remove("io_bad.pgm");
  CHECK_THROWS_AS(read_image_file("io_missing.pgm"), std::runtime_error);
  CHECK_THROWS_AS(write_image_file("io_bad_shape.pgm", Tensor({2, 4, 4}, 0.0)),
                  std::invalid_argument);
  CHECK(has_image_extension("a.pgm"));
  CHECK(has_image_extension("b.ppm"));
  CHECK_FALSE(has_image_extension("c.rsten"));
}
