#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "helpers.hpp"
#include "mss/error.hpp"
#include "mss/geometry.hpp"
#include "mss/rng.hpp"

using namespace mss;

TEST_SUITE("geometry") {

TEST_CASE("validate accepts desk-scale boxes and rejects bad fields") {
  Geometry g{1, 8.0, 16};
  CHECK_NOTHROW(g.validate());
  CHECK(g.cells_per_axis() == 256);
  CHECK(g.shape() == std::vector<std::int64_t>{256});

  CHECK_THROWS_AS((Geometry{0, 8.0, 16}.validate()), ValidationError);
  CHECK_THROWS_AS((Geometry{9, 8.0, 16}.validate()), ValidationError);
  CHECK_THROWS_AS((Geometry{1, -1.0, 16}.validate()), ValidationError);
  CHECK_THROWS_AS((Geometry{1, 8.0, 0}.validate()), ValidationError);
  // 2*L*R must land on a whole cell count
  CHECK_THROWS_AS((Geometry{1, 8.001, 16}.validate()), ValidationError);
  // per-axis cap
  CHECK_THROWS_AS((Geometry{1, 1e9, 16}.validate()), ValidationError);
}

TEST_CASE("cell_count multiplies axes and guards overflow") {
  Geometry g{2, 8.0, 16};
  CHECK(g.cell_count() == 256 * 256);
  Geometry big{8, 1024.0, 16};  // 32768^8 overflows int64
  CHECK_THROWS_AS(big.cell_count(), ValidationError);
}

TEST_CASE("snap_start_cell: centers round-trip and land within half a cell") {
  const double L = 8.0;
  const int R = 16;
  const std::int64_t cells = 256;
  Rng rng(7);
  for (int rep = 0; rep < 500; ++rep) {
    const std::int64_t m = 2 + 2 * rng.uniform_int(60);
    const double half = L - static_cast<double>(m) / (2.0 * R);
    const double t = rng.uniform(-half, half);
    const std::int64_t s = snap_start_cell(t, L, R, m, cells);
    CHECK(s >= 0);
    CHECK(s <= cells - m);
    const double center = start_cell_to_center(s, L, R, m);
    // snapping the snapped center is a fixed point
    CHECK(snap_start_cell(center, L, R, m, cells) == s);
    CHECK(std::abs(center - t) <= 0.5 / R + 1e-12);
  }
}

TEST_CASE("snap_start_cell clamps to the grid and rejects oversized windows") {
  CHECK(snap_start_cell(-100.0, 8.0, 16, 32, 256) == 0);
  CHECK(snap_start_cell(100.0, 8.0, 16, 32, 256) == 256 - 32);
  CHECK_THROWS_AS(snap_start_cell(0.0, 8.0, 16, 300, 256), ValidationError);
}

TEST_CASE("rel_start_cell matches the absolute snap up to the origin shift") {
  // Absolute: s = round((t+L)R - m/2); relative drops the +L*R offset.
  const int R = 16;
  const std::int64_t m = 32;
  for (double t : {-3.25, -0.5, 0.0, 0.8125, 5.0}) {
    const std::int64_t rel = rel_start_cell(t, R, m);
    const std::int64_t abs = snap_start_cell(t, 8.0, R, m, 100000);
    CHECK(abs == rel + 8 * R);
  }
}

TEST_CASE("row_major_strides: last axis fastest") {
  CHECK(row_major_strides({4, 3, 2}) == std::vector<std::int64_t>{6, 2, 1});
  CHECK(row_major_strides({5}) == std::vector<std::int64_t>{1});
}

}  // TEST_SUITE geometry

TEST_SUITE("rng") {

TEST_CASE("same seed gives an identical stream; different seeds diverge") {
  Rng a(42), b(42), c(43);
  bool all_equal = true, any_diff = false;
  for (int i = 0; i < 64; ++i) {
    const auto x = a.u64(), y = b.u64(), z = c.u64();
    all_equal = all_equal && (x == y);
    any_diff = any_diff || (x != z);
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("derive_seed separates streams by path") {
  const auto s0 = derive_seed(9, {1, 2});
  CHECK(s0 == derive_seed(9, {1, 2}));
  CHECK(s0 != derive_seed(9, {1, 3}));
  CHECK(s0 != derive_seed(9, {2, 1}));  // order matters
  CHECK(s0 != derive_seed(10, {1, 2}));
}

TEST_CASE("uniform ranges") {
  Rng rng(5);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform(-2.5, 3.5);
    CHECK(u >= -2.5);
    CHECK(u < 3.5);
  }
  std::set<std::int64_t> seen;
  for (int i = 0; i < 1000; ++i) seen.insert(rng.uniform_int(7));
  CHECK(*seen.begin() == 0);
  CHECK(*seen.rbegin() == 6);
}

TEST_CASE("normal moments at one million draws") {
  Rng rng(1234);
  const std::size_t n = 1'000'000;
  std::vector<double> z(n);
  rng.fill_normal(z.data(), n);
  const double m = testutil::mean(z);
  const double v = testutil::sample_variance(z);
  // mean SE = 1/sqrt(n) = 1e-3; variance SE = sqrt(2/n) ~ 1.4e-3
  CHECK(std::abs(m) < 4e-3);
  CHECK(v > 0.99);
  CHECK(v < 1.01);
  double kurt = 0.0;
  for (double x : z) kurt += x * x * x * x;
  kurt /= static_cast<double>(n);
  CHECK(std::abs(kurt - 3.0) < 0.05);  // Gaussian fourth moment
}

TEST_CASE("fill_normal matches repeated scalar draws") {
  Rng a(77), b(77);
  std::vector<double> buf(257);
  a.fill_normal(buf.data(), buf.size());
  bool same = true;
  for (double x : buf) same = same && (x == b.normal());
  CHECK(same);
}

}  // TEST_SUITE rng
