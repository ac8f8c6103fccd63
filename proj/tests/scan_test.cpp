#include <doctest.h>

#include <cmath>
#include <vector>

#include "helpers.hpp"
#include "mss/error.hpp"
#include "mss/rng.hpp"
#include "mss/scan.hpp"
#include "mss/simulate.hpp"

using namespace mss;

namespace {

// L=8, R=4, one location per scale {1,2,4}: every net entry sits at t=0.
Net isolated_net() {
  NetConfig cfg;
  cfg.alpha_override = 16.0;
  cfg.beta_override = 2.0;
  return build_net(8.0, 1, 0.5, 1.0, cfg);
}

TensorField planted_tensor(const Geometry& geom, const Pattern& f, double h, double t, double mu) {
  TensorField X;
  X.geom = geom;
  X.values.assign(static_cast<std::size_t>(geom.cell_count()), 0.0);
  const Kernel k = rasterize(f, {h}, geom.R);
  const std::int64_t s = snap_start_cell(t, geom.L, geom.R, k.m[0], geom.cells_per_axis());
  for (std::int64_t i = 0; i < k.size(); ++i)
    X.values[static_cast<std::size_t>(s + i)] += mu * k.values[static_cast<std::size_t>(i)];
  return X;
}

TensorField noise_tensor(const Geometry& geom, std::uint64_t seed) {
  SimConfig cfg;
  cfg.geom = geom;
  cfg.seed = seed;
  return gen_null(cfg, 0);
}

}  // namespace

TEST_SUITE("scan") {

TEST_CASE("scale correction v_h") {
  CHECK(v_h({8.0}, 8.0) == 0.0);
  CHECK(v_h({std::exp(1.0)}, std::exp(2.0)) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK(v_h({1.0, 1.0}, 64.0) ==
        doctest::Approx(std::sqrt(4.0 * std::log(64.0))).epsilon(1e-12));  // 4.0789
  // decreasing in h
  CHECK(v_h({2.0}, 64.0) > v_h({4.0}, 64.0));
}

TEST_CASE("convolution: embedded kernel lights up exactly its own offset") {
  const Geometry geom{1, 8.0, 4};
  const Pattern f = make_pattern(PatternKind::QuadraticBump, 1);
  const Kernel k = rasterize(f, {2.0}, 4);
  TensorField X = planted_tensor(geom, f, 2.0, -1.5, 1.0);
  const std::int64_t s = snap_start_cell(-1.5, 8.0, 4, k.m[0], 64);

  for (ConvMethod method : {ConvMethod::Direct, ConvMethod::Fft}) {
    const Convolution c = convolve_at_scale(X, k, method);
    CHECK(c.shape == std::vector<std::int64_t>{64 - k.m[0] + 1});
    CHECK(c.values[static_cast<std::size_t>(s)] == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t i = 0; i < c.values.size(); ++i)
      if (i != static_cast<std::size_t>(s)) CHECK(c.values[i] < 1.0 - 1e-9);
  }

  TensorField zero;
  zero.geom = geom;
  zero.values.assign(64, 0.0);
  const Convolution cz = convolve_at_scale(zero, k);
  for (double v : cz.values) CHECK(v == 0.0);
}

TEST_CASE("direct and FFT convolution agree to 1e-9") {
  const Pattern f = make_pattern(PatternKind::TruncatedGaussian, 2);
  const Geometry geom{2, 4.0, 8};
  const Kernel k = rasterize(f, {1.0, 2.5}, 8);
  TensorField X = noise_tensor(geom, 5150);
  const Convolution a = convolve_at_scale(X, k, ConvMethod::Direct);
  const Convolution b = convolve_at_scale(X, k, ConvMethod::Fft);
  REQUIRE(a.values.size() == b.values.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i)
    worst = std::max(worst, std::abs(a.values[i] - b.values[i]));
  CHECK(worst < 1e-9);
}

TEST_CASE("noiseless plant at a net entry scores v*(mu - v) at that entry") {
  const Geometry geom{1, 8.0, 4};
  const Net net = isolated_net();
  const Pattern f = make_pattern(PatternKind::QuadraticBump, 1);
  const TensorField X = planted_tensor(geom, f, 2.0, 0.0, 5.0);

  const ScanResult r = scan_single(X, f, net);
  const double v2 = v_h({2.0}, 8.0);
  CHECK(r.statistic == doctest::Approx(v2 * (5.0 - v2)).epsilon(1e-9));
  CHECK(r.argmax_h == std::vector<double>{2.0});
  CHECK(r.argmax_t == std::vector<double>{0.0});
  CHECK(r.raw_convolution_at_argmax == doctest::Approx(5.0).epsilon(1e-9));
  CHECK_FALSE(r.negated);

  // per-scale summary is coarse to fine and the planted scale carries mu
  REQUIRE(r.per_scale_max.size() == 3);
  CHECK(r.per_scale_max[0].h == std::vector<double>{4.0});
  CHECK(r.per_scale_max[2].h == std::vector<double>{1.0});
  CHECK(r.per_scale_max[1].raw_max == doctest::Approx(5.0).epsilon(1e-9));
}

TEST_CASE("all-zero input maximizes -v^2 at the coarsest scale") {
  const Geometry geom{1, 8.0, 4};
  TensorField X;
  X.geom = geom;
  X.values.assign(64, 0.0);
  const ScanResult r = scan_single(X, make_pattern(PatternKind::QuadraticBump, 1), isolated_net());
  const double v4 = v_h({4.0}, 8.0);
  CHECK(r.statistic == doctest::Approx(-v4 * v4).epsilon(1e-12));
  CHECK(r.argmax_h == std::vector<double>{4.0});
}

TEST_CASE("two-sided scan catches a negative plant and marks the branch") {
  const Geometry geom{1, 8.0, 4};
  const Pattern f = make_pattern(PatternKind::QuadraticBump, 1);
  const Net net = isolated_net();
  const TensorField pos = planted_tensor(geom, f, 2.0, 0.0, 5.0);
  const TensorField neg = planted_tensor(geom, f, 2.0, 0.0, -5.0);

  ScanOptions two;
  two.two_sided = true;
  const ScanResult rp = scan_single(pos, f, net);
  const ScanResult rn = scan_single(neg, f, net, two);
  CHECK(rn.statistic == rp.statistic);  // mirrored data, mirrored branch
  CHECK(rn.negated);
  CHECK(rn.raw_convolution_at_argmax == doctest::Approx(5.0).epsilon(1e-9));

  // one-sided scan of the negative plant must do strictly worse
  const ScanResult weak = scan_single(neg, f, net);
  CHECK(weak.statistic < rn.statistic);
}

TEST_CASE("pamss reduces to the single scan and scales by 1/sqrt(n)") {
  const Geometry geom{1, 8.0, 4};
  const Pattern f = make_pattern(PatternKind::QuadraticBump, 1);
  const Net net = isolated_net();
  const TensorField X = planted_tensor(geom, f, 2.0, 0.0, 5.0);

  const ScanResult single = scan_single(X, f, net);
  const PamssResult one = pamss({X}, {f}, net);
  CHECK(one.E_n == doctest::Approx(single.statistic).epsilon(1e-12));
  CHECK(one.best_pattern == f.name);

  // n = 4 identical noiseless tensors: E_n = 4 * stat / sqrt(4) = 2 * stat
  const std::vector<TensorField> four(4, X);
  const PamssResult quad = pamss(four, {f}, net);
  CHECK(quad.E_n == doctest::Approx(2.0 * single.statistic).epsilon(1e-12));
  REQUIRE(quad.per_tensor.size() == 4);
  for (const auto& r : quad.per_tensor)
    CHECK(r.statistic == doctest::Approx(single.statistic).epsilon(1e-12));
}

TEST_CASE("dictionary scoring keeps dict order and picks the planted family") {
  const Geometry geom{1, 16.0, 8};
  const auto dict = built_in_dictionary(1);
  const Net net = build_net(16.0, 1, 0.5, 1.0);
  TensorField X = noise_tensor(geom, 7);
  const Pattern& planted = dict[2];
  const TensorField bump = planted_tensor(geom, planted, 3.0, 1.0, 8.0);
  for (std::size_t i = 0; i < X.values.size(); ++i) X.values[i] += bump.values[i];

  ScanEngine engine(geom, net, dict);
  const PamssResult res = engine.run_pamss({X});
  REQUIRE(res.per_pattern_scores.size() == dict.size());
  for (std::size_t i = 0; i < dict.size(); ++i)
    CHECK(res.per_pattern_scores[i].first == dict[i].name);
  CHECK(res.best_pattern == planted.name);
  double best = -1e300;
  for (const auto& [name, score] : res.per_pattern_scores) best = std::max(best, score);
  CHECK(res.E_n == doctest::Approx(best).epsilon(1e-15));

  const auto all = engine.scan_all(X);
  CHECK(all.size() == dict.size());
}

TEST_CASE("finer nets never lower the statistic") {
  const Geometry geom{1, 16.0, 8};
  const Pattern f = make_pattern(PatternKind::QuadraticBump, 1);
  const Net net = build_net(16.0, 1, 0.5, 1.0);
  const Net fine = refine_net(net, 2, 2);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const TensorField X = noise_tensor(geom, seed);
    const double coarse = scan_single(X, f, net).statistic;
    const double refined = scan_single(X, f, fine).statistic;
    CHECK(refined >= coarse);  // exact superset, no tolerance
  }
}

TEST_CASE("whole-cell shifts move the argmax and preserve the statistic") {
  const Geometry geom{1, 8.0, 8};
  const Pattern f = make_pattern(PatternKind::QuadraticBump, 1);
  NetConfig cfg;
  cfg.alpha_override = 1.0 / 64.0;  // lattice finer than one cell: every start cell scanned
  cfg.beta_override = 2.0;
  const Net net = build_net(8.0, 1, 0.5, 1.0, cfg);

  const TensorField a = planted_tensor(geom, f, 1.0, -2.0, 6.0);
  const std::int64_t shift_cells = 13;
  const TensorField b = planted_tensor(geom, f, 1.0, -2.0 + shift_cells / 8.0, 6.0);
  const ScanResult ra = scan_single(a, f, net);
  const ScanResult rb = scan_single(b, f, net);
  CHECK(ra.statistic == rb.statistic);
  CHECK(rb.argmax_t[0] - ra.argmax_t[0] ==
        doctest::Approx(shift_cells / 8.0).epsilon(1e-12));
}

TEST_CASE("worker count does not change pamss output") {
  const Geometry geom{1, 16.0, 8};
  const auto dict = built_in_dictionary(1);
  const Net net = build_net(16.0, 1, 0.5, 1.0);
  std::vector<TensorField> Xs;
  for (std::uint64_t i = 0; i < 6; ++i) Xs.push_back(noise_tensor(geom, 100 + i));
  ScanEngine engine(geom, net, dict);
  const PamssResult serial = engine.run_pamss(Xs, 1);
  const PamssResult parallel = engine.run_pamss(Xs, 8);
  CHECK(serial.E_n == parallel.E_n);
  CHECK(serial.best_pattern == parallel.best_pattern);
  for (std::size_t i = 0; i < Xs.size(); ++i)
    CHECK(serial.per_tensor[i].statistic == parallel.per_tensor[i].statistic);
}

TEST_CASE("FFT and direct scan paths agree") {
  const Geometry geom{1, 16.0, 8};
  const Pattern f = make_pattern(PatternKind::TruncatedGaussian, 1);
  const Net net = build_net(16.0, 1, 0.5, 1.0);
  ScanOptions all_fft;
  all_fft.fft_crossover = 0;
  ScanOptions all_direct;
  all_direct.fft_crossover = 1 << 29;
  for (std::uint64_t seed = 40; seed < 44; ++seed) {
    const TensorField X = noise_tensor(geom, seed);
    const double sf = scan_single(X, f, net, all_fft).statistic;
    const double sd = scan_single(X, f, net, all_direct).statistic;
    CHECK(sf == doctest::Approx(sd).epsilon(1e-9));
  }
}

TEST_CASE("geometry mismatches are rejected") {
  const Geometry geom{1, 16.0, 8};
  const Net net = build_net(16.0, 1, 0.5, 1.0);
  ScanEngine engine(geom, net, built_in_dictionary(1));
  TensorField wrong;
  wrong.geom = Geometry{1, 8.0, 8};
  wrong.values.assign(128, 0.0);
  CHECK_THROWS_AS(engine.scan(wrong, 0), ValidationError);
  CHECK_THROWS_AS(engine.scan(noise_tensor(geom, 1), 9), ValidationError);
  CHECK_THROWS_AS(ScanEngine(geom, net, {}), ValidationError);
}

}  // TEST_SUITE scan
