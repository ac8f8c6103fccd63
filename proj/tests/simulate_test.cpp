#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "helpers.hpp"
#include "mss/error.hpp"
#include "mss/metric.hpp"
#include "mss/simulate.hpp"

using namespace mss;

namespace {

SimConfig null_cfg(const Geometry& geom, std::uint64_t seed, int n = 1) {
  SimConfig cfg;
  cfg.geom = geom;
  cfg.n = n;
  cfg.seed = seed;
  return cfg;
}

SimConfig alt_cfg(const Geometry& geom, std::uint64_t seed, const Pattern& f, double mu,
                  double h_min, double h_max, int n = 1) {
  SimConfig cfg = null_cfg(geom, seed, n);
  cfg.hypothesis = Hypothesis::Alt;
  AltSpec alt;
  alt.pattern = f;
  alt.mu = mu;
  alt.h_min = h_min;
  alt.h_max = h_max;
  cfg.alt = alt;
  return cfg;
}

bool bits_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_SUITE("simulate") {

TEST_CASE("null field moments over a million cells") {
  const Geometry geom{1, 31250.0, 16};  // 1e6 cells
  const TensorField X = gen_null(null_cfg(geom, 20240817), 0);
  REQUIRE(X.values.size() == 1'000'000);
  CHECK(X.prov.kind == ProvenanceKind::Null);
  CHECK(std::abs(testutil::mean(X.values)) < 3e-3);  // 3 / sqrt(1e6)
  const double v = testutil::sample_variance(X.values);
  CHECK(v > 0.99);
  CHECK(v < 1.01);
}

TEST_CASE("generation is deterministic per (seed, index)") {
  const Geometry geom{1, 16.0, 16};
  const SimConfig cfg = null_cfg(geom, 9);
  CHECK(bits_equal(gen_null(cfg, 3).values, gen_null(cfg, 3).values));
  CHECK_FALSE(bits_equal(gen_null(cfg, 3).values, gen_null(cfg, 4).values));
  const SimConfig other = null_cfg(geom, 10);
  CHECK_FALSE(bits_equal(gen_null(cfg, 3).values, gen_null(other, 3).values));
}

TEST_CASE("datasets are indexed blocks of the replicate stream") {
  const Geometry geom{1, 16.0, 16};
  const SimConfig cfg = null_cfg(geom, 5, 3);
  const auto rep2 = gen_dataset(cfg, 2);
  REQUIRE(rep2.size() == 3);
  for (int i = 0; i < 3; ++i)
    CHECK(bits_equal(rep2[static_cast<std::size_t>(i)].values, gen_null(cfg, 6 + i).values));
}

TEST_CASE("zero amplitude reproduces the null stream bit for bit") {
  const Geometry geom{1, 16.0, 16};
  const Pattern f = make_pattern(PatternKind::QuadraticBump, 1);
  const SimConfig alt = alt_cfg(geom, 31, f, 0.0, 2.0, 8.0);
  const SimConfig null_c = null_cfg(geom, 31);
  for (std::int64_t idx : {0, 1, 5}) {
    const TensorField a = gen_alt(alt, idx);
    CHECK(bits_equal(a.values, gen_null(null_c, idx).values));
    REQUIRE(a.prov.truth.has_value());
    CHECK(a.prov.truth->mu == 0.0);
    CHECK(a.prov.kind == ProvenanceKind::Embedded);
  }
}

TEST_CASE("the planted template has exact unit-norm amplitude mu") {
  const Geometry geom{1, 16.0, 16};
  const Pattern f = make_pattern(PatternKind::WindowedSinusoid, 1);
  const SimConfig alt = alt_cfg(geom, 77, f, 4.5, 2.0, 8.0);
  const SimConfig null_c = null_cfg(geom, 77);

  const TensorField a = gen_alt(alt, 2);
  const TensorField n = gen_null(null_c, 2);
  REQUIRE(a.prov.truth.has_value());
  const GroundTruth truth = *a.prov.truth;
  CHECK(truth.pattern == f.name);
  CHECK(truth.h[0] >= 2.0);
  CHECK(truth.h[0] <= 8.0);
  CHECK(std::abs(truth.t[0]) <= 16.0 - truth.h[0]);

  // signal = alt - null; its inner product with the planted kernel is mu
  const Kernel k = rasterize(f, truth.h, geom.R);
  const std::int64_t s =
      snap_start_cell(truth.t[0], geom.L, geom.R, k.m[0], geom.cells_per_axis());
  CHECK(start_cell_to_center(s, geom.L, geom.R, k.m[0]) ==
        truth.t[0]);  // recorded center is already snapped
  double dot = 0.0, planted_l2 = 0.0;
  for (std::int64_t i = 0; i < k.size(); ++i) {
    const double sig = a.values[static_cast<std::size_t>(s + i)] -
                       n.values[static_cast<std::size_t>(s + i)];
    dot += sig * k.values[static_cast<std::size_t>(i)];
    planted_l2 += sig * sig;
  }
  CHECK(dot == doctest::Approx(4.5).epsilon(1e-9));
  CHECK(std::sqrt(planted_l2) == doctest::Approx(4.5).epsilon(1e-9));
}

TEST_CASE("a mismatched probe sees mu (1 - nu^2 / 2)") {
  const Geometry geom{1, 16.0, 16};
  const Pattern f = make_pattern(PatternKind::QuadraticBump, 1);
  const SimConfig alt = alt_cfg(geom, 123, f, 6.0, 3.0, 6.0);
  const TensorField a = gen_alt(alt, 0);
  const TensorField n = gen_null(null_cfg(geom, 123), 0);
  const GroundTruth truth = *a.prov.truth;

  // probe at a shifted location and a different scale
  const double t_probe = truth.t[0] * 0.5 + 0.25;
  const double h_probe = truth.h[0] * 1.25;
  const Kernel kp = rasterize(f, {h_probe}, geom.R);
  const std::int64_t sp =
      snap_start_cell(t_probe, geom.L, geom.R, kp.m[0], geom.cells_per_axis());
  const double tp = start_cell_to_center(sp, geom.L, geom.R, kp.m[0]);

  double dot = 0.0;
  for (std::int64_t i = 0; i < kp.size(); ++i)
    dot += (a.values[static_cast<std::size_t>(sp + i)] -
            n.values[static_cast<std::size_t>(sp + i)]) *
           kp.values[static_cast<std::size_t>(i)];

  const ParamPair pair{{truth.t[0]}, {truth.h[0]}, {tp}, {h_probe}};
  const double d = nu(f, pair, geom.R);
  CHECK(dot == doctest::Approx(6.0 * (1.0 - d * d / 2.0)).epsilon(1e-9));
}

TEST_CASE("fixed scale law plants exactly the requested scale") {
  const Geometry geom{1, 16.0, 16};
  SimConfig cfg = null_cfg(geom, 8);
  cfg.hypothesis = Hypothesis::Alt;
  AltSpec alt;
  alt.pattern = make_pattern(PatternKind::QuadraticBump, 1);
  alt.mu = 2.0;
  alt.scale_law = ScaleLaw::Fixed;
  alt.h_fixed = {5.0};
  cfg.alt = alt;
  const TensorField X = gen_alt(cfg, 0);
  CHECK(X.prov.truth->h == std::vector<double>{5.0});
}

TEST_CASE("config validation rejects inconsistent alternatives") {
  const Geometry geom{1, 16.0, 16};
  SimConfig cfg = null_cfg(geom, 1);
  cfg.hypothesis = Hypothesis::Alt;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);  // alt spec missing

  const Pattern f1 = make_pattern(PatternKind::QuadraticBump, 1);
  CHECK_THROWS_AS(alt_cfg(geom, 1, f1, -1.0, 2.0, 8.0).validate(), ValidationError);
  CHECK_THROWS_AS(alt_cfg(geom, 1, f1, 1.0, 0.5, 8.0).validate(), ValidationError);
  CHECK_THROWS_AS(alt_cfg(geom, 1, f1, 1.0, 2.0, 16.0).validate(), ValidationError);
  CHECK_THROWS_AS(alt_cfg(geom, 1, make_pattern(PatternKind::QuadraticBump, 2), 1.0, 2.0, 8.0)
                      .validate(),
                  ValidationError);
  SimConfig zero = null_cfg(geom, 1, 0);
  CHECK_THROWS_AS(zero.validate(), ValidationError);

  CHECK(to_string(Hypothesis::Alt) == "alt");
  CHECK(hypothesis_from_string("null") == Hypothesis::Null);
  CHECK_THROWS_AS(hypothesis_from_string("other"), ValidationError);
  CHECK(scale_law_from_string("log-uniform") == ScaleLaw::LogUniform);
  CHECK(to_string(ScaleLaw::Fixed) == "fixed");
}

TEST_CASE("max-Gaussian tail: proof-sketch inequality and exact median") {
  const TailReport rep = tail_maxgauss(10000, 20000, {3.0, 1.0, 2.0}, 99);
  CHECK(rep.reps == 20000);
  REQUIRE(rep.points.size() == 3);
  // grid is reported in ascending order regardless of input order
  CHECK(rep.points[0].u == 1.0);
  CHECK(rep.points[2].u == 3.0);
  for (const auto& p : rep.points) {
    CHECK(p.reference == doctest::Approx(std::exp(-p.u)).epsilon(1e-12));
    CHECK(p.pass);
  }
  CHECK(rep.points_pass());
  // exact order-statistic median of the max of 1e4 iid normals:
  // Phi^{-1}(2^{-1/N}) = 3.81061 (the sqrt(2 log N) = 4.2919 first-order
  // location overshoots it; the log-log correction is not negligible here)
  CHECK(rep.median_max == doctest::Approx(3.81061).epsilon(3e-3));

  CHECK_THROWS_AS(tail_maxgauss(1, 20000, {1.0}, 1), ValidationError);
  CHECK_THROWS_AS(tail_maxgauss(100, 500, {1.0}, 1), ValidationError);
}

TEST_CASE("scan tail: the affine fit reproduces its calibration quantiles") {
  const Geometry geom{1, 16.0, 16};
  const Pattern f = make_pattern(PatternKind::QuadraticBump, 1);
  const Net net = build_net(16.0, 1, 0.5, 1.0);
  const double u1 = -std::log(0.25), u2 = -std::log(0.025);
  const TailReport rep = tail_scan(f, geom, net, 600, {u1, u2}, 4242);
  CHECK(rep.reps == 600);
  CHECK(rep.c1 > 0.0);
  CHECK(rep.loc == doctest::Approx(rep.a1 * std::log(std::log(16.0)) / rep.c1).epsilon(1e-9));
  REQUIRE(rep.points.size() == 2);
  // by construction of the two-point fit, exceedance at u_i is the target mass
  CHECK(std::abs(rep.points[0].exceedance - 0.25) <= 2.0 / 600);
  CHECK(std::abs(rep.points[1].exceedance - 0.025) <= 2.0 / 600);

  // dyadic blocks: levels 0..3 for L = 16, every level populated
  REQUIRE(rep.blocks.size() == 4);
  for (const auto& b : rep.blocks) {
    CHECK(std::isfinite(b.median_standardized));
    CHECK(std::isfinite(b.median_raw));
  }
  // groups scan coarse to fine, so the first block is the coarsest level
  CHECK(rep.blocks.front().level[0] > rep.blocks.back().level[0]);
  // raw block maxima grow toward the finest block under the null
  CHECK(rep.blocks.front().median_raw < rep.blocks.back().median_raw);

  CHECK_THROWS_AS(tail_scan(f, geom, net, 100, {1.0}, 1), ValidationError);
}

TEST_CASE("experiment harness: null level and zero-signal equivalence") {
  const Geometry geom{1, 16.0, 16};
  const auto dict = built_in_dictionary(1);
  const Net net = build_net(16.0, 1, 0.5, 1.0);
  const ThresholdSpec thr = mc_threshold(geom, dict, net, 2, 0.1, 100, 314);

  const SimConfig h0 = null_cfg(geom, 2025, 2);
  const ExperimentSummary null_sum = run_experiment(h0, dict, net, thr, 40);
  CHECK(null_sum.reps == 40);
  CHECK(null_sum.n == 2);
  // level 0.1 with 3-sigma Monte Carlo slack
  CHECK(null_sum.detection_rate <= 0.1 + 3.0 * std::sqrt(0.1 * 0.9 / 40.0));
  CHECK(null_sum.statistics.size() == 40);

  // mu = 0 alternative: same noise stream, same statistics, same decisions
  const SimConfig zero =
      alt_cfg(geom, 2025, make_pattern(PatternKind::QuadraticBump, 1), 0.0, 2.0, 8.0, 2);
  const ExperimentSummary zero_sum = run_experiment(zero, dict, net, thr, 40);
  CHECK(bits_equal(zero_sum.statistics, null_sum.statistics));
  CHECK(zero_sum.detection_rate == null_sum.detection_rate);
  CHECK(zero_sum.best_patterns == null_sum.best_patterns);
}

TEST_CASE("experiment harness: strong plants are detected and recovered") {
  const Geometry geom{1, 16.0, 16};
  const auto dict = built_in_dictionary(1);
  const Net net = build_net(16.0, 1, 0.5, 1.0);
  const ThresholdSpec thr = mc_threshold(geom, dict, net, 3, 0.05, 100, 11);

  const SimConfig h1 =
      alt_cfg(geom, 606, make_pattern(PatternKind::QuadraticBump, 1), 8.0, 2.0, 8.0, 3);
  const ExperimentSummary sum = run_experiment(h1, dict, net, thr, 30);
  CHECK(sum.detection_rate >= 0.9);
  CHECK(sum.recovery_rate >= 0.9);
  REQUIRE(sum.loc_t_errors.size() == 30u * 3u);
  // medians: quantile arrays are {0.5, 0.75, 0.9}
  CHECK(sum.loc_t_quantiles[0] <= sum.loc_t_quantiles[2]);
  CHECK(sum.loc_t_quantiles[0] < 0.5);
  CHECK(sum.loc_h_quantiles[0] < std::log(2.0));
}

}  // TEST_SUITE simulate
