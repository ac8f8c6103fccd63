#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "helpers.hpp"
#include "mss/error.hpp"
#include "mss/net.hpp"
#include "mss/patterns.hpp"

using namespace mss;

TEST_SUITE("net") {

TEST_CASE("epsilon to (alpha, beta) with unit constants") {
  {
    const auto [alpha, beta] = params_for_epsilon(0.01, 1.0, 2, 1.0, 1.0);
    CHECK(alpha == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(beta == doctest::Approx(1.01).epsilon(1e-12));
  }
  {
    // gamma = 1/2: alpha = eps^2
    const auto [alpha, beta] = params_for_epsilon(0.04, 0.5, 1, 1.0, 1.0);
    CHECK(alpha == doctest::Approx(0.0016).epsilon(1e-12));
    CHECK(beta > 1.0);
  }
  CHECK_NOTHROW(params_for_epsilon(2.0, 1.0, 1));  // epsilon domain is (0, 2]
  CHECK_THROWS_AS(params_for_epsilon(0.0, 1.0, 1), ValidationError);
  CHECK_THROWS_AS(params_for_epsilon(2.5, 1.0, 1), ValidationError);
  CHECK_THROWS_AS(params_for_epsilon(0.5, 0.0, 1), ValidationError);
}

TEST_CASE("geometric scale ladders") {
  const auto s1 = build_scales(8.0, 2.0, 1);
  REQUIRE(s1.size() == 3);  // beta^3 = 8 = L is dropped (h < L strictly)
  CHECK(s1[0] == std::vector<double>{1.0});
  CHECK(s1[1] == std::vector<double>{2.0});
  CHECK(s1[2] == std::vector<double>{4.0});

  CHECK(build_scales(8.0, 2.0, 2).size() == 9);  // {1,2,4}^2

  const auto s3 = build_scales(10.0, 3.0, 1);
  REQUIRE(s3.size() == 3);
  CHECK(s3[2] == std::vector<double>{9.0});
}

TEST_CASE("location lattices") {
  const auto loc = build_locations({2.0}, 8.0, 0.5);
  REQUIRE(loc.size() == 13);  // spacing 1 over [-6, 6]
  std::vector<double> xs;
  for (const auto& p : loc) xs.push_back(p[0]);
  std::sort(xs.begin(), xs.end());
  CHECK(xs.front() == -6.0);
  CHECK(xs.back() == 6.0);
  CHECK(std::find(xs.begin(), xs.end(), 0.0) != xs.end());

  // nearly degenerate window: only the origin fits
  const auto tight = build_locations({7.999}, 8.0, 0.5);
  REQUIRE(tight.size() == 1);
  CHECK(tight[0][0] == 0.0);

  CHECK(build_locations({1.0, 1.0}, 8.0, 1.0).size() == 225);  // 15^2
}

TEST_CASE("forced-parameter net reproduces the hand count") {
  NetConfig cfg;
  cfg.alpha_override = 0.5;
  cfg.beta_override = 2.0;
  const Net net = build_net(8.0, 1, 0.5, 1.0, cfg);
  REQUIRE(net.groups.size() == 3);
  // per-scale counts 29 + 13 + 5
  std::vector<std::int64_t> counts;
  for (const auto& g : net.groups) counts.push_back(g.count());
  std::sort(counts.begin(), counts.end());
  CHECK(counts == std::vector<std::int64_t>{5, 13, 29});
  CHECK(net.total_entries() == 47);

  // every lattice point respects |t| <= L - h
  for (const auto& g : net.groups)
    CHECK(static_cast<double>(g.kmax[0]) * g.spacing[0] <= 8.0 - g.h[0] + 1e-12);
}

TEST_CASE("halving epsilon about doubles each location lattice") {
  NetConfig cfg;
  cfg.beta_override = 2.0;  // pin the scale ladder so groups align
  const Net coarse = build_net(8.0, 1, 0.5, 1.0, cfg);
  const Net fine = build_net(8.0, 1, 0.25, 1.0, cfg);
  REQUIRE(coarse.groups.size() == fine.groups.size());
  CHECK(fine.alpha == doctest::Approx(coarse.alpha / 2.0).epsilon(1e-12));
  for (std::size_t i = 0; i < coarse.groups.size(); ++i) {
    const auto c = coarse.groups[i].count();
    const auto f = fine.groups[i].count();
    // kmax' in {2k, 2k+1}: count doubles up to one lattice point
    CHECK(f >= 2 * c - 1);
    CHECK(f <= 2 * c + 1);
  }
}

TEST_CASE("entry cap raises a sizing error") {
  NetConfig cfg;
  cfg.max_entries = 10;
  CHECK_THROWS_AS(build_net(8.0, 1, 0.5, 1.0, cfg), ValidationError);
}

TEST_CASE("scale groups are disjoint and group_index inverts the ladder") {
  const Net net = build_net(16.0, 1, 0.5, 1.0);
  std::set<std::vector<double>> seen;
  std::int64_t total = 0;
  for (const auto& g : net.groups) {
    CHECK(seen.insert(g.h).second);  // unique scale vector
    total += g.count();
  }
  CHECK(total == net.total_entries());

  const auto n_axis = static_cast<int>(net.axis_scales.size());
  for (int i = 0; i < n_axis; ++i) {
    const auto gi = net.group_index({i});
    REQUIRE(gi >= 0);
    CHECK(net.groups[static_cast<std::size_t>(gi)].h[0] == net.axis_scales[static_cast<std::size_t>(i)]);
  }
}

TEST_CASE("refinement keeps every parent entry bit-exactly") {
  const Net net = build_net(16.0, 1, 0.5, 1.0);
  const Net fine = refine_net(net, 4, 3);
  CHECK(fine.alpha == doctest::Approx(net.alpha / 4.0).epsilon(1e-15));
  CHECK(fine.beta == doctest::Approx(std::pow(net.beta, 1.0 / 3.0)).epsilon(1e-12));
  CHECK(fine.total_entries() > net.total_entries());

  // parent scales survive with the parent lattice as an exact sublattice
  for (const auto& pg : net.groups) {
    const auto it = std::find_if(fine.groups.begin(), fine.groups.end(),
                                 [&](const NetGroup& g) { return g.h == pg.h; });
    REQUIRE(it != fine.groups.end());
    for (std::int64_t k = -pg.kmax[0]; k <= pg.kmax[0]; ++k) {
      const double parent_t = static_cast<double>(k) * pg.spacing[0];
      const double child_t = static_cast<double>(4 * k) * it->spacing[0];
      CHECK(child_t == parent_t);  // bit-exact, not approximate
      CHECK(std::abs(4 * k) <= it->kmax[0]);
    }
  }

  CHECK_THROWS_AS(refine_net(net, 3, 2), ValidationError);  // not a power of two
  CHECK_THROWS_AS(refine_net(net, 2, 0), ValidationError);
}

TEST_CASE("coverage at the default constants, and failure when inflated") {
  const Pattern bump = make_pattern(PatternKind::QuadraticBump, 1);
  const Net net = build_net(32.0, 1, 0.25, 1.0);
  const CoverageReport rep = verify_net(net, bump, 0.25, 50, 2024);
  CHECK(rep.trials == 50);
  CHECK(rep.fraction() == 1.0);
  CHECK(rep.worst_distance <= 0.25);
  CHECK(rep.worst_t.size() == 1);

  NetConfig wide;
  wide.alpha_override = net.alpha * 10.0;
  const Net sparse = build_net(32.0, 1, 0.25, 1.0, wide);
  const CoverageReport bad = verify_net(sparse, bump, 0.25, 50, 2024);
  CHECK(bad.fraction() < 1.0);
  CHECK(bad.worst_distance > 0.25);
}

TEST_CASE("constant calibration finds a feasible grid at desk scale") {
  const std::vector<Pattern> dict = {make_pattern(PatternKind::QuadraticBump, 1)};
  const NetCalibration cal = calibrate_net_constants(dict, 8.0, 1, 0.5, 40, 99);
  CHECK(cal.feasible);
  CHECK(cal.C_alpha > 0.0);
  CHECK(cal.C_beta > 0.0);
  CHECK(cal.net_entries > 0);
  // the winning constants must actually cover at the requested epsilon
  NetConfig cfg;
  cfg.C_alpha = cal.C_alpha;
  cfg.C_beta = cal.C_beta;
  const Net net = build_net(8.0, 1, 0.5, 1.0, cfg);
  CHECK(verify_net(net, dict[0], 0.5, 40, 99).fraction() == 1.0);
}

}  // TEST_SUITE net
