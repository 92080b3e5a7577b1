#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <limits>
#include <numbers>

#include "test_util.hpp"
#include "xdiff/metrics.hpp"
#include "xdiff/rng.hpp"

using namespace xdiff;

TEST_SUITE_BEGIN("metrics");

TEST_CASE("psnr3d formula and sentinel") {
  const Volume v = testutil::random_volume(4, 61, 0.1, 1.0);
  CHECK(std::isinf(psnr3d(v, v)));

  const Volume ones = new_volume(4, {1, 1, 1}, std::vector<double>(64, 1.0));
  const Volume zeros = new_volume(4, {1, 1, 1}, std::vector<double>(64, 0.0));
  CHECK(psnr3d(ones, zeros) == doctest::Approx(0.0).epsilon(1e-12));

  // Half the voxels at peak 1 vs 0.5: MSE = 0.125, PSNR = 10 log10(8).
  std::vector<double> a(64), b(64, 0.5);
  for (int i = 0; i < 64; ++i) a[i] = i % 2 == 0 ? 1.0 : 0.5;
  const double got = psnr3d(new_volume(4, {1, 1, 1}, a), new_volume(4, {1, 1, 1}, b));
  CHECK(got == doctest::Approx(10.0 * std::log10(8.0)).epsilon(1e-12));
  CHECK(got == doctest::Approx(9.0309).epsilon(1e-3));

  CHECK_THROWS_AS(psnr3d(zeros, ones), std::invalid_argument);  // all-zero reference
  CHECK_THROWS_AS(psnr3d(v, testutil::random_volume(5, 1)), std::invalid_argument);
}

TEST_CASE("psnr3d strictly decreases as a single error grows") {
  const Volume x = testutil::random_volume(4, 62, 0.2, 1.0);
  Volume y = x;
  double prev = std::numeric_limits<double>::infinity();
  for (double bump : {0.05, 0.1, 0.2, 0.4}) {
    y.data[10] = x.data[10] + bump;
    const double p = psnr3d(x, y);
    CHECK(p < prev);
    prev = p;
  }
}

TEST_CASE("ssim2d global-statistics form") {
  const Slice s = testutil::random_slice(8, 63, 0.0, 1.0);
  CHECK(ssim2d(s, s, 1.0) == doctest::Approx(1.0).epsilon(1e-12));

  // Constant slices 1 vs 0 with L = 1: both variances vanish.
  const double got = ssim2d(constant_slice(8, 1.0), constant_slice(8, 0.0), 1.0);
  CHECK(got == doctest::Approx(1e-4 / (1.0 + 1e-4)).epsilon(1e-8));
  CHECK(got == doctest::Approx(9.999e-5).epsilon(1e-4));

  // Anti-correlated zero-mean pair drives the covariance term negative.
  std::vector<double> a(64), b(64);
  for (int i = 0; i < 64; ++i) {
    a[i] = i % 2 == 0 ? 1.0 : -1.0;
    b[i] = -a[i];
  }
  CHECK(ssim2d(Slice(8, a), Slice(8, b), 2.0) <= 0.0);

  const Slice t = testutil::random_slice(8, 64, 0.0, 1.0);
  CHECK(ssim2d(s, t, 1.0) == doctest::Approx(ssim2d(t, s, 1.0)).epsilon(1e-14));
  CHECK_THROWS_AS(ssim2d(s, testutil::random_slice(9, 1), 1.0), std::invalid_argument);
}

TEST_CASE("ssim_plane_mean averages per-slice values") {
  const Volume v = testutil::random_volume(6, 65);
  CHECK(ssim_plane_mean(v, v, Plane::kAxial, 1.0) == doctest::Approx(1.0).epsilon(1e-12));

  const Volume w = testutil::random_volume(6, 66);
  for (Plane p : {Plane::kAxial, Plane::kCoronal, Plane::kSagittal}) {
    const double m = ssim_plane_mean(v, w, p, 1.0);
    CHECK(m >= -1.0);
    CHECK(m <= 1.0);
  }
}

TEST_CASE("dice per-slice mean") {
  const int S = 4;
  std::vector<int> full(64, 1);
  const SegMask y(S, full);
  CHECK(dice(y, y, 1) == 1.0);

  // Disjoint nonempty masks per slice.
  std::vector<int> left(64, 0), right(64, 0);
  for (int d = 0; d < S; ++d)
    for (int h = 0; h < S; ++h) {
      left[(d * S + h) * S + 0] = 1;
      right[(d * S + h) * S + 3] = 1;
    }
  CHECK(dice(SegMask(S, left), SegMask(S, right), 1) == 0.0);

  // Per slice |Y| = 4, |Yhat| = 4, overlap 2 -> 0.5 on every slice.
  std::vector<int> ya(64, 0), yb(64, 0);
  for (int d = 0; d < S; ++d) {
    for (int i = 0; i < 4; ++i) ya[d * 16 + i] = 1;        // cells 0..3
    for (int i = 2; i < 6; ++i) yb[d * 16 + i] = 1;        // cells 2..5
  }
  CHECK(dice(SegMask(S, ya), SegMask(S, yb), 1) == 0.5);

  // Empty-both slices are skipped, not counted as 1.
  std::vector<int> sparse_a(64, 0), sparse_b(64, 0);
  sparse_a[0] = 1;
  sparse_b[0] = 1;
  sparse_a[1] = 1;
  sparse_b[2] = 1;
  CHECK(dice(SegMask(S, sparse_a), SegMask(S, sparse_b), 1) ==
        doctest::Approx(2.0 * 1.0 / 4.0));  // single counted slice: 2|∩|/(2+2)

  CHECK(dice(SegMask(S, sparse_a), SegMask(S, sparse_b), 1) ==
        dice(SegMask(S, sparse_b), SegMask(S, sparse_a), 1));
}

TEST_CASE("brain_volume counts strictly positive voxels") {
  const Volume zeros = new_volume(4, {1, 1, 1}, std::vector<double>(64, 0.0));
  CHECK(brain_volume(zeros) == 0.0);

  std::vector<double> d(64, 0.0);
  for (int i = 0; i < 10; ++i) d[i] = 0.3;
  CHECK(brain_volume(new_volume(4, {1, 1, 1}, d)) == doctest::Approx(10.0));

  std::vector<double> e(64, 0.0);
  for (int i = 0; i < 5; ++i) e[i] = 0.9;
  CHECK(brain_volume(new_volume(4, {2, 1, 1}, e)) == doctest::Approx(10.0));

  // Scaling values by any positive constant does not change the count.
  std::vector<double> f = e;
  for (double& x : f) x *= 17.0;
  CHECK(brain_volume(new_volume(4, {2, 1, 1}, f)) == doctest::Approx(10.0));
}

TEST_CASE("curvature oracles") {
  SUBCASE("straight lines are flat") {
    std::vector<std::array<double, 2>> line;
    for (int i = 0; i < 50; ++i) {
      line.push_back({0.3 + 1.7 * i, -2.0 + 0.4 * i});
    }
    const CurvatureResult r = curvature(line);
    CHECK(r.kappa_max_abs <= 1e-10);
  }
  SUBCASE("circle of radius r has curvature 1/r") {
    for (double radius : {1.0, 3.0, 10.0}) {
      std::vector<std::array<double, 2>> circle;
      for (int i = 0; i < 209; ++i) {
        const double th = 2.0 * std::numbers::pi * i / 209.0;
        circle.push_back({radius * std::cos(th), radius * std::sin(th)});
      }
      const CurvatureResult r = curvature(circle);
      CHECK(std::abs(r.kappa_max_abs - 1.0 / radius) / (1.0 / radius) < 0.01);
    }
  }
  SUBCASE("parabola vertex curvature is 2") {
    std::vector<std::array<double, 2>> par;
    const int n = 209;
    for (int i = 0; i < n; ++i) {
      const double t = -1.0 + 2.0 * i / (n - 1.0);
      par.push_back({t, t * t});
    }
    const CurvatureResult r = curvature(par);
    CHECK(std::abs(r.kappa[n / 2] - 2.0) / 2.0 < 0.01);
  }
  SUBCASE("too few points") {
    CHECK_THROWS_AS(curvature({{0, 0}, {1, 1}, {2, 2}, {3, 3}}), std::invalid_argument);
  }
}

TEST_CASE("scoliosis bins") {
  CHECK(classify_scoliosis(0.05) == Scoliosis::kNone);
  CHECK(classify_scoliosis(0.06) == Scoliosis::kNone);
  CHECK(classify_scoliosis(0.08) == Scoliosis::kMild);
  CHECK(classify_scoliosis(0.12) == Scoliosis::kModerate);
  CHECK(classify_scoliosis(0.149) == Scoliosis::kModerate);
  CHECK(classify_scoliosis(0.15) == Scoliosis::kSevere);
  CHECK(classify_scoliosis(0.20) == Scoliosis::kSevere);
  CHECK_THROWS_AS(classify_scoliosis(-0.1), std::invalid_argument);
}

TEST_CASE("pearson hand cases and invariances") {
  const std::vector<double> xs{1.0, 2.0, 3.0};
  const std::vector<double> lin{3.0, 5.0, 7.0};
  CHECK(pearson(xs, lin) == doctest::Approx(1.0).epsilon(1e-12));

  const std::vector<double> neg{-1.0, -2.0, -3.0};
  CHECK(pearson(xs, neg) == doctest::Approx(-1.0).epsilon(1e-12));

  const std::vector<double> ys{1.0, 2.0, 4.0};
  CHECK(pearson(xs, ys) == doctest::Approx(0.9820).epsilon(1e-3));

  // Positive affine transforms leave r unchanged; negation flips its sign.
  std::vector<double> affine(ys);
  for (double& v : affine) v = 2.5 * v + 7.0;
  CHECK(pearson(xs, affine) == doctest::Approx(pearson(xs, ys)).epsilon(1e-12));
  std::vector<double> flipped(ys);
  for (double& v : flipped) v = -v;
  CHECK(pearson(xs, flipped) == doctest::Approx(-pearson(xs, ys)).epsilon(1e-12));

  CHECK_THROWS_AS(pearson(xs, std::vector<double>{1.0, 1.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(pearson(xs, std::vector<double>{1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("mse_by_slice localization and decomposition") {
  const Volume x = testutil::random_volume(5, 67);
  CHECK(mse_by_slice(x, x) == std::vector<double>(5, 0.0));

  Volume y = x;
  y.at(2, 1, 1) += 0.5;
  const auto series = mse_by_slice(x, y);
  for (int d = 0; d < 5; ++d) {
    if (d == 2) {
      CHECK(series[d] > 0.0);
    } else {
      CHECK(series[d] == 0.0);
    }
  }

  const Volume z = testutil::random_volume(5, 68);
  const auto per = mse_by_slice(x, z);
  double total = 0.0;
  for (double m : per) total += m;
  double mse = 0.0;
  for (std::size_t i = 0; i < x.data.size(); ++i) {
    const double e = x.data[i] - z.data[i];
    mse += e * e;
  }
  mse /= static_cast<double>(x.data.size());
  CHECK(total == doctest::Approx(5.0 * mse).epsilon(1e-12));
}

TEST_CASE("conformal calibrate and coverage") {
  const Volume t1 = testutil::random_volume(4, 69);
  SUBCASE("identical pairs give q = 0 and full coverage") {
    const std::vector<std::pair<Volume, Volume>> pairs{{t1, t1}};
    CHECK(conformal_calibrate(pairs, 0.1) == 0.0);
    CHECK(conformal_coverage(pairs, 0.0) == 1.0);
  }
  SUBCASE("uniform errors put the 0.9 quantile near 0.9") {
    Rng rng(70);
    std::vector<std::pair<Volume, Volume>> pairs;
    for (int k = 0; k < 20; ++k) {
      std::vector<double> gen(64), tgt(64, 0.0);
      for (double& g : gen) g = rng.uniform01();
      pairs.emplace_back(new_volume(4, {1, 1, 1}, gen), new_volume(4, {1, 1, 1}, tgt));
    }
    const double q = conformal_calibrate(pairs, 0.1);
    CHECK(q == doctest::Approx(0.9).epsilon(0.03));
    // Guarantee on the calibration set itself.
    CHECK(conformal_coverage(pairs, q) >= 0.9);
  }
  SUBCASE("q at the max error covers everything") {
    const Volume g = testutil::random_volume(4, 71);
    const std::vector<std::pair<Volume, Volume>> pairs{{g, t1}};
    double worst = 0.0;
    for (std::size_t i = 0; i < g.data.size(); ++i) {
      worst = std::max(worst, std::abs(g.data[i] - t1.data[i]));
    }
    CHECK(conformal_coverage(pairs, worst) == 1.0);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(conformal_calibrate({}, 0.1), std::invalid_argument);
    const std::vector<std::pair<Volume, Volume>> pairs{{t1, t1}};
    CHECK_THROWS_AS(conformal_calibrate(pairs, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(conformal_calibrate(pairs, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(conformal_coverage(pairs, -1.0), std::invalid_argument);
  }
}

TEST_CASE("metrics report serializes sorted keys") {
  MetricsReport rep;
  rep.set("psnr_db", 12.5);
  rep.set("dice_class_1", 0.5);
  rep.set("ssim_axial", 0.9);
  const std::string text = rep.to_text();
  CHECK(text == "dice_class_1 = 0.500000\npsnr_db = 12.500000\nssim_axial = 0.900000\n");
  CHECK_THROWS_AS(rep.set("ssim_axial", 1.5), std::invalid_argument);
  CHECK_THROWS_AS(rep.set("dice_class_1", -0.2), std::invalid_argument);
  rep.set("psnr_db", std::numeric_limits<double>::infinity());
  CHECK(rep.to_text().find("psnr_db = inf") != std::string::npos);
}

TEST_SUITE_END();
