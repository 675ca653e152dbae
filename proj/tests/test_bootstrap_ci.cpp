#include <doctest.h>

#include <Eigen/Dense>
#include <vector>

#include "ccaboot/bootstrap_ci.hpp"
#include "ccaboot/cca_core.hpp"
#include "ccaboot/errors.hpp"
#include "ccaboot/simgen.hpp"
#include "test_support.hpp"

using namespace ccaboot;
using namespace ccaboot::testing;

TEST_SUITE_BEGIN("bootstrap_ci");

TEST_CASE("resample_rows: N = 1 reproduces the input") {
  DataMatrix x, y;
  x.values = Eigen::MatrixXd::Constant(1, 2, 3.0);
  y.values = Eigen::MatrixXd::Constant(1, 1, -1.0);
  RngStream rng(1);
  const auto [xs, ys] = resample_rows(x, y, rng);
  CHECK(max_abs_diff(xs.values, x.values) == 0.0);
  CHECK(max_abs_diff(ys.values, y.values) == 0.0);
}

TEST_CASE("resample_rows: identical stream, identical resample") {
  RngStream rng_a(5), rng_b(5);
  DataMatrix x{random_matrix(12, 3, rng_a), false};
  DataMatrix y{random_matrix(12, 2, rng_a), false};
  RngStream draw_a(99), draw_b(99);
  const auto first = resample_rows(x, y, draw_a);
  const auto second = resample_rows(x, y, draw_b);
  CHECK(max_abs_diff(first.first.values, second.first.values) == 0.0);
  CHECK(max_abs_diff(first.second.values, second.second.values) == 0.0);
}

TEST_CASE("resample_rows: indices are uniform over rows") {
  const Eigen::Index n = 10;
  DataMatrix x, y;
  x.values.resize(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) x.values(i, 0) = i;
  y.values = x.values;
  RngStream rng(2024);
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(n);
  const int resamples = 10000;
  for (int r = 0; r < resamples; ++r) {
    const auto [xs, ys] = resample_rows(x, y, rng);
    for (Eigen::Index i = 0; i < n; ++i)
      counts(static_cast<Eigen::Index>(xs.values(i, 0))) += 1.0;
    // Pairing preserved on every draw.
    CHECK(max_abs_diff(xs.values, ys.values) == 0.0);
  }
  counts /= static_cast<double>(resamples) * n;
  for (Eigen::Index i = 0; i < n; ++i)
    CHECK(counts(i) == doctest::Approx(0.1).epsilon(0.1));  // 0.1 +- 0.01
}

TEST_CASE("percentile_interval: declared interpolation rule") {
  std::vector<double> constant(5, 4.2);
  auto bounds = percentile_interval(constant, 0.05);
  CHECK(bounds.first == 4.2);
  CHECK(bounds.second == 4.2);

  std::vector<double> ascending(100);
  for (int i = 0; i < 100; ++i) ascending[static_cast<std::size_t>(i)] = i + 1;
  bounds = percentile_interval(ascending, 0.05);
  CHECK(bounds.first == doctest::Approx(3.475).epsilon(1e-12));
  CHECK(bounds.second == doctest::Approx(97.525).epsilon(1e-12));

  // alpha = 1 collapses to the median.
  bounds = percentile_interval(ascending, 1.0);
  CHECK(bounds.first == doctest::Approx(50.5).epsilon(1e-12));
  CHECK(bounds.second == doctest::Approx(50.5).epsilon(1e-12));
}

TEST_CASE("percentile_interval matches the interpolation oracle") {
  RngStream rng(111);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t m = 2 + rng.next_below(40);
    std::vector<double> samples(m);
    for (auto& v : samples) v = rng.next_gaussian();
    const double alpha = 0.01 + 0.98 * rng.next_double();
    const auto bounds = percentile_interval(samples, alpha);
    CHECK(bounds.first ==
          doctest::Approx(interpolation_quantile_oracle(samples, alpha / 2))
              .epsilon(1e-12));
    CHECK(bounds.second ==
          doctest::Approx(
              interpolation_quantile_oracle(samples, 1.0 - alpha / 2))
              .epsilon(1e-12));
  }
}

TEST_CASE("percentile_interval: sign-flip equivariance") {
  RngStream rng(113);
  std::vector<double> samples(31);
  for (auto& v : samples) v = rng.next_gaussian();
  std::vector<double> negated(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) negated[i] = -samples[i];
  const auto bounds = percentile_interval(samples, 0.1);
  const auto flipped = percentile_interval(negated, 0.1);
  CHECK(flipped.first == -bounds.second);
  CHECK(flipped.second == -bounds.first);
}

TEST_CASE("percentile_interval rejects non-finite samples") {
  std::vector<double> bad{1.0, std::numeric_limits<double>::infinity()};
  CHECK_THROWS_AS(percentile_interval(bad, 0.05), InvalidInputError);
}

TEST_CASE("normal_interval contracts") {
  std::vector<double> flat(10, 2.5);
  auto bounds = normal_interval(7.0, flat, 0.05);
  CHECK(bounds.first == 7.0);
  CHECK(bounds.second == 7.0);

  // Samples with sd exactly 1: {-1, -1, 1, 1} has variance 4/3... use a
  // two-point sample {-1, 1}: mean 0, variance 2, sd sqrt(2). Instead pin
  // the sd via a direct construction: {0, 2} has sd sqrt(2). Use the
  // standard-normal quantile against a unit-sd sample {a, a+sqrt(2)}? The
  // divisor m-1 makes {0, sqrt(2)} have sd 1.
  std::vector<double> unit{0.0, std::sqrt(2.0)};
  bounds = normal_interval(0.0, unit, 0.05);
  CHECK(bounds.second == doctest::Approx(1.95996).epsilon(1e-5));
  CHECK(bounds.first == doctest::Approx(-1.95996).epsilon(1e-5));

  // Midpoint is always the point estimate.
  RngStream rng(127);
  std::vector<double> samples(25);
  for (auto& v : samples) v = rng.next_gaussian();
  bounds = normal_interval(3.25, samples, 0.2);
  CHECK((bounds.first + bounds.second) / 2.0 ==
        doctest::Approx(3.25).epsilon(1e-12));
}

TEST_CASE("combootcca: smoke shapes and bound ordering") {
  RngStream rng(131);
  DataMatrix x{random_matrix(50, 3, rng), false};
  DataMatrix y{random_matrix(50, 3, rng), false};
  BootstrapConfig config;
  config.n_boots = 20;
  config.seed = 9;
  const auto result = combootcca(x, y, config);
  CHECK(result.b_ci.rows() == 3);
  CHECK(result.b_ci.cols() == 3);
  CHECK(result.gamma_ci.rows() == 3);
  CHECK((result.b_ci.lower.array() <= result.b_ci.upper.array()).all());
  CHECK((result.gamma_ci.lower.array() <= result.gamma_ci.upper.array()).all());
  CHECK(max_abs_diff(result.b_ci.point, result.reference.b) == 0.0);
}

TEST_CASE("combootcca: identical seed gives bit-identical tables") {
  RngStream rng(137);
  DataMatrix x{random_matrix(40, 2, rng), false};
  DataMatrix y{random_matrix(40, 2, rng), false};
  BootstrapConfig config;
  config.n_boots = 30;
  config.seed = 101;
  const auto first = combootcca(x, y, config);
  const auto second = combootcca(x, y, config);
  CHECK(max_abs_diff(first.b_ci.lower, second.b_ci.lower) == 0.0);
  CHECK(max_abs_diff(first.b_ci.upper, second.b_ci.upper) == 0.0);
  CHECK(max_abs_diff(first.gamma_ci.lower, second.gamma_ci.lower) == 0.0);
  CHECK(max_abs_diff(first.gamma_ci.upper, second.gamma_ci.upper) == 0.0);
}

TEST_CASE("combootcca: worker count does not change the result") {
  RngStream rng(139);
  DataMatrix x{random_matrix(45, 3, rng), false};
  DataMatrix y{random_matrix(45, 2, rng), false};
  BootstrapConfig config;
  config.n_boots = 24;
  config.seed = 4242;
  const auto serial = combootcca(x, y, config, 1);
  const auto parallel = combootcca(x, y, config, 4);
  CHECK(max_abs_diff(serial.store.b_draws, parallel.store.b_draws) == 0.0);
  CHECK(max_abs_diff(serial.b_ci.lower, parallel.b_ci.lower) == 0.0);
  CHECK(max_abs_diff(serial.b_ci.upper, parallel.b_ci.upper) == 0.0);
}

TEST_CASE("combootcca: normal intervals are symmetric about the point") {
  RngStream rng(149);
  DataMatrix x{random_matrix(60, 2, rng), false};
  DataMatrix y{random_matrix(60, 2, rng), false};
  BootstrapConfig config;
  config.n_boots = 50;
  config.seed = 7;
  config.interval = IntervalKind::kNormal;
  const auto result = combootcca(x, y, config);
  const Eigen::MatrixXd above = result.b_ci.upper - result.b_ci.point;
  const Eigen::MatrixXd below = result.b_ci.point - result.b_ci.lower;
  CHECK(max_abs_diff(above, below) < 1e-12);
}

TEST_CASE("combootcca: redraw exhaustion raises") {
  // Three generic rows: most resamples repeat a row, which is rank
  // deficient at p = 2, so max_redraws = 0 must fail quickly.
  DataMatrix x, y;
  x.values.resize(3, 2);
  x.values << 0.0, 1.0, 1.0, 0.3, -1.0, 2.0;
  y.values = x.values;
  BootstrapConfig config;
  config.n_boots = 40;
  config.seed = 3;
  config.max_redraws = 0;
  CHECK_THROWS_AS(combootcca(x, y, config), RankDeficiencyError);
  // The failure must also surface across worker threads.
  CHECK_THROWS_AS(combootcca(x, y, config, 3), RankDeficiencyError);
  // With redraws allowed the same run goes through.
  config.max_redraws = 200;
  CHECK_NOTHROW(combootcca(x, y, config));
}

TEST_CASE("combootcca: identity vs sign-flip agree when K = 1 and rho is high") {
  // With rho ~ 0.95 and N = 1000, sign flips are rare, so identity and
  // sign-flip alignment produce (almost) the same intervals.
  RngStream rng(151);
  DataMatrix x, y;
  x.values.resize(1000, 1);
  y.values.resize(1000, 1);
  for (Eigen::Index i = 0; i < 1000; ++i) {
    const double signal = rng.next_gaussian();
    x.values(i, 0) = signal;
    y.values(i, 0) = 0.95 * signal +
                     std::sqrt(1.0 - 0.95 * 0.95) * rng.next_gaussian();
  }

  BootstrapConfig config;
  config.n_boots = 200;
  config.seed = 77;
  config.strategy = AlignmentStrategy::kIdentity;
  const auto identity_run = combootcca(x, y, config);
  config.strategy = AlignmentStrategy::kSignFlip;
  const auto signflip_run = combootcca(x, y, config);

  int agreements = 0, total = 0;
  auto tally = [&](const CiTable& a, const CiTable& b) {
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      for (Eigen::Index j = 0; j < a.cols(); ++j) {
        ++total;
        if (std::abs(a.lower(i, j) - b.lower(i, j)) < 1e-9 &&
            std::abs(a.upper(i, j) - b.upper(i, j)) < 1e-9)
          ++agreements;
      }
  };
  tally(identity_run.b_ci, signflip_run.b_ci);
  tally(identity_run.gamma_ci, signflip_run.gamma_ci);
  CHECK(static_cast<double>(agreements) >= 0.9 * total);
}

TEST_CASE("combootcca handles the high-dimensional design shape (p = 100, "
          "q = 10)") {
  SimDesign design;
  design.kind = "sim1";
  design.p = 100;
  design.q = 10;
  design.n = 1000;
  design.rho = Eigen::VectorXd::Constant(1, 0.9);
  design.regime = Regime::kSparse;
  design.covariance = CovarianceKind::kSparsePrecision;
  const auto truth = build_sim1_truth(design);
  RngStream rng(157);
  const auto [x, y] = sample_mvn(truth.model, design.n, rng);

  BootstrapConfig config;
  config.n_boots = 100;
  config.seed = 21;
  const auto fit = combootcca(x, y, config);
  CHECK(fit.b_ci.rows() == 100);
  CHECK(fit.b_ci.cols() == 10);
  CHECK(fit.gamma_ci.rows() == 10);
  CHECK((fit.b_ci.lower.array() <= fit.b_ci.upper.array()).all());
  const auto coverage =
      coverage_with_sign_maximization(fit.b_ci, fit.gamma_ci, truth);
  CHECK(coverage.covered.size() == truth.monitored.size());
}

TEST_CASE("config validation") {
  BootstrapConfig config;
  config.n_boots = 1;
  CHECK_THROWS_AS(config.validate(), InvalidInputError);
  config.n_boots = 10;
  config.alpha = 0.0;
  CHECK_THROWS_AS(config.validate(), InvalidInputError);
}

TEST_SUITE_END();
