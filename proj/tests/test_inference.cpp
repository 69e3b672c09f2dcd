#include <catch_amalgamated.hpp>

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <limits>
#include <numbers>

#include "rft/inference.hpp"
#include "rft/montecarlo.hpp"
#include "rft/smoothing.hpp"
#include "rft/topology.hpp"

using namespace rft;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {
const IntrinsicVolumes kSquare{{1.0, 200.0, 10000.0}};
const double kLambda = 0.0277259;
}  // namespace

TEST_CASE("standard normal functions against an independent implementation") {
  const boost::math::normal_distribution<double> n;
  for (double x = -8.0; x <= 8.0; x += 0.125) {
    CHECK_THAT(normal_cdf(x), WithinAbs(boost::math::cdf(n, x), 1e-15));
    CHECK_THAT(normal_sf(x), WithinRel(boost::math::cdf(boost::math::complement(n, x)), 1e-13));
  }
  for (double p : {1e-300, 1e-200, 1e-50, 5e-6, 1e-3, 0.02425, 0.05, 0.3, 0.5, 0.7, 0.95, 0.97575, 0.999, 1 - 1e-12}) {
    CHECK_THAT(normal_quantile(p), WithinAbs(boost::math::quantile(n, p), 1e-10));
  }
  CHECK(normal_quantile(0.5) == 0.0);
}

TEST_CASE("Feller bounds sandwich the normal tail") {
  for (double x = 0.5; x <= 30.0; x += 0.5) {
    const double upper = normal_pdf(x) / x;
    const double lower = (1.0 / x - 1.0 / (x * x * x)) * normal_pdf(x);
    const double tail = normal_sf(x);
    CHECK(tail <= upper);
    CHECK(tail >= lower);
  }
}

TEST_CASE("Gaussian EC densities") {
  const FieldSpec g1 = FieldSpec::gaussian(1.0);
  CHECK(ec_density(g1, 0, 0.0) == 0.5);
  CHECK(ec_density(g1, 2, 0.0) == 0.0);
  CHECK(ec_density(g1, 3, 1.0) == 0.0);
  CHECK_THAT(ec_density(g1, 1, 0.0), WithinAbs(0.159155, 1e-6));
  CHECK_THAT(ec_density(g1, 1, 0.0), WithinRel(1.0 / (2.0 * std::numbers::pi), 1e-15));
  CHECK_THROWS_AS(ec_density(g1, 4, 1.0), Error);

  const FieldSpec g2 = FieldSpec::gaussian(2.0);
  for (std::size_t d = 1; d <= 3; ++d)
    for (double h : {-2.0, 0.3, 1.7, 3.0, 5.0})
      CHECK_THAT(ec_density(g2, d, h) / ec_density(g1, d, h), WithinRel(std::pow(2.0, 0.5 * d), 1e-12));
  for (std::size_t d = 0; d <= 3; ++d) CHECK(std::abs(ec_density(g1, d, 40.0)) < 1e-300);
}

TEST_CASE("F-field EC densities") {
  for (auto [a, b] : {std::pair{3, 20}, std::pair{5, 30}, std::pair{1, 8}, std::pair{2, 2}}) {
    const FieldSpec f = FieldSpec::f(a, b, 0.5);
    const boost::math::fisher_f_distribution<double> dist(a, b);
    for (double h : {0.1, 0.5, 1.0, 2.0, 4.0, 10.0})
      CHECK_THAT(ec_density(f, 0, h), WithinAbs(boost::math::cdf(boost::math::complement(dist, h)), 1e-9));
    CHECK(ec_density(f, 0, 0.0) == 1.0);
  }
  const FieldSpec f = FieldSpec::f(5, 30, 0.5);
  CHECK_THROWS_AS(ec_density(f, 0, -0.1), Error);
  CHECK_THROWS_AS(ec_density(f, 3, 1.0), Error);
  try {
    ec_density(f, 3, 1.0);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnsupportedCombination);
  }
  CHECK_THROWS_AS(ec_density(FieldSpec::f(1, 1, 1.0), 2, 1.0), Error);
  // Lambda scaling holds for the F densities as well.
  const FieldSpec f2 = FieldSpec::f(5, 30, 1.0);
  for (std::size_t d = 1; d <= 2; ++d)
    CHECK_THAT(ec_density(f2, d, 2.0) / ec_density(f, d, 2.0), WithinRel(std::pow(2.0, 0.5 * d), 1e-12));
  // rho_2 changes sign where (beta - 1) u = alpha - 1.
  const double root = (5.0 - 1.0) / (30.0 - 1.0) * 30.0 / 5.0;
  CHECK(ec_density(f, 2, 0.9 * root) < 0.0);
  CHECK(ec_density(f, 2, 1.1 * root) > 0.0);
}

TEST_CASE("expected EC and corrected p-values") {
  const FieldSpec g = FieldSpec::gaussian(kLambda);
  for (double h : {-1.0, 0.0, 1.5, 3.0}) CHECK(expected_ec(IntrinsicVolumes{{1, 0, 0, 0}}, g, h) == normal_sf(h));
  CHECK_THAT(expected_ec(kSquare, g, 3.81), WithinAbs(0.050, 0.002));
  CHECK(expected_ec(kSquare, g, 60.0) == 0.0);
  CHECK_THROWS_AS(expected_ec(IntrinsicVolumes{{1, 2, 3, 4, 5}}, g, 1.0), Error);
  CHECK_THROWS_AS(expected_ec(IntrinsicVolumes{}, g, 1.0), Error);

  CHECK(corrected_pvalue(kSquare, g, 100.0) == 0.0);
  CHECK(corrected_pvalue(kSquare, g, 1.0) == 1.0);
  CHECK_THAT(corrected_pvalue(kSquare, g, 3.81), WithinAbs(0.05, 0.002));
}

TEST_CASE("threshold solver") {
  const FieldSpec g = FieldSpec::gaussian(kLambda);
  CHECK_THAT(rft_threshold(IntrinsicVolumes{{1, 0, 0, 0}}, g, 0.05).h, WithinAbs(1.6449, 1e-4));

  const ThresholdResult r = rft_threshold(kSquare, g, 0.05);
  CHECK_THAT(r.h, WithinAbs(3.81, 0.05));
  CHECK(r.h < 4.4172);
  CHECK(r.method == ThresholdMethod::ExpectedEC);
  CHECK_THAT(r.alpha_achieved, WithinAbs(0.05, 1e-8));
  CHECK_THAT(expected_ec(kSquare, g, r.h), WithinAbs(0.05, 1e-8));

  for (double alpha : {0.001, 0.01, 0.05, 0.1, 0.2})
    CHECK_THAT(corrected_pvalue(kSquare, g, rft_threshold(kSquare, g, alpha).h), WithinAbs(alpha, 1e-6));

  // The expansion reaches 0.5 at h ~ 3.1, still on the decreasing high-h branch.
  const ThresholdResult half = rft_threshold(kSquare, g, 0.5);
  CHECK(half.h > 2.5);
  CHECK_THAT(half.alpha_achieved, WithinAbs(0.5, 1e-8));

  // With no spatial extent the bracket start already sits below alpha.
  try {
    rft_threshold(IntrinsicVolumes{{1, 0, 0, 0}}, g, 0.5);
    FAIL("expected a regime violation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::RegimeViolation);
  }
  CHECK_THROWS_AS(rft_threshold(kSquare, g, 0.0), Error);
  CHECK_THROWS_AS(rft_threshold(kSquare, g, 1.0), Error);

  // 3D ball: the (h^2 - 1) factor makes the expansion rise just above h = 1.
  const auto ball = closed_form_intrinsic_volumes(Ball{30.0});
  const ThresholdResult b = rft_threshold(ball, g, 0.05);
  CHECK_THAT(expected_ec(ball, g, b.h), WithinAbs(0.05, 1e-8));

  // F field on a 2D region.
  const FieldSpec f = FieldSpec::f(5, 30, kLambda);
  const ThresholdResult fr = rft_threshold(kSquare, f, 0.05);
  CHECK(fr.h > 1.0);
  CHECK_THAT(expected_ec(kSquare, f, fr.h), WithinAbs(0.05, 1e-8));
}

TEST_CASE("Bonferroni thresholds") {
  CHECK_THAT(bonferroni_threshold(0.05, 1).h, WithinAbs(1.6449, 5e-5));
  CHECK_THAT(bonferroni_threshold(0.05, 10000).h, WithinAbs(4.4172, 5e-5));
  CHECK_THAT(bonferroni_threshold(0.5, 1).h, WithinAbs(0.0, 1e-15));
  double prev = -1.0;
  for (std::size_t n : {1u, 2u, 10u, 100u, 10000u, 1000000u}) {
    const double h = bonferroni_threshold(0.05, n).h;
    CHECK(h > prev);
    prev = h;
  }
  prev = 1e9;
  for (double a : {0.001, 0.01, 0.05, 0.2, 0.9}) {
    const double h = bonferroni_threshold(a, 100).h;
    CHECK(h < prev);
    prev = h;
  }
  CHECK_THROWS_AS(bonferroni_threshold(0.0, 1), Error);
  CHECK_THROWS_AS(bonferroni_threshold(1.5, 1), Error);
  CHECK_THROWS_AS(bonferroni_threshold(0.05, 0), Error);
  CHECK_THROWS_AS(bonferroni_threshold(1e-300, std::numeric_limits<std::size_t>::max()), Error);
}

TEST_CASE("threshold ordering for the 100x100 FWHM-10 square") {
  const double h = rft_threshold(kSquare, FieldSpec::gaussian(kLambda), 0.05).h;
  CHECK(bonferroni_threshold(0.05, 1).h < h);
  CHECK(h < bonferroni_threshold(0.05, 10000).h);
}

TEST_CASE("Rice upcrossing rate") {
  CHECK(rice_expected_upcrossings({1.0, 0.0}, 0.7) == 0.0);
  CHECK_THAT(rice_expected_upcrossings({1.0, 1.0}, 0.0), WithinAbs(0.159155, 1e-6));
  CHECK(rice_expected_upcrossings({1.0, 1.0}, 2.0) < rice_expected_upcrossings({1.0, 1.0}, 1.0));
  CHECK_THAT(rice_expected_upcrossings({4.0, 2.0}, 2.0),
             WithinRel(std::sqrt(0.5) * std::exp(-0.5) / (2.0 * std::numbers::pi), 1e-15));
  CHECK_THROWS_AS(rice_expected_upcrossings({0.0, 1.0}, 0.0), Error);
}

TEST_CASE("Rice formula against simulated upcrossings") {
  SimConfig c;
  c.grid = Grid({2000});
  c.fwhm = 12.0;
  c.n_replicates = 1500;
  c.base_seed = {404, 0};
  c.standardization = Standardization::Theoretical;
  c.interior_crop = true;
  const auto [r0, r2] = smoothed_noise_moments(c.kernel(), 1.0, 1.0);
  std::vector<double> counts(c.n_replicates);
  for (std::size_t r = 0; r < c.n_replicates; ++r)
    counts[r] = static_cast<double>(count_upcrossings(simulate_field(c, r).field, 1.0));
  const double se = std::sqrt(sample_variance(counts) / static_cast<double>(c.n_replicates));
  const double expected = 1999.0 * rice_expected_upcrossings({1.0, r2 / r0}, 1.0);
  CHECK(std::abs(sample_mean(counts) - expected) <= 3.0 * se);
}

TEST_CASE("Poisson clumping approximation") {
  CHECK(poisson_clump_sup_prob(100.0, 5.0, 0.0) == 1.0);
  CHECK_THAT(poisson_clump_sup_prob(3.0, 3.0, 1.0), WithinAbs(0.367879, 1e-6));
  CHECK_THROWS_AS(poisson_clump_sup_prob(1.0, 0.0, 0.1), Error);
  CHECK_THROWS_AS(poisson_clump_sup_prob(1.0, 1.0, 1.5), Error);

  const FieldSpec g = FieldSpec::gaussian(1.0);
  const ThresholdResult r = poisson_clump_threshold(10000.0, 20.0, g, 0.05);
  CHECK(r.method == ThresholdMethod::PoissonClump);
  CHECK_THAT(r.alpha_achieved, WithinAbs(0.05, 1e-10));
  CHECK_THAT(1.0 - poisson_clump_sup_prob(10000.0, 20.0, normal_sf(r.h)), WithinAbs(0.05, 1e-10));
  const ThresholdResult rf = poisson_clump_threshold(10000.0, 20.0, FieldSpec::f(3, 20, 1.0), 0.05);
  CHECK_THAT(rf.alpha_achieved, WithinAbs(0.05, 1e-8));
  CHECK_THROWS_AS(poisson_clump_threshold(10.0, 1e6, g, 0.05), Error);
}

TEST_CASE("Poisson clumping with a simulated mean clump size tracks the empirical FWER") {
  SimConfig c;
  c.grid = Grid({100, 100});
  c.fwhm = 10.0;
  c.n_replicates = 2000;
  c.base_seed = {2718, 0};
  c.standardization = Standardization::Theoretical;
  c.interior_crop = true;
  c.threads = 2;
  std::vector<ScalarField> fields(c.n_replicates, ScalarField(c.grid));
  parallel_for(c.n_replicates, c.threads, [&](std::size_t r) { fields[r] = simulate_field(c, r).field; });
  std::vector<double> sups(c.n_replicates);
  for (std::size_t r = 0; r < c.n_replicates; ++r) sups[r] = fields[r].max();

  const double h = 2.5;
  const double clump = estimate_mean_clump_size(fields, h, 1.0);
  const double predicted = 1.0 - poisson_clump_sup_prob(10000.0, clump, normal_sf(h));
  const double observed = empirical_fwer(sups, h);
  const double se = std::sqrt(observed * (1.0 - observed) / static_cast<double>(c.n_replicates));
  INFO("predicted " << predicted << " observed " << observed << " se " << se);
  CHECK(std::abs(predicted - observed) <= 3.0 * se);
}
