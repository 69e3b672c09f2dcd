#pragma once

// Acceptance suite: every criterion runs at its pinned size and tolerance and
// yields one PASS/FAIL line. Used by the acceptance test binary and by
// `rftool validate`.
//
// The report text contains no timings, so a fixed seed gives byte-identical
// output regardless of thread count.

#include <boost/math/distributions/fisher_f.hpp>

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "rft/grid_field.hpp"
#include "rft/inference.hpp"
#include "rft/montecarlo.hpp"
#include "rft/smoothing.hpp"
#include "rft/topology.hpp"

namespace rft::acceptance {

struct SuiteOptions {
  bool full = true;
  std::uint64_t seed = 12345;
  unsigned threads = 1;
  /// Multiplies the smoothness used on the theory side of the mean-EC
  /// comparison. Anything but 1 is a negative control.
  double lambda_scale = 1.0;
};

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
};

namespace detail {

inline std::string fmt(const char* format, ...) {
  char buf[1024];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof buf, format, args);
  va_end(args);
  return buf;
}

inline constexpr double kFwhm = 10.0;
inline constexpr double kLambda100 = 0.0277259;  // 4 ln 2 / 10^2, rounded as quoted

/// The null 100x100, delta = 1, FWHM 10 configuration: interior-cropped noise
/// so the field is stationary, scaled by its exact standard deviation.
inline SimConfig null_config(const SuiteOptions& o, std::size_t replicates, std::vector<double> thresholds) {
  SimConfig c;
  c.grid = Grid({100, 100}, 1.0);
  c.fwhm = kFwhm;
  c.sigma_w = 1.0;
  c.n_replicates = replicates;
  c.thresholds = std::move(thresholds);
  c.base_seed = {o.seed, 0};
  c.standardization = Standardization::Theoretical;
  c.interior_crop = true;
  c.threads = o.threads;
  return c;
}

inline IntrinsicVolumes null_volumes() { return lattice_intrinsic_volumes(BinaryMask(Grid({100, 100}, 1.0), true), 1.0); }

inline double rft_h_star() { return rft_threshold(null_volumes(), FieldSpec::gaussian(kLambda100), 0.05).h; }

inline CriterionResult bonferroni_reproduction() {
  const double h1 = bonferroni_threshold(0.05, 1).h;
  const double h2 = bonferroni_threshold(0.05, 10000).h;
  const bool ok = std::abs(h1 - 1.6449) <= 5e-4 && std::abs(h2 - 4.4172) <= 5e-4;
  return {1, "bonferroni-reproduction", ok, fmt("h(0.05,1)=%.6f h(0.05,10000)=%.6f tol=5e-4", h1, h2)};
}

inline CriterionResult false_positive_rate(const SuiteOptions& o) {
  const Grid grid({100, 100}, 1.0);
  double total = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const ScalarField y = white_noise(grid, 1.0, {o.seed + 2, s});
    std::size_t above = 0;
    for (double v : y.values()) above += v > 1.64;
    total += static_cast<double>(above) / static_cast<double>(grid.size());
  }
  const double frac = total / 20.0;
  return {2, "false-positive-rate", frac >= 0.043 && frac <= 0.057,
          fmt("mean fraction above 1.64 over 20 seeds = %.5f, band [0.043, 0.057]", frac)};
}

inline CriterionResult topology_oracles(const SuiteOptions& o) {
  bool ok = true;
  std::string notes;

  BinaryMask rect(Grid({20, 30}, 1.0));
  for (std::size_t i = 3; i < 15; ++i)
    for (std::size_t j = 4; j < 25; ++j) rect.bits[i * 30 + j] = 1;
  const long long chi_rect = euler_characteristic(rect);

  const ScalarField key = key_signal(Grid({60, 37}, 1.0));
  const long long chi_key = euler_characteristic(excursion_set(key, 0.5));

  BinaryMask blocks(Grid({20, 20}, 1.0));
  for (std::size_t i : {2u, 3u})
    for (std::size_t j : {2u, 3u}) blocks.bits[i * 20 + j] = 1;
  for (std::size_t i : {10u, 11u})
    for (std::size_t j : {12u, 13u}) blocks.bits[i * 20 + j] = 1;
  const long long chi_blocks = euler_characteristic(blocks);
  ok = ok && chi_rect == 1 && chi_key == 0 && chi_blocks == 2;
  notes += fmt("chi(rect)=%lld chi(key)=%lld chi(two blocks)=%lld", chi_rect, chi_key, chi_blocks);

  std::mt19937_64 rng(o.seed + 3);
  std::uniform_int_distribution<std::size_t> side(1, 40);
  std::uniform_real_distribution<double> spacing(0.25, 3.0);
  double worst = 0.0;
  for (int k = 0; k < 5; ++k) {
    const std::size_t a = side(rng), b = side(rng);
    const double delta = spacing(rng);
    const auto iv = lattice_intrinsic_volumes(BinaryMask(Grid({a, b}, delta), true), delta);
    const double want[] = {1.0, (static_cast<double>(a) + static_cast<double>(b)) * delta,
                           static_cast<double>(a * b) * delta * delta};
    for (int d = 0; d < 3; ++d) worst = std::max(worst, std::abs(iv.mu[d] - want[d]) / std::max(1.0, std::abs(want[d])));
  }
  ok = ok && worst <= 1e-12;
  notes += fmt("; rectangle volumes max rel err=%.1e", worst);

  const auto ball = closed_form_intrinsic_volumes(Ball{1.0});
  const auto box = closed_form_intrinsic_volumes(Box{{1.0, 1.0, 1.0}});
  const double ball_want[] = {1.0, 4.0, 2.0 * std::numbers::pi, 4.0 * std::numbers::pi / 3.0};
  const double box_want[] = {1.0, 3.0, 3.0, 1.0};
  double closed = 0.0;
  for (int d = 0; d < 4; ++d)
    closed = std::max({closed, std::abs(ball.mu[d] - ball_want[d]), std::abs(box.mu[d] - box_want[d])});
  ok = ok && closed <= 1e-12;
  notes += fmt("; ball/box max abs err=%.1e", closed);
  return {3, "topology-oracles", ok, notes};
}

inline CriterionResult ec_density_identities() {
  const FieldSpec g = FieldSpec::gaussian(0.3);
  const FieldSpec g2 = FieldSpec::gaussian(0.6);
  bool ok = ec_density(g, 0, 0.0) == 0.5 && ec_density(g, 2, 0.0) == 0.0 && ec_density(g, 3, 1.0) == 0.0;
  double scaling = 0.0;
  for (std::size_t d = 1; d <= 3; ++d)
    for (double h : {-1.5, 0.5, 2.5, 4.0}) {
      const double ratio = ec_density(g2, d, h) / ec_density(g, d, h);
      scaling = std::max(scaling, std::abs(ratio / std::pow(2.0, 0.5 * static_cast<double>(d)) - 1.0));
    }
  ok = ok && scaling <= 1e-12;

  double f_err = 0.0;
  for (auto [a, b] : {std::pair{3, 20}, std::pair{5, 30}})
    for (double h : {1.0, 2.0, 4.0}) {
      const double oracle = boost::math::cdf(boost::math::complement(boost::math::fisher_f(a, b), h));
      f_err = std::max(f_err, std::abs(ec_density(FieldSpec::f(a, b, 1.0), 0, h) - oracle));
    }
  ok = ok && f_err <= 1e-8;
  return {4, "ec-density-identities", ok,
          fmt("rho0(0)=%.17g rho2(0)=%g rho3(1)=%g; lambda scaling max rel err=%.1e; F rho0 vs incomplete-beta max err=%.1e",
              ec_density(g, 0, 0.0), ec_density(g, 2, 0.0), ec_density(g, 3, 1.0), scaling, f_err)};
}

inline std::vector<CriterionResult> ec_and_fwer(const SuiteOptions& o) {
  const double h_star = rft_h_star();
  std::vector<double> thresholds = {2.0, 2.5, 3.0, 3.5, h_star};
  const ReplicateSummary s = run_replicates(null_config(o, 2000, thresholds));
  const IntrinsicVolumes iv = null_volumes();
  const FieldSpec theory = FieldSpec::gaussian(kLambda100 * o.lambda_scale);

  bool ok5 = true;
  std::string d5 = fmt("mu=(%g,%g,%g)", iv.mu[0], iv.mu[1], iv.mu[2]);
  for (std::size_t t = 0; t < 4; ++t) {
    const double expected = expected_ec(iv, theory, thresholds[t]);
    const double z = (s.mean_ec[t] - expected) / s.stderr_ec[t];
    ok5 = ok5 && std::abs(z) <= 3.0;
    d5 += fmt("; h=%.1f mean=%.4f se=%.4f expected=%.4f z=%+.2f", thresholds[t], s.mean_ec[t], s.stderr_ec[t], expected, z);
  }
  // For reference only: the pixel centres span (n - 1) delta per side.
  const IntrinsicVolumes centres{{1.0, 198.0, 9801.0}};
  d5 += "; [info, mu=(1,198,9801)]";
  for (std::size_t t = 0; t < 4; ++t)
    d5 += fmt(" z(%.1f)=%+.2f", thresholds[t],
              (s.mean_ec[t] - expected_ec(centres, theory, thresholds[t])) / s.stderr_ec[t]);
  const double fwer = s.empirical_fwer[4];
  return {{5, "expected-ec-vs-monte-carlo", ok5, d5},
          {6, "fwer-calibration", fwer >= 0.03 && fwer <= 0.07,
           fmt("h*=%.4f empirical FWER=%.4f over 2000 replicates, band [0.03, 0.07]", h_star, fwer)}};
}

inline CriterionResult threshold_ordering() {
  const double pointwise = bonferroni_threshold(0.05, 1).h;
  const double bonf = bonferroni_threshold(0.05, 10000).h;
  const double h = rft_h_star();
  const bool ok = pointwise < h && h < bonf && std::abs(h - 3.81) <= 0.05;
  return {7, "threshold-ordering", ok, fmt("%.4f < h*=%.4f < %.4f, |h*-3.81|<=0.05", pointwise, h, bonf)};
}

inline CriterionResult smoothness_recovery(const SuiteOptions& o) {
  const SimConfig c = null_config(o, 50, {});
  std::vector<ScalarField> fields(50, ScalarField(c.grid));
  parallel_for(50, o.threads, [&](std::size_t r) { fields[r] = simulate_field(c, r).field; });
  const double lam = estimate_lambda(fields, 1.0);
  const double target = 4.0 * std::numbers::ln2 / 100.0;
  const double rel = std::abs(lam / target - 1.0);
  return {8, "smoothness-recovery", rel <= 0.15,
          fmt("lambda-hat=%.6f target=%.6f rel err=%.4f (tol 0.15)", lam, target, rel)};
}

inline CriterionResult rice_formula(const SuiteOptions& o) {
  constexpr std::size_t length = 4000, paths = 5000;
  SimConfig c;
  c.grid = Grid({length}, 1.0);
  c.fwhm = 20.0;
  c.sigma_w = 1.0;
  c.n_replicates = paths;
  c.base_seed = {o.seed + 9, 0};
  c.standardization = Standardization::Theoretical;
  c.interior_crop = true;
  c.threads = o.threads;

  const auto [r0, r2] = smoothed_noise_moments(c.kernel(), c.sigma_w, 1.0);
  const RiceInputs in{1.0, r2 / r0};  // after scaling to unit variance
  const double levels[] = {1.0, 2.0};
  std::vector<std::array<double, 2>> counts(paths);
  parallel_for(paths, o.threads, [&](std::size_t r) {
    const ScalarField y = simulate_field(c, r).field;
    for (int k = 0; k < 2; ++k) counts[r][k] = static_cast<double>(count_upcrossings(y, levels[k]));
  });

  bool ok = true;
  std::string detail = fmt("-R''(0)/R(0)=%.6f", in.r2);
  for (int k = 0; k < 2; ++k) {
    std::vector<double> col(paths);
    for (std::size_t r = 0; r < paths; ++r) col[r] = counts[r][k];
    const double mean = sample_mean(col);
    const double se = std::sqrt(sample_variance(col) / static_cast<double>(paths));
    const double span = static_cast<double>(length - 1);
    const double expected = span * rice_expected_upcrossings(in, levels[k]);
    // The 1/pi prefactor with a growing exponential, for contrast.
    const double alternative = span * std::sqrt(in.r2) / std::numbers::pi * std::exp(levels[k] * levels[k] / 2.0);
    const double z = (mean - expected) / se;
    ok = ok && std::abs(z) <= 3.0;
    detail += fmt("; h=%.0f mean=%.4f se=%.4f rice=%.4f z=%+.2f (1/pi,+exp form=%.2f)", levels[k], mean, se, expected,
                  z, alternative);
  }
  return {9, "rice-formula", ok, detail};
}

inline CriterionResult integral_variance(const SuiteOptions& o) {
  SimConfig c;
  c.grid = Grid({50, 50}, 1.0);
  c.fwhm = 5.0;
  c.sigma_w = 1.0;
  c.n_replicates = 2000;
  c.base_seed = {o.seed + 10, 0};
  c.threads = o.threads;
  const IntegralVariance v = integral_variance_check(c);
  const double ratio = v.empirical / v.theoretical;
  return {10, "integral-variance", ratio >= 0.85 && ratio <= 1.15,
          fmt("empirical=%.3f theoretical=%.3f ratio=%.4f band [0.85, 1.15]", v.empirical, v.theoretical, ratio)};
}

/// 60x37 key stand-in plus unit white noise, FWHM 10, 50 replicates,
/// thresholds -1:0.1:1, no cropping or standardization.
inline CriterionResult fig4_shape(const SuiteOptions& o) {
  SimConfig c;
  c.grid = Grid({60, 37}, 1.0);
  c.fwhm = kFwhm;
  c.sigma_w = 1.0;
  c.n_replicates = 50;
  for (int k = 0; k <= 20; ++k) c.thresholds.push_back(-1.0 + 0.1 * k);
  c.base_seed = {o.seed + 11, 0};
  c.signal = key_signal(c.grid);
  c.threads = o.threads;
  const ReplicateSummary s = run_replicates(c);

  const std::size_t low = 5, mid = 15;  // h = -0.5 and h = 0.5
  const double object_chi = 0.0;
  const bool low_ok = std::abs(s.mean_ec[low] - object_chi) <= 3.0 * s.stderr_ec[low];

  const double top = std::max(1.0, *std::max_element(s.sup_values.begin(), s.sup_values.end())) + 0.1;
  std::vector<double> top_ec(c.n_replicates);
  parallel_for(c.n_replicates, o.threads,
               [&](std::size_t r) { top_ec[r] = static_cast<double>(excursion_ec(simulate_field(c, r).field, top)); });
  const double top_mean = sample_mean(top_ec);
  const bool ok = low_ok && top_mean == 0.0;
  return {11, "fig4-shape", ok,
          fmt("mean EC at h=-0.5: %.4f (se %.4f, object chi %.0f); at h=0.5: %.4f (se %.4f); at h=%.4f above every "
              "sup: %.4f",
              s.mean_ec[low], s.stderr_ec[low], object_chi, s.mean_ec[mid], s.stderr_ec[mid], top, top_mean)};
}

}  // namespace detail

inline std::string format_line(const CriterionResult& r) {
  return detail::fmt("%s [%02d] %s: ", r.pass ? "PASS" : "FAIL", r.id, r.name.c_str()) + r.detail;
}

inline std::string format_report(const std::vector<CriterionResult>& results) {
  std::string out;
  std::size_t passed = 0;
  for (const auto& r : results) {
    out += format_line(r) + "\n";
    passed += r.pass;
  }
  out += detail::fmt("%zu/%zu criteria passed\n", passed, results.size());
  return out;
}

/// The quick suite skips the large Monte Carlo criteria (5, 6, 9) and the
/// determinism check, which itself reruns the quick suite.
inline std::vector<CriterionResult> run_suite(const SuiteOptions& o,
                                              const std::function<void(const CriterionResult&)>& on_result = {}) {
  std::vector<CriterionResult> out;
  auto add = [&](CriterionResult r) {
    if (on_result) on_result(r);
    out.push_back(std::move(r));
  };
  add(detail::bonferroni_reproduction());
  add(detail::false_positive_rate(o));
  add(detail::topology_oracles(o));
  add(detail::ec_density_identities());
  if (o.full)
    for (auto& r : detail::ec_and_fwer(o)) add(std::move(r));
  add(detail::threshold_ordering());
  add(detail::smoothness_recovery(o));
  if (o.full) add(detail::rice_formula(o));
  add(detail::integral_variance(o));
  add(detail::fig4_shape(o));

  if (o.full) {
    SuiteOptions q = o;
    q.full = false;
    q.threads = 1;
    const std::string first = format_report(run_suite(q));
    const std::string second = format_report(run_suite(q));
    q.threads = std::max(4u, std::thread::hardware_concurrency());
    const std::string threaded = format_report(run_suite(q));
    const bool ok = first == second && first == threaded;
    add({12, "determinism", ok,
         detail::fmt("quick suite reports identical across two 1-thread runs and a %u-thread run: %s", q.threads,
                     ok ? "yes" : "no")});
  }
  return out;
}

inline bool all_passed(const std::vector<CriterionResult>& results) {
  return std::all_of(results.begin(), results.end(), [](const CriterionResult& r) { return r.pass; });
}

}  // namespace rft::acceptance
