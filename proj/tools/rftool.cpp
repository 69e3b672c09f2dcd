// rftool: simulate smooth random fields, compute EC curves, solve
// familywise-error thresholds and run the acceptance suites.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "rft/acceptance.hpp"
#include "rft/error.hpp"
#include "rft/grid_field.hpp"
#include "rft/inference.hpp"
#include "rft/io.hpp"
#include "rft/montecarlo.hpp"
#include "rft/smoothing.hpp"
#include "rft/topology.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitRegime = 2;
constexpr int kExitUsage = 64;

int exit_code_for(const rft::Error& e) {
  switch (e.code()) {
    case rft::ErrorCode::RegimeViolation: return kExitRegime;
    case rft::ErrorCode::InvalidParameter:
    case rft::ErrorCode::UnsupportedDimension:
    case rft::ErrorCode::UnsupportedCombination: return kExitUsage;
    case rft::ErrorCode::NoExcursions:
    case rft::ErrorCode::Io: return kExitFailure;
  }
  return kExitFailure;
}

struct SimulateArgs {
  std::string dims;
  double delta = 1.0;
  double fwhm = 0.0;
  double sigma_w = 1.0;
  std::uint64_t seed = 0;
  std::string signal = "none";
  unsigned iterations = 1;
  std::string out;
};

int cmd_simulate(const SimulateArgs& a) {
  const rft::Grid grid(rft::io::parse_dims(a.dims), a.delta);
  rft::detail::require_param(a.fwhm >= 0.0, "--fwhm must be >= 0");
  rft::ScalarField y = rft::white_noise(grid, a.sigma_w, {a.seed, 0});
  if (const auto signal = rft::io::make_signal(a.signal, grid))
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += (*signal)[i];
  if (a.fwhm > 0.0) {
    const rft::Kernel1D kernel = rft::gaussian_kernel_1d(rft::SmoothnessParams::from_fwhm(a.fwhm), a.delta);
    for (unsigned k = 0; k < a.iterations; ++k) y = rft::smooth(y, kernel);
  }
  rft::io::save_rfgrid(a.out, y);
  return kExitOk;
}

struct ThresholdArgs {
  std::string mask;
  double ball = 0.0;
  std::string box;
  std::string family = "gaussian";
  std::string df;
  double fwhm = 0.0;
  double lambda = 0.0;
  double alpha = 0.05;
  std::string method = "ec";
  std::size_t n_tests = 0;
  double mean_clump = 0.0;
  double delta = 1.0;
};

rft::IntrinsicVolumes region_volumes(const ThresholdArgs& a) {
  const int given = !a.mask.empty() + (a.ball > 0.0) + !a.box.empty();
  rft::detail::require_param(given == 1, "give exactly one of --mask, --ball, --box");
  if (!a.mask.empty()) {
    const rft::ScalarField f = rft::io::load_rfgrid(a.mask);
    return rft::lattice_intrinsic_volumes(rft::io::mask_from_field(f), f.grid().delta());
  }
  if (a.ball > 0.0) return rft::closed_form_intrinsic_volumes(rft::Ball{a.ball});
  std::vector<double> sides = rft::io::parse_double_list(a.box);
  for (double& s : sides) s *= a.delta;
  return rft::closed_form_intrinsic_volumes(rft::Box{sides});
}

std::optional<double> smoothness(const ThresholdArgs& a) {
  rft::detail::require_param(!(a.fwhm > 0.0 && a.lambda > 0.0), "give --fwhm or --lambda, not both");
  if (a.fwhm > 0.0) return rft::SmoothnessParams::from_fwhm(a.fwhm).lambda;
  if (a.lambda > 0.0) return a.lambda;
  return std::nullopt;
}

rft::FieldSpec field_spec(const ThresholdArgs& a, double lambda) {
  if (a.family == "gaussian") return rft::FieldSpec::gaussian(lambda);
  rft::detail::require_param(a.family == "f", "--family must be gaussian or f");
  const auto df = rft::io::parse_double_list(a.df);
  rft::detail::require_param(df.size() == 2 && df[0] >= 1 && df[1] >= 1 && df[0] == static_cast<int>(df[0]) &&
                                 df[1] == static_cast<int>(df[1]),
                             "--df needs two positive integers A,B");
  return rft::FieldSpec::f(static_cast<int>(df[0]), static_cast<int>(df[1]), lambda);
}

int cmd_threshold(const ThresholdArgs& a) {
  rft::detail::require_param(a.alpha > 0.0 && a.alpha < 1.0, "--alpha must be in (0,1)");
  rft::ThresholdResult r;
  std::optional<rft::IntrinsicVolumes> iv;
  std::optional<double> lambda;

  if (a.method == "bonferroni") {
    rft::detail::require_param(a.n_tests >= 1, "--method bonferroni needs --n-tests");
    r = rft::bonferroni_threshold(a.alpha, a.n_tests);
  } else if (a.method == "ec") {
    iv = region_volumes(a);
    lambda = smoothness(a);
    rft::detail::require_param(lambda.has_value(), "--method ec needs --fwhm or --lambda");
    r = rft::rft_threshold(*iv, field_spec(a, *lambda), a.alpha);
  } else if (a.method == "clump") {
    rft::detail::require_param(a.mean_clump > 0.0, "--method clump needs --mean-clump");
    iv = region_volumes(a);
    lambda = smoothness(a);
    const double volume = iv->mu.back();
    r = rft::poisson_clump_threshold(volume, a.mean_clump, field_spec(a, lambda.value_or(1.0)), a.alpha);
  } else {
    throw rft::Error(rft::ErrorCode::InvalidParameter, "--method must be ec, bonferroni or clump");
  }

  std::ostringstream os;
  os << "method=" << rft::to_string(r.method) << '\n';
  os << "h=" << rft::io::format_double(r.h, 10) << '\n';
  os << "alpha_achieved=" << rft::io::format_double(r.alpha_achieved, 10) << '\n';
  if (iv)
    for (std::size_t d = 0; d < iv->mu.size(); ++d) os << "mu" << d << '=' << rft::io::format_double(iv->mu[d], 10) << '\n';
  if (lambda) os << "lambda=" << rft::io::format_double(*lambda, 10) << '\n';
  std::cout << os.str();
  return kExitOk;
}

int cmd_ec_curve(const std::string& config_path, const std::string& out_path) {
  const rft::SimConfig config = rft::io::load_sim_config(config_path);
  const rft::ReplicateSummary s = rft::run_replicates(config);

  // The expected-EC column assumes a null, unit-variance field on the whole grid.
  std::optional<rft::FieldSpec> theory;
  if (!config.signal && config.fwhm > 0.0 && config.standardization != rft::Standardization::None)
    theory = rft::FieldSpec::gaussian(rft::SmoothnessParams::from_fwhm(config.fwhm).lambda);
  const rft::IntrinsicVolumes iv = rft::grid_intrinsic_volumes(config.grid);

  std::ostringstream os;
  os << "h,mean_ec,expected_ec,stderr_ec\n";
  for (std::size_t t = 0; t < config.thresholds.size(); ++t) {
    const double h = config.thresholds[t];
    os << rft::io::format_double(h, 10) << ',' << rft::io::format_double(s.mean_ec[t], 10) << ','
       << (theory ? rft::io::format_double(rft::expected_ec(iv, *theory, h), 10) : std::string("nan")) << ','
       << rft::io::format_double(s.stderr_ec[t], 10) << '\n';
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw rft::Error(rft::ErrorCode::Io, "cannot write '" + out_path + "'");
  out << os.str();
  if (!out) throw rft::Error(rft::ErrorCode::Io, "write to '" + out_path + "' failed");
  return kExitOk;
}

int cmd_validate(const std::string& suite, std::uint64_t seed, unsigned threads, double lambda_scale) {
  rft::acceptance::SuiteOptions o;
  rft::detail::require_param(suite == "quick" || suite == "full", "--suite must be quick or full");
  o.full = suite == "full";
  o.seed = seed;
  o.threads = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
  o.lambda_scale = lambda_scale;
  if (lambda_scale != 1.0) o.full = true;  // the mean-EC criterion only runs in the full suite
  const auto results = rft::acceptance::run_suite(o, [](const rft::acceptance::CriterionResult& r) {
    std::cout << rft::acceptance::format_line(r) << '\n' << std::flush;
  });
  std::size_t passed = 0;
  for (const auto& r : results) passed += r.pass;
  std::cout << passed << '/' << results.size() << " criteria passed\n";
  return rft::acceptance::all_passed(results) ? kExitOk : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random field theory toolkit: smoothing, Euler characteristic curves and FWER thresholds"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Write a simulated (smoothed) noise field as an rfgrid file");
  simulate->add_option("--dims", sim.dims, "Grid size, e.g. 101,101")->required();
  simulate->add_option("--delta", sim.delta, "Lattice spacing")->capture_default_str();
  simulate->add_option("--fwhm", sim.fwhm, "Kernel FWHM; 0 writes raw white noise")->capture_default_str();
  simulate->add_option("--sigma-w", sim.sigma_w, "White-noise standard deviation")->capture_default_str();
  simulate->add_option("--seed", sim.seed, "Random seed")->capture_default_str();
  simulate->add_option("--signal", sim.signal, "none | cos | coskey | key | file:PATH")->capture_default_str();
  simulate->add_option("--iterations", sim.iterations, "Number of repeated smoothing passes")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  simulate->add_option("--out", sim.out, "Output rfgrid path")->required();

  ThresholdArgs thr;
  auto* threshold = app.add_subcommand("threshold", "Solve a familywise-error threshold");
  threshold->add_option("--mask", thr.mask, "Region of interest as a 0/1 rfgrid file");
  threshold->add_option("--ball", thr.ball, "Search region: ball of radius R");
  threshold->add_option("--box", thr.box, "Search region: box A,B or A,B,C (in cells, scaled by --delta)");
  threshold->add_option("--family", thr.family, "gaussian | f")->capture_default_str();
  threshold->add_option("--df", thr.df, "Degrees of freedom A,B for --family f");
  threshold->add_option("--fwhm", thr.fwhm, "Kernel FWHM");
  threshold->add_option("--lambda", thr.lambda, "Smoothness parameter lambda");
  threshold->add_option("--alpha", thr.alpha, "Familywise error rate")->capture_default_str();
  threshold->add_option("--method", thr.method, "ec | bonferroni | clump")->capture_default_str();
  threshold->add_option("--n-tests", thr.n_tests, "Number of tests for --method bonferroni");
  threshold->add_option("--mean-clump", thr.mean_clump, "Mean clump measure for --method clump");
  threshold->add_option("--delta", thr.delta, "Lattice spacing for --box")->capture_default_str();

  std::string config_path, csv_path;
  auto* ec_curve = app.add_subcommand("ec-curve", "Monte Carlo mean Euler characteristic curve as CSV");
  ec_curve->add_option("--config", config_path, "key = value simulation config")->required();
  ec_curve->add_option("--out", csv_path, "Output CSV path")->required();

  std::string suite = "quick";
  std::uint64_t seed = 12345;
  unsigned threads = 0;
  double lambda_scale = 1.0;
  auto* validate = app.add_subcommand("validate", "Run the acceptance criteria");
  validate->add_option("--suite", suite, "quick | full")->capture_default_str();
  validate->add_option("--seed", seed, "Base seed")->capture_default_str();
  validate->add_option("--threads", threads, "Worker threads (0 = hardware concurrency)")->capture_default_str();
  validate->add_option("--inject-lambda-scale", lambda_scale)->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(sim);
    if (threshold->parsed()) return cmd_threshold(thr);
    if (ec_curve->parsed()) return cmd_ec_curve(config_path, csv_path);
    if (validate->parsed()) return cmd_validate(suite, seed, threads, lambda_scale);
  } catch (const rft::Error& e) {
    std::cerr << "rftool: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "rftool: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}
