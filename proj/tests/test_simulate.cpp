#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "pvar/constants.hpp"
#include "pvar/errors.hpp"
#include "pvar/jumps.hpp"
#include "pvar/kernel.hpp"
#include "pvar/quadrature.hpp"
#include "pvar/simulate.hpp"

using namespace pvar;

namespace {

KernelSpec pure_power_spec(double alpha, double c0 = 1.0,
                           G0Mode mode = G0Mode::kEqualG) {
  KernelSpec spec;
  spec.family = KernelFamily::kPurePower;
  spec.alpha = alpha;
  spec.c0 = c0;
  spec.g0_mode = mode;
  return spec;
}

KernelSpec decay_spec(double alpha, double rate,
                      G0Mode mode = G0Mode::kZero) {
  KernelSpec spec;
  spec.family = KernelFamily::kPowerTimesExpDecay;
  spec.alpha = alpha;
  spec.c0 = 1.0;
  spec.decay_rate = rate;
  spec.g0_mode = mode;
  return spec;
}

JumpRecord fixed_record() {
  JumpRecord rec;
  rec.t0 = -2.0;
  rec.t1 = 1.0;
  rec.times = {-1.7, -0.9, -0.3, 0.21, 0.55, 0.83};
  rec.sizes = {0.7, -1.1, 0.4, 1.3, -0.6, 0.9};
  return rec;
}

}  // namespace

TEST_CASE("simulate: compound-Poisson paths are exact jump sums") {
  KernelSpec spec = pure_power_spec(0.25);
  JumpRecord rec = fixed_record();
  SamplePath path = simulate_cp_driven_path(spec, rec, 8);
  REQUIRE(path.n == 8);
  REQUIRE(path.values.size() == 9);
  CHECK(path.values[0] == 0.0);  // stationary increments pin X_0 = 0
  CHECK(path.truncation_error_bound == 0.0);
  CHECK(path.driver.type == "compound_poisson");

  // Independent direct evaluation of X_t = sum_m J_m {g(t-T_m) - g(-T_m)}.
  auto g = [](double t) { return t > 0.0 ? std::pow(t, 0.25) : 0.0; };
  for (int i = 0; i <= 8; ++i) {
    const double t = i / 8.0;
    double want = 0.0;
    for (std::size_t m = 0; m < rec.times.size(); ++m)
      want += rec.sizes[m] * (g(t - rec.times[m]) - g(-rec.times[m]));
    CHECK(path.values[static_cast<std::size_t>(i)] ==
          doctest::Approx(want).epsilon(1e-13));
  }
  // Frozen spot value.
  CHECK(path.values[5] == doctest::Approx(0.739757004350688).epsilon(1e-12));
}

TEST_CASE("simulate: zero-base mode drops the anchoring term") {
  KernelSpec spec = decay_spec(1.5, 1.0, G0Mode::kZero);
  JumpRecord rec = fixed_record();
  SamplePath path = simulate_cp_driven_path(spec, rec, 4);
  for (int i = 0; i <= 4; ++i) {
    const double t = i / 4.0;
    double want = 0.0;
    for (std::size_t m = 0; m < rec.times.size(); ++m)
      want += rec.sizes[m] * g_eval(spec, t - rec.times[m]);
    CHECK(path.values[static_cast<std::size_t>(i)] ==
          doctest::Approx(want).epsilon(1e-13));
  }
}

TEST_CASE("simulate: fractional stable paths are reproducible and anchored") {
  SamplePath path =
      simulate_tangent_lfsm(0.25, 1.5, 1.0, 1.0, 16, SeedStream{42, 0});
  REQUIRE(path.values.size() == 17);
  CHECK(path.values[0] == 0.0);
  CHECK(path.truncation_error_bound < 5e-3);
  CHECK(path.driver.type == "stable");

  // Frozen anchors: the noise layout and every ladder weight feed these.
  CHECK(path.values[8] == doctest::Approx(23.797326420541332).epsilon(1e-10));
  CHECK(path.values[16] == doctest::Approx(46.240696732324928).epsilon(1e-10));

  SamplePath again =
      simulate_tangent_lfsm(0.25, 1.5, 1.0, 1.0, 16, SeedStream{42, 0});
  CHECK(again.values == path.values);
  SamplePath other =
      simulate_tangent_lfsm(0.25, 1.5, 1.0, 1.0, 16, SeedStream{42, 1});
  CHECK(other.values != path.values);
}

TEST_CASE("simulate: fractional engine refuses out-of-domain parameters") {
  KernelSpec spec = pure_power_spec(0.5);
  // alpha < 1 - 1/beta fails at beta = 1.5, alpha = 0.5.
  CHECK_THROWS_AS(
      simulate_stable_driven_path(spec, 1.5, 1.0, 8, SeedStream{1, 0}),
      domain_error);
  // beta <= 1 has no stationary-increments moving average for power kernels.
  CHECK_THROWS_AS(
      simulate_stable_driven_path(pure_power_spec(0.1), 0.9, 1.0, 8,
                                  SeedStream{1, 0}),
      domain_error);
  // Pure power in the zero-base mode is not a stationary model.
  CHECK_THROWS_AS(
      simulate_stable_driven_path(pure_power_spec(0.25, 1.0, G0Mode::kZero),
                                  1.5, 1.0, 8, SeedStream{1, 0}),
      domain_error);
  CHECK_THROWS_AS(
      simulate_stable_driven_path(spec, 2.0, -1.0, 8, SeedStream{1, 0}),
      domain_error);
}

TEST_CASE("simulate: stationary difference process has the exact variance") {
  // At beta = 2 the driver is Gaussian and Var V = 2 int h_k^2 in closed
  // quadrature form -- an independent check of the whole noise pipeline.
  const double alpha = 0.2;
  const int k = 2;
  auto h2 = [&](double x) {
    const double h = h_k(x, alpha, k);
    return h * h;
  };
  QuadResult body = integrate(h2, 0.0, 40.0, 1e-12, 1e-10, 400000);
  QuadResult tail = integrate_tail(h2, 40.0, 1e-12, 1e-10);
  const double want = 2.0 * (body.value + tail.value);

  double s = 0.0, s2 = 0.0;
  long cnt = 0;
  for (int stream = 0; stream < 16; ++stream) {
    std::vector<double> v = simulate_V_process(
        alpha, 2.0, k, 512, SeedStream{5, static_cast<std::uint64_t>(stream)});
    REQUIRE(v.size() == 512);
    for (double x : v) {
      s += x;
      s2 += x * x;
      ++cnt;
    }
  }
  const double mean = s / cnt;
  CHECK(std::abs(mean) < 0.1);
  CHECK(s2 / cnt - mean * mean == doctest::Approx(want).epsilon(0.10));

  CHECK_THROWS_AS(simulate_V_process(0.6, 2.0, 1, 8, SeedStream{1, 0}),
                  domain_error);  // (k - alpha) beta <= 1
  CHECK_THROWS_AS(simulate_V_process(0.2, 2.0, 2, 0, SeedStream{1, 0}),
                  domain_error);
}

TEST_CASE("simulate: jump-regime limit variable against a direct series") {
  KernelSpec spec = pure_power_spec(0.3, 1.5);
  JumpRecord rec;
  rec.t0 = -1.0;
  rec.t1 = 1.0;
  rec.times = {0.4};
  rec.sizes = {-2.0};
  CounterRng rng(SeedStream{9, 9});
  const std::vector<double> marks = {0.62};
  LimitSample z = simulate_limit_Z(spec, rec, 2.0, 2, rng, &marks, 1e-9);

  // Direct summation of |c0|^p |J|^p sum_l |h_2(l + u)|^p with the terms
  // written as the plain alternating sum.
  double series = 0.0;
  for (long l = 0; l < 20000; ++l) {
    const double x = l + 0.62;
    const double h = std::pow(x, 0.3) - 2.0 * power_plus(x - 1.0, 0.3) +
                     power_plus(x - 2.0, 0.3);
    series += h * h;
  }
  const double want = std::pow(1.5, 2.0) * std::pow(2.0, 2.0) * series;
  CHECK(z.value == doctest::Approx(want).epsilon(1e-8));
  CHECK(z.truncation_error_bound < 1e-7);
  REQUIRE(z.contributions.size() == 1);
  CHECK(z.contributions[0] == doctest::Approx(z.value).epsilon(1e-15));

  // Random marks: jump count drives the contribution count, and only the
  // jumps inside (0,1] participate.
  JumpRecord mixed = fixed_record();
  LimitSample zr = simulate_limit_Z(spec, mixed, 2.0, 2, rng, nullptr, 1e-7);
  CHECK(zr.contributions.size() == 3);
  CHECK(zr.value > 0.0);
}

TEST_CASE("simulate: jump-regime limit refuses divergent series") {
  KernelSpec spec = pure_power_spec(0.6);
  JumpRecord rec;
  rec.t0 = -1.0;
  rec.t1 = 1.0;
  rec.times = {0.5};
  rec.sizes = {1.0};
  CounterRng rng(SeedStream{1, 1});
  // (k - alpha) p = 0.8 <= 1: the mark series diverges.
  CHECK_THROWS_AS(simulate_limit_Z(spec, rec, 2.0, 1, rng, nullptr, 1e-6),
                  domain_error);
  // Forced marks must match the inner jump count and live in (0,1].
  const std::vector<double> twomarks = {0.5, 0.25};
  CHECK_THROWS_AS(
      simulate_limit_Z(pure_power_spec(0.3), rec, 2.0, 1, rng, &twomarks, 1e-6),
      domain_error);
  const std::vector<double> zeromark = {0.0};
  CHECK_THROWS_AS(
      simulate_limit_Z(pure_power_spec(0.3), rec, 2.0, 1, rng, &zeromark, 1e-6),
      domain_error);
}

TEST_CASE("simulate: exact F-functional for an isolated jump") {
  // With one jump at T < 0 the smooth-regime integrand is F_u =
  // J g'(u - T), so the functional has an independent quadrature value.
  KernelSpec spec = decay_spec(1.5, 1.0, G0Mode::kZero);
  JumpRecord rec;
  rec.t0 = -12.0;
  rec.t1 = 1.0;
  rec.times = {-1.0};
  rec.sizes = {1.3};
  const double p = 2.0;
  FIntegralResult fi = simulate_F_integral_cp(spec, rec, p, 1, 4096);
  auto f = [&](double u) {
    return std::pow(std::abs(1.3 * g_deriv(spec, u + 1.0, 1)), p);
  };
  QuadResult want = integrate(f, 0.0, 1.0, 1e-12, 1e-10);
  CHECK(fi.value == doctest::Approx(want.value).epsilon(2e-3));
  CHECK(fi.grid_error_estimate < 1e-3 * std::max(fi.value, 1.0));
  REQUIRE(fi.f_values.size() == 4096);

  // Pure power kernels cannot be represented by any finite record window.
  CHECK_THROWS_AS(
      simulate_F_integral_cp(pure_power_spec(0.25), rec, p, 1, 64),
      tolerance_error);
  // A record window shorter than the kernel memory is refused.
  JumpRecord narrow = rec;
  narrow.t0 = -0.4;
  narrow.times = {-0.2};
  CHECK_THROWS_AS(simulate_F_integral_cp(spec, narrow, p, 1, 64),
                  tolerance_error);
  CHECK_THROWS_AS(simulate_F_integral_cp(spec, rec, p, 1, 1), domain_error);
}

TEST_CASE("simulate: coupled smooth pair converges for a jump driver") {
  KernelSpec spec = decay_spec(1.5, 1.0, G0Mode::kZero);
  CounterRng rng(SeedStream{31, 0});
  JumpLawConfig law;
  JumpRecord rec = sample_jumps(4.0, law, -10.0, 1.0, rng);
  const double p = 2.0;
  const int k = 1;
  SmoothPair pair = simulate_smooth_pair_cp(spec, rec, 4096, 512, p, k);
  const double v = [&] {
    double acc = 0.0;
    for (std::size_t i = 1; i < pair.path.values.size(); ++i)
      acc += std::pow(std::abs(pair.path.values[i] - pair.path.values[i - 1]),
                      p);
    return acc;
  }();
  const double scaled = std::pow(4096.0, p * k - 1.0) * v;
  CHECK(scaled ==
        doctest::Approx(pair.f_integral.value).epsilon(0.10));
}

TEST_CASE("simulate: coupled smooth pair guards its lattice") {
  KernelSpec spec = decay_spec(1.5, 1.0, G0Mode::kZero);
  CHECK_THROWS_AS(simulate_smooth_pair_stable(pure_power_spec(0.25), 1.8, 1.0,
                                              1024, 256, 2.0, 1,
                                              SeedStream{1, 0}),
                  tolerance_error);
  CHECK_THROWS_AS(
      simulate_smooth_pair_stable(spec, 1.8, 1.0, 1024, 256, 2.0, 2,
                                  SeedStream{1, 0}),
      domain_error);
  // fine_n must divide n * m_sub with an even quotient.
  StablePathOptions opt;
  opt.m_sub = 4;
  CHECK_THROWS_AS(
      simulate_smooth_pair_stable(spec, 1.8, 1.0, 64, 192, 2.0, 1,
                                  SeedStream{1, 0}, opt),
      config_error);
}

TEST_CASE("simulate: csv exports round-trip") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "pvar_test_simulate";
  fs::create_directories(dir);

  KernelSpec spec = pure_power_spec(0.25);
  JumpRecord rec = fixed_record();
  SamplePath path = simulate_cp_driven_path(spec, rec, 8);

  const std::string pfile = (dir / "path.csv").string();
  write_path_csv(path, pfile);
  std::ifstream in(pfile);
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == "# pvar-path v1");
  // Header then one row per grid point: parse back and compare.
  REQUIRE(std::getline(in, line));
  CHECK(line == "i,t,x");
  int rows = 0;
  while (std::getline(in, line)) {
    int i = 0;
    double t = 0.0, x = 0.0;
    REQUIRE(std::sscanf(line.c_str(), "%d,%lf,%lf", &i, &t, &x) == 3);
    CHECK(i == rows);
    CHECK(x == doctest::Approx(path.values[static_cast<std::size_t>(rows)])
                   .epsilon(1e-12));
    ++rows;
  }
  CHECK(rows == 9);

  const std::string jfile = (dir / "jumps.csv").string();
  write_jumps_csv(rec, jfile);
  std::ifstream jin(jfile);
  REQUIRE(std::getline(jin, line));
  CHECK(line == "# pvar-jumps v1");

  CHECK_THROWS_AS(write_path_csv(path, (dir / "nope" / "x.csv").string()),
                  config_error);
  fs::remove_all(dir);
}
