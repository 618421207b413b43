#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "copmix/common.hpp"
#include "copmix/numerics.hpp"

using namespace copmix;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TEST_SUITE("numerics") {

TEST_CASE("normal cdf matches tabled values and is symmetric") {
  CHECK(norm_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(std::abs(norm_cdf(1.959963984540054) - 0.975) < 1e-12);
  CHECK(std::abs(norm_cdf(-1.0) - 0.15865525393145707) < 1e-12);
  // far tail stays accurate (erfc, not 1 - cdf)
  CHECK(norm_cdf(-8.0) == doctest::Approx(6.2209605742718e-16).epsilon(1e-10));
  for (double z : {-3.7, -1.2, -0.4, 0.9, 2.5}) {
    CHECK(std::abs(norm_cdf(z) + norm_cdf(-z) - 1.0) < 1e-15);
  }
}

TEST_CASE("normal quantile inverts the cdf") {
  CHECK(std::abs(norm_quantile(0.975) - 1.959963984540054) < 1e-9);
  CHECK(std::abs(norm_quantile(0.5)) < 1e-12);
  for (double p : {1e-12, 1e-6, 0.01, 0.3, 0.5, 0.77, 0.999, 1.0 - 1e-10}) {
    CHECK(std::abs(norm_cdf(norm_quantile(p)) - p) < 1e-12 * std::max(1.0, 1.0 / p));
  }
  for (double z : {-6.0, -2.0, 0.0, 1.5, 5.0}) {
    CHECK(std::abs(norm_quantile(norm_cdf(z)) - z) < 1e-8);
  }
  CHECK_THROWS(norm_quantile(0.0));
  CHECK_THROWS(norm_quantile(1.0));
  CHECK_THROWS(norm_quantile(-0.2));
}

TEST_CASE("normal log density") {
  CHECK(std::abs(norm_logpdf(0.0) + 0.9189385332046727) < 1e-14);
  CHECK(std::abs(norm_logpdf(2.0) - (-0.9189385332046727 - 2.0)) < 1e-14);
  CHECK(std::abs(norm_logpdf(-2.0) - norm_logpdf(2.0)) < 1e-15);
}

TEST_CASE("gauss-legendre rules integrate exactly what they promise") {
  for (int n : {8, 16, 32, 48, 64}) {
    const GaussLegendre& g = gauss_legendre(n);
    REQUIRE(g.x.size() == static_cast<size_t>(n));
    REQUIRE(g.w.size() == static_cast<size_t>(n));
    // rule lives on [0,1]: weights sum to the interval length
    const double wsum = std::accumulate(g.w.begin(), g.w.end(), 0.0);
    CHECK(std::abs(wsum - 1.0) < 1e-14);
    for (double xi : g.x) {
      CHECK(xi > 0.0);
      CHECK(xi < 1.0);
    }
  }
  // n-point rule is exact through degree 2n-1
  const GaussLegendre& g8 = gauss_legendre(8);
  double m5 = 0.0, m15 = 0.0;
  for (size_t i = 0; i < g8.x.size(); ++i) {
    m5 += g8.w[i] * std::pow(g8.x[i], 5);
    m15 += g8.w[i] * std::pow(g8.x[i], 15);
  }
  CHECK(std::abs(m5 - 1.0 / 6.0) < 1e-15);
  CHECK(std::abs(m15 - 1.0 / 16.0) < 1e-14);
}

TEST_CASE("panel integration") {
  const double ex = integrate([](double t) { return std::exp(t); }, 0.0, 1.0);
  CHECK(std::abs(ex - (std::exp(1.0) - 1.0)) < 1e-12);
  const double s = integrate([](double t) { return std::sin(t); }, 0.0,
                             3.14159265358979323846, 32, 4);
  CHECK(std::abs(s - 2.0) < 1e-10);
  // degenerate interval
  CHECK(integrate([](double t) { return t; }, 2.0, 2.0) == doctest::Approx(0.0));
}

TEST_CASE("nelder-mead minimizes rosenbrock") {
  auto rosen = [](std::span<const double> v) {
    const double a = 1.0 - v[0];
    const double b = v[1] - v[0] * v[0];
    return a * a + 100.0 * b * b;
  };
  NelderMeadResult r = nelder_mead(rosen, {-1.2, 1.0}, {0.5, 0.5});
  CHECK(r.fmin < 1e-8);
  CHECK(std::abs(r.x[0] - 1.0) < 1e-3);
  CHECK(std::abs(r.x[1] - 1.0) < 1e-3);
}

TEST_CASE("nelder-mead never returns worse than the start") {
  auto f = [](std::span<const double> v) {
    return std::cos(7.0 * v[0]) + 0.1 * v[0] * v[0];
  };
  const double f0 = f(std::vector<double>{3.0});
  NelderMeadResult r = nelder_mead(f, {3.0}, {0.4});
  CHECK(r.fmin <= f0 + 1e-15);

  // non-finite regions behave like +inf instead of poisoning the simplex
  auto g = [](std::span<const double> v) {
    if (v[0] < 0.0) return std::numeric_limits<double>::quiet_NaN();
    return (v[0] - 2.0) * (v[0] - 2.0);
  };
  NelderMeadResult rg = nelder_mead(g, {0.5, }, {1.0});
  CHECK(rg.fmin < 1e-8);
  CHECK(std::abs(rg.x[0] - 2.0) < 1e-3);
}

TEST_CASE("golden section search") {
  auto f = [](double x) { return (x - 3.14159265358979) * (x - 3.14159265358979); };
  GoldenResult g = golden_min(f, 0.0, 10.0, 1e-8);
  CHECK(std::abs(g.x - 3.14159265358979) < 1e-6);
  CHECK(g.f < 1e-12);
  // monotone objective ends at the boundary
  GoldenResult m = golden_min([](double x) { return x; }, 2.0, 5.0, 1e-9);
  CHECK(std::abs(m.x - 2.0) < 1e-6);
}

TEST_CASE("log-sum-exp is shift stable") {
  std::vector<double> two{0.0, 0.0};
  CHECK(std::abs(log_sum_exp(two) - std::log(2.0)) < 1e-15);
  std::vector<double> deep{-1000.0, -1000.0};
  CHECK(std::abs(log_sum_exp(deep) - (std::log(2.0) - 1000.0)) < 1e-12);
  std::vector<double> one{5.0};
  CHECK(log_sum_exp(one) == doctest::Approx(5.0));
  std::vector<double> allneg{-kInf, -kInf};
  CHECK(log_sum_exp(allneg) == -kInf);
  std::vector<double> mixed{-kInf, 0.0};
  CHECK(std::abs(log_sum_exp(mixed)) < 1e-15);
}

TEST_CASE("seed mixing separates streams") {
  std::vector<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 64; ++s) seen.push_back(mix_seed(42, s));
  std::sort(seen.begin(), seen.end());
  CHECK(std::adjacent_find(seen.begin(), seen.end()) == seen.end());
  CHECK(mix_seed(42, 7) == mix_seed(42, 7));
  CHECK(mix_seed(42, 7) != mix_seed(43, 7));
}

TEST_CASE("rng determinism and ranges") {
  Rng a(123), b(123);
  for (int i = 0; i < 32; ++i) CHECK(a.uniform() == b.uniform());
  Rng r(99);
  double lo = 1.0, hi = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double u = r.uniform();
    lo = std::min(lo, u);
    hi = std::max(hi, u);
  }
  CHECK(lo > 0.0);
  CHECK(hi < 1.0);
}

TEST_CASE("rng variates match their first two moments") {
  const int n = 40000;
  Rng r(2024);
  double sn = 0.0, sn2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    sn += z;
    sn2 += z * z;
  }
  CHECK(std::abs(sn / n) < 0.02);
  CHECK(std::abs(sn2 / n - 1.0) < 0.03);

  double se = 0.0;
  for (int i = 0; i < n; ++i) se += r.exponential();
  CHECK(std::abs(se / n - 1.0) < 0.02);

  double sg = 0.0, sg2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double g = r.gamma(3.0);
    CHECK(g > 0.0);
    sg += g;
    sg2 += g * g;
  }
  CHECK(std::abs(sg / n - 3.0) < 0.06);
  CHECK(std::abs(sg2 / n - sg / n * sg / n - 3.0) < 0.25);

  // shape < 1 exercises the boost branch of the sampler
  double sh = 0.0;
  for (int i = 0; i < n; ++i) sh += r.gamma(0.5);
  CHECK(std::abs(sh / n - 0.5) < 0.03);
}

TEST_CASE("categorical draws follow the weights") {
  std::vector<double> w{0.2, 0.3, 0.5};
  Rng r(5);
  std::vector<int> cnt(3, 0);
  const int n = 30000;
  for (int i = 0; i < n; ++i) {
    const int j = r.categorical(w);
    REQUIRE(j >= 0);
    REQUIRE(j < 3);
    cnt[j]++;
  }
  for (int j = 0; j < 3; ++j)
    CHECK(std::abs(static_cast<double>(cnt[j]) / n - w[j]) < 0.02);
}

TEST_CASE("pearson correlation") {
  std::vector<double> x{1, 2, 3, 4, 5};
  std::vector<double> y{3, 5, 7, 9, 11};  // y = 2x + 1
  CHECK(std::abs(pearson_correlation(x, y) - 1.0) < 1e-12);
  std::vector<double> yn{5, 4, 3, 2, 1};
  CHECK(std::abs(pearson_correlation(x, yn) + 1.0) < 1e-12);
  // affine invariance
  std::vector<double> u{0.3, -1.0, 2.2, 0.9, 1.4};
  std::vector<double> v{1.0, 0.2, 0.5, -0.7, 0.1};
  std::vector<double> us(u), vs(v);
  for (auto& t : us) t = 3.0 * t - 2.0;
  for (auto& t : vs) t = 0.25 * t + 10.0;
  CHECK(std::abs(pearson_correlation(u, v) - pearson_correlation(us, vs)) < 1e-12);
}

TEST_CASE("parallel_for writes every slot under any job count") {
  const int n = 257;
  std::vector<double> one(n, -1.0), four(n, -1.0);
  parallel_for(n, 1, [&](int i) { one[i] = i * i; });
  parallel_for(n, 4, [&](int i) { four[i] = i * i; });
  CHECK(one == four);
  parallel_for(0, 4, [&](int) { REQUIRE(false); });
  std::vector<int> tiny(2, 0);
  parallel_for(2, 8, [&](int i) { tiny[i] = 1 + i; });
  CHECK(tiny == std::vector<int>{1, 2});
}

TEST_CASE("clamp_unit pins to the open unit interval") {
  CHECK(clamp_unit(-0.5) == kUnitEps);
  CHECK(clamp_unit(2.0) == 1.0 - kUnitEps);
  CHECK(clamp_unit(0.25) == 0.25);
}

}  // TEST_SUITE
