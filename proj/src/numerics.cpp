#include "copmix/numerics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

#include <boost/math/special_functions/erf.hpp>

#include "copmix/common.hpp"

namespace copmix {

double log_sum_exp(std::span<const double> v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;  // all -inf (or a +inf/nan poisoned max)
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double Rng::normal() { return norm_quantile(uniform()); }

double Rng::exponential() { return -std::log(uniform()); }

double Rng::gamma(double shape) {
  if (!(shape > 0.0)) throw std::domain_error("gamma shape must be positive");
  // Marsaglia-Tsang squeeze; shape < 1 boosted through G(a) = G(a+1) U^{1/a}.
  double boost_factor = 1.0;
  double a = shape;
  if (a < 1.0) {
    boost_factor = std::pow(uniform(), 1.0 / a);
    a += 1.0;
  }
  const double d = a - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = normal();
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    double u = uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return boost_factor * d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
      return boost_factor * d * v;
  }
}

int Rng::categorical(std::span<const double> weights) {
  double u = uniform();
  double acc = 0.0;
  for (size_t j = 0; j < weights.size(); ++j) {
    acc += weights[j];
    if (u <= acc) return static_cast<int>(j);
  }
  return static_cast<int>(weights.size()) - 1;
}

double norm_cdf(double z) {
  return 0.5 * std::erfc(-z * std::numbers::sqrt2 * 0.5);
}

double norm_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw std::domain_error("norm_quantile requires p in (0,1)");
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double norm_logpdf(double z) {
  static const double kLogSqrt2Pi = 0.5 * std::log(2.0 * std::numbers::pi);
  return -0.5 * z * z - kLogSqrt2Pi;
}

namespace {

GaussLegendre make_rule(int n) {
  // Newton iteration on Legendre polynomials, then map [-1,1] -> [0,1].
  GaussLegendre rule;
  rule.x.resize(n);
  rule.w.resize(n);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (z * p0 - p1) / (z * z - 1.0);
      double dz = p0 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    rule.x[i] = 0.5 * (1.0 - z);
    rule.x[n - 1 - i] = 0.5 * (1.0 + z);
    double w = 1.0 / ((1.0 - z * z) * pp * pp);  // weight on [0,1] scale
    rule.w[i] = w;
    rule.w[n - 1 - i] = w;
  }
  return rule;
}

}  // namespace

const GaussLegendre& gauss_legendre(int n) {
  if (n < 1) throw std::domain_error("gauss_legendre order must be >= 1");
  static std::mutex mu;
  static std::map<int, GaussLegendre> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, make_rule(n)).first;
  return it->second;
}

double integrate(const std::function<double(double)>& f, double a, double b,
                 int n, int panels) {
  const GaussLegendre& rule = gauss_legendre(n);
  double total = 0.0;
  const double h = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    double lo = a + p * h;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += rule.w[i] * f(lo + h * rule.x[i]);
    total += acc * h;
  }
  return total;
}

NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& f,
                             std::vector<double> x0, std::vector<double> step,
                             const NelderMeadOptions& opt) {
  const int d = static_cast<int>(x0.size());
  if (d == 0 || step.size() != x0.size())
    throw std::invalid_argument("nelder_mead: empty start or step size mismatch");

  auto safe_f = [&](const std::vector<double>& x) {
    double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };

  NelderMeadResult res;
  std::vector<std::vector<double>> sx(d + 1, x0);
  std::vector<double> sf(d + 1);
  for (int i = 1; i <= d; ++i) sx[i][i - 1] += step[i - 1];
  for (int i = 0; i <= d; ++i) sf[i] = safe_f(sx[i]);
  res.evals = d + 1;

  std::vector<int> ord(d + 1);
  auto sort_simplex = [&] {
    for (int i = 0; i <= d; ++i) ord[i] = i;
    std::stable_sort(ord.begin(), ord.end(),
                     [&](int a, int b) { return sf[a] < sf[b]; });
  };

  std::vector<double> centroid(d), xr(d), xe(d), xc(d);
  while (res.evals < opt.max_evals) {
    sort_simplex();
    int best = ord[0], worst = ord[d], second = ord[d - 1];
    if (sf[worst] - sf[best] <=
        opt.ftol_abs + 1e-12 * (std::abs(sf[best]) + std::abs(sf[worst]))) {
      double diam = 0.0;
      for (int i = 1; i <= d; ++i)
        for (int j = 0; j < d; ++j)
          diam = std::max(diam, std::abs(sx[ord[i]][j] - sx[best][j]));
      if (diam <= opt.xtol || sf[worst] - sf[best] <= opt.ftol_abs) {
        res.converged = true;
        break;
      }
    }

    for (int j = 0; j < d; ++j) {
      double s = 0.0;
      for (int i = 0; i <= d; ++i)
        if (i != worst) s += sx[i][j];
      centroid[j] = s / d;
    }

    auto blend = [&](std::vector<double>& out, double t) {
      for (int j = 0; j < d; ++j)
        out[j] = centroid[j] + t * (sx[worst][j] - centroid[j]);
    };

    blend(xr, -1.0);
    double fr = safe_f(xr);
    ++res.evals;
    if (fr < sf[best]) {
      blend(xe, -2.0);
      double fe = safe_f(xe);
      ++res.evals;
      if (fe < fr) {
        sx[worst] = xe;
        sf[worst] = fe;
      } else {
        sx[worst] = xr;
        sf[worst] = fr;
      }
    } else if (fr < sf[second]) {
      sx[worst] = xr;
      sf[worst] = fr;
    } else {
      bool outside = fr < sf[worst];
      blend(xc, outside ? -0.5 : 0.5);
      double fc = safe_f(xc);
      ++res.evals;
      if (fc < std::min(fr, sf[worst])) {
        sx[worst] = xc;
        sf[worst] = fc;
      } else {
        // shrink toward best
        for (int i = 0; i <= d; ++i) {
          if (i == best) continue;
          for (int j = 0; j < d; ++j)
            sx[i][j] = sx[best][j] + 0.5 * (sx[i][j] - sx[best][j]);
          sf[i] = safe_f(sx[i]);
          ++res.evals;
        }
      }
    }
  }

  sort_simplex();
  res.x = sx[ord[0]];
  res.fmin = sf[ord[0]];
  return res;
}

GoldenResult golden_min(const std::function<double(double)>& f, double a,
                        double b, double xtol) {
  if (!(a < b)) throw std::invalid_argument("golden_min: need a < b");
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - phi * (b - a);
  double x2 = a + phi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > xtol) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = f(x2);
    }
  }
  GoldenResult res;
  res.x = f1 <= f2 ? x1 : x2;
  res.f = std::min(f1, f2);
  return res;
}

double pearson_correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("pearson_correlation: need matched vectors, n >= 2");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
  jobs = std::max(1, jobs);
  if (jobs == 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  auto worker = [&] {
    for (;;) {
      int i = next.fetch_add(1);
      if (i >= n) return;
      fn(i);
    }
  };
  std::vector<std::future<void>> fut;
  int workers = std::min(jobs, n);
  fut.reserve(workers - 1);
  for (int t = 1; t < workers; ++t)
    fut.push_back(std::async(std::launch::async, worker));
  worker();
  for (auto& f : fut) f.get();  // propagate exceptions
}

}  // namespace copmix
