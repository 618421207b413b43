#pragma once

#include <functional>
#include <span>
#include <vector>

namespace copmix {

// Standard normal helpers. norm_cdf is accurate in both tails (erfc based);
// norm_quantile requires p in (0,1) and throws otherwise.
double norm_cdf(double z);
double norm_quantile(double p);
double norm_logpdf(double z);

// Gauss-Legendre rule on [0,1]; nodes/weights cached per order.
struct GaussLegendre {
  std::vector<double> x;
  std::vector<double> w;
};
const GaussLegendre& gauss_legendre(int n);

// Integrate f over [a,b] with `panels` equal panels of an n-point rule.
double integrate(const std::function<double(double)>& f, double a, double b,
                 int n = 32, int panels = 4);

struct NelderMeadOptions {
  int max_evals = 4000;
  double ftol_abs = 1e-11;
  double xtol = 1e-8;
};

struct NelderMeadResult {
  std::vector<double> x;
  double fmin = 0.0;
  int evals = 0;
  bool converged = false;
};

// Minimizes f. `step` gives the initial simplex edge along each coordinate.
// Non-finite objective values are treated as +inf. The best point ever
// evaluated is returned, so fmin <= f(x0) always holds.
NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& f,
                             std::vector<double> x0, std::vector<double> step,
                             const NelderMeadOptions& opt = {});

struct GoldenResult {
  double x = 0.0;
  double f = 0.0;
};

// Golden-section minimization on [a,b] to absolute x tolerance.
GoldenResult golden_min(const std::function<double(double)>& f, double a,
                        double b, double xtol = 1e-7);

double pearson_correlation(std::span<const double> x, std::span<const double> y);

// Runs fn(0..n-1); with jobs > 1 work is spread over std::async workers.
// Results must be written to disjoint slots so scheduling cannot matter.
void parallel_for(int n, int jobs, const std::function<void(int)>& fn);

}  // namespace copmix
