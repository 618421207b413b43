#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace copmix {

enum class MarginalFamily { Normal, Beta, Gamma, Binomial };

std::string to_string(MarginalFamily f);

// One univariate marginal. Immutable; parameter domains are validated at
// construction and violations throw std::domain_error naming the field.
//   Normal(mu, sigma)      sigma > 0
//   Beta(alpha, beta)      alpha, beta > 0, support (0,1)
//   Gamma(shape, rate)     shape, rate > 0, support (0,inf)
//   Binomial(index m, p)   fixed integer index m >= 1, p in (0,1)
class MarginalModel {
 public:
  static MarginalModel normal(double mu, double sigma);
  static MarginalModel beta(double alpha, double beta);
  static MarginalModel gamma(double shape, double rate);
  static MarginalModel binomial(int index, double prob);

  MarginalFamily family() const { return family_; }
  bool is_count() const { return family_ == MarginalFamily::Binomial; }
  int index() const;  // Binomial only
  const std::vector<double>& params() const { return par_; }
  int free_param_count() const { return is_count() ? 1 : 2; }

  // log density (log PMF for Binomial); out-of-support x -> -inf
  double log_pdf(double x) const;
  // CDF; clamps outside the support to 0/1
  double cdf(double x) const;
  // u in (0,1) required (throws otherwise). For Binomial: smallest
  // integer x with cdf(x) >= u.
  double quantile(double u) const;

 private:
  MarginalModel(MarginalFamily f, std::vector<double> par, int index)
      : family_(f), par_(std::move(par)), index_(index) {}

  MarginalFamily family_;
  std::vector<double> par_;
  int index_ = -1;
};

struct MarginalFit {
  MarginalModel model;
  // set when the weighted sample was (numerically) degenerate and a scale
  // floor decided the fit
  bool degenerate = false;
};

// Unconstrained plane <-> Beta(alpha, beta) restricted to the variance-floor
// feasible set. Shared by the weighted fit and the mixture optimizers so
// every search stays inside the same constraint set.
struct BetaReparam {
  double mu_lo;
  BetaReparam();
  std::pair<double, double> alpha_beta(double a, double b) const;
  std::pair<double, double> from_alpha_beta(double alpha, double beta) const;
};

// Weighted maximum likelihood for one column. Weights must be >= 0 with a
// positive sum; data must lie in the family support. Normal and Binomial
// solve in closed form; Beta and Gamma run a Nelder-Mead search on an
// unconstrained reparameterization (Beta's builds in the variance floor).
MarginalFit fit_marginal_weighted(MarginalFamily family,
                                  std::span<const double> x,
                                  std::span<const double> w,
                                  int binom_index = -1);

}  // namespace copmix
