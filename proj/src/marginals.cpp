#include "copmix/marginals.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "copmix/common.hpp"
#include "copmix/numerics.hpp"

namespace copmix {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double sigmoid(double t) {
  double s = t >= 0.0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t));
  return std::clamp(s, 1e-12, 1.0 - 1e-12);
}

double logit(double p) { return std::log(p / (1.0 - p)); }

double log_choose(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

// Beta parameters through (mean, variance) with the variance floor built in:
// mean ranges over the open interval where mean*(1-mean) > floor, variance
// over (floor, mean*(1-mean)). Keeps alpha, beta finite and positive and
// makes the floor a smooth constraint instead of a rejection.
}  // namespace

BetaReparam::BetaReparam() {
  mu_lo = (1.0 - std::sqrt(1.0 - 4.0 * kBetaVarFloor)) / 2.0;
}

std::pair<double, double> BetaReparam::alpha_beta(double a, double b) const {
  double mu = mu_lo + (1.0 - 2.0 * mu_lo) * sigmoid(a);
  double vmax = mu * (1.0 - mu);
  double v = kBetaVarFloor + (vmax - kBetaVarFloor) * sigmoid(b);
  double s = vmax / v - 1.0;
  return {mu * s, (1.0 - mu) * s};
}

std::pair<double, double> BetaReparam::from_alpha_beta(double alpha,
                                                       double beta) const {
  double mu = alpha / (alpha + beta);
  double v = alpha * beta /
             ((alpha + beta) * (alpha + beta) * (alpha + beta + 1.0));
  mu = std::clamp(mu, mu_lo * (1.0 + 1e-6) + 1e-9,
                  1.0 - mu_lo * (1.0 + 1e-6) - 1e-9);
  double vmax = mu * (1.0 - mu);
  double lo = kBetaVarFloor + 1e-3 * (vmax - kBetaVarFloor);
  double hi = vmax - 1e-3 * (vmax - kBetaVarFloor);
  v = std::clamp(v, lo, hi);
  double a = logit((mu - mu_lo) / (1.0 - 2.0 * mu_lo));
  double b = logit((v - kBetaVarFloor) / (vmax - kBetaVarFloor));
  return {a, b};
}

std::string to_string(MarginalFamily f) {
  switch (f) {
    case MarginalFamily::Normal: return "normal";
    case MarginalFamily::Beta: return "beta";
    case MarginalFamily::Gamma: return "gamma";
    case MarginalFamily::Binomial: return "binomial";
  }
  return "?";
}

MarginalModel MarginalModel::normal(double mu, double sigma) {
  if (!std::isfinite(mu)) throw std::domain_error("normal: mu must be finite");
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw std::domain_error("normal: sigma must be positive");
  return MarginalModel(MarginalFamily::Normal, {mu, sigma}, -1);
}

MarginalModel MarginalModel::beta(double alpha, double beta) {
  if (!(alpha > 0.0) || !std::isfinite(alpha))
    throw std::domain_error("beta: alpha must be positive");
  if (!(beta > 0.0) || !std::isfinite(beta))
    throw std::domain_error("beta: beta must be positive");
  return MarginalModel(MarginalFamily::Beta, {alpha, beta}, -1);
}

MarginalModel MarginalModel::gamma(double shape, double rate) {
  if (!(shape > 0.0) || !std::isfinite(shape))
    throw std::domain_error("gamma: shape must be positive");
  if (!(rate > 0.0) || !std::isfinite(rate))
    throw std::domain_error("gamma: rate must be positive");
  return MarginalModel(MarginalFamily::Gamma, {shape, rate}, -1);
}

MarginalModel MarginalModel::binomial(int index, double prob) {
  if (index < 1) throw std::domain_error("binomial: index must be >= 1");
  if (!(prob > 0.0 && prob < 1.0))
    throw std::domain_error("binomial: prob must be inside (0,1)");
  return MarginalModel(MarginalFamily::Binomial, {prob}, index);
}

int MarginalModel::index() const {
  if (!is_count()) throw std::logic_error("index() is Binomial-only");
  return index_;
}

double MarginalModel::log_pdf(double x) const {
  switch (family_) {
    case MarginalFamily::Normal: {
      double z = (x - par_[0]) / par_[1];
      return norm_logpdf(z) - std::log(par_[1]);
    }
    case MarginalFamily::Beta: {
      if (!(x > 0.0 && x < 1.0)) return kNegInf;
      double a = par_[0], b = par_[1];
      double lbeta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
      return (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) - lbeta;
    }
    case MarginalFamily::Gamma: {
      if (!(x > 0.0)) return kNegInf;
      double k = par_[0], r = par_[1];
      return k * std::log(r) - std::lgamma(k) + (k - 1.0) * std::log(x) - r * x;
    }
    case MarginalFamily::Binomial: {
      double xr = std::round(x);
      if (std::abs(x - xr) > 1e-9 || xr < 0.0 || xr > index_) return kNegInf;
      int k = static_cast<int>(xr);
      double p = par_[0];
      return log_choose(index_, k) + k * std::log(p) +
             (index_ - k) * std::log1p(-p);
    }
  }
  return kNegInf;
}

double MarginalModel::cdf(double x) const {
  switch (family_) {
    case MarginalFamily::Normal:
      return norm_cdf((x - par_[0]) / par_[1]);
    case MarginalFamily::Beta:
      if (x <= 0.0) return 0.0;
      if (x >= 1.0) return 1.0;
      return boost::math::ibeta(par_[0], par_[1], x);
    case MarginalFamily::Gamma:
      if (x <= 0.0) return 0.0;
      return boost::math::gamma_p(par_[0], par_[1] * x);
    case MarginalFamily::Binomial: {
      if (x < 0.0) return 0.0;
      int j = static_cast<int>(std::floor(x + 1e-9));
      if (j >= index_) return 1.0;
      // P(X <= j) = I_{1-p}(m-j, j+1)
      return boost::math::ibeta(static_cast<double>(index_ - j),
                                static_cast<double>(j + 1), 1.0 - par_[0]);
    }
  }
  return 0.0;
}

double MarginalModel::quantile(double u) const {
  if (!(u > 0.0 && u < 1.0))
    throw std::domain_error("quantile requires u in (0,1)");
  switch (family_) {
    case MarginalFamily::Normal:
      return par_[0] + par_[1] * norm_quantile(u);
    case MarginalFamily::Beta:
      return boost::math::ibeta_inv(par_[0], par_[1], u);
    case MarginalFamily::Gamma:
      return boost::math::gamma_p_inv(par_[0], u) / par_[1];
    case MarginalFamily::Binomial: {
      double p = par_[0];
      double pmf = std::pow(1.0 - p, index_);
      double acc = pmf;
      int j = 0;
      while (j < index_ && acc < u) {
        pmf *= (static_cast<double>(index_ - j) / (j + 1)) * (p / (1.0 - p));
        acc += pmf;
        ++j;
      }
      return j;
    }
  }
  return 0.0;
}

namespace {

struct WeightedStats {
  double W = 0.0;       // sum of weights
  double mean = 0.0;    // weighted mean
  double var = 0.0;     // weighted (biased) variance
  double sum_log = 0.0; // sum w*log(x)
  double sum_log1m = 0.0;
  double sum_x = 0.0;
};

WeightedStats collect(std::span<const double> x, std::span<const double> w,
                      bool need_logs, bool need_log1m) {
  if (x.size() != w.size() || x.empty())
    throw std::invalid_argument("fit_marginal_weighted: data/weight size mismatch");
  WeightedStats s;
  for (size_t i = 0; i < x.size(); ++i) {
    if (!(w[i] >= 0.0))
      throw std::domain_error("fit_marginal_weighted: weights must be >= 0");
    s.W += w[i];
    s.sum_x += w[i] * x[i];
  }
  if (!(s.W > 0.0))
    throw std::domain_error("fit_marginal_weighted: weight sum must be positive");
  s.mean = s.sum_x / s.W;
  for (size_t i = 0; i < x.size(); ++i)
    s.var += w[i] * (x[i] - s.mean) * (x[i] - s.mean);
  s.var /= s.W;
  if (need_logs || need_log1m) {
    for (size_t i = 0; i < x.size(); ++i) {
      if (w[i] == 0.0) continue;
      if (need_logs) s.sum_log += w[i] * std::log(x[i]);
      if (need_log1m) s.sum_log1m += w[i] * std::log1p(-x[i]);
    }
  }
  return s;
}

void require_support(MarginalFamily fam, std::span<const double> x,
                     std::span<const double> w, int index) {
  for (size_t i = 0; i < x.size(); ++i) {
    if (w[i] == 0.0) continue;
    bool ok = true;
    switch (fam) {
      case MarginalFamily::Normal: ok = std::isfinite(x[i]); break;
      case MarginalFamily::Beta: ok = x[i] > 0.0 && x[i] < 1.0; break;
      case MarginalFamily::Gamma: ok = x[i] > 0.0; break;
      case MarginalFamily::Binomial:
        ok = std::abs(x[i] - std::round(x[i])) <= 1e-9 && x[i] >= -1e-9 &&
             x[i] <= index + 1e-9;
        break;
    }
    if (!ok)
      throw std::domain_error("fit_marginal_weighted: observation outside " +
                              to_string(fam) + " support");
  }
}

}  // namespace

MarginalFit fit_marginal_weighted(MarginalFamily family,
                                  std::span<const double> x,
                                  std::span<const double> w,
                                  int binom_index) {
  switch (family) {
    case MarginalFamily::Normal: {
      require_support(family, x, w, 0);
      WeightedStats s = collect(x, w, false, false);
      double sigma = std::sqrt(s.var);
      bool degenerate = !(sigma >= kSigmaFloor);
      if (degenerate) sigma = kSigmaFloor;
      return {MarginalModel::normal(s.mean, sigma), degenerate};
    }

    case MarginalFamily::Binomial: {
      if (binom_index < 1)
        throw std::domain_error("fit_marginal_weighted: binomial index required");
      require_support(family, x, w, binom_index);
      WeightedStats s = collect(x, w, false, false);
      double p = s.mean / binom_index;
      bool degenerate = p < 1e-8 || p > 1.0 - 1e-8;
      p = std::clamp(p, 1e-8, 1.0 - 1e-8);
      return {MarginalModel::binomial(binom_index, p), degenerate};
    }

    case MarginalFamily::Gamma: {
      require_support(family, x, w, 0);
      WeightedStats s = collect(x, w, true, false);
      double v = std::max(s.var, 1e-12);
      double k0 = std::clamp(s.mean * s.mean / v, 1e-3, 1e6);
      double r0 = std::clamp(k0 / std::max(s.mean, 1e-12), 1e-8, 1e12);
      auto nll = [&](std::span<const double> t) {
        double k = std::exp(t[0]), r = std::exp(t[1]);
        if (!std::isfinite(k) || !std::isfinite(r)) return 1e308;
        double ll = (k - 1.0) * s.sum_log - r * s.sum_x +
                    s.W * (k * std::log(r) - std::lgamma(k));
        return -ll;
      };
      auto res = nelder_mead(nll, {std::log(k0), std::log(r0)}, {0.3, 0.3});
      return {MarginalModel::gamma(std::exp(res.x[0]), std::exp(res.x[1])), false};
    }

    case MarginalFamily::Beta: {
      require_support(family, x, w, 0);
      WeightedStats s = collect(x, w, true, true);
      static const BetaReparam rep;
      // moment start projected into the constrained region
      double m0 = s.mean, v0 = s.var;
      double denom = std::max(m0 * (1.0 - m0) / std::max(v0, 1e-10) - 1.0, 1e-3);
      auto [a0, b0] = rep.from_alpha_beta(std::max(m0 * denom, 1e-6),
                                          std::max((1.0 - m0) * denom, 1e-6));
      auto nll = [&](std::span<const double> t) {
        auto [alpha, beta] = rep.alpha_beta(t[0], t[1]);
        double lbeta = std::lgamma(alpha) + std::lgamma(beta) -
                       std::lgamma(alpha + beta);
        double ll = (alpha - 1.0) * s.sum_log + (beta - 1.0) * s.sum_log1m -
                    s.W * lbeta;
        return -ll;
      };
      auto res = nelder_mead(nll, {a0, b0}, {0.4, 0.4});
      auto [alpha, beta] = rep.alpha_beta(res.x[0], res.x[1]);
      // sample too concentrated for the feasible set: the floor decided
      return {MarginalModel::beta(alpha, beta), s.var < kBetaVarFloor};
    }
  }
  throw std::logic_error("fit_marginal_weighted: unknown family");
}

}  // namespace copmix
