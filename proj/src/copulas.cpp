#include "copmix/copulas.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "copmix/numerics.hpp"

namespace copmix {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

void check_cdf_args(std::span<const double> u, int dim) {
  if (static_cast<int>(u.size()) != dim)
    throw std::invalid_argument("copula cdf: argument dimension mismatch");
  for (double v : u)
    if (!(v >= 0.0 && v <= 1.0))
      throw std::domain_error("copula cdf: argument outside [0,1]");
}

void check_density_args(std::span<const double> u, int dim) {
  if (static_cast<int>(u.size()) != dim)
    throw std::invalid_argument("copula density: argument dimension mismatch");
  for (double v : u)
    if (!(v > 0.0 && v < 1.0))
      throw std::domain_error("copula density: argument outside (0,1)");
}

// log(e^{t1} + e^{t2} - 1) for t1, t2 >= 0, stable across magnitudes
double log_expsum_m1(double t1, double t2) {
  double m = std::max(t1, t2);
  if (m < 30.0) return std::log1p(std::expm1(t1) + std::expm1(t2));
  return m + std::log(std::exp(t1 - m) + std::exp(t2 - m) - std::exp(-m));
}

}  // namespace

std::string to_string(CopulaFamily f) {
  switch (f) {
    case CopulaFamily::Independence: return "independence";
    case CopulaFamily::Gumbel: return "gumbel";
    case CopulaFamily::Clayton: return "clayton";
    case CopulaFamily::Frank1: return "frank1";
    case CopulaFamily::Frank2: return "frank2";
    case CopulaFamily::Gaussian: return "gaussian";
  }
  return "?";
}

std::string to_string(Rotation r) {
  switch (r) {
    case Rotation::R0: return "0";
    case Rotation::R90: return "90";
    case Rotation::R180: return "180";
    case Rotation::R270: return "270";
  }
  return "?";
}

std::array<double, 2> rotate_u(Rotation r, double u1, double u2) {
  switch (r) {
    case Rotation::R0: return {u1, u2};
    case Rotation::R90: return {1.0 - u1, u2};
    case Rotation::R180: return {1.0 - u1, 1.0 - u2};
    case Rotation::R270: return {u1, 1.0 - u2};
  }
  return {u1, u2};
}

CopulaModel CopulaModel::independence(int dim) {
  if (dim < 1) throw std::domain_error("independence: dim must be >= 1");
  return CopulaModel(CopulaFamily::Independence, Rotation::R0, dim, {});
}

CopulaModel CopulaModel::gumbel(double psi, Rotation rot) {
  if (!(psi >= 1.0) || !std::isfinite(psi))
    throw std::domain_error("gumbel: psi must be >= 1");
  return CopulaModel(CopulaFamily::Gumbel, rot, 2, {psi});
}

CopulaModel CopulaModel::clayton(double psi, Rotation rot) {
  if (!(psi > 0.0) || !std::isfinite(psi))
    throw std::domain_error("clayton: psi must be > 0");
  return CopulaModel(CopulaFamily::Clayton, rot, 2, {psi});
}

CopulaModel CopulaModel::frank1(double psi, int dim) {
  if (!(psi != 0.0) || !std::isfinite(psi))
    throw std::domain_error("frank1: psi must be nonzero");
  if (dim != 2 && dim != 3)
    throw std::domain_error("frank1: dim must be 2 or 3");
  return CopulaModel(CopulaFamily::Frank1, Rotation::R0, dim, {psi});
}

CopulaModel CopulaModel::frank2(double psi1, double psi2) {
  if (!(psi1 > 0.0) || !(psi2 > psi1) || !std::isfinite(psi2))
    throw std::domain_error("frank2: need 0 < psi1 < psi2");
  return CopulaModel(CopulaFamily::Frank2, Rotation::R0, 3, {psi1, psi2});
}

CopulaModel CopulaModel::gaussian(CorrelationMatrix R) {
  if (R.dim() < 2) throw std::domain_error("gaussian copula: dim must be >= 2");
  CopulaModel m(CopulaFamily::Gaussian, Rotation::R0, R.dim(),
                R.structure() == CorrStructure::Exchangeable
                    ? std::vector<double>{R.matrix()(0, 1)}
                    : R.upper_offdiag());
  m.corr_.push_back(std::move(R));
  return m;
}

CopulaModel CopulaModel::with_params(const CopulaModel& like,
                                     std::span<const double> params) {
  std::vector<double> p(params.begin(), params.end());
  switch (like.family_) {
    case CopulaFamily::Independence:
      if (!p.empty()) throw std::invalid_argument("independence takes no params");
      return independence(like.dim_);
    case CopulaFamily::Gumbel:
      if (p.size() != 1) throw std::invalid_argument("gumbel takes one param");
      return gumbel(p[0], like.rot_);
    case CopulaFamily::Clayton:
      if (p.size() != 1) throw std::invalid_argument("clayton takes one param");
      return clayton(p[0], like.rot_);
    case CopulaFamily::Frank1:
      if (p.size() != 1) throw std::invalid_argument("frank1 takes one param");
      return frank1(p[0], like.dim_);
    case CopulaFamily::Frank2:
      if (p.size() != 2) throw std::invalid_argument("frank2 takes two params");
      return frank2(p[0], p[1]);
    case CopulaFamily::Gaussian: {
      const CorrelationMatrix& R = like.correlation();
      if (R.structure() == CorrStructure::Exchangeable) {
        if (p.size() != 1)
          throw std::invalid_argument("exchangeable gaussian takes one param");
        return gaussian(CorrelationMatrix::exchangeable(like.dim_, p[0]));
      }
      return gaussian(CorrelationMatrix::unstructured(like.dim_, p));
    }
  }
  throw std::logic_error("with_params: unknown family");
}

const CorrelationMatrix& CopulaModel::correlation() const {
  if (family_ != CopulaFamily::Gaussian)
    throw std::logic_error("correlation() is Gaussian-only");
  return corr_.front();
}

int CopulaModel::free_param_count() const {
  switch (family_) {
    case CopulaFamily::Independence: return 0;
    case CopulaFamily::Gumbel:
    case CopulaFamily::Clayton:
    case CopulaFamily::Frank1: return 1;
    case CopulaFamily::Frank2: return 2;
    case CopulaFamily::Gaussian: return corr_.front().free_param_count();
  }
  return 0;
}

double CopulaModel::cdf_base(std::span<const double> u) const {
  switch (family_) {
    case CopulaFamily::Independence: {
      double p = 1.0;
      for (double v : u) p *= v;
      return p;
    }
    case CopulaFamily::Gumbel: {
      for (double v : u)
        if (v == 0.0) return 0.0;
      const double psi = par_[0];
      double x1 = -std::log(u[0]), x2 = -std::log(u[1]);
      if (x1 == 0.0) return u[1];
      if (x2 == 0.0) return u[0];
      double ls = log_sum_exp(std::array{psi * std::log(x1), psi * std::log(x2)});
      return std::exp(-std::exp(ls / psi));
    }
    case CopulaFamily::Clayton: {
      for (double v : u)
        if (v == 0.0) return 0.0;
      const double psi = par_[0];
      double logT = log_expsum_m1(-psi * std::log(u[0]), -psi * std::log(u[1]));
      return std::exp(-logT / psi);
    }
    case CopulaFamily::Frank1: {
      const double psi = par_[0];
      const double zeta = std::expm1(-psi);
      double prod = 1.0;
      for (double v : u) prod *= std::expm1(-psi * v);
      double S = 1.0 + prod / std::pow(zeta, static_cast<double>(dim_ - 1));
      if (!(S > 0.0)) return 0.0;
      return -std::log(S) / psi;
    }
    case CopulaFamily::Frank2: {
      const double t1 = par_[0], t2 = par_[1];
      const double z1 = -std::expm1(-t1), z2 = -std::expm1(-t2);
      const double alpha = t1 / t2;
      double tau1 = -std::expm1(-t2 * u[0]);
      double tau2 = -std::expm1(-t2 * u[1]);
      double tau3 = -std::expm1(-t1 * u[2]);
      double M = 1.0 - tau1 * tau2 / z2;
      double Q = 1.0 - std::pow(M, alpha);
      double W = 1.0 - Q * tau3 / z1;
      if (!(W > 0.0)) return 1.0;  // numerically pinned at the upper corner
      return -std::log(W) / t1;
    }
    case CopulaFamily::Gaussian: {
      for (double v : u)
        if (v == 0.0) return 0.0;
      // coordinates at 1 drop out exactly (uniform-margin boundary)
      std::vector<int> active;
      for (int i = 0; i < dim_; ++i)
        if (u[i] < 1.0) active.push_back(i);
      if (active.empty()) return 1.0;
      if (active.size() == 1) return u[active[0]];
      const int pa = static_cast<int>(active.size());
      if (pa > 4)
        throw std::domain_error("gaussian copula cdf: supported up to dim 4");
      const CorrelationMatrix sub = pa == dim_
                                        ? corr_.front()
                                        : corr_.front().submatrix(active);
      Vector lo(pa), hi(pa);
      for (int i = 0; i < pa; ++i) {
        lo[i] = -kInf;
        hi[i] = norm_quantile(u[active[i]]);
      }
      return mvn_rectangle(lo, hi, sub);
    }
  }
  return 0.0;
}

double CopulaModel::cdf(std::span<const double> u) const {
  check_cdf_args(u, dim_);
  if (rot_ == Rotation::R0) return std::clamp(cdf_base(u), 0.0, 1.0);
  // bivariate rotations, expressed through the base CDF
  double u1 = u[0], u2 = u[1];
  double v;
  switch (rot_) {
    case Rotation::R90:
      v = u2 - cdf_base(std::array{1.0 - u1, u2});
      break;
    case Rotation::R180:
      v = u1 + u2 - 1.0 + cdf_base(std::array{1.0 - u1, 1.0 - u2});
      break;
    case Rotation::R270:
      v = u1 - cdf_base(std::array{u1, 1.0 - u2});
      break;
    default:
      v = cdf_base(u);
  }
  return std::clamp(v, 0.0, 1.0);
}

double CopulaModel::log_density_base(std::span<const double> u) const {
  switch (family_) {
    case CopulaFamily::Independence:
      return 0.0;

    case CopulaFamily::Gumbel: {
      const double psi = par_[0];
      double lx1 = std::log(-std::log(u[0]));
      double lx2 = std::log(-std::log(u[1]));
      double ls = log_sum_exp(std::array{psi * lx1, psi * lx2});
      double logA = ls / psi;
      double A = std::exp(logA);
      return -A + (psi - 1.0) * (lx1 + lx2) - std::log(u[0]) - std::log(u[1]) +
             (1.0 - 2.0 * psi) * logA + std::log(A + psi - 1.0);
    }

    case CopulaFamily::Clayton: {
      const double psi = par_[0];
      double logT = log_expsum_m1(-psi * std::log(u[0]), -psi * std::log(u[1]));
      return std::log1p(psi) - (psi + 1.0) * (std::log(u[0]) + std::log(u[1])) -
             (1.0 / psi + 2.0) * logT;
    }

    case CopulaFamily::Frank1: {
      const double psi = par_[0];
      const double zeta = std::expm1(-psi);
      if (dim_ == 2) {
        double a1 = std::expm1(-psi * u[0]);
        double a2 = std::expm1(-psi * u[1]);
        double D2 = zeta + a1 * a2;
        return std::log(-psi * zeta) - psi * (u[0] + u[1]) -
               2.0 * std::log(std::abs(D2));
      }
      double a1 = std::expm1(-psi * u[0]);
      double a2 = std::expm1(-psi * u[1]);
      double a3 = std::expm1(-psi * u[2]);
      double D = zeta * zeta;
      double w = a1 * a2 * a3;
      double r = w / (D + w);
      double val = (1.0 - r) * (1.0 - 2.0 * r);
      return 2.0 * std::log(std::abs(psi)) - psi * (u[0] + u[1] + u[2]) +
             std::log(val) - std::log(D + w);
    }

    case CopulaFamily::Frank2: {
      const double t1 = par_[0], t2 = par_[1];
      const double z1 = -std::expm1(-t1), z2 = -std::expm1(-t2);
      const double alpha = t1 / t2;
      const double tau1 = -std::expm1(-t2 * u[0]);
      const double tau2 = -std::expm1(-t2 * u[1]);
      const double tau3 = -std::expm1(-t1 * u[2]);
      const double M = 1.0 - tau1 * tau2 / z2;
      const double Ma = std::pow(M, alpha);
      const double W = 1.0 - (1.0 - Ma) * tau3 / z1;
      const double K1 = alpha * t2 * (1.0 - tau1) * tau2 * std::pow(M, alpha - 1.0) / (z1 * z2);
      const double K2 = alpha * t2 * (1.0 - tau2) * tau1 * std::pow(M, alpha - 1.0) / (z1 * z2);
      const double W1 = -K1 * tau3;
      const double W2 = -K2 * tau3;
      const double W3 = -(1.0 - Ma) * t1 * (1.0 - tau3) / z1;
      const double W12 =
          -tau3 * (alpha * t2 * t2 * (1.0 - tau1) * (1.0 - tau2) / (z1 * z2)) *
          (std::pow(M, alpha - 1.0) -
           (alpha - 1.0) * std::pow(M, alpha - 2.0) * tau1 * tau2 / z2);
      const double W13 = -K1 * t1 * (1.0 - tau3);
      const double W23 = -K2 * t1 * (1.0 - tau3);
      const double W123 = W12 * t1 * (1.0 - tau3) / tau3;
      double c = -(1.0 / t1) * (W123 / W - (W12 * W3 + W13 * W2 + W23 * W1) / (W * W) +
                                2.0 * W1 * W2 * W3 / (W * W * W));
      if (!(c > 0.0)) return -kInf;
      return std::log(c);
    }

    case CopulaFamily::Gaussian: {
      const CorrelationMatrix& R = corr_.front();
      Vector z(dim_);
      for (int i = 0; i < dim_; ++i) z[i] = norm_quantile(u[i]);
      Vector y = R.cholesky().triangularView<Eigen::Lower>().solve(z);
      return -0.5 * (R.log_det() + y.squaredNorm() - z.squaredNorm());
    }
  }
  return -kInf;
}

double CopulaModel::log_density(std::span<const double> u) const {
  check_density_args(u, dim_);
  if (rot_ == Rotation::R0) return log_density_base(u);
  auto v = rotate_u(rot_, u[0], u[1]);
  return log_density_base(std::span<const double>(v.data(), 2));
}

namespace {

// Logarithmic-series variate, Kemp's LK sampler.
int log_series(Rng& rng, double p) {
  double u2 = rng.uniform();
  if (u2 > p) return 1;
  double u1 = rng.uniform();
  double q = 1.0 - std::exp(u1 * std::log1p(-p));
  if (u2 < q * q)
    return static_cast<int>(std::floor(1.0 + std::log(u2) / std::log(q)));
  if (u2 > q) return 1;
  return 2;
}

// One-sided positive stable S(alpha) with Laplace transform exp(-t^alpha),
// Kanter's representation.
double positive_stable(Rng& rng, double alpha) {
  double theta = std::numbers::pi * rng.uniform();
  double w = rng.exponential();
  double a = std::pow(std::sin(alpha * theta), alpha / (1.0 - alpha)) *
             std::sin((1.0 - alpha) * theta) /
             std::pow(std::sin(theta), 1.0 / (1.0 - alpha));
  return std::pow(a / w, (1.0 - alpha) / alpha);
}

// Bivariate Frank conditional inverse: U2 | U1 = u1 at quantile v.
double frank2d_conditional_inverse(double psi, double u1, double v) {
  double zeta = std::expm1(-psi);
  double a1 = std::expm1(-psi * u1);
  double a2 = v * zeta / (1.0 + a1 * (1.0 - v));
  return -std::log1p(a2) / psi;
}

}  // namespace

void CopulaModel::sample_row(Rng& rng, std::span<double> out) const {
  if (static_cast<int>(out.size()) != dim_)
    throw std::invalid_argument("sample_row: output dimension mismatch");
  switch (family_) {
    case CopulaFamily::Independence: {
      for (int i = 0; i < dim_; ++i) out[i] = rng.uniform();
      return;
    }

    case CopulaFamily::Gumbel: {
      const double psi = par_[0];
      if (psi == 1.0) {
        out[0] = rng.uniform();
        out[1] = rng.uniform();
      } else {
        double alpha = 1.0 / psi;
        double v = positive_stable(rng, alpha);
        for (int i = 0; i < 2; ++i)
          out[i] = std::exp(-std::pow(rng.exponential() / v, alpha));
      }
      break;
    }

    case CopulaFamily::Clayton: {
      const double psi = par_[0];
      double v = rng.gamma(1.0 / psi);
      for (int i = 0; i < 2; ++i)
        out[i] = std::pow(1.0 + rng.exponential() / v, -1.0 / psi);
      break;
    }

    case CopulaFamily::Frank1: {
      const double psi = par_[0];
      if (dim_ == 2) {
        out[0] = rng.uniform();
        out[1] = frank2d_conditional_inverse(psi, out[0], rng.uniform());
      } else {
        if (!(psi > 0.0))
          throw std::domain_error("frank1 sampling: trivariate needs psi > 0");
        double p = -std::expm1(-psi);
        double zeta = std::expm1(-psi);
        int v = log_series(rng, p);
        for (int i = 0; i < 3; ++i) {
          double e = rng.exponential();
          out[i] = -std::log1p(zeta * std::exp(-e / v)) / psi;
        }
      }
      break;
    }

    case CopulaFamily::Frank2: {
      const double t1 = par_[0], t2 = par_[1];
      out[0] = rng.uniform();
      out[1] = frank2d_conditional_inverse(t2, out[0], rng.uniform());
      // invert the conditional CDF of U3 given (u1, u2) by bisection on the
      // analytic second mixed partial of the CDF
      const double z2 = -std::expm1(-t2);
      const double alpha = t1 / t2;
      const double tau1 = -std::expm1(-t2 * out[0]);
      const double tau2 = -std::expm1(-t2 * out[1]);
      const double M = 1.0 - tau1 * tau2 / z2;
      auto num = [&](double u3) {
        double tau3 = -std::expm1(-t1 * u3);
        double Ma = std::pow(M, alpha);
        double z1 = -std::expm1(-t1);
        double W = 1.0 - (1.0 - Ma) * tau3 / z1;
        double K1 = alpha * t2 * (1.0 - tau1) * tau2 * std::pow(M, alpha - 1.0) / (z1 * z2);
        double K2 = alpha * t2 * (1.0 - tau2) * tau1 * std::pow(M, alpha - 1.0) / (z1 * z2);
        double W12 =
            -tau3 * (alpha * t2 * t2 * (1.0 - tau1) * (1.0 - tau2) / (z1 * z2)) *
            (std::pow(M, alpha - 1.0) -
             (alpha - 1.0) * std::pow(M, alpha - 2.0) * tau1 * tau2 / z2);
        return W12 / W - (-K1 * tau3) * (-K2 * tau3) / (W * W);
      };
      double target = rng.uniform() * num(1.0);
      double lo = 1e-12, hi = 1.0 - 1e-12;
      for (int it = 0; it < 80; ++it) {
        double mid = 0.5 * (lo + hi);
        // num is negative and decreasing in u3; compare accordingly
        if (num(mid) > target)
          lo = mid;
        else
          hi = mid;
      }
      out[2] = 0.5 * (lo + hi);
      break;
    }

    case CopulaFamily::Gaussian: {
      const Matrix& L = corr_.front().cholesky();
      Vector z(dim_);
      for (int i = 0; i < dim_; ++i) z[i] = rng.normal();
      Vector x = L * z;
      for (int i = 0; i < dim_; ++i) out[i] = norm_cdf(x[i]);
      return;
    }
  }

  if (rot_ != Rotation::R0) {
    auto v = rotate_u(rot_, out[0], out[1]);
    out[0] = v[0];
    out[1] = v[1];
  }
  for (int i = 0; i < dim_; ++i) out[i] = std::clamp(out[i], 0.0, 1.0);
}

Matrix CopulaModel::sample(int n, std::uint64_t seed) const {
  if (n < 0) throw std::invalid_argument("sample: n must be >= 0");
  Rng rng(seed);
  Matrix m(n, dim_);
  std::vector<double> row(dim_);
  for (int i = 0; i < n; ++i) {
    sample_row(rng, row);
    for (int j = 0; j < dim_; ++j) m(i, j) = row[j];
  }
  return m;
}

CopulaModel CopulaModel::margin(const std::vector<int>& coords) const {
  const int m = static_cast<int>(coords.size());
  if (m < 1 || m > dim_)
    throw std::domain_error("copula margin: bad coordinate count");
  std::vector<bool> seen(dim_, false);
  for (int c : coords) {
    if (c < 0 || c >= dim_ || seen[c])
      throw std::domain_error("copula margin: bad coordinate subset");
    seen[c] = true;
  }
  if (m == dim_) {
    bool id = true;
    for (int i = 0; i < m; ++i) id = id && coords[i] == i;
    if (id) return *this;
  }
  if (m == 1) return independence(1);

  switch (family_) {
    case CopulaFamily::Independence:
      return independence(m);
    case CopulaFamily::Frank1:
      return frank1(par_[0], m);
    case CopulaFamily::Frank2: {
      // inner pair keeps psi2; any pair crossing the nest keeps psi1
      if (coords.size() == 2) {
        bool inner = (coords[0] == 0 && coords[1] == 1) ||
                     (coords[0] == 1 && coords[1] == 0);
        return frank1(inner ? par_[1] : par_[0], 2);
      }
      // full reorder is only the same model when the inner pair stays inner
      if (coords[2] == 2) return *this;
      throw std::domain_error("copula margin: not representable");
    }
    case CopulaFamily::Gaussian:
      return gaussian(corr_.front().submatrix(coords));
    case CopulaFamily::Gumbel:
    case CopulaFamily::Clayton:
      // bivariate; only full or singleton margins exist, handled above
      throw std::domain_error("copula margin: not representable");
  }
  throw std::logic_error("copula margin: unknown family");
}

}  // namespace copmix
