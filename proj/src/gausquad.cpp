#include "copmix/gausquad.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "copmix/numerics.hpp"

namespace copmix {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
// Phi is 0/1 to double precision past this point.
constexpr double kZCut = 8.5;
}  // namespace

CorrelationMatrix::CorrelationMatrix(Matrix r, CorrStructure s)
    : r_(std::move(r)), structure_(s) {
  const int p = static_cast<int>(r_.rows());
  if (p < 1 || r_.cols() != p)
    throw std::domain_error("correlation: matrix must be square");
  for (int i = 0; i < p; ++i) {
    if (std::abs(r_(i, i) - 1.0) > 1e-12)
      throw std::domain_error("correlation: diagonal must be 1");
    for (int j = 0; j < i; ++j) {
      if (std::abs(r_(i, j) - r_(j, i)) > 1e-12)
        throw std::domain_error("correlation: matrix must be symmetric");
      if (!(std::abs(r_(i, j)) < 1.0))
        throw std::domain_error("correlation: off-diagonal must be in (-1,1)");
    }
  }
  Eigen::LLT<Matrix> llt(r_);
  if (llt.info() != Eigen::Success)
    throw std::domain_error("correlation: matrix must be positive definite");
  chol_ = llt.matrixL();
  log_det_ = 0.0;
  for (int i = 0; i < p; ++i) {
    if (!(chol_(i, i) > 1e-8))
      throw std::domain_error("correlation: matrix must be positive definite");
    log_det_ += 2.0 * std::log(chol_(i, i));
  }
}

CorrelationMatrix CorrelationMatrix::identity(int dim) {
  if (dim < 1) throw std::domain_error("correlation: dim must be >= 1");
  return CorrelationMatrix(Matrix::Identity(dim, dim),
                           CorrStructure::Exchangeable);
}

CorrelationMatrix CorrelationMatrix::exchangeable(int dim, double rho) {
  if (dim < 2) throw std::domain_error("correlation: exchangeable needs dim >= 2");
  double lo = -1.0 / (dim - 1);
  if (!(rho > lo && rho < 1.0))
    throw std::domain_error("correlation: exchangeable rho out of (-1/(p-1), 1)");
  Matrix r = Matrix::Constant(dim, dim, rho);
  r.diagonal().setOnes();
  return CorrelationMatrix(std::move(r), CorrStructure::Exchangeable);
}

CorrelationMatrix CorrelationMatrix::unstructured(
    int dim, const std::vector<double>& offdiag) {
  if (dim < 2) throw std::domain_error("correlation: unstructured needs dim >= 2");
  if (static_cast<int>(offdiag.size()) != dim * (dim - 1) / 2)
    throw std::domain_error("correlation: need dim*(dim-1)/2 off-diagonal entries");
  Matrix r = Matrix::Identity(dim, dim);
  int idx = 0;
  for (int i = 0; i < dim; ++i)
    for (int j = i + 1; j < dim; ++j) {
      r(i, j) = offdiag[idx];
      r(j, i) = offdiag[idx];
      ++idx;
    }
  return CorrelationMatrix(std::move(r), CorrStructure::Unstructured);
}

double CorrelationMatrix::rho() const {
  if (structure_ != CorrStructure::Exchangeable || dim() < 2)
    throw std::logic_error("correlation: rho() is exchangeable-only");
  return r_(0, 1);
}

std::vector<double> CorrelationMatrix::upper_offdiag() const {
  std::vector<double> out;
  for (int i = 0; i < dim(); ++i)
    for (int j = i + 1; j < dim(); ++j) out.push_back(r_(i, j));
  return out;
}

int CorrelationMatrix::free_param_count() const {
  if (dim() < 2) return 0;
  return structure_ == CorrStructure::Exchangeable ? 1
                                                   : dim() * (dim() - 1) / 2;
}

CorrelationMatrix CorrelationMatrix::submatrix(
    const std::vector<int>& coords) const {
  const int m = static_cast<int>(coords.size());
  if (m < 1) throw std::domain_error("correlation: empty coordinate subset");
  for (int c : coords)
    if (c < 0 || c >= dim())
      throw std::domain_error("correlation: coordinate out of range");
  Matrix r(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) r(i, j) = r_(coords[i], coords[j]);
  return CorrelationMatrix(std::move(r), structure_);
}

double mvn_logdensity(const Vector& z, const CorrelationMatrix& R) {
  const int p = R.dim();
  if (z.size() != p) throw std::invalid_argument("mvn_logdensity: dim mismatch");
  // Solve L y = z; quadratic form is |y|^2.
  Vector y = R.cholesky().triangularView<Eigen::Lower>().solve(z);
  return -0.5 * (p * std::log(2.0 * std::numbers::pi) + R.log_det() +
                 y.squaredNorm());
}

namespace {

double phi_diff(double a, double b) {
  // Phi(b) - Phi(a), stable for both tails
  if (a >= b) return 0.0;
  return std::max(0.0, norm_cdf(b) - norm_cdf(a));
}

double rect2(double a1, double b1, double a2, double b2, double rho) {
  double lo = std::max(a1, -kZCut), hi = std::min(b1, kZCut);
  if (lo >= hi) return 0.0;
  const double s = std::sqrt(1.0 - rho * rho);
  const int panels = std::abs(rho) > 0.9 ? 24 : 10;
  auto f = [&](double z) {
    double c_lo = (a2 == -kInf) ? -kInf : (a2 - rho * z) / s;
    double c_hi = (b2 == kInf) ? kInf : (b2 - rho * z) / s;
    double inner = (c_hi == kInf ? 1.0 : norm_cdf(c_hi)) -
                   (c_lo == -kInf ? 0.0 : norm_cdf(c_lo));
    return std::exp(norm_logpdf(z)) * std::max(inner, 0.0);
  };
  return integrate(f, lo, hi, 24, panels);
}

// Separation-of-variables rectangle for p = 3, 4: after the Cholesky
// substitution the probability becomes an integral over the unit cube of
// dimension p-1; a tensor Gauss-Legendre rule evaluates it. Variables are
// ordered narrowest marginal interval first.
double rect_sov(const Vector& lo, const Vector& hi, const CorrelationMatrix& R) {
  const int p = R.dim();
  std::vector<int> ord(p);
  for (int i = 0; i < p; ++i) ord[i] = i;
  std::vector<double> width(p);
  for (int i = 0; i < p; ++i)
    width[i] = phi_diff(lo[i] == -kInf ? -kZCut : lo[i],
                        hi[i] == kInf ? kZCut : hi[i]);
  std::stable_sort(ord.begin(), ord.end(),
                   [&](int a, int b) { return width[a] < width[b]; });

  Vector a(p), b(p);
  std::vector<int> inv(p);
  for (int i = 0; i < p; ++i) {
    a[i] = lo[ord[i]];
    b[i] = hi[ord[i]];
    inv[i] = ord[i];
  }
  CorrelationMatrix Rp = R.submatrix(inv);
  const Matrix& L = Rp.cholesky();

  // The quantile's derivative is unbounded at w -> 0, 1 when an interval
  // reaches into a tail, so a single rule converges only algebraically;
  // panels graded toward both endpoints restore fast convergence.
  static constexpr std::array<double, 9> kBreaks = {
      0.0,     1.0 / 4096,  1.0 / 256,     1.0 / 16,        1.0 / 2,
      15.0 / 16, 255.0 / 256, 4095.0 / 4096, 1.0};
  const int n = p == 3 ? 12 : 10;
  const GaussLegendre& rule = gauss_legendre(n);

  double d1 = a[0] == -kInf ? 0.0 : norm_cdf(a[0] / L(0, 0));
  double e1 = b[0] == kInf ? 1.0 : norm_cdf(b[0] / L(0, 0));
  if (e1 <= d1) return 0.0;

  auto clamp01 = [](double v) { return std::clamp(v, 1e-16, 1.0 - 1e-16); };

  // recursion over tensor grid; depth p-1 <= 3
  std::vector<double> y(p, 0.0);
  std::vector<double> dcur(p), ecur(p);
  dcur[0] = d1;
  ecur[0] = e1;

  std::function<double(int)> level = [&](int i) -> double {
    // integrate over w_i, producing y[i] and the factor for row i+1
    double total = 0.0;
    for (size_t seg = 0; seg + 1 < kBreaks.size(); ++seg) {
      const double span = kBreaks[seg + 1] - kBreaks[seg];
      for (int q = 0; q < n; ++q) {
        double w = kBreaks[seg] + span * rule.x[q];
        y[i - 1] = norm_quantile(
            clamp01(dcur[i - 1] + w * (ecur[i - 1] - dcur[i - 1])));
        double shift = 0.0;
        for (int j = 0; j < i; ++j) shift += L(i, j) * y[j];
        double di = a[i] == -kInf ? 0.0 : norm_cdf((a[i] - shift) / L(i, i));
        double ei = b[i] == kInf ? 1.0 : norm_cdf((b[i] - shift) / L(i, i));
        double f = std::max(ei - di, 0.0);
        if (f > 0.0 && i + 1 < p) {
          dcur[i] = di;
          ecur[i] = ei;
          f *= level(i + 1);
        }
        total += span * rule.w[q] * f;
      }
    }
    return total;
  };

  return (e1 - d1) * level(1);
}

}  // namespace

double mvn_rectangle(const Vector& lo, const Vector& hi,
                     const CorrelationMatrix& R) {
  const int p = R.dim();
  if (lo.size() != p || hi.size() != p)
    throw std::invalid_argument("mvn_rectangle: dim mismatch");
  if (p > 4)
    throw std::domain_error("mvn_rectangle: supported up to dimension 4");
  for (int i = 0; i < p; ++i) {
    if (std::isnan(lo[i]) || std::isnan(hi[i]))
      throw std::domain_error("mvn_rectangle: NaN bound");
    if (lo[i] >= hi[i]) return 0.0;
  }

  double v = 0.0;
  if (p == 1) {
    v = phi_diff(lo[0], hi[0]);
  } else if (p == 2) {
    double rho = R.matrix()(0, 1);
    if (rho == 0.0)
      v = phi_diff(lo[0], hi[0]) * phi_diff(lo[1], hi[1]);
    else
      v = rect2(lo[0], hi[0], lo[1], hi[1], rho);
  } else {
    bool indep = true;
    for (int i = 0; i < p && indep; ++i)
      for (int j = i + 1; j < p; ++j)
        if (R.matrix()(i, j) != 0.0) {
          indep = false;
          break;
        }
    if (indep) {
      v = 1.0;
      for (int i = 0; i < p; ++i) v *= phi_diff(lo[i], hi[i]);
    } else {
      v = rect_sov(lo, hi, R);
    }
  }
  return std::clamp(v, 0.0, 1.0);
}

}  // namespace copmix
