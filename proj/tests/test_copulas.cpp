#include "doctest.h"

#include <array>
#include <cmath>
#include <vector>

#include "copmix/common.hpp"
#include "copmix/copulas.hpp"
#include "copmix/numerics.hpp"

using namespace copmix;

namespace {

double cdf2(const CopulaModel& c, double u, double v) {
  return c.cdf(std::array<double, 2>{u, v});
}

double den2(const CopulaModel& c, double u, double v) {
  return std::exp(c.log_density(std::array<double, 2>{u, v}));
}

// rectangle mass, the quantity a copula must keep nonnegative
double volume2(const CopulaModel& c, double a1, double b1, double a2, double b2) {
  return cdf2(c, b1, b2) - cdf2(c, a1, b2) - cdf2(c, b1, a2) + cdf2(c, a1, a2);
}

// central mixed second difference of the cdf
double fd_density2(const CopulaModel& c, double u, double v, double h) {
  return (cdf2(c, u + h, v + h) - cdf2(c, u + h, v - h) - cdf2(c, u - h, v + h) +
          cdf2(c, u - h, v - h)) /
         (4.0 * h * h);
}

// eight-corner mixed third difference for trivariate families
double fd_density3(const CopulaModel& c, double u, double v, double w, double h) {
  double s = 0.0;
  for (int b = 0; b < 8; ++b) {
    const double x = u + ((b & 1) ? h : -h);
    const double y = v + ((b & 2) ? h : -h);
    const double z = w + ((b & 4) ? h : -h);
    const int sign = ((b & 1) ? 1 : -1) * ((b & 2) ? 1 : -1) * ((b & 4) ? 1 : -1);
    s += sign * c.cdf(std::array<double, 3>{x, y, z});
  }
  return s / (8.0 * h * h * h);
}

double sampled_kendall_tau(const CopulaModel& c, int n, std::uint64_t seed) {
  Matrix u = c.sample(n, seed);
  long long conc = 0, disc = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double s = (u(i, 0) - u(j, 0)) * (u(i, 1) - u(j, 1));
      if (s > 0) ++conc;
      else if (s < 0) ++disc;
    }
  return static_cast<double>(conc - disc) / (0.5 * n * (n - 1));
}

std::vector<CopulaModel> bivariate_zoo() {
  return {CopulaModel::independence(2),
          CopulaModel::gumbel(2.5),
          CopulaModel::gumbel(1.8, Rotation::R90),
          CopulaModel::gumbel(3.0, Rotation::R180),
          CopulaModel::clayton(2.0),
          CopulaModel::clayton(1.2, Rotation::R270),
          CopulaModel::clayton(4.0, Rotation::R180),
          CopulaModel::frank1(3.0, 2),
          CopulaModel::frank1(-4.0, 2),
          CopulaModel::gaussian(CorrelationMatrix::exchangeable(2, 0.6)),
          CopulaModel::gaussian(CorrelationMatrix::exchangeable(2, -0.4))};
}

}  // namespace

TEST_SUITE("copulas") {

TEST_CASE("parameter domains are enforced") {
  CHECK_THROWS_AS(CopulaModel::gumbel(0.99), std::domain_error);
  CHECK_NOTHROW(CopulaModel::gumbel(1.0));
  CHECK_THROWS_AS(CopulaModel::clayton(0.0), std::domain_error);
  CHECK_THROWS_AS(CopulaModel::clayton(-1.0), std::domain_error);
  CHECK_THROWS_AS(CopulaModel::frank1(0.0), std::domain_error);
  CHECK_THROWS_AS(CopulaModel::frank1(2.0, 4), std::domain_error);
  CHECK_THROWS_AS(CopulaModel::frank2(2.0, 2.0), std::domain_error);
  CHECK_THROWS_AS(CopulaModel::frank2(-1.0, 2.0), std::domain_error);
  CHECK_THROWS_AS(CopulaModel::frank2(3.0, 2.0), std::domain_error);
  CHECK_NOTHROW(CopulaModel::frank2(1.0, 2.0));
  CHECK_THROWS_AS(CopulaModel::independence(0), std::domain_error);
}

TEST_CASE("with_params keeps shape and validates values") {
  CopulaModel g = CopulaModel::gumbel(2.0, Rotation::R90);
  CopulaModel g2 = CopulaModel::with_params(g, std::vector<double>{3.5});
  CHECK(g2.family() == CopulaFamily::Gumbel);
  CHECK(g2.rotation() == Rotation::R90);
  CHECK(g2.params()[0] == doctest::Approx(3.5));
  CHECK_THROWS(CopulaModel::with_params(g, std::vector<double>{0.5}));
  CHECK_THROWS(CopulaModel::with_params(g, std::vector<double>{2.0, 3.0}));

  CopulaModel ge = CopulaModel::gaussian(CorrelationMatrix::exchangeable(3, 0.2));
  CopulaModel ge2 = CopulaModel::with_params(ge, std::vector<double>{0.7});
  CHECK(ge2.correlation().rho() == doctest::Approx(0.7));
  CHECK(ge2.correlation().structure() == CorrStructure::Exchangeable);
}

TEST_CASE("uniform-margin boundary conditions hold for every family") {
  std::vector<CopulaModel> zoo = bivariate_zoo();
  for (const auto& c : zoo) {
    for (double u : {0.0, 0.2, 0.5, 0.85, 1.0}) {
      CHECK(std::abs(cdf2(c, u, 1.0) - u) <= 1e-12);
      CHECK(std::abs(cdf2(c, 1.0, u) - u) <= 1e-12);
      CHECK(std::abs(cdf2(c, u, 0.0)) <= 1e-12);
      CHECK(std::abs(cdf2(c, 0.0, u)) <= 1e-12);
    }
  }
  for (const auto& c : {CopulaModel::frank1(2.5, 3), CopulaModel::frank2(0.8, 2.5),
                        CopulaModel::gaussian(CorrelationMatrix::exchangeable(3, 0.4)),
                        CopulaModel::independence(3)}) {
    for (double u : {0.0, 0.3, 0.7, 1.0})
      for (double v : {0.0, 0.4, 1.0}) {
        CHECK(std::abs(c.cdf(std::array<double, 3>{u, v, 1.0}) - cdf2(c.margin({0, 1}), u, v)) <= 1e-12);
        CHECK(std::abs(c.cdf(std::array<double, 3>{u, 0.0, v})) <= 1e-12);
      }
  }
}

TEST_CASE("clayton closed-form value") {
  // C(0.5, 0.5) with psi = 2: (2^2 + 2^2 - 1)^(-1/2) = 7^(-1/2)
  CopulaModel c = CopulaModel::clayton(2.0);
  CHECK(std::abs(cdf2(c, 0.5, 0.5) - 1.0 / std::sqrt(7.0)) < 1e-14);
}

TEST_CASE("independence copula is the product") {
  CopulaModel c = CopulaModel::independence(3);
  CHECK(std::abs(c.cdf(std::array<double, 3>{0.3, 0.5, 0.9}) - 0.135) < 1e-15);
  CHECK(std::abs(c.log_density(std::array<double, 3>{0.3, 0.5, 0.9})) < 1e-15);
}

TEST_CASE("density equals the mixed difference of the cdf (bivariate)") {
  const double h = 3e-4;
  for (const auto& c : bivariate_zoo()) {
    if (c.family() == CopulaFamily::Gaussian) continue;  // separate case below
    for (double u : {0.15, 0.4, 0.7})
      for (double v : {0.25, 0.55, 0.8}) {
        const double fd = fd_density2(c, u, v, h);
        const double den = den2(c, u, v);
        CHECK(std::abs(fd - den) < 2e-4 * std::max(1.0, den));
      }
  }
}

TEST_CASE("gaussian copula density: closed form and quadrature cdf agree") {
  for (double rho : {-0.4, 0.35, 0.7}) {
    CopulaModel c = CopulaModel::gaussian(CorrelationMatrix::exchangeable(2, rho));
    for (double u : {0.2, 0.5, 0.77})
      for (double v : {0.3, 0.6, 0.9}) {
        const double z1 = norm_quantile(u), z2 = norm_quantile(v);
        const double det = 1.0 - rho * rho;
        const double expo = -(rho * rho * (z1 * z1 + z2 * z2) - 2.0 * rho * z1 * z2) / (2.0 * det);
        const double closed = -0.5 * std::log(det) + expo;
        CHECK(std::abs(c.log_density(std::array<double, 2>{u, v}) - closed) < 1e-12);
        // cdf carries quadrature noise, so the step is wider here
        const double fd = fd_density2(c, u, v, 3e-3);
        CHECK(std::abs(fd - std::exp(closed)) < 5e-4 * std::max(1.0, std::exp(closed)));
      }
  }
}

TEST_CASE("density equals the mixed difference of the cdf (trivariate)") {
  const double h = 1e-3;
  for (const auto& c : {CopulaModel::frank1(2.0, 3), CopulaModel::frank1(-3.0, 3),
                        CopulaModel::frank2(0.8, 2.5)}) {
    for (double u : {0.3, 0.6})
      for (double v : {0.25, 0.7})
        for (double w : {0.4, 0.65}) {
          const double fd = fd_density3(c, u, v, w, h);
          const double den = std::exp(c.log_density(std::array<double, 3>{u, v, w}));
          CHECK(std::abs(fd - den) < 2e-3 * std::max(1.0, den));
        }
  }
}

TEST_CASE("rotation reflects the cdf the documented way") {
  CopulaModel base_g = CopulaModel::gumbel(2.2);
  CopulaModel base_c = CopulaModel::clayton(1.7);
  for (double u : {0.1, 0.45, 0.8})
    for (double v : {0.2, 0.6, 0.95}) {
      CHECK(std::abs(cdf2(CopulaModel::gumbel(2.2, Rotation::R90), u, v) -
                     (v - cdf2(base_g, 1.0 - u, v))) < 1e-14);
      CHECK(std::abs(cdf2(CopulaModel::gumbel(2.2, Rotation::R180), u, v) -
                     (u + v - 1.0 + cdf2(base_g, 1.0 - u, 1.0 - v))) < 1e-14);
      CHECK(std::abs(cdf2(CopulaModel::clayton(1.7, Rotation::R270), u, v) -
                     (u - cdf2(base_c, u, 1.0 - v))) < 1e-14);
      // density of the rotation is the base density at the reflected point
      for (Rotation r : {Rotation::R90, Rotation::R180, Rotation::R270}) {
        CopulaModel rot = CopulaModel::clayton(1.7, r);
        auto m = rotate_u(r, u, v);
        CHECK(std::abs(rot.log_density(std::array<double, 2>{u, v}) -
                       base_c.log_density(m)) < 1e-13);
      }
    }
  auto id = rotate_u(Rotation::R0, 0.3, 0.8);
  CHECK(id[0] == doctest::Approx(0.3));
  CHECK(id[1] == doctest::Approx(0.8));
}

TEST_CASE("random rectangles always carry nonnegative mass") {
  Rng rng(404);
  for (const auto& c : bivariate_zoo()) {
    for (int it = 0; it < 200; ++it) {
      double a1 = rng.uniform(), b1 = rng.uniform();
      double a2 = rng.uniform(), b2 = rng.uniform();
      if (a1 > b1) std::swap(a1, b1);
      if (a2 > b2) std::swap(a2, b2);
      CHECK(volume2(c, a1, b1, a2, b2) >= -1e-12);
    }
  }
}

TEST_CASE("exchangeable families are symmetric in their arguments") {
  for (const auto& c : {CopulaModel::gumbel(2.0), CopulaModel::clayton(3.0),
                        CopulaModel::frank1(4.0, 2),
                        CopulaModel::gaussian(CorrelationMatrix::exchangeable(2, 0.5))}) {
    for (double u : {0.2, 0.5})
      for (double v : {0.35, 0.9}) {
        CHECK(cdf2(c, u, v) == doctest::Approx(cdf2(c, v, u)).epsilon(1e-13));
        CHECK(den2(c, u, v) == doctest::Approx(den2(c, v, u)).epsilon(1e-12));
      }
  }
}

TEST_CASE("sampled pairs reproduce kendall tau") {
  // tau: Clayton psi/(psi+2), Gumbel 1-1/psi, Gaussian 2*asin(rho)/pi
  CHECK(std::abs(sampled_kendall_tau(CopulaModel::clayton(2.0), 2000, 11) - 0.5) < 0.05);
  CHECK(std::abs(sampled_kendall_tau(CopulaModel::gumbel(2.0), 2000, 12) - 0.5) < 0.05);
  CHECK(std::abs(sampled_kendall_tau(
                     CopulaModel::gaussian(CorrelationMatrix::exchangeable(2, 0.5)),
                     2000, 13) -
                 1.0 / 3.0) < 0.05);
  // a half-turn preserves concordance; quarter turns flip its sign
  CHECK(std::abs(sampled_kendall_tau(CopulaModel::clayton(2.0, Rotation::R180), 2000, 14) - 0.5) < 0.05);
  CHECK(std::abs(sampled_kendall_tau(CopulaModel::clayton(2.0, Rotation::R90), 2000, 15) + 0.5) < 0.05);
  CHECK(std::abs(sampled_kendall_tau(CopulaModel::frank1(-4.0, 2), 2000, 16) +
                 sampled_kendall_tau(CopulaModel::frank1(4.0, 2), 2000, 17)) < 0.07);
}

TEST_CASE("sampling is deterministic and has uniform margins") {
  CopulaModel c = CopulaModel::frank2(1.0, 3.0);
  Matrix a = c.sample(200, 99), b = c.sample(200, 99);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.rows() == 200);
  CHECK(a.cols() == 3);

  for (const auto& m : {CopulaModel::gumbel(2.5, Rotation::R90),
                        CopulaModel::clayton(3.0, Rotation::R180),
                        CopulaModel::frank1(3.0, 3),
                        CopulaModel::frank2(0.7, 2.2),
                        CopulaModel::gaussian(CorrelationMatrix::unstructured(
                            3, {0.5, 0.2, -0.3}))}) {
    Matrix u = m.sample(4000, 7);
    for (int t = 0; t < u.cols(); ++t) {
      for (double q : {0.25, 0.5, 0.75}) {
        int cnt = 0;
        for (int i = 0; i < u.rows(); ++i) cnt += u(i, t) <= q;
        CHECK(std::abs(cnt / 4000.0 - q) < 0.03);
      }
      CHECK(u.col(t).minCoeff() > 0.0);
      CHECK(u.col(t).maxCoeff() < 1.0);
    }
  }
}

TEST_CASE("sampled joint mass tracks the cdf") {
  for (const auto& c : {CopulaModel::clayton(2.5), CopulaModel::gumbel(2.0, Rotation::R180),
                        CopulaModel::gaussian(CorrelationMatrix::exchangeable(2, -0.5))}) {
    Matrix u = c.sample(6000, 21);
    int cnt = 0;
    for (int i = 0; i < u.rows(); ++i) cnt += u(i, 0) <= 0.5 && u(i, 1) <= 0.5;
    CHECK(std::abs(cnt / 6000.0 - cdf2(c, 0.5, 0.5)) < 0.03);
  }
}

TEST_CASE("frank2 nests frank1 pair margins") {
  CopulaModel f2 = CopulaModel::frank2(0.9, 2.8);
  CopulaModel inner = f2.margin({0, 1});
  CHECK(inner.family() == CopulaFamily::Frank1);
  CHECK(inner.params()[0] == doctest::Approx(2.8));
  for (const auto& coords : {std::vector<int>{0, 2}, std::vector<int>{1, 2}}) {
    CopulaModel outer = f2.margin(coords);
    CHECK(outer.params()[0] == doctest::Approx(0.9));
  }
  // integrating the third coordinate out of the cdf hits the pair margin
  for (double u : {0.2, 0.5, 0.8})
    for (double v : {0.3, 0.7}) {
      CHECK(std::abs(f2.cdf(std::array<double, 3>{u, v, 1.0}) - cdf2(inner, u, v)) < 1e-12);
      CHECK(std::abs(f2.cdf(std::array<double, 3>{u, 1.0, v}) -
                     cdf2(f2.margin({0, 2}), u, v)) < 1e-12);
    }
  CHECK(f2.margin({1, 0, 2}).family() == CopulaFamily::Frank2);
  CHECK_THROWS_AS(f2.margin({0, 2, 1}), std::domain_error);
}

TEST_CASE("margins reduce families the expected way") {
  CopulaModel f3 = CopulaModel::frank1(2.0, 3);
  CopulaModel f2 = f3.margin({0, 2});
  CHECK(f2.dim() == 2);
  CHECK(f2.params()[0] == doctest::Approx(2.0));

  CopulaModel g = CopulaModel::gaussian(
      CorrelationMatrix::unstructured(3, {0.5, 0.2, -0.3}));
  CopulaModel gm = g.margin({2, 0});
  CHECK(gm.correlation().matrix()(0, 1) == doctest::Approx(0.2));
  for (double u : {0.3, 0.6})
    for (double v : {0.25, 0.8})
      CHECK(std::abs(g.cdf(std::array<double, 3>{v, 1.0, u}) - cdf2(gm, u, v)) < 1e-6);

  CHECK(CopulaModel::clayton(2.0).margin({1}).family() == CopulaFamily::Independence);
  CHECK(CopulaModel::gumbel(2.0, Rotation::R90).margin({0, 1}).rotation() == Rotation::R90);
  CHECK_THROWS_AS(CopulaModel::gumbel(2.0).margin({1, 0}), std::domain_error);
  CHECK_THROWS_AS(f3.margin({0, 0}), std::domain_error);
  CHECK_THROWS_AS(f3.margin({3}), std::domain_error);
  CHECK_THROWS_AS(f3.margin(std::vector<int>{}), std::domain_error);
}

TEST_CASE("argument validation on evaluation") {
  CopulaModel c = CopulaModel::clayton(2.0);
  CHECK_THROWS_AS(c.cdf(std::array<double, 2>{-0.1, 0.5}), std::domain_error);
  CHECK_THROWS_AS(c.cdf(std::array<double, 2>{0.3, 1.2}), std::domain_error);
  CHECK_THROWS_AS((void)c.cdf(std::array<double, 3>{0.2, 0.3, 0.4}),
                  std::invalid_argument);
  CHECK_THROWS_AS(c.log_density(std::array<double, 2>{0.0, 0.5}), std::domain_error);
  CHECK_THROWS_AS(c.log_density(std::array<double, 2>{0.5, 1.0}), std::domain_error);
}

}  // TEST_SUITE
