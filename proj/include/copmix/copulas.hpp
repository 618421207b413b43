#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "copmix/common.hpp"
#include "copmix/gausquad.hpp"

namespace copmix {

enum class CopulaFamily { Independence, Gumbel, Clayton, Frank1, Frank2, Gaussian };
enum class Rotation { R0, R90, R180, R270 };

std::string to_string(CopulaFamily f);
std::string to_string(Rotation r);

// Argument reflection for a rotated bivariate copula: the density of the
// rotated copula at (u1,u2) is the base density at rotate_u(u1,u2).
std::array<double, 2> rotate_u(Rotation r, double u1, double u2);

// Copula families:
//   Independence        any dimension >= 1
//   Gumbel(psi >= 1)    bivariate, optional rotation
//   Clayton(psi > 0)    bivariate, optional rotation
//   Frank1(psi != 0)    one-parameter Frank, dimension 2 or 3 (default 3)
//   Frank2(0<psi1<psi2) trivariate nested Frank; (u1,u2) inner pair
//   Gaussian(R)         dimension >= 2, exchangeable or unstructured R
// Parameter domains are validated at construction (std::domain_error).
class CopulaModel {
 public:
  static CopulaModel independence(int dim);
  static CopulaModel gumbel(double psi, Rotation rot = Rotation::R0);
  static CopulaModel clayton(double psi, Rotation rot = Rotation::R0);
  static CopulaModel frank1(double psi, int dim = 3);
  static CopulaModel frank2(double psi1, double psi2);
  static CopulaModel gaussian(CorrelationMatrix R);
  // Same family/rotation/dimension/structure, new parameter vector.
  static CopulaModel with_params(const CopulaModel& like,
                                 std::span<const double> params);

  CopulaFamily family() const { return family_; }
  Rotation rotation() const { return rot_; }
  int dim() const { return dim_; }
  // {psi} | {psi1,psi2} | Gaussian upper off-diagonal (exchangeable: {rho})
  const std::vector<double>& params() const { return par_; }
  const CorrelationMatrix& correlation() const;
  int free_param_count() const;

  // u in [0,1]^dim (throws otherwise)
  double cdf(std::span<const double> u) const;
  // u strictly inside (0,1)^dim; callers clamp first (see clamp_unit)
  double log_density(std::span<const double> u) const;

  // n x dim matrix of dependent uniforms; deterministic given seed.
  Matrix sample(int n, std::uint64_t seed) const;
  void sample_row(Rng& rng, std::span<double> out) const;

  // Copula of the margin over the given coordinates (ascending order not
  // required; order is preserved). Gaussian restricts R; Frank families and
  // scalar Archimedeans reduce in closed form; singleton margins are
  // Independence. Throws when the margin leaves the representable families.
  CopulaModel margin(const std::vector<int>& coords) const;

 private:
  CopulaModel(CopulaFamily f, Rotation r, int dim, std::vector<double> par)
      : family_(f), rot_(r), dim_(dim), par_(std::move(par)) {}

  double cdf_base(std::span<const double> u) const;  // rotation-free CDF
  double log_density_base(std::span<const double> u) const;

  CopulaFamily family_;
  Rotation rot_;
  int dim_;
  std::vector<double> par_;
  std::vector<CorrelationMatrix> corr_;  // Gaussian: one entry
};

}  // namespace copmix
