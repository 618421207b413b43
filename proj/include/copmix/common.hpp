#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace copmix {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Copula arguments are clamped to this closed interval before density
// evaluation; keeps Phi^-1 and Archimedean generators finite.
inline constexpr double kUnitEps = 1e-10;

// Floor applied to cell probabilities inside mixture likelihoods.
inline constexpr double kPmfFloor = 1e-12;

// Smallest admissible scale for continuous marginals.
inline constexpr double kSigmaFloor = 1e-8;

// Smallest admissible fitted Beta variance.
inline constexpr double kBetaVarFloor = 1e-4;

inline double clamp_unit(double u) {
  if (u < kUnitEps) return kUnitEps;
  if (u > 1.0 - kUnitEps) return 1.0 - kUnitEps;
  return u;
}

double log_sum_exp(std::span<const double> v);

// splitmix64 step; used to derive independent substream seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

// Deterministic generator. All variates are produced from explicit
// transforms of mt19937_64 output, so a seed fixes the byte stream on
// every platform with the same IEEE doubles.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  // strictly inside (0,1)
  double uniform() {
    return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53;
  }
  double normal();           // inverse-CDF transform
  double exponential();      // rate 1
  double gamma(double shape);// unit scale, shape > 0
  // index into cumulative weights (weights sum to 1)
  int categorical(std::span<const double> weights);

  std::uint64_t raw() { return eng_(); }

 private:
  std::mt19937_64 eng_;
};

}  // namespace copmix
