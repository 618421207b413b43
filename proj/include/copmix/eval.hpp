#pragma once

#include <span>
#include <vector>

#include "copmix/mixture.hpp"

namespace copmix {

// Bayesian information criterion: -2*loglik + q*log(n)
double bic(double loglik, int q, int n);

// Pair-counting adjusted Rand index; 1 for identical partitions, 0 in
// expectation under independent labelings. Invariant under relabeling of
// either argument.
double adjusted_rand(std::span<const int> a, std::span<const int> b);

// Fraction of disagreements after the best one-to-one matching of predicted
// to true classes (exhaustive over permutations up to 8 classes, Hungarian
// assignment beyond).
double misclassification(std::span<const int> pred, std::span<const int> truth);

// Lower-dimensional mixture over the selected coordinates (0-based, strictly
// increasing). Every component keeps its weight, its selected marginals, and
// the corresponding copula margin. Components carrying a rotation angle are
// rejected: a rotated density has no margin of the same form.
MixtureModel marginalize_mixture(const MixtureModel& m,
                                 std::span<const int> coords);

struct GridSpec {
  double x_min = 0.0, x_max = 1.0;
  int nx = 50;
  double y_min = 0.0, y_max = 1.0;
  int ny = 50;
};

// Mixture density over a rectangular grid of the two selected coordinates
// (the mixture is marginalized down to them first when it has more). Entry
// (iy, ix) holds the density at (x_min + ix*dx, y_min + iy*dy) with the ends
// included. Continuous mixtures only.
Matrix contour_grid(const MixtureModel& m, int coord_x, int coord_y,
                    const GridSpec& grid, int jobs = 1);

}  // namespace copmix
