#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "copmix/mixture.hpp"

namespace copmix {

struct PartitionResult {
  std::vector<int> labels;       // 0-based class per row
  std::vector<int> cardinality;  // class sizes, all > 0
};

// Hard partition from k randomly sampled rows: each observation joins the
// nearest sample (Euclidean on per-column standardized values, count columns
// treated as reals). Deterministic given seed; resamples when a class comes
// out empty, throwing after bounded retries.
PartitionResult partition_min_distance(const Dataset& data, int k,
                                       std::uint64_t seed);

// PAM-style k-medoids: swap descent from randomly sampled medoids on the
// same standardized distance, run to a local optimum. Deterministic given
// seed.
PartitionResult partition_kmedoids(const Dataset& data, int k,
                                   std::uint64_t seed);

struct IfmResult {
  MixtureModel model;
  std::vector<std::string> warnings;
};

// Starting values by inference functions from margins, per partition class:
// mixing weights from class shares, marginals by per-class MLE, copula
// parameters by maximizing the class likelihood of the probability-
// transformed values (count classes use the cell PMF). Classes smaller than
// p+1 borrow the rows of the nearest class for fitting (weights keep the
// original shares) and produce a warning. Free angles are oriented over the
// class before the first pass (profiled angle search, dependence refit at
// the winning orientation, one more angle pass).
IfmResult ifm_start(const MixtureSpec& spec, const Dataset& data,
                    const PartitionResult& part);

// number of distinct rearrangements of the component copulas of `spec`
int distinct_permutation_count(const MixtureSpec& spec);

// number of multisets of size k drawn from a dictionary of d copulas
unsigned long long dictionary_model_count(int d, int k);

struct PermutationSearchResult {
  FitReport best;
  int best_index = 0;              // position in enumeration order
  int n_arrangements = 0;
  std::vector<double> logliks;     // per arrangement
  std::vector<double> bics;        // per arrangement
};

// Fits every distinct assignment of the spec's component copulas to the
// component slots (marginals and angle modes stay with their slots), all
// from the same seeded starting partition, and returns the best fit.
// Non-degenerate fits are preferred; ties resolve to the earliest
// arrangement in enumeration order. Deterministic for any jobs count.
PermutationSearchResult permutation_search(const MixtureSpec& spec,
                                           const Dataset& data,
                                           const FitConfig& cfg);

// Start for a (k+1)-component fit from a fitted k-component model: appends
// `fresh` with the given weight and scales the existing weights by the
// complement.
MixtureModel sequential_init(const MixtureModel& fitted, Component fresh,
                             double new_weight = 0.05);

}  // namespace copmix
