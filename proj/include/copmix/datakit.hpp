#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "copmix/common.hpp"

namespace copmix {

class MixtureModel;

// Column domain: continuous real column, or bounded count column taking
// integer values in {0, ..., index}.
struct ColumnDomain {
  bool count = false;
  int index = 0;
};

struct Dataset {
  Matrix values;  // n x p
  std::vector<std::string> names;
  std::vector<ColumnDomain> domains;
  std::vector<int> labels;  // empty when no truth labels

  int n() const { return static_cast<int>(values.rows()); }
  int p() const { return static_cast<int>(values.cols()); }
  bool all_count() const;
  bool all_continuous() const;
  bool has_labels() const { return !labels.empty(); }
  // checks shape coherence and that count cells are integers in range
  void validate() const;
};

// CSV with annotated header: `name:cont` for continuous columns,
// `name:count:m` for counts, plain `label` for the optional integer truth
// column. A bare `name` is accepted as continuous (warning on stderr).
// Values round-trip exactly (written with max double precision).
Dataset read_csv(const std::string& path);
void write_csv(const Dataset& d, const std::string& path);

// n draws from a fully specified mixture; deterministic given seed.
// Labels record the generating component (0-based).
Dataset sample_mixture(const MixtureModel& m, int n, std::uint64_t seed);

// Four bivariate Normal-marginal groups of `per_group` points each: groups
// 3/4 from a Clayton and a 180-degree-rotated Clayton, groups 1/2 exact
// copies translated to documented surrogate locations. Labels 0..3.
Dataset make_example1(std::uint64_t seed, int per_group = 200);
MixtureModel example1_generator();

// 536 trivariate Binomial observations (indices 13, 8, 19) from a
// 6-component Gaussian-exchangeable-copula mixture; documented surrogate
// generator with strong positive pairwise correlation. Labels 0..5.
Dataset make_cognitive_analog(std::uint64_t seed, int n = 536);
MixtureModel cognitive_analog_generator();

}  // namespace copmix
