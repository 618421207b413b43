#include "copmix/init.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <tuple>

#include "copmix/numerics.hpp"

namespace copmix {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Matrix standardized(const Matrix& x) {
  const int n = static_cast<int>(x.rows());
  const int p = static_cast<int>(x.cols());
  Matrix z(n, p);
  for (int t = 0; t < p; ++t) {
    const double mean = x.col(t).mean();
    double var = 0.0;
    for (int i = 0; i < n; ++i) var += (x(i, t) - mean) * (x(i, t) - mean);
    var /= std::max(n - 1, 1);
    const double sd = std::sqrt(var);
    for (int i = 0; i < n; ++i)
      z(i, t) = sd > 0.0 ? (x(i, t) - mean) / sd : 0.0;
  }
  return z;
}

double sqdist(const Matrix& z, int a, int b) {
  double s = 0.0;
  for (int t = 0; t < z.cols(); ++t) {
    const double d = z(a, t) - z(b, t);
    s += d * d;
  }
  return s;
}

std::vector<int> sample_distinct_rows(Rng& rng, int n, int k) {
  std::vector<int> pool(n);
  std::iota(pool.begin(), pool.end(), 0);
  for (int i = 0; i < k; ++i) {
    const int j = i + static_cast<int>(rng.uniform() * (n - i));
    std::swap(pool[i], pool[std::min(j, n - 1)]);
  }
  pool.resize(k);
  return pool;
}

PartitionResult labels_to_partition(std::vector<int> labels, int k) {
  PartitionResult part;
  part.cardinality.assign(k, 0);
  for (int l : labels) part.cardinality[l]++;
  part.labels = std::move(labels);
  return part;
}

bool any_empty(const std::vector<int>& card) {
  return std::any_of(card.begin(), card.end(), [](int c) { return c == 0; });
}

}  // namespace

PartitionResult partition_min_distance(const Dataset& data, int k,
                                       std::uint64_t seed) {
  data.validate();
  const int n = data.n();
  if (k < 1 || k > n)
    throw std::invalid_argument("partition needs 1 <= k <= n");
  const Matrix z = standardized(data.values);
  Rng rng(mix_seed(seed, 0x9a27));
  for (int attempt = 0; attempt < 50; ++attempt) {
    const std::vector<int> seeds = sample_distinct_rows(rng, n, k);
    std::vector<int> labels(n);
    for (int i = 0; i < n; ++i) {
      int arg = 0;
      double best = kInf;
      for (int j = 0; j < k; ++j) {
        const double d = sqdist(z, i, seeds[j]);
        if (d < best) {
          best = d;
          arg = j;
        }
      }
      labels[i] = arg;
    }
    PartitionResult part = labels_to_partition(std::move(labels), k);
    if (!any_empty(part.cardinality)) return part;
  }
  throw std::runtime_error(
      "could not draw a partition without empty classes (too many duplicate "
      "rows?)");
}

PartitionResult partition_kmedoids(const Dataset& data, int k,
                                   std::uint64_t seed) {
  data.validate();
  const int n = data.n();
  if (k < 1 || k > n)
    throw std::invalid_argument("partition needs 1 <= k <= n");
  const Matrix z = standardized(data.values);

  const bool cache = static_cast<long long>(n) * n <= 4'000'000;
  Matrix dm;
  if (cache) {
    dm.resize(n, n);
    for (int a = 0; a < n; ++a) {
      dm(a, a) = 0.0;
      for (int b = a + 1; b < n; ++b) dm(a, b) = dm(b, a) = sqdist(z, a, b);
    }
  }
  auto dist = [&](int a, int b) { return cache ? dm(a, b) : sqdist(z, a, b); };

  Rng rng(mix_seed(seed, 0x6d0d));
  for (int attempt = 0; attempt < 50; ++attempt) {
    std::vector<int> med = sample_distinct_rows(rng, n, k);
    std::sort(med.begin(), med.end());

    // nearest / second-nearest medoid distances per point
    std::vector<double> d1(n), d2(n);
    std::vector<int> n1(n);
    auto refresh = [&] {
      for (int i = 0; i < n; ++i) {
        d1[i] = d2[i] = kInf;
        n1[i] = 0;
        for (int j = 0; j < k; ++j) {
          const double d = dist(i, med[j]);
          if (d < d1[i]) {
            d2[i] = d1[i];
            d1[i] = d;
            n1[i] = j;
          } else if (d < d2[i]) {
            d2[i] = d;
          }
        }
      }
    };
    refresh();

    for (int pass = 0; pass < 30; ++pass) {
      double best_delta = -1e-12;
      int best_j = -1, best_h = -1;
      for (int h = 0; h < n; ++h) {
        if (std::find(med.begin(), med.end(), h) != med.end()) continue;
        for (int j = 0; j < k; ++j) {
          // cost change of swapping medoid j for candidate h
          double delta = 0.0;
          for (int i = 0; i < n; ++i) {
            const double dih = dist(i, h);
            if (n1[i] == j)
              delta += std::min(dih, d2[i]) - d1[i];
            else if (dih < d1[i])
              delta += dih - d1[i];
          }
          if (delta < best_delta) {
            best_delta = delta;
            best_j = j;
            best_h = h;
          }
        }
      }
      if (best_j < 0) break;
      med[best_j] = best_h;
      refresh();
    }

    std::vector<int> labels(n);
    for (int i = 0; i < n; ++i) labels[i] = n1[i];
    PartitionResult part = labels_to_partition(std::move(labels), k);
    if (!any_empty(part.cardinality)) return part;
  }
  throw std::runtime_error(
      "could not reach a k-medoids partition without empty classes");
}

namespace {

// moment-based correlation of the z-scores of the probability transforms,
// shrunk toward the identity so the start is strictly inside the domain
CorrelationMatrix moment_correlation(const Matrix& zs, CorrStructure structure) {
  const int p = static_cast<int>(zs.cols());
  std::vector<double> off;
  double avg = 0.0;
  for (int a = 0; a < p; ++a)
    for (int b = a + 1; b < p; ++b) {
      std::vector<double> xa(zs.rows()), xb(zs.rows());
      for (int i = 0; i < zs.rows(); ++i) {
        xa[i] = zs(i, a);
        xb[i] = zs(i, b);
      }
      const double r = 0.95 * pearson_correlation(xa, xb);
      off.push_back(r);
      avg += r;
    }
  if (structure == CorrStructure::Exchangeable) {
    avg /= off.size();
    const double lo = -1.0 / (p - 1);
    avg = std::clamp(avg, lo + 0.02 * (1.0 - lo), 0.98);
    return CorrelationMatrix::exchangeable(p, avg);
  }
  return CorrelationMatrix::unstructured(p, off);
}

double min_pairwise_correlation(const Matrix& zs) {
  const int p = static_cast<int>(zs.cols());
  double rmin = 1.0;
  for (int a = 0; a < p; ++a)
    for (int b = a + 1; b < p; ++b) {
      std::vector<double> xa(zs.rows()), xb(zs.rows());
      for (int i = 0; i < zs.rows(); ++i) {
        xa[i] = zs(i, a);
        xb[i] = zs(i, b);
      }
      rmin = std::min(rmin, pearson_correlation(xa, xb));
    }
  return rmin;
}

// neutral or moment-matched copula at which the refining fit is warm-started
CopulaModel copula_start(const CopulaSpec& cs, const Matrix& zs) {
  const int p = static_cast<int>(zs.cols());
  switch (cs.family) {
    case CopulaFamily::Independence: return CopulaModel::independence(p);
    case CopulaFamily::Gumbel: return CopulaModel::gumbel(1.5, cs.rotation);
    case CopulaFamily::Clayton: return CopulaModel::clayton(1.0, cs.rotation);
    case CopulaFamily::Frank1: {
      const double r = min_pairwise_correlation(zs);
      return CopulaModel::frank1(r < 0.0 && p == 2 ? -2.0 : 2.0, p);
    }
    case CopulaFamily::Frank2: {
      const double p1 = std::max(0.05, 4.0 * std::max(0.01, min_pairwise_correlation(zs)));
      return CopulaModel::frank2(p1, p1 + 0.05);
    }
    case CopulaFamily::Gaussian:
      return CopulaModel::gaussian(moment_correlation(zs, cs.structure));
  }
  throw std::logic_error("unknown copula family");
}

}  // namespace

IfmResult ifm_start(const MixtureSpec& spec, const Dataset& data,
                    const PartitionResult& part) {
  validate_spec(spec, data);
  const int n = data.n();
  const int p = data.p();
  const int k = spec.k();
  if (static_cast<int>(part.labels.size()) != n ||
      static_cast<int>(part.cardinality.size()) != k)
    throw std::invalid_argument("partition does not match data/spec");

  const Matrix zstd = standardized(data.values);
  Matrix class_mean = Matrix::Zero(k, p);
  for (int i = 0; i < n; ++i) class_mean.row(part.labels[i]) += zstd.row(i);
  for (int j = 0; j < k; ++j)
    if (part.cardinality[j] > 0) class_mean.row(j) /= part.cardinality[j];

  std::vector<std::string> warnings;
  std::vector<double> pi(k);
  std::vector<Component> comps;

  for (int j = 0; j < k; ++j) {
    pi[j] = static_cast<double>(part.cardinality[j]) / n;
    const ComponentSpec& cs = spec.components[j];

    // rows used for fitting; small classes borrow their nearest neighbor's
    std::vector<int> rows;
    for (int i = 0; i < n; ++i)
      if (part.labels[i] == j) rows.push_back(i);
    if (static_cast<int>(rows.size()) < p + 1 && k > 1) {
      int jn = -1;
      double best = kInf;
      for (int j2 = 0; j2 < k; ++j2) {
        if (j2 == j) continue;
        const double d = (class_mean.row(j) - class_mean.row(j2)).squaredNorm();
        if (d < best) {
          best = d;
          jn = j2;
        }
      }
      for (int i = 0; i < n; ++i)
        if (part.labels[i] == jn) rows.push_back(i);
      std::sort(rows.begin(), rows.end());
      warnings.push_back("class " + std::to_string(j + 1) +
                         " too small to fit; borrowed rows of class " +
                         std::to_string(jn + 1));
    }
    const int m = static_cast<int>(rows.size());
    Matrix x(m, p);
    for (int i = 0; i < m; ++i) x.row(i) = data.values.row(rows[i]);
    const std::vector<double> ones(m, 1.0);

    std::vector<MarginalModel> mg;
    for (int t = 0; t < p; ++t) {
      const MarginalSpec& ms = cs.marginals[t];
      const int bound = data.domains[t].count ? data.domains[t].index : -1;
      if (!ms.fixed_params.empty()) {
        switch (ms.family) {
          case MarginalFamily::Normal:
            mg.push_back(MarginalModel::normal(ms.fixed_params[0], ms.fixed_params[1]));
            break;
          case MarginalFamily::Beta:
            mg.push_back(MarginalModel::beta(ms.fixed_params[0], ms.fixed_params[1]));
            break;
          case MarginalFamily::Gamma:
            mg.push_back(MarginalModel::gamma(ms.fixed_params[0], ms.fixed_params[1]));
            break;
          case MarginalFamily::Binomial:
            mg.push_back(MarginalModel::binomial(bound, ms.fixed_params[0]));
            break;
        }
        continue;
      }
      std::vector<double> col(m);
      for (int i = 0; i < m; ++i) col[i] = x(i, t);
      MarginalFit fit = fit_marginal_weighted(ms.family, col, ones, bound);
      if (fit.degenerate)
        warnings.push_back("class " + std::to_string(j + 1) + " marginal " +
                           std::to_string(t + 1) + " hit its scale floor");
      mg.push_back(fit.model);
    }

    CopulaModel cop = CopulaModel::independence(p);
    if (cs.copula.family != CopulaFamily::Independence) {
      if (!cs.copula.fixed_params.empty()) {
        switch (cs.copula.family) {
          case CopulaFamily::Gumbel:
            cop = CopulaModel::gumbel(cs.copula.fixed_params[0], cs.copula.rotation);
            break;
          case CopulaFamily::Clayton:
            cop = CopulaModel::clayton(cs.copula.fixed_params[0], cs.copula.rotation);
            break;
          case CopulaFamily::Frank1:
            cop = CopulaModel::frank1(cs.copula.fixed_params[0], p);
            break;
          case CopulaFamily::Frank2:
            cop = CopulaModel::frank2(cs.copula.fixed_params[0], cs.copula.fixed_params[1]);
            break;
          case CopulaFamily::Gaussian:
            cop = CopulaModel::gaussian(
                cs.copula.structure == CorrStructure::Exchangeable
                    ? CorrelationMatrix::exchangeable(p, cs.copula.fixed_params[0])
                    : CorrelationMatrix::unstructured(p, cs.copula.fixed_params));
            break;
          default: break;
        }
      } else if (data.all_count()) {
        // z-scores of the cell midpoints stand in for the latent scores
        Matrix zs(m, p);
        for (int i = 0; i < m; ++i)
          for (int t = 0; t < p; ++t) {
            const auto& g = mg[t];
            const double hi = g.cdf(x(i, t));
            const double lo = x(i, t) > 0 ? g.cdf(x(i, t) - 1.0) : 0.0;
            zs(i, t) = norm_quantile(clamp_unit(0.5 * (lo + hi)));
          }
        cop = fit_copula_counts(copula_start(cs.copula, zs), mg, x, ones);
      } else {
        Matrix u(m, p), zs(m, p);
        for (int i = 0; i < m; ++i)
          for (int t = 0; t < p; ++t) {
            u(i, t) = clamp_unit(mg[t].cdf(x(i, t)));
            zs(i, t) = norm_quantile(u(i, t));
          }
        cop = fit_copula_weighted(copula_start(cs.copula, zs), u, ones);
      }
    }

    std::optional<double> angle;
    if (cs.angle == AngleMode::Free)
      angle = 2.0 * 3.14159265358979323846;  // identity rotation
    else if (cs.angle == AngleMode::Fixed)
      angle = cs.angle_value;
    Component comp(std::move(cop), std::move(mg), angle);

    // Free-angle components are oriented before the first pass: profile the
    // angle over the class, refit the dependence parameter at the winning
    // orientation, then let the angle settle once more. Without this the
    // identity start can trap a class whose association matches a half-turn.
    if (cs.angle == AngleMode::Free) {
      comp = fit_angle(cs, comp, x, ones);
      if (cs.copula.fixed_params.empty() &&
          comp.copula().family() != CopulaFamily::Independence) {
        const double co = std::cos(comp.angle()), si = std::sin(comp.angle());
        Matrix u(m, 2);
        for (int i = 0; i < m; ++i) {
          const double z0 = co * x(i, 0) + si * x(i, 1);
          const double z1 = -si * x(i, 0) + co * x(i, 1);
          u(i, 0) = clamp_unit(comp.marginals()[0].cdf(z0));
          u(i, 1) = clamp_unit(comp.marginals()[1].cdf(z1));
        }
        CopulaModel cop2 = fit_copula_weighted(comp.copula(), u, ones);
        comp = Component(std::move(cop2), comp.marginals(), comp.angle());
        comp = fit_angle(cs, comp, x, ones);
      }
    }
    comps.push_back(std::move(comp));
  }

  return {MixtureModel(std::move(pi), std::move(comps)), std::move(warnings)};
}

namespace {

// canonical sort key so next_permutation enumerates each distinct
// copula-to-slot assignment exactly once
std::tuple<int, int, int, std::vector<double>> copula_key(const CopulaSpec& c) {
  return {static_cast<int>(c.family), static_cast<int>(c.rotation),
          static_cast<int>(c.structure), c.fixed_params};
}

}  // namespace

int distinct_permutation_count(const MixtureSpec& spec) {
  std::vector<CopulaSpec> cops;
  for (const auto& cs : spec.components) cops.push_back(cs.copula);
  std::sort(cops.begin(), cops.end(), [](const CopulaSpec& a, const CopulaSpec& b) {
    return copula_key(a) < copula_key(b);
  });
  int count = 0;
  do {
    ++count;
  } while (std::next_permutation(
      cops.begin(), cops.end(), [](const CopulaSpec& a, const CopulaSpec& b) {
        return copula_key(a) < copula_key(b);
      }));
  return count;
}

unsigned long long dictionary_model_count(int d, int k) {
  if (d < 1 || k < 1) throw std::invalid_argument("need d >= 1 and k >= 1");
  // C(d+k-1, k) by the multiplicative rule, exact in integer arithmetic
  unsigned long long r = 1;
  for (int i = 1; i <= k; ++i) {
    r = r * static_cast<unsigned long long>(d - 1 + i);
    r /= static_cast<unsigned long long>(i);
  }
  return r;
}

PermutationSearchResult permutation_search(const MixtureSpec& spec,
                                           const Dataset& data,
                                           const FitConfig& cfg) {
  validate_spec(spec, data);
  std::vector<CopulaSpec> cops;
  for (const auto& cs : spec.components) cops.push_back(cs.copula);
  auto less = [](const CopulaSpec& a, const CopulaSpec& b) {
    return copula_key(a) < copula_key(b);
  };
  std::sort(cops.begin(), cops.end(), less);

  std::vector<MixtureSpec> specs;
  do {
    MixtureSpec s = spec;
    for (int j = 0; j < spec.k(); ++j) s.components[j].copula = cops[j];
    specs.push_back(std::move(s));
  } while (std::next_permutation(cops.begin(), cops.end(), less));

  const int m = static_cast<int>(specs.size());
  std::vector<std::optional<FitReport>> reports(m);
  FitConfig inner = cfg;
  if (m > 1) inner.jobs = 1;
  parallel_for(m, cfg.jobs,
               [&](int i) { reports[i] = fit(specs[i], data, inner); });

  std::vector<double> logliks, bics;
  int best = -1;
  for (int i = 0; i < m; ++i) {
    logliks.push_back(reports[i]->loglik);
    bics.push_back(reports[i]->bic);
    const bool better =
        best < 0 ||
        (reports[best]->degenerate && !reports[i]->degenerate) ||
        (reports[best]->degenerate == reports[i]->degenerate &&
         reports[i]->loglik > reports[best]->loglik);
    if (better) best = i;
  }
  return {std::move(*reports[best]), best, m, std::move(logliks),
          std::move(bics)};
}

MixtureModel sequential_init(const MixtureModel& fitted, Component fresh,
                             double new_weight) {
  if (!(new_weight > 0.0 && new_weight < 1.0))
    throw std::invalid_argument("new component weight must lie in (0, 1)");
  std::vector<double> w;
  for (double v : fitted.weights()) w.push_back(v * (1.0 - new_weight));
  w.push_back(new_weight);
  std::vector<Component> comps = fitted.components();
  comps.push_back(std::move(fresh));
  return MixtureModel(std::move(w), std::move(comps));
}

}  // namespace copmix
