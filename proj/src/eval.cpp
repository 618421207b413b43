#include "copmix/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "copmix/numerics.hpp"

namespace copmix {

double bic(double loglik, int q, int n) {
  if (n < 1) throw std::invalid_argument("bic needs n >= 1");
  if (q < 0) throw std::invalid_argument("bic needs q >= 0");
  return -2.0 * loglik + q * std::log(static_cast<double>(n));
}

namespace {

int relabel(std::span<const int> in, std::vector<int>* out) {
  std::vector<int> sorted(in.begin(), in.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  out->resize(in.size());
  for (size_t i = 0; i < in.size(); ++i)
    (*out)[i] = static_cast<int>(
        std::lower_bound(sorted.begin(), sorted.end(), in[i]) - sorted.begin());
  return static_cast<int>(sorted.size());
}

double choose2(double n) { return 0.5 * n * (n - 1.0); }

// exact O(k^3) assignment minimizing total cost (potentials method)
std::vector<int> hungarian(const std::vector<std::vector<double>>& cost) {
  const int n = static_cast<int>(cost.size());
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, std::numeric_limits<double>::infinity());
    std::vector<char> used(n + 1, false);
    do {
      used[j0] = true;
      const int i0 = p[j0];
      double delta = std::numeric_limits<double>::infinity();
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> match(n);  // match[row] = column
  for (int j = 1; j <= n; ++j)
    if (p[j] > 0) match[p[j] - 1] = j - 1;
  return match;
}

}  // namespace

double adjusted_rand(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size() || a.empty())
    throw std::invalid_argument("label vectors must match and be nonempty");
  std::vector<int> la, lb;
  const int ka = relabel(a, &la);
  const int kb = relabel(b, &lb);
  Matrix table = Matrix::Zero(ka, kb);
  for (size_t i = 0; i < la.size(); ++i) table(la[i], lb[i]) += 1.0;

  double sum_ij = 0.0, sum_a = 0.0, sum_b = 0.0;
  for (int i = 0; i < ka; ++i)
    for (int j = 0; j < kb; ++j) sum_ij += choose2(table(i, j));
  for (int i = 0; i < ka; ++i) sum_a += choose2(table.row(i).sum());
  for (int j = 0; j < kb; ++j) sum_b += choose2(table.col(j).sum());
  const double total = choose2(static_cast<double>(la.size()));
  const double expected = sum_a * sum_b / total;
  const double maximum = 0.5 * (sum_a + sum_b);
  if (maximum == expected)  // both partitions trivial in the same way
    return sum_ij == expected ? 1.0 : 0.0;
  return (sum_ij - expected) / (maximum - expected);
}

double misclassification(std::span<const int> pred, std::span<const int> truth) {
  if (pred.size() != truth.size() || pred.empty())
    throw std::invalid_argument("label vectors must match and be nonempty");
  std::vector<int> lp, lt;
  const int kp = relabel(pred, &lp);
  const int kt = relabel(truth, &lt);
  const int k = std::max(kp, kt);
  const double n = static_cast<double>(lp.size());

  Matrix agree = Matrix::Zero(k, k);  // agree(i, j): pred class i on true j
  for (size_t i = 0; i < lp.size(); ++i) agree(lp[i], lt[i]) += 1.0;

  double best = 0.0;
  if (k <= 8) {
    std::vector<int> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    do {
      double matches = 0.0;
      for (int i = 0; i < k; ++i) matches += agree(i, perm[i]);
      best = std::max(best, matches);
    } while (std::next_permutation(perm.begin(), perm.end()));
  } else {
    std::vector<std::vector<double>> cost(k, std::vector<double>(k));
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) cost[i][j] = -agree(i, j);
    const std::vector<int> match = hungarian(cost);
    for (int i = 0; i < k; ++i) best += agree(i, match[i]);
  }
  return 1.0 - best / n;
}

MixtureModel marginalize_mixture(const MixtureModel& m,
                                 std::span<const int> coords) {
  if (coords.empty()) throw std::invalid_argument("empty coordinate set");
  for (size_t i = 0; i < coords.size(); ++i) {
    if (coords[i] < 0 || coords[i] >= m.dim())
      throw std::invalid_argument("coordinate out of range");
    if (i > 0 && coords[i] <= coords[i - 1])
      throw std::invalid_argument("coordinates must be strictly increasing");
  }
  const std::vector<int> cv(coords.begin(), coords.end());
  std::vector<Component> comps;
  for (int j = 0; j < m.k(); ++j) {
    const Component& c = m.component(j);
    if (c.has_angle())
      throw std::domain_error(
          "a rotated component has no margin of the same form");
    std::vector<MarginalModel> mg;
    for (int t : cv) mg.push_back(c.marginals()[t]);
    comps.emplace_back(c.copula().margin(cv), std::move(mg));
  }
  return MixtureModel(m.weights(), std::move(comps));
}

Matrix contour_grid(const MixtureModel& m, int coord_x, int coord_y,
                    const GridSpec& grid, int jobs) {
  if (m.is_count())
    throw std::domain_error("contour grids need a continuous mixture");
  if (coord_x == coord_y)
    throw std::invalid_argument("grid coordinates must differ");
  if (grid.nx < 2 || grid.ny < 2)
    throw std::invalid_argument("grid needs at least 2 points per axis");
  if (!(grid.x_max > grid.x_min) || !(grid.y_max > grid.y_min))
    throw std::invalid_argument("grid bounds must be increasing");

  const bool swapped = coord_x > coord_y;
  MixtureModel mm = m;
  if (m.dim() > 2) {
    const int lo = std::min(coord_x, coord_y), hi = std::max(coord_x, coord_y);
    const std::vector<int> coords = {lo, hi};
    mm = marginalize_mixture(m, coords);
  } else if (coord_x < 0 || coord_x > 1 || coord_y < 0 || coord_y > 1) {
    throw std::invalid_argument("coordinate out of range");
  }

  const double dx = (grid.x_max - grid.x_min) / (grid.nx - 1);
  const double dy = (grid.y_max - grid.y_min) / (grid.ny - 1);
  Matrix out(grid.ny, grid.nx);
  parallel_for(grid.ny, jobs, [&](int iy) {
    const double y = grid.y_min + iy * dy;
    for (int ix = 0; ix < grid.nx; ++ix) {
      const double x = grid.x_min + ix * dx;
      const double pt[2] = {swapped ? y : x, swapped ? x : y};
      out(iy, ix) = std::exp(mm.log_pdf(pt));
    }
  });
  return out;
}

}  // namespace copmix
