#include "copmix/datakit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "copmix/mixture.hpp"

namespace copmix {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

}  // namespace

void Dataset::validate() const {
  const int n_ = static_cast<int>(values.rows());
  const int p_ = static_cast<int>(values.cols());
  if (p_ == 0 || n_ == 0) throw std::invalid_argument("dataset is empty");
  if (static_cast<int>(names.size()) != p_ ||
      static_cast<int>(domains.size()) != p_)
    throw std::invalid_argument("dataset metadata does not match column count");
  if (!labels.empty() && static_cast<int>(labels.size()) != n_)
    throw std::invalid_argument("label vector length does not match rows");
  for (int t = 0; t < p_; ++t) {
    if (!domains[t].count) continue;
    const int m = domains[t].index;
    if (m < 1)
      throw std::invalid_argument("count column '" + names[t] +
                                  "' needs a positive index");
    for (int i = 0; i < n_; ++i) {
      const double v = values(i, t);
      if (!(std::abs(v - std::round(v)) <= 1e-9) || v < -1e-9 || v > m + 1e-9)
        throw std::invalid_argument("count column '" + names[t] +
                                    "' has a value outside {0..m} at row " +
                                    std::to_string(i));
    }
  }
  for (int i = 0; i < n_; ++i)
    for (int t = 0; t < p_; ++t)
      if (!std::isfinite(values(i, t)))
        throw std::invalid_argument("non-finite value at row " +
                                    std::to_string(i));
}

bool Dataset::all_count() const {
  return std::all_of(domains.begin(), domains.end(),
                     [](const ColumnDomain& d) { return d.count; });
}

bool Dataset::all_continuous() const {
  return std::all_of(domains.begin(), domains.end(),
                     [](const ColumnDomain& d) { return !d.count; });
}

Dataset read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("'" + path + "' is empty");

  Dataset d;
  bool has_label_col = false;
  int label_col = -1;
  const auto header = split_csv_line(line);
  for (int t = 0; t < static_cast<int>(header.size()); ++t) {
    const std::string cell = trim(header[t]);
    if (cell == "label") {
      if (has_label_col)
        throw std::runtime_error("'" + path + "' has two label columns");
      has_label_col = true;
      label_col = t;
      continue;
    }
    // name[:cont] or name:count:m
    std::vector<std::string> parts;
    std::stringstream ss(cell);
    std::string piece;
    while (std::getline(ss, piece, ':')) parts.push_back(trim(piece));
    if (parts.empty() || parts[0].empty())
      throw std::runtime_error("'" + path + "' has an unnamed column");
    ColumnDomain dom;
    if (parts.size() == 1) {
      std::cerr << "warning: column '" << parts[0]
                << "' has no domain tag; treating as continuous\n";
      dom.count = false;
    } else if (parts[1] == "cont") {
      dom.count = false;
    } else if (parts[1] == "count") {
      if (parts.size() != 3)
        throw std::runtime_error("'" + path + "': count column '" + parts[0] +
                                 "' needs an index: name:count:m");
      dom.count = true;
      dom.index = std::stoi(parts[2]);
    } else {
      throw std::runtime_error("'" + path + "': unknown domain tag '" +
                               parts[1] + "' in column '" + parts[0] + "'");
    }
    d.names.push_back(parts[0]);
    d.domains.push_back(dom);
  }
  const int p = static_cast<int>(d.names.size());
  if (p == 0) throw std::runtime_error("'" + path + "' has no data columns");

  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    if (static_cast<int>(cells.size()) != p + (has_label_col ? 1 : 0))
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": wrong field count");
    std::vector<double> row;
    row.reserve(p);
    for (int t = 0; t < static_cast<int>(cells.size()); ++t) {
      const std::string cell = trim(cells[t]);
      try {
        if (t == label_col && has_label_col)
          labels.push_back(std::stoi(cell));
        else
          row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                 ": cannot parse '" + cell + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("'" + path + "' has no data rows");

  d.values.resize(static_cast<int>(rows.size()), p);
  for (int i = 0; i < static_cast<int>(rows.size()); ++i)
    for (int t = 0; t < p; ++t) d.values(i, t) = rows[i][t];
  if (has_label_col) d.labels = std::move(labels);
  d.validate();
  return d;
}

void write_csv(const Dataset& d, const std::string& path) {
  d.validate();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  for (int t = 0; t < d.p(); ++t) {
    if (t) out << ',';
    out << d.names[t] << (d.domains[t].count
                              ? ":count:" + std::to_string(d.domains[t].index)
                              : ":cont");
  }
  if (d.has_labels()) out << ",label";
  out << '\n';
  char buf[64];
  for (int i = 0; i < d.n(); ++i) {
    for (int t = 0; t < d.p(); ++t) {
      if (t) out << ',';
      if (d.domains[t].count) {
        std::snprintf(buf, sizeof buf, "%.0f", d.values(i, t));
      } else {
        std::snprintf(buf, sizeof buf, "%.17g", d.values(i, t));
      }
      out << buf;
    }
    if (d.has_labels()) out << ',' << d.labels[i];
    out << '\n';
  }
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

Dataset sample_mixture(const MixtureModel& m, int n, std::uint64_t seed) {
  if (n <= 0) throw std::invalid_argument("sample size must be positive");
  const int p = m.dim();
  Dataset d;
  d.values.resize(n, p);
  d.labels.resize(n);
  for (int t = 0; t < p; ++t) {
    d.names.push_back("x" + std::to_string(t + 1));
    ColumnDomain dom;
    const auto& mg = m.component(0).marginals()[t];
    if (mg.is_count()) {
      dom.count = true;
      dom.index = mg.index();
    }
    d.domains.push_back(dom);
  }

  Rng rng(mix_seed(seed, 0x5a17));
  std::vector<double> u(p), x(p);
  for (int i = 0; i < n; ++i) {
    const int j = rng.categorical(m.weights());
    d.labels[i] = j;
    const Component& comp = m.component(j);
    comp.copula().sample_row(rng, u);
    for (int t = 0; t < p; ++t) {
      const double ut = std::min(1.0 - kUnitEps, std::max(kUnitEps, u[t]));
      x[t] = comp.marginals()[t].quantile(ut);
    }
    if (comp.has_angle()) {
      // data were drawn in the component's rotated frame; map back with O(w)
      const double w = comp.angle();
      const double c = std::cos(w), s = std::sin(w);
      const double z1 = c * x[0] - s * x[1];
      const double z2 = s * x[0] + c * x[1];
      x[0] = z1;
      x[1] = z2;
    }
    for (int t = 0; t < p; ++t) d.values(i, t) = x[t];
  }
  d.validate();
  return d;
}

// Four bivariate Normal-margin groups with lower-tail (plain) and upper-tail
// (half-turn) Clayton dependence, arranged so neighbouring groups overlap.
MixtureModel example1_generator() {
  std::vector<double> weights(4, 0.25);
  std::vector<Component> comps;
  comps.emplace_back(
      CopulaModel::clayton(3.56),
      std::vector<MarginalModel>{MarginalModel::normal(2.31, 1.00),
                                 MarginalModel::normal(2.73, 1.05)});
  comps.emplace_back(
      CopulaModel::clayton(3.24, Rotation::R180),
      std::vector<MarginalModel>{MarginalModel::normal(0.35, 1.02),
                                 MarginalModel::normal(3.76, 1.07)});
  comps.emplace_back(
      CopulaModel::clayton(3.56),
      std::vector<MarginalModel>{MarginalModel::normal(2.79, 1.00),
                                 MarginalModel::normal(4.77, 1.05)});
  comps.emplace_back(
      CopulaModel::clayton(3.24, Rotation::R180),
      std::vector<MarginalModel>{MarginalModel::normal(0.78, 1.02),
                                 MarginalModel::normal(5.77, 1.07)});
  return MixtureModel(std::move(weights), std::move(comps));
}

Dataset make_example1(std::uint64_t seed, int per_group) {
  const MixtureModel gen = example1_generator();
  const int n = 4 * per_group;
  Dataset d;
  d.values.resize(n, 2);
  d.labels.resize(n);
  d.names = {"x1", "x2"};
  d.domains = {ColumnDomain{}, ColumnDomain{}};

  // fixed group sizes (per_group each) rather than multinomial draws
  Rng rng(mix_seed(seed, 0xe8a1));
  std::vector<double> u(2);
  int row = 0;
  for (int j = 0; j < 4; ++j) {
    const Component& comp = gen.component(j);
    for (int i = 0; i < per_group; ++i, ++row) {
      comp.copula().sample_row(rng, u);
      for (int t = 0; t < 2; ++t) {
        const double ut = std::min(1.0 - kUnitEps, std::max(kUnitEps, u[t]));
        d.values(row, t) = comp.marginals()[t].quantile(ut);
      }
      d.labels[row] = j;
    }
  }
  d.validate();
  return d;
}

// Six ordered ability classes over three bounded count scores; within-class
// dependence is exchangeable Gaussian on the uniformized scores.
MixtureModel cognitive_analog_generator() {
  const std::vector<int> idx = {13, 8, 19};
  std::vector<double> weights = {0.16, 0.20, 0.19, 0.16, 0.15, 0.14};
  const double probs[6][3] = {{0.95, 0.92, 0.95}, {0.80, 0.75, 0.80},
                              {0.60, 0.55, 0.62}, {0.40, 0.35, 0.55},
                              {0.12, 0.10, 0.28}, {0.05, 0.05, 0.08}};
  const double rho[6] = {0.3, 0.4, 0.4, 0.3, 0.4, 0.3};
  std::vector<Component> comps;
  for (int j = 0; j < 6; ++j) {
    std::vector<MarginalModel> margins;
    for (int t = 0; t < 3; ++t)
      margins.push_back(MarginalModel::binomial(idx[t], probs[j][t]));
    comps.emplace_back(
        CopulaModel::gaussian(CorrelationMatrix::exchangeable(3, rho[j])),
        std::move(margins));
  }
  return MixtureModel(std::move(weights), std::move(comps));
}

Dataset make_cognitive_analog(std::uint64_t seed, int n) {
  Dataset d = sample_mixture(cognitive_analog_generator(), n, seed);
  d.names = {"s1", "s2", "s3"};
  return d;
}

}  // namespace copmix
