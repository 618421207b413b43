#include "copmix/mixture.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>

#include "copmix/init.hpp"
#include "copmix/numerics.hpp"

namespace copmix {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kPosInf = std::numeric_limits<double>::infinity();
constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  double e = std::exp(t);
  return e / (1.0 + e);
}

double logit(double p) { return std::log(p / (1.0 - p)); }

// normalized into (0, 2*pi]; 0 maps to 2*pi (identity rotation)
double wrap_angle(double w) {
  w = std::fmod(w, kTwoPi);
  if (w <= 0.0) w += kTwoPi;
  return w;
}

std::string comp_field(int j, const std::string& rest) {
  return "component " + std::to_string(j + 1) + " " + rest;
}

// ---- unconstrained parameter transforms --------------------------------
//
// Every free parameter is searched on an unconstrained scale chosen so the
// decoded value always lies inside its domain:
//   Normal  (mu, log sigma)     mu step scales with the current sigma, which
//                               keeps search trajectories equivariant under
//                               shifts and column scalings of the data
//   Gamma   (log shape, log rate)
//   Beta    BetaReparam plane (variance floor built in)
//   Binomial logit(p)
//   Gumbel  log(psi - 1)        Clayton log(psi)       Frank1 psi (raw)
//   Frank2  (log psi1, log(psi2 - psi1))
//   Gaussian exchangeable: logistic map onto (-1/(p-1), 1)
//   Gaussian unstructured: hyperspherical angles of the Cholesky rows
//   rotation angle: raw, wrapped into (0, 2*pi] on decode

double safe_exp(double t) { return std::exp(std::clamp(t, -18.0, 18.0)); }

std::vector<double> sphere_encode(const CorrelationMatrix& R) {
  const Matrix& L = R.cholesky();
  const int p = R.dim();
  std::vector<double> out;
  for (int i = 1; i < p; ++i) {
    double sines = 1.0;
    for (int j = 0; j < i; ++j) {
      double c = L(i, j) / std::max(sines, 1e-300);
      c = std::clamp(c, -1.0, 1.0);
      double th = std::clamp(std::acos(c), kPi * 1e-3, kPi * (1.0 - 1e-3));
      out.push_back(logit(th / kPi));
      sines *= std::sin(th);
    }
  }
  return out;
}

CorrelationMatrix sphere_decode(int p, std::span<const double> t) {
  Matrix L = Matrix::Zero(p, p);
  L(0, 0) = 1.0;
  int idx = 0;
  for (int i = 1; i < p; ++i) {
    double sines = 1.0;
    for (int j = 0; j < i; ++j) {
      double th = kPi * std::clamp(sigmoid(t[idx++]), 1e-3, 1.0 - 1e-3);
      L(i, j) = sines * std::cos(th);
      sines *= std::sin(th);
    }
    L(i, i) = sines;
  }
  Matrix R = L * L.transpose();
  std::vector<double> off;
  for (int a = 0; a < p; ++a)
    for (int b = a + 1; b < p; ++b) off.push_back(R(a, b));
  return CorrelationMatrix::unstructured(p, off);
}

double exch_lower(int p) { return -1.0 / (p - 1); }

int copula_n_params(CopulaFamily f, CorrStructure s, int p) {
  switch (f) {
    case CopulaFamily::Independence: return 0;
    case CopulaFamily::Gumbel:
    case CopulaFamily::Clayton:
    case CopulaFamily::Frank1: return 1;
    case CopulaFamily::Frank2: return 2;
    case CopulaFamily::Gaussian:
      return s == CorrStructure::Exchangeable ? 1 : p * (p - 1) / 2;
  }
  return 0;
}

struct CopulaPack {
  std::vector<double> x0, step;
  std::function<CopulaModel(std::span<const double>)> decode;
};

CopulaPack pack_copula(const CopulaModel& like) {
  CopulaPack pk;
  const int p = like.dim();
  const Rotation rot = like.rotation();
  switch (like.family()) {
    case CopulaFamily::Independence:
      pk.decode = [p](std::span<const double>) {
        return CopulaModel::independence(p);
      };
      break;
    case CopulaFamily::Gumbel:
      pk.x0 = {std::log(std::max(like.params()[0] - 1.0, 1e-8))};
      pk.step = {0.4};
      pk.decode = [rot](std::span<const double> x) {
        return CopulaModel::gumbel(1.0 + safe_exp(x[0]), rot);
      };
      break;
    case CopulaFamily::Clayton:
      pk.x0 = {std::log(std::max(like.params()[0], 1e-8))};
      pk.step = {0.4};
      pk.decode = [rot](std::span<const double> x) {
        return CopulaModel::clayton(safe_exp(x[0]), rot);
      };
      break;
    case CopulaFamily::Frank1:
      pk.x0 = {like.params()[0]};
      pk.step = {0.5};
      pk.decode = [p](std::span<const double> x) {
        double psi = x[0];
        if (std::abs(psi) < 1e-6) psi = psi < 0.0 ? -1e-6 : 1e-6;
        return CopulaModel::frank1(std::clamp(psi, -50.0, 50.0), p);
      };
      break;
    case CopulaFamily::Frank2: {
      double p1 = like.params()[0], p2 = like.params()[1];
      pk.x0 = {std::log(std::max(p1, 1e-8)),
               std::log(std::max(p2 - p1, 1e-8))};
      pk.step = {0.4, 0.6};
      pk.decode = [](std::span<const double> x) {
        double a = safe_exp(x[0]);
        return CopulaModel::frank2(a, a + safe_exp(x[1]));
      };
      break;
    }
    case CopulaFamily::Gaussian: {
      const auto& R = like.correlation();
      if (R.structure() == CorrStructure::Exchangeable) {
        const double lo = exch_lower(p);
        double f = (R.rho() - lo) / (1.0 - lo);
        pk.x0 = {logit(std::clamp(f, 1e-8, 1.0 - 1e-8))};
        pk.step = {0.5};
        pk.decode = [p, lo](std::span<const double> x) {
          double f2 = std::clamp(sigmoid(x[0]), 1e-8, 1.0 - 1e-8);
          return CopulaModel::gaussian(
              CorrelationMatrix::exchangeable(p, lo + (1.0 - lo) * f2));
        };
      } else {
        pk.x0 = sphere_encode(R);
        pk.step.assign(pk.x0.size(), 0.3);
        pk.decode = [p](std::span<const double> x) {
          return CopulaModel::gaussian(sphere_decode(p, x));
        };
      }
      break;
    }
  }
  return pk;
}

// bracket of the transformed coordinate for one-parameter families
void copula_param_range(const CopulaModel& like, double* lo, double* hi) {
  switch (like.family()) {
    case CopulaFamily::Gumbel:
    case CopulaFamily::Clayton:
      *lo = -14.0;
      *hi = 8.0;
      break;
    case CopulaFamily::Frank1:
      *lo = -35.0;
      *hi = 35.0;
      break;
    case CopulaFamily::Gaussian:  // exchangeable logistic coordinate
      *lo = -16.0;
      *hi = 16.0;
      break;
    default:
      *lo = -1.0;
      *hi = 1.0;
      break;
  }
}

struct ComponentPack {
  std::vector<double> x0, step;
  std::function<Component(std::span<const double>)> decode;
};

// Transformed coordinates of the selected free blocks of one component.
// Fixed-parameter blocks (per the spec) and deselected blocks stay at the
// values of `cur`.
ComponentPack pack_component(const ComponentSpec& cs, const Component& cur,
                             bool margins, bool copula, bool angle) {
  ComponentPack pk;
  const int p = cur.dim();
  struct MarginBlock {
    int t;
    MarginalFamily fam;
    int offset;
  };
  auto blocks = std::make_shared<std::vector<MarginBlock>>();
  static const BetaReparam kBetaRep;

  for (int t = 0; t < p; ++t) {
    if (!margins || !cs.marginals[t].fixed_params.empty()) continue;
    const MarginalModel& mg = cur.marginals()[t];
    const auto& q = mg.params();
    blocks->push_back({t, mg.family(), static_cast<int>(pk.x0.size())});
    switch (mg.family()) {
      case MarginalFamily::Normal: {
        double sd = std::max(q[1], 1e-6);
        pk.x0.insert(pk.x0.end(), {q[0], std::log(sd)});
        pk.step.insert(pk.step.end(), {0.3 * sd, 0.25});
        break;
      }
      case MarginalFamily::Gamma:
        pk.x0.insert(pk.x0.end(), {std::log(q[0]), std::log(q[1])});
        pk.step.insert(pk.step.end(), {0.3, 0.3});
        break;
      case MarginalFamily::Beta: {
        auto [a, b] = kBetaRep.from_alpha_beta(q[0], q[1]);
        pk.x0.insert(pk.x0.end(), {a, b});
        pk.step.insert(pk.step.end(), {0.4, 0.4});
        break;
      }
      case MarginalFamily::Binomial:
        pk.x0.push_back(logit(std::clamp(q[0], 1e-7, 1.0 - 1e-7)));
        pk.step.push_back(0.4);
        break;
    }
  }

  int cop_offset = -1;
  const bool cop_free = copula && cs.copula.fixed_params.empty() &&
                        cur.copula().family() != CopulaFamily::Independence;
  CopulaPack cpk;
  if (cop_free) {
    cpk = pack_copula(cur.copula());
    cop_offset = static_cast<int>(pk.x0.size());
    pk.x0.insert(pk.x0.end(), cpk.x0.begin(), cpk.x0.end());
    pk.step.insert(pk.step.end(), cpk.step.begin(), cpk.step.end());
  }

  int ang_offset = -1;
  if (angle && cs.angle == AngleMode::Free) {
    ang_offset = static_cast<int>(pk.x0.size());
    pk.x0.push_back(cur.angle());
    pk.step.push_back(0.5);
  }

  auto cur_copy = std::make_shared<Component>(cur);
  auto cop_decode = cop_free ? cpk.decode
                             : std::function<CopulaModel(std::span<const double>)>();
  int ncop = cop_free ? static_cast<int>(cpk.x0.size()) : 0;
  pk.decode = [blocks, cur_copy, cop_decode, cop_offset, ncop,
               ang_offset](std::span<const double> x) {
    std::vector<MarginalModel> mg = cur_copy->marginals();
    static const BetaReparam rep;
    for (const auto& b : *blocks) {
      std::span<const double> xs = x.subspan(b.offset);
      switch (b.fam) {
        case MarginalFamily::Normal:
          mg[b.t] = MarginalModel::normal(
              xs[0], std::max(safe_exp(xs[1]), kSigmaFloor));
          break;
        case MarginalFamily::Gamma:
          mg[b.t] = MarginalModel::gamma(safe_exp(xs[0]), safe_exp(xs[1]));
          break;
        case MarginalFamily::Beta: {
          auto [al, be] = rep.alpha_beta(xs[0], xs[1]);
          mg[b.t] = MarginalModel::beta(al, be);
          break;
        }
        case MarginalFamily::Binomial:
          mg[b.t] = MarginalModel::binomial(
              mg[b.t].index(), std::clamp(sigmoid(xs[0]), 1e-8, 1.0 - 1e-8));
          break;
      }
    }
    CopulaModel cop = cop_decode ? cop_decode(x.subspan(cop_offset, ncop))
                                 : cur_copy->copula();
    std::optional<double> ang;
    if (cur_copy->has_angle())
      ang = ang_offset >= 0 ? wrap_angle(x[ang_offset]) : cur_copy->angle();
    return Component(std::move(cop), std::move(mg), ang);
  };
  return pk;
}

// ---- count-cell machinery -----------------------------------------------

struct CellIndex {
  std::vector<int> row_cell;                // per input row
  std::vector<std::vector<double>> cells;   // distinct integer rows
};

CellIndex dedup_rows(const Matrix& x) {
  CellIndex ci;
  const int n = static_cast<int>(x.rows());
  const int p = static_cast<int>(x.cols());
  std::map<std::vector<long long>, int> seen;
  ci.row_cell.resize(n);
  std::vector<long long> key(p);
  for (int i = 0; i < n; ++i) {
    for (int t = 0; t < p; ++t) key[t] = std::llround(x(i, t));
    auto [it, inserted] = seen.emplace(key, static_cast<int>(ci.cells.size()));
    if (inserted) {
      std::vector<double> cell(p);
      for (int t = 0; t < p; ++t) cell[t] = static_cast<double>(key[t]);
      ci.cells.push_back(std::move(cell));
    }
    ci.row_cell[i] = it->second;
  }
  return ci;
}

// z-scores of the cell boundaries of a count margin: entry v+1 holds the
// score of the boundary at value v, with -inf below 0 and +inf at the index
std::vector<double> margin_zgrid(const MarginalModel& mg) {
  const int m = mg.index();
  std::vector<double> z(m + 2);
  z[0] = kNegInf;
  for (int v = 0; v < m; ++v) z[v + 1] = norm_quantile(clamp_unit(mg.cdf(v)));
  z[m + 1] = kPosInf;
  return z;
}

double floored_log(double pmf) {
  return std::log(std::clamp(pmf, kPmfFloor, 1.0));
}

// signed finite differences of the copula CDF over the 2^p cell vertices
double cell_logpmf_diff(const CopulaModel& cop,
                        const std::vector<MarginalModel>& mg,
                        std::span<const double> cell) {
  const int p = static_cast<int>(mg.size());
  std::vector<double> u(p);
  double sum = 0.0;
  for (int mask = 0; mask < (1 << p); ++mask) {
    for (int t = 0; t < p; ++t)
      u[t] = mg[t].cdf(cell[t] - ((mask >> t) & 1));
    const int bits = std::popcount(static_cast<unsigned>(mask));
    sum += (bits % 2 == 0 ? 1.0 : -1.0) * cop.cdf(u);
  }
  return floored_log(sum);
}

double cell_logpmf_rect(const CorrelationMatrix& R,
                        const std::vector<std::vector<double>>& zgrid,
                        std::span<const double> cell) {
  const int p = static_cast<int>(zgrid.size());
  Vector lo(p), hi(p);
  for (int t = 0; t < p; ++t) {
    const int v = static_cast<int>(std::llround(cell[t]));
    lo[t] = zgrid[t][v];
    hi[t] = zgrid[t][v + 1];
  }
  return floored_log(mvn_rectangle(lo, hi, R));
}

// Exchangeable rho >= 0 admits Z_t = sqrt(rho) V + sqrt(1-rho) e_t with a
// shared factor V, so the rectangle probability is a 1-D integral of a
// product of per-margin interval probabilities. One quadrature pass serves
// every cell at once.
std::vector<double> cells_logpmf_onefactor(
    const CorrelationMatrix& R, const std::vector<std::vector<double>>& zgrid,
    const std::vector<std::vector<double>>& cells) {
  const int p = static_cast<int>(zgrid.size());
  const double s = std::sqrt(R.rho());
  const double tau = std::sqrt(1.0 - R.rho());
  const GaussLegendre& gl = gauss_legendre(48);
  const int nn = static_cast<int>(gl.x.size());
  std::vector<double> node(nn), wgt(nn);
  for (int i = 0; i < nn; ++i) {
    node[i] = -8.5 + 17.0 * gl.x[i];
    wgt[i] = 17.0 * gl.w[i] * std::exp(norm_logpdf(node[i]));
  }
  // D[t][v * nn + i] = P(cell value v on margin t | factor at node i)
  std::vector<std::vector<double>> D(p);
  for (int t = 0; t < p; ++t) {
    const auto& z = zgrid[t];
    const int nv = static_cast<int>(z.size()) - 1;
    D[t].resize(static_cast<size_t>(nv) * nn);
    for (int v = 0; v < nv; ++v) {
      for (int i = 0; i < nn; ++i) {
        const double a =
            z[v] == kNegInf ? 0.0 : norm_cdf((z[v] - s * node[i]) / tau);
        const double b =
            z[v + 1] == kPosInf ? 1.0 : norm_cdf((z[v + 1] - s * node[i]) / tau);
        D[t][static_cast<size_t>(v) * nn + i] = std::max(b - a, 0.0);
      }
    }
  }
  std::vector<double> out(cells.size());
  for (size_t c = 0; c < cells.size(); ++c) {
    double total = 0.0;
    for (int i = 0; i < nn; ++i) {
      double prod = wgt[i];
      for (int t = 0; t < p; ++t) {
        const int v = static_cast<int>(std::llround(cells[c][t]));
        prod *= D[t][static_cast<size_t>(v) * nn + i];
      }
      total += prod;
    }
    out[c] = floored_log(total);
  }
  return out;
}

std::vector<double> cells_logpmf(const Component& comp,
                                 const std::vector<std::vector<double>>& cells) {
  const auto& mg = comp.marginals();
  std::vector<double> out(cells.size());
  if (comp.copula().family() == CopulaFamily::Gaussian) {
    const auto& R = comp.copula().correlation();
    std::vector<std::vector<double>> zgrid(mg.size());
    for (size_t t = 0; t < mg.size(); ++t) zgrid[t] = margin_zgrid(mg[t]);
    if (R.structure() == CorrStructure::Exchangeable && R.rho() >= 0.0)
      return cells_logpmf_onefactor(R, zgrid, cells);
    for (size_t c = 0; c < cells.size(); ++c)
      out[c] = cell_logpmf_rect(R, zgrid, cells[c]);
    return out;
  }
  for (size_t c = 0; c < cells.size(); ++c)
    out[c] = cell_logpmf_diff(comp.copula(), mg, cells[c]);
  return out;
}

}  // namespace

// ---- Component -----------------------------------------------------------

Component::Component(CopulaModel copula, std::vector<MarginalModel> marginals,
                     std::optional<double> angle)
    : copula_(std::move(copula)),
      marginals_(std::move(marginals)),
      angle_(angle) {
  const int p = static_cast<int>(marginals_.size());
  if (p == 0) throw std::invalid_argument("component needs marginals");
  if (copula_.dim() != p)
    throw std::invalid_argument("copula dimension does not match marginals");
  const bool count0 = marginals_.front().is_count();
  for (const auto& m : marginals_)
    if (m.is_count() != count0)
      throw std::invalid_argument(
          "component mixes count and continuous marginals");
  if (angle_.has_value()) {
    if (p != 2)
      throw std::invalid_argument("rotation angles need two coordinates");
    for (const auto& m : marginals_)
      if (m.family() != MarginalFamily::Normal)
        throw std::invalid_argument(
            "rotation angles need real-line (Normal) marginals");
    if (copula_.family() == CopulaFamily::Gaussian)
      throw std::invalid_argument(
          "a rotation angle on a Gaussian copula with Normal marginals is "
          "not identifiable");
    if (!(*angle_ > 0.0 && *angle_ <= kTwoPi + 1e-12))
      throw std::invalid_argument("rotation angle must lie in (0, 2*pi]");
  }
}

double Component::log_density(std::span<const double> x) const {
  const int p = dim();
  double z0 = x[0], z1 = p > 1 ? x[1] : 0.0;
  if (angle_) {
    const double c = std::cos(*angle_), s = std::sin(*angle_);
    const double a = c * x[0] + s * x[1];
    const double b = -s * x[0] + c * x[1];
    z0 = a;
    z1 = b;
  }
  std::vector<double> u(p);
  double marg = 0.0;
  for (int t = 0; t < p; ++t) {
    const double zt = t == 0 ? z0 : (t == 1 ? z1 : x[t]);
    const double lg = marginals_[t].log_pdf(zt);
    if (lg == kNegInf) return kNegInf;
    marg += lg;
    u[t] = clamp_unit(marginals_[t].cdf(zt));
  }
  return copula_.log_density(u) + marg;
}

double Component::log_pmf(std::span<const double> x) const {
  if (!is_count())
    throw std::domain_error("log_pmf requires count marginals");
  if (copula_.family() == CopulaFamily::Gaussian) {
    std::vector<std::vector<double>> zgrid(marginals_.size());
    for (size_t t = 0; t < marginals_.size(); ++t)
      zgrid[t] = margin_zgrid(marginals_[t]);
    return cell_logpmf_rect(copula_.correlation(), zgrid, x);
  }
  return cell_logpmf_diff(copula_, marginals_, x);
}

// ---- MixtureModel ----------------------------------------------------------

MixtureModel::MixtureModel(std::vector<double> weights,
                           std::vector<Component> components)
    : weights_(std::move(weights)), components_(std::move(components)) {
  if (components_.empty()) throw std::invalid_argument("empty mixture");
  if (weights_.size() != components_.size())
    throw std::invalid_argument("weights/components size mismatch");
  double sum = 0.0;
  for (double w : weights_) {
    if (!(w > 0.0)) throw std::invalid_argument("mixing weights must be > 0");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-6)
    throw std::invalid_argument("mixing weights must sum to 1");
  for (double& w : weights_) w /= sum;
  const int p = components_.front().dim();
  for (const auto& c : components_) {
    if (c.dim() != p)
      throw std::invalid_argument("components disagree on dimension");
    for (int t = 0; t < p; ++t) {
      const auto& a = components_.front().marginals()[t];
      const auto& b = c.marginals()[t];
      if (a.is_count() != b.is_count() ||
          (a.is_count() && a.index() != b.index()))
        throw std::invalid_argument("components disagree on column domains");
    }
  }
}

void MixtureModel::set_weights(std::vector<double> w) {
  MixtureModel check(w, components_);
  weights_ = std::move(check.weights_);
}

void MixtureModel::set_component(int j, Component c) {
  std::vector<Component> comps = components_;
  comps.at(j) = std::move(c);
  MixtureModel check(weights_, std::move(comps));
  components_ = std::move(check.components_);
}

double MixtureModel::log_pdf(std::span<const double> x) const {
  std::vector<double> terms(k());
  for (int j = 0; j < k(); ++j)
    terms[j] = std::log(weights_[j]) + components_[j].log_density(x);
  return log_sum_exp(terms);
}

double MixtureModel::log_pmf(std::span<const double> x) const {
  std::vector<double> terms(k());
  for (int j = 0; j < k(); ++j)
    terms[j] = std::log(weights_[j]) + components_[j].log_pmf(x);
  return log_sum_exp(terms);
}

// ---- spec handling ---------------------------------------------------------

MixtureSpec spec_like(const MixtureModel& m) {
  MixtureSpec spec;
  for (int j = 0; j < m.k(); ++j) {
    const Component& c = m.component(j);
    ComponentSpec cs;
    cs.copula.family = c.copula().family();
    cs.copula.rotation = c.copula().rotation();
    if (c.copula().family() == CopulaFamily::Gaussian)
      cs.copula.structure = c.copula().correlation().structure();
    for (const auto& mg : c.marginals()) {
      MarginalSpec ms;
      ms.family = mg.family();
      if (mg.is_count()) ms.index = mg.index();
      cs.marginals.push_back(ms);
    }
    cs.angle = c.has_angle() ? AngleMode::Free : AngleMode::None;
    spec.components.push_back(std::move(cs));
  }
  return spec;
}

void validate_spec(const MixtureSpec& spec, const Dataset& data) {
  data.validate();
  if (spec.components.empty())
    throw std::invalid_argument("spec needs at least one component");
  const int p = data.p();
  if (!data.all_count() && !data.all_continuous())
    throw std::invalid_argument(
        "datasets mixing count and continuous columns are not supported");

  for (int j = 0; j < spec.k(); ++j) {
    const ComponentSpec& cs = spec.components[j];
    if (static_cast<int>(cs.marginals.size()) != p)
      throw std::invalid_argument(
          comp_field(j, "marginals: expected one per data column"));

    for (int t = 0; t < p; ++t) {
      const MarginalSpec& ms = cs.marginals[t];
      const ColumnDomain& dom = data.domains[t];
      const std::string where =
          comp_field(j, "marginal " + std::to_string(t + 1));
      if (dom.count != (ms.family == MarginalFamily::Binomial))
        throw std::invalid_argument(
            where + ": family does not match the column domain");
      if (dom.count && ms.index >= 0 && ms.index != dom.index)
        throw std::invalid_argument(where + ": index differs from the column");
      if (!ms.fixed_params.empty()) {
        const size_t want = ms.family == MarginalFamily::Binomial ? 1 : 2;
        if (ms.fixed_params.size() != want)
          throw std::invalid_argument(where + ": fixed params: wrong count");
        try {
          switch (ms.family) {
            case MarginalFamily::Normal:
              MarginalModel::normal(ms.fixed_params[0], ms.fixed_params[1]);
              break;
            case MarginalFamily::Beta:
              MarginalModel::beta(ms.fixed_params[0], ms.fixed_params[1]);
              break;
            case MarginalFamily::Gamma:
              MarginalModel::gamma(ms.fixed_params[0], ms.fixed_params[1]);
              break;
            case MarginalFamily::Binomial:
              MarginalModel::binomial(dom.index, ms.fixed_params[0]);
              break;
          }
        } catch (const std::exception& e) {
          throw std::invalid_argument(where + ": " + e.what());
        }
      }
      // support requirements of the continuous families
      if (ms.family == MarginalFamily::Beta || ms.family == MarginalFamily::Gamma) {
        for (int i = 0; i < data.n(); ++i) {
          const double v = data.values(i, t);
          const bool ok = ms.family == MarginalFamily::Beta
                              ? (v > 0.0 && v < 1.0)
                              : v > 0.0;
          if (!ok)
            throw std::invalid_argument(
                where + ": data column leaves the family support at row " +
                std::to_string(i));
        }
      }
    }

    const CopulaSpec& cop = cs.copula;
    const std::string where = comp_field(j, "copula");
    switch (cop.family) {
      case CopulaFamily::Independence: break;
      case CopulaFamily::Gumbel:
      case CopulaFamily::Clayton:
        if (p != 2)
          throw std::invalid_argument(where + ": family is bivariate only");
        break;
      case CopulaFamily::Frank1:
        if (p != 2 && p != 3)
          throw std::invalid_argument(where + ": family needs 2 or 3 columns");
        break;
      case CopulaFamily::Frank2:
        if (p != 3)
          throw std::invalid_argument(where + ": family is trivariate only");
        break;
      case CopulaFamily::Gaussian:
        if (p < 2)
          throw std::invalid_argument(where + ": family needs 2+ columns");
        break;
    }
    if (cop.rotation != Rotation::R0 && cop.family != CopulaFamily::Gumbel &&
        cop.family != CopulaFamily::Clayton)
      throw std::invalid_argument(
          where + ": rotations apply to bivariate Archimedean families only");
    if (!cop.fixed_params.empty()) {
      const int want = copula_n_params(cop.family, cop.structure, p);
      if (static_cast<int>(cop.fixed_params.size()) != want)
        throw std::invalid_argument(where + ": fixed params: wrong count");
      try {
        switch (cop.family) {
          case CopulaFamily::Independence: break;
          case CopulaFamily::Gumbel:
            CopulaModel::gumbel(cop.fixed_params[0], cop.rotation);
            break;
          case CopulaFamily::Clayton:
            CopulaModel::clayton(cop.fixed_params[0], cop.rotation);
            break;
          case CopulaFamily::Frank1:
            CopulaModel::frank1(cop.fixed_params[0], p);
            break;
          case CopulaFamily::Frank2:
            CopulaModel::frank2(cop.fixed_params[0], cop.fixed_params[1]);
            break;
          case CopulaFamily::Gaussian:
            if (cop.structure == CorrStructure::Exchangeable)
              CorrelationMatrix::exchangeable(p, cop.fixed_params[0]);
            else
              CorrelationMatrix::unstructured(p, cop.fixed_params);
            break;
        }
      } catch (const std::exception& e) {
        throw std::invalid_argument(where + ": " + e.what());
      }
    }

    if (cs.angle != AngleMode::None) {
      const std::string awhere = comp_field(j, "angle");
      if (p != 2)
        throw std::invalid_argument(awhere + ": needs two columns");
      for (const auto& ms : cs.marginals)
        if (ms.family != MarginalFamily::Normal)
          throw std::invalid_argument(
              awhere + ": needs Normal marginals on both columns");
      if (cop.family == CopulaFamily::Gaussian)
        throw std::invalid_argument(
            awhere +
            ": not identifiable for a Gaussian copula with Normal marginals");
      if (cs.angle == AngleMode::Fixed &&
          !(cs.angle_value > 0.0 && cs.angle_value <= kTwoPi + 1e-12))
        throw std::invalid_argument(awhere + ": fixed value must lie in (0, 2*pi]");
    }
  }
}

int free_param_count(const MixtureSpec& spec) {
  int q = spec.k() - 1;
  for (const auto& cs : spec.components) {
    const int p = static_cast<int>(cs.marginals.size());
    for (const auto& ms : cs.marginals)
      if (ms.fixed_params.empty())
        q += ms.family == MarginalFamily::Binomial ? 1 : 2;
    if (cs.copula.fixed_params.empty())
      q += copula_n_params(cs.copula.family, cs.copula.structure, p);
    if (cs.angle == AngleMode::Free) q += 1;
  }
  return q;
}

// ---- likelihood and E-step ---------------------------------------------

std::vector<double> component_log_prob_rows(const Component& comp,
                                            const Matrix& x) {
  const int n = static_cast<int>(x.rows());
  std::vector<double> out(n);
  if (!comp.is_count()) {
    std::vector<double> row(x.cols());
    for (int i = 0; i < n; ++i) {
      for (int t = 0; t < x.cols(); ++t) row[t] = x(i, t);
      out[i] = comp.log_density(row);
    }
    return out;
  }
  CellIndex ci = dedup_rows(x);
  std::vector<double> cellp = cells_logpmf(comp, ci.cells);
  for (int i = 0; i < n; ++i) out[i] = cellp[ci.row_cell[i]];
  return out;
}

namespace {

struct EStepResult {
  Matrix w;
  double loglik = 0.0;
};

EStepResult estep_full(const MixtureModel& m, const Dataset& data) {
  const int n = data.n(), k = m.k();
  Matrix L(n, k);
  for (int j = 0; j < k; ++j) {
    std::vector<double> lp = component_log_prob_rows(m.component(j), data.values);
    const double lw = std::log(m.weights()[j]);
    for (int i = 0; i < n; ++i) {
      if (std::isnan(lp[i]) || lp[i] == kPosInf)
        throw std::runtime_error("component " + std::to_string(j + 1) +
                                 " produced a non-finite density at row " +
                                 std::to_string(i));
      L(i, j) = lw + lp[i];
    }
  }
  EStepResult r;
  r.w.resize(n, k);
  std::vector<double> row(k);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < k; ++j) row[j] = L(i, j);
    const double lse = log_sum_exp(row);
    if (lse == kNegInf)
      throw std::runtime_error("observation " + std::to_string(i + 1) +
                               " has zero density under every component");
    for (int j = 0; j < k; ++j) r.w(i, j) = std::exp(L(i, j) - lse);
    r.loglik += lse;
  }
  return r;
}

}  // namespace

double loglik(const MixtureModel& m, const Dataset& data) {
  return estep_full(m, data).loglik;
}

Matrix e_step(const MixtureModel& m, const Dataset& data) {
  return estep_full(m, data).w;
}

std::vector<double> m_step_pi(const Matrix& w) {
  const int n = static_cast<int>(w.rows());
  const int k = static_cast<int>(w.cols());
  if (n == 0 || k == 0) throw std::invalid_argument("empty weight matrix");
  std::vector<double> pi(k);
  for (int j = 0; j < k; ++j) pi[j] = w.col(j).sum() / n;
  return pi;
}

// ---- per-component weighted maximization ---------------------------------

namespace {

double weighted_sum(std::span<const double> w, std::span<const double> lp) {
  double s = 0.0;
  for (size_t i = 0; i < w.size(); ++i) {
    if (w[i] <= 0.0) continue;
    if (lp[i] == kNegInf) return kNegInf;
    s += w[i] * lp[i];
  }
  return s;
}

// negative weighted log-likelihood of a candidate component; +inf when the
// candidate is invalid or gives an impossible observation positive weight
double component_nll(const Component& comp, const Matrix& x,
                     std::span<const double> w) {
  std::vector<double> lp = component_log_prob_rows(comp, x);
  const double s = weighted_sum(w, lp);
  return s == kNegInf ? kPosInf : -s;
}

NelderMeadOptions block_nm_options(int npar) {
  NelderMeadOptions opt;
  opt.max_evals = 60 + 50 * npar;
  opt.ftol_abs = 1e-7;
  opt.xtol = 0.0;  // objective-based stop keeps runs scale-equivariant
  return opt;
}

// Nelder-Mead over the selected blocks; returns the best of (current,
// optimized) so a block update can never lower the weighted objective.
Component improve_component(const ComponentSpec& cs, const Component& cur,
                            const Matrix& x, std::span<const double> w,
                            bool margins, bool copula, bool angle) {
  ComponentPack pk = pack_component(cs, cur, margins, copula, angle);
  if (pk.x0.empty()) return cur;
  auto obj = [&](std::span<const double> v) -> double {
    try {
      return component_nll(pk.decode(v), x, w);
    } catch (const std::exception&) {
      return kPosInf;
    }
  };
  NelderMeadResult r = nelder_mead(obj, pk.x0, pk.step,
                                   block_nm_options(static_cast<int>(pk.x0.size())));
  if (!std::isfinite(r.fmin)) return cur;
  try {
    Component cand = pk.decode(r.x);
    if (component_nll(cand, x, w) <= component_nll(cur, x, w))
      return cand;
  } catch (const std::exception&) {
  }
  return cur;
}

// weighted copula objective on probability-transformed rows
double copula_nll_u(const CopulaModel& cop, const Matrix& u,
                    std::span<const double> w) {
  const int n = static_cast<int>(u.rows());
  const int p = static_cast<int>(u.cols());
  std::vector<double> row(p);
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    if (w[i] <= 0.0) continue;
    for (int t = 0; t < p; ++t) row[t] = clamp_unit(u(i, t));
    const double lc = cop.log_density(row);
    if (lc == kNegInf) return kPosInf;
    s += w[i] * lc;
  }
  return -s;
}

CopulaModel fit_copula_generic(
    const CopulaModel& like,
    const std::function<double(const CopulaModel&)>& nll) {
  if (like.family() == CopulaFamily::Independence) return like;
  CopulaPack pk = pack_copula(like);
  const double f_cur = nll(like);
  auto obj = [&](std::span<const double> v) -> double {
    try {
      return nll(pk.decode(v));
    } catch (const std::exception&) {
      return kPosInf;
    }
  };
  double best_f = kPosInf;
  std::vector<double> best_x;
  if (pk.x0.size() == 1) {
    double lo, hi;
    copula_param_range(like, &lo, &hi);
    auto obj1 = [&](double t) { return obj(std::span<const double>(&t, 1)); };
    // coarse bracket scan, then golden refinement between the neighbors
    const int grid = 17;
    int ibest = 0;
    double fbest = kPosInf;
    for (int i = 0; i < grid; ++i) {
      const double t = lo + (hi - lo) * i / (grid - 1);
      const double f = obj1(t);
      if (f < fbest) {
        fbest = f;
        ibest = i;
      }
    }
    const double h = (hi - lo) / (grid - 1);
    const double a = std::max(lo, lo + h * (ibest - 1));
    const double b = std::min(hi, lo + h * (ibest + 1));
    GoldenResult g = golden_min(obj1, a, b, 1e-6);
    best_f = std::min(fbest, g.f);
    best_x = {g.f <= fbest ? g.x : lo + h * ibest};
  } else {
    NelderMeadResult r =
        nelder_mead(obj, pk.x0, pk.step,
                    block_nm_options(static_cast<int>(pk.x0.size())));
    best_f = r.fmin;
    best_x = r.x;
  }
  if (best_f < f_cur && std::isfinite(best_f)) {
    try {
      return pk.decode(best_x);
    } catch (const std::exception&) {
    }
  }
  return like;
}

std::span<const double> col_span(const Matrix& m, int j) {
  return {m.col(j).data(), static_cast<size_t>(m.rows())};
}

// closed-form / exact per-margin weighted MLE for the free marginals,
// never letting a numeric Beta/Gamma fit fall below the current value
std::pair<std::vector<MarginalModel>, std::vector<std::string>>
refit_margins_exact(const ComponentSpec& cs,
                    const std::vector<MarginalModel>& cur, const Matrix& x,
                    std::span<const double> w, int j) {
  std::vector<MarginalModel> mg = cur;
  std::vector<std::string> warnings;
  const int n = static_cast<int>(x.rows());
  for (size_t t = 0; t < mg.size(); ++t) {
    if (!cs.marginals[t].fixed_params.empty()) continue;
    std::vector<double> col(n);
    for (int i = 0; i < n; ++i) col[i] = x(i, static_cast<int>(t));
    MarginalFit fit = fit_marginal_weighted(
        mg[t].family(), col, w, mg[t].is_count() ? mg[t].index() : -1);
    if (fit.degenerate)
      warnings.push_back(comp_field(
          j, "marginal " + std::to_string(t + 1) + " hit its scale floor"));
    // numeric families: keep whichever of (previous, refit) scores higher
    double s_new = 0.0, s_old = 0.0;
    for (int i = 0; i < n; ++i) {
      if (w[i] <= 0.0) continue;
      s_new += w[i] * fit.model.log_pdf(col[i]);
      s_old += w[i] * mg[t].log_pdf(col[i]);
    }
    if (s_new >= s_old || !std::isfinite(s_old)) mg[t] = fit.model;
  }
  return {std::move(mg), std::move(warnings)};
}

Matrix rotated_values(const Matrix& x, const Component& c) {
  if (!c.has_angle()) return x;
  const double co = std::cos(c.angle()), si = std::sin(c.angle());
  Matrix z(x.rows(), 2);
  for (int i = 0; i < x.rows(); ++i) {
    z(i, 0) = co * x(i, 0) + si * x(i, 1);
    z(i, 1) = -si * x(i, 0) + co * x(i, 1);
  }
  return z;
}

}  // namespace

// Angle search over one period. The location parameters are coupled to the
// angle (a half-turn negates the rotated coordinates, so the old means sit
// two locations away from the new optimum), which makes the objective at
// frozen marginals blind to distant basins. The free marginals of a rotated
// component are always Normal, so they can be re-solved in closed form at
// every trial angle; the search minimizes that profiled objective.
Component fit_angle(const ComponentSpec& cs, const Component& cur,
                    const Matrix& x, std::span<const double> w) {
  auto profiled = [&](double a) -> Component {
    const double ang = wrap_angle(a);
    const double co = std::cos(ang), si = std::sin(ang);
    std::vector<MarginalModel> mg = cur.marginals();
    std::vector<double> col(x.rows());
    for (size_t t = 0; t < mg.size(); ++t) {
      if (!cs.marginals[t].fixed_params.empty()) continue;
      for (int i = 0; i < x.rows(); ++i)
        col[i] = t == 0 ? co * x(i, 0) + si * x(i, 1)
                        : -si * x(i, 0) + co * x(i, 1);
      mg[t] = fit_marginal_weighted(MarginalFamily::Normal, col, w, -1).model;
    }
    return Component(cur.copula(), std::move(mg), ang);
  };
  auto obj = [&](double a) { return component_nll(profiled(a), x, w); };

  const double f_cur = component_nll(cur, x, w);
  const int grid = 16;
  double fbest = kPosInf;
  double abest = cur.angle();
  for (int i = 1; i <= grid; ++i) {
    const double a = kTwoPi * i / grid;
    const double f = obj(a);
    if (f < fbest) {
      fbest = f;
      abest = a;
    }
  }
  const double h = kTwoPi / grid;
  GoldenResult g = golden_min(obj, abest - h, abest + h, 1e-7);
  if (g.f < fbest) {
    fbest = g.f;
    abest = g.x;
  }
  return fbest < f_cur && std::isfinite(fbest) ? profiled(abest) : cur;
}

CopulaModel fit_copula_weighted(const CopulaModel& like, const Matrix& u,
                                std::span<const double> w) {
  return fit_copula_generic(
      like, [&](const CopulaModel& c) { return copula_nll_u(c, u, w); });
}

CopulaModel fit_copula_counts(const CopulaModel& like,
                              const std::vector<MarginalModel>& marginals,
                              const Matrix& x, std::span<const double> w) {
  CellIndex ci = dedup_rows(x);
  std::vector<double> cw(ci.cells.size(), 0.0);
  for (size_t i = 0; i < ci.row_cell.size(); ++i) cw[ci.row_cell[i]] += w[i];
  return fit_copula_generic(like, [&](const CopulaModel& c) {
    Component cand(c, marginals);
    std::vector<double> lp = cells_logpmf(cand, ci.cells);
    const double s = weighted_sum(cw, lp);
    return s == kNegInf ? kPosInf : -s;
  });
}

// ---- M-steps ---------------------------------------------------------------

MixtureModel m_step_full(const MixtureModel& m, const Dataset& data,
                         const Matrix& w, const MixtureSpec& spec,
                         const FitConfig& cfg,
                         std::vector<std::string>* warnings) {
  const int k = m.k();
  std::vector<Component> out;
  out.reserve(k);
  for (int j = 0; j < k; ++j) out.push_back(m.component(j));
  std::vector<std::vector<std::string>> warn(k);

  parallel_for(k, cfg.jobs, [&](int j) {
    const ComponentSpec& cs = spec.components[j];
    const Component& cur = m.component(j);
    std::span<const double> wj = col_span(w, j);
    double wsum = 0.0;
    for (double v : wj) wsum += v;
    if (wsum <= 1e-12) {
      warn[j].push_back(comp_field(j, "kept: no responsibility mass"));
      return;
    }
    const bool upd_angle = cs.angle == AngleMode::Free && cfg.rotation_enabled;
    const bool plain_margins =
        cur.copula().family() == CopulaFamily::Independence && !upd_angle;
    if (plain_margins) {
      // the objective separates; per-margin weighted MLE is the exact argmax
      Matrix z = rotated_values(data.values, cur);
      auto [mg, ws] = refit_margins_exact(cs, cur.marginals(), z, wj, j);
      for (auto& s : ws) warn[j].push_back(std::move(s));
      std::optional<double> ang;
      if (cur.has_angle()) ang = cur.angle();
      out[j] = Component(cur.copula(), std::move(mg), ang);
      return;
    }
    out[j] = improve_component(cs, cur, data.values, wj, true, true, upd_angle);
  });

  if (warnings)
    for (auto& ws : warn)
      for (auto& s : ws) warnings->push_back(std::move(s));
  return MixtureModel(m.weights(), std::move(out));
}

MixtureModel ecm_step(const MixtureModel& m, const Dataset& data,
                      const Matrix& w, const MixtureSpec& spec,
                      const FitConfig& cfg,
                      std::vector<std::string>* warnings) {
  if (data.all_count())
    // count components update all blocks jointly: the cell PMF couples the
    // marginals and the copula through every vertex of the cell
    return m_step_full(m, data, w, spec, cfg, warnings);

  const int k = m.k();
  std::vector<Component> out;
  out.reserve(k);
  for (int j = 0; j < k; ++j) out.push_back(m.component(j));
  std::vector<std::vector<std::string>> warn(k);

  parallel_for(k, cfg.jobs, [&](int j) {
    const ComponentSpec& cs = spec.components[j];
    Component cur = m.component(j);
    std::span<const double> wj = col_span(w, j);
    double wsum = 0.0;
    for (double v : wj) wsum += v;
    if (wsum <= 1e-12) {
      warn[j].push_back(comp_field(j, "kept: no responsibility mass"));
      return;
    }

    // CM1: marginals at the current copula parameters and angle
    const bool any_free_margin =
        std::any_of(cs.marginals.begin(), cs.marginals.end(),
                    [](const MarginalSpec& ms) { return ms.fixed_params.empty(); });
    if (any_free_margin) {
      if (cur.copula().family() == CopulaFamily::Independence) {
        Matrix z = rotated_values(data.values, cur);
        auto [mg, ws] = refit_margins_exact(cs, cur.marginals(), z, wj, j);
        for (auto& s : ws) warn[j].push_back(std::move(s));
        std::optional<double> ang;
        if (cur.has_angle()) ang = cur.angle();
        cur = Component(cur.copula(), std::move(mg), ang);
      } else {
        cur = improve_component(cs, cur, data.values, wj, true, false, false);
      }
    }

    // CM2: copula parameters at the refreshed marginals
    if (cs.copula.fixed_params.empty() &&
        cur.copula().family() != CopulaFamily::Independence) {
      Matrix z = rotated_values(data.values, cur);
      Matrix u(z.rows(), z.cols());
      for (int i = 0; i < z.rows(); ++i)
        for (int t = 0; t < z.cols(); ++t)
          u(i, t) = clamp_unit(cur.marginals()[t].cdf(z(i, t)));
      CopulaModel cop = fit_copula_weighted(cur.copula(), u, wj);
      std::optional<double> ang;
      if (cur.has_angle()) ang = cur.angle();
      cur = Component(std::move(cop), cur.marginals(), ang);
    }

    // CM3: rotation angle, with the Normal marginals profiled out
    if (cs.angle == AngleMode::Free && cfg.rotation_enabled)
      cur = fit_angle(cs, cur, data.values, wj);

    out[j] = std::move(cur);
  });

  if (warnings)
    for (auto& ws : warn)
      for (auto& s : ws) warnings->push_back(std::move(s));
  return MixtureModel(m.weights(), std::move(out));
}

// ---- fit drivers -----------------------------------------------------------

FitReport fit_from_model(const MixtureSpec& spec, const MixtureModel& start,
                         const Dataset& data, const FitConfig& cfg) {
  if (cfg.rel_tol <= 0.0) throw std::invalid_argument("rel_tol must be > 0");
  if (cfg.max_iter < 0) throw std::invalid_argument("max_iter must be >= 0");

  MixtureModel model = start;
  EStepResult es = estep_full(model, data);
  FitReport rep{model};
  rep.loglik_trace.push_back(es.loglik);
  rep.loglik = es.loglik;
  const int n = data.n();
  const double degen_floor = 1.0 / (10.0 * n);

  bool free_angles = false;
  for (const auto& cs : spec.components)
    if (cs.angle == AngleMode::Free) free_angles = true;
  if (free_angles && !cfg.rotation_enabled)
    rep.warnings.push_back(
        "free angles present but rotation updates are disabled; angles stay "
        "at their starting values");

  while (rep.iterations < cfg.max_iter) {
    std::vector<double> pi = m_step_pi(es.w);
    if (*std::min_element(pi.begin(), pi.end()) < degen_floor) {
      rep.degenerate = true;
      rep.warnings.push_back("a mixing weight collapsed below 1/(10n)");
      break;
    }
    MixtureModel next(pi, [&] {
      std::vector<Component> comps;
      for (int j = 0; j < model.k(); ++j) comps.push_back(model.component(j));
      return comps;
    }());
    next = cfg.algorithm == Algorithm::EM
               ? m_step_full(next, data, es.w, spec, cfg, &rep.warnings)
               : ecm_step(next, data, es.w, spec, cfg, &rep.warnings);
    EStepResult es2 = estep_full(next, data);
    model = std::move(next);
    ++rep.iterations;
    rep.loglik_trace.push_back(es2.loglik);
    const double prev = rep.loglik;
    rep.loglik = es2.loglik;
    es = std::move(es2);
    if (es.loglik - prev < cfg.rel_tol * (std::abs(prev) + 1e-100)) {
      rep.converged = true;
      break;
    }
  }

  rep.model = std::move(model);
  rep.responsibilities = std::move(es.w);
  rep.assignments.resize(n);
  for (int i = 0; i < n; ++i) {
    int arg = 0;
    for (int j = 1; j < rep.model.k(); ++j)
      if (rep.responsibilities(i, j) > rep.responsibilities(i, arg)) arg = j;
    rep.assignments[i] = arg;
  }
  rep.q = free_param_count(spec);
  rep.n = n;
  rep.bic = -2.0 * rep.loglik + rep.q * std::log(static_cast<double>(n));
  return rep;
}

namespace {

// Closed-form pre-clustering pass. A mixture with an independence copula and
// Normal (continuous) or Binomial (count) marginals iterates in closed form,
// so a short run costs next to nothing; its class labels separate
// overlapping groups far better than raw anchor distances and make much
// stronger starting classes. Falls back to the raw partition whenever the
// pass empties a class.
PartitionResult refine_partition(const Dataset& data,
                                 const PartitionResult& part,
                                 const FitConfig& cfg, int k) {
  if (k < 2) return part;
  MixtureSpec pre;
  pre.components.resize(k);
  for (auto& cs : pre.components) {
    cs.copula.family = CopulaFamily::Independence;
    cs.marginals.resize(data.domains.size());
    for (size_t t = 0; t < data.domains.size(); ++t)
      cs.marginals[t].family = data.domains[t].count ? MarginalFamily::Binomial
                                                     : MarginalFamily::Normal;
  }
  FitConfig pcfg;
  pcfg.max_iter = 100;
  pcfg.rel_tol = 1e-6;
  pcfg.jobs = cfg.jobs;
  try {
    IfmResult s = ifm_start(pre, data, part);
    FitReport rep = fit_from_model(pre, s.model, data, pcfg);
    PartitionResult out;
    out.labels = rep.assignments;
    out.cardinality.assign(k, 0);
    for (int v : out.labels) out.cardinality[v]++;
    for (int c : out.cardinality)
      if (c == 0) return part;
    return out;
  } catch (const std::exception&) {
    return part;
  }
}

}  // namespace

FitReport fit(const MixtureSpec& spec, const Dataset& data,
              const FitConfig& cfg) {
  validate_spec(spec, data);
  if (cfg.n_starts < 1) throw std::invalid_argument("n_starts must be >= 1");

  std::vector<FitReport> reports;
  for (int s = 0; s < cfg.n_starts; ++s) {
    const std::uint64_t seed_s = mix_seed(cfg.seed, s);
    PartitionResult part =
        cfg.partition == PartitionMethod::KMedoids
            ? partition_kmedoids(data, spec.k(), seed_s)
            : partition_min_distance(data, spec.k(), seed_s);
    part = refine_partition(data, part, cfg, spec.k());
    IfmResult ifm = ifm_start(spec, data, part);
    FitReport rep = fit_from_model(spec, ifm.model, data, cfg);
    rep.start_index = s;
    rep.warnings.insert(rep.warnings.begin(), ifm.warnings.begin(),
                        ifm.warnings.end());
    reports.push_back(std::move(rep));
  }

  int best = -1;
  for (int s = 0; s < cfg.n_starts; ++s) {
    if (reports[s].degenerate) continue;
    if (best < 0 || reports[s].loglik > reports[best].loglik) best = s;
  }
  if (best < 0) {  // every start collapsed; hand back the best of them
    best = 0;
    for (int s = 1; s < cfg.n_starts; ++s)
      if (reports[s].loglik > reports[best].loglik) best = s;
  }
  return reports[best];
}

}  // namespace copmix
