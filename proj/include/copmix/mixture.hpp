#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "copmix/common.hpp"
#include "copmix/copulas.hpp"
#include "copmix/datakit.hpp"
#include "copmix/marginals.hpp"

namespace copmix {

// One mixture component: copula over the probability-integral transforms of
// its per-column marginals, plus an optional rotation angle omega in
// (0, 2*pi] applied to the observation (z = O(omega)^T x) before evaluation.
// A free angle requires two real-line (Normal) marginals; combining an angle
// with a Gaussian copula over Normal marginals is rejected because the
// resulting elliptical density is rotation-invariant up to reparameterization
// and the angle would not be identifiable.
class Component {
 public:
  Component(CopulaModel copula, std::vector<MarginalModel> marginals,
            std::optional<double> angle = std::nullopt);

  const CopulaModel& copula() const { return copula_; }
  const std::vector<MarginalModel>& marginals() const { return marginals_; }
  int dim() const { return static_cast<int>(marginals_.size()); }
  bool is_count() const { return marginals_.front().is_count(); }
  bool has_angle() const { return angle_.has_value(); }
  double angle() const { return angle_.value(); }

  // log density at a continuous observation (length dim)
  double log_density(std::span<const double> x) const;
  // log PMF at a count observation; cell probability floored at kPmfFloor
  double log_pmf(std::span<const double> x) const;

 private:
  CopulaModel copula_;
  std::vector<MarginalModel> marginals_;
  std::optional<double> angle_;
};

class MixtureModel {
 public:
  MixtureModel(std::vector<double> weights, std::vector<Component> components);

  int k() const { return static_cast<int>(components_.size()); }
  int dim() const { return components_.front().dim(); }
  bool is_count() const { return components_.front().is_count(); }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<Component>& components() const { return components_; }
  const Component& component(int j) const { return components_.at(j); }

  void set_weights(std::vector<double> w);
  void set_component(int j, Component c);

  double log_pdf(std::span<const double> x) const;  // continuous mixture density
  double log_pmf(std::span<const double> x) const;  // count mixture PMF

 private:
  std::vector<double> weights_;
  std::vector<Component> components_;
};

// ---- declarative fit specification -----------------------------------------

struct CopulaSpec {
  CopulaFamily family = CopulaFamily::Independence;
  Rotation rotation = Rotation::R0;
  CorrStructure structure = CorrStructure::Exchangeable;  // Gaussian only
  std::vector<double> fixed_params;  // empty => parameters are fitted
};

struct MarginalSpec {
  MarginalFamily family = MarginalFamily::Normal;
  int index = -1;                    // Binomial count bound
  std::vector<double> fixed_params;  // empty => parameters are fitted
};

enum class AngleMode { None, Free, Fixed };

struct ComponentSpec {
  CopulaSpec copula;
  std::vector<MarginalSpec> marginals;
  AngleMode angle = AngleMode::None;
  double angle_value = 0.0;  // radians; Fixed only
};

struct MixtureSpec {
  std::vector<ComponentSpec> components;
  int k() const { return static_cast<int>(components.size()); }
};

// spec with the same families/rotations/structures as a concrete model, all
// parameters free
MixtureSpec spec_like(const MixtureModel& m);

// Throws std::invalid_argument/std::domain_error when the spec is internally
// inconsistent or does not match the dataset's column domains.
void validate_spec(const MixtureSpec& spec, const Dataset& data);

enum class Algorithm { EM, ECM };
enum class PartitionMethod { MinDistance, KMedoids };

struct FitConfig {
  Algorithm algorithm = Algorithm::ECM;
  double rel_tol = 1e-8;   // relative log-likelihood increase termination
  int max_iter = 1000;
  int n_starts = 1;
  std::uint64_t seed = 1;
  bool rotation_enabled = false;  // gates updates of free angles
  int jobs = 1;
  PartitionMethod partition = PartitionMethod::MinDistance;
};

struct FitReport {
  explicit FitReport(MixtureModel m) : model(std::move(m)) {}

  MixtureModel model;
  double loglik = 0.0;
  std::vector<double> loglik_trace;  // model states theta^(0..L)
  Matrix responsibilities;           // n x k, rows sum to 1
  std::vector<int> assignments;      // argmax responsibility, 0-based
  int iterations = 0;
  bool converged = false;
  bool degenerate = false;  // a mixing weight collapsed below 1/(10n)
  int q = 0;                // free parameter count
  int n = 0;                // observations used
  double bic = 0.0;
  int start_index = 0;
  std::vector<std::string> warnings;
};

// ---- estimation operations --------------------------------------------------

// Per-row log density (continuous columns) or log PMF (count columns) of a
// single component. The count path dedups repeated cells and shares
// per-margin tables across rows (a one-factor quadrature handles
// exchangeable-correlation Gaussian copulas), so it is much faster than
// row-by-row log_pmf calls while agreeing within quadrature tolerance.
std::vector<double> component_log_prob_rows(const Component& comp,
                                            const Matrix& x);

// Weighted copula-parameter maximization at fixed marginals. `like` fixes
// family/rotation/structure/dimension and provides the warm start; `u` holds
// probability-transformed rows. One-parameter families use a bracketed
// grid-plus-golden line search on the transformed scale, multiparameter
// families Nelder-Mead. The result never scores below `like`.
CopulaModel fit_copula_weighted(const CopulaModel& like, const Matrix& u,
                                std::span<const double> w);

// Count counterpart: maximizes the weighted cell-PMF likelihood over the
// copula parameters with the marginals held fixed.
CopulaModel fit_copula_counts(const CopulaModel& like,
                              const std::vector<MarginalModel>& marginals,
                              const Matrix& x, std::span<const double> w);

// Rotation-angle search with the free Normal marginals profiled out in
// closed form at every trial angle (a half-turn flip negates the rotated
// coordinates, so the angle and the locations must move together). Grid over
// one period plus golden refinement; returns the incumbent unless a
// candidate is strictly better.
Component fit_angle(const ComponentSpec& cs, const Component& cur,
                    const Matrix& x, std::span<const double> w);

double loglik(const MixtureModel& m, const Dataset& data);

// responsibilities given current parameters; throws when an observation has
// zero density under every component (message names the row)
Matrix e_step(const MixtureModel& m, const Dataset& data);

std::vector<double> m_step_pi(const Matrix& W);

// Joint per-component weighted likelihood maximization (EM M-step). Fixed
// parameters in the spec are held; failed component searches keep previous
// parameters and append a warning. The weighted objective never decreases.
MixtureModel m_step_full(const MixtureModel& m, const Dataset& data,
                         const Matrix& W, const MixtureSpec& spec,
                         const FitConfig& cfg,
                         std::vector<std::string>* warnings = nullptr);

// ECM conditional blocks for continuous data: CM1 marginals under the copula
// penalty (exact weighted MLE when the copula is Independence), CM2 copula
// parameters, CM3 rotation angles (when enabled). Same guarantees as above.
MixtureModel ecm_step(const MixtureModel& m, const Dataset& data,
                      const Matrix& W, const MixtureSpec& spec,
                      const FitConfig& cfg,
                      std::vector<std::string>* warnings = nullptr);

// number of free parameters: (k-1) mixing weights + free marginal/copula
// parameters + free angles
int free_param_count(const MixtureSpec& spec);

// Multi-start EM/ECM driver: partitions from the seed, IFM starting values,
// iteration to relative tolerance. Deterministic given (seed, config),
// including under jobs > 1.
FitReport fit(const MixtureSpec& spec, const Dataset& data,
              const FitConfig& cfg);

// Single run from a prepared starting model (used by the multi-start driver
// and the permutation search; exposed for tests).
FitReport fit_from_model(const MixtureSpec& spec, const MixtureModel& start,
                         const Dataset& data, const FitConfig& cfg);

}  // namespace copmix
