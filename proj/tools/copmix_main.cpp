#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "copmix/datakit.hpp"
#include "copmix/eval.hpp"
#include "copmix/init.hpp"
#include "copmix/mixture.hpp"
#include "copmix/model_spec.hpp"
#include "copmix/numerics.hpp"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNoConverge = 2;
constexpr int kExitIo = 3;

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

copmix::Dataset read_csv_checked(const std::string& path) {
  std::ifstream probe(path);
  if (!probe) throw IoError("cannot open " + path);
  probe.close();
  return copmix::read_csv(path);
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
  return j;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << text;
  if (!out) throw IoError("failed writing " + path);
}

void write_json_file(const std::string& path, const json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

// every command records its exact invocation next to its primary output so
// the run can be reproduced bit-for-bit with `copmix replay`
void write_manifest(const std::string& primary_out,
                    const std::vector<std::string>& argv) {
  json m;
  m["version"] = copmix::kVersion;
  m["command"] = argv.empty() ? "" : argv[0];
  m["argv"] = argv;
  write_json_file(primary_out + ".manifest.json", m);
}

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// ---- fit ----------------------------------------------------------------

struct FitArgs {
  std::string data_path, spec_path, out_path = "report.json";
  std::string assignments_path;
  std::string algorithm = "ecm";
  std::string partition = "mindist";
  double tol = 1e-8;
  int max_iter = 1000;
  int starts = 1;
  std::uint64_t seed = 1;
  int jobs = 0;
  bool rotations = false;
  bool permute = false;
};

void add_fit_options(CLI::App* cmd, FitArgs* a) {
  cmd->add_option("--data", a->data_path, "input dataset CSV")->required();
  cmd->add_option("--spec", a->spec_path, "model spec JSON")->required();
  cmd->add_option("--out", a->out_path, "fit report JSON path");
  cmd->add_option("--assignments", a->assignments_path,
                  "cluster assignments CSV path");
  cmd->add_option("--algorithm", a->algorithm, "em or ecm")
      ->check(CLI::IsMember({"em", "ecm"}));
  cmd->add_option("--tol", a->tol, "relative log-likelihood tolerance");
  cmd->add_option("--max-iter", a->max_iter, "iteration cap");
  cmd->add_option("--starts", a->starts, "number of random starts");
  cmd->add_option("--seed", a->seed, "random seed");
  cmd->add_option("--jobs", a->jobs, "worker threads (default: logical cores)");
  cmd->add_flag("--rotations", a->rotations,
                "fit a rotation angle per component");
  cmd->add_flag("--permute", a->permute,
                "search all assignments of the component copulas to slots");
  cmd->add_option("--partition", a->partition, "mindist or kmedoids")
      ->check(CLI::IsMember({"mindist", "kmedoids"}));
}

int default_jobs() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void write_assignments_csv(const std::string& path,
                           const std::vector<int>& assignments) {
  std::ostringstream out;
  out << "row,assignment\n";
  for (size_t i = 0; i < assignments.size(); ++i)
    out << i << ',' << assignments[i] << '\n';
  write_text_file(path, out.str());
}

// Closed-form cross-check available when the model is a single component of
// independent Normal marginals: the global MLE is the per-column sample
// mean and ML standard deviation.
bool closed_form_applies(const copmix::MixtureSpec& spec) {
  if (spec.k() != 1) return false;
  const auto& cs = spec.components[0];
  if (cs.copula.family != copmix::CopulaFamily::Independence) return false;
  if (cs.angle != copmix::AngleMode::None) return false;
  for (const auto& ms : cs.marginals)
    if (ms.family != copmix::MarginalFamily::Normal || !ms.fixed_params.empty())
      return false;
  return true;
}

double closed_form_normal_loglik(const copmix::Dataset& data) {
  const int n = data.n(), p = data.p();
  double ll = 0.0;
  for (int t = 0; t < p; ++t) {
    const double mean = data.values.col(t).mean();
    double ss = 0.0;
    for (int i = 0; i < n; ++i) {
      const double d = data.values(i, t) - mean;
      ss += d * d;
    }
    const double var = ss / n;
    ll += -0.5 * n * (std::log(2.0 * 3.14159265358979323846 * var) + 1.0);
  }
  return ll;
}

int cmd_fit(const FitArgs& a, const std::vector<std::string>& argv) {
  const copmix::Dataset data = read_csv_checked(a.data_path);
  const copmix::MixtureSpec spec = copmix::spec_from_json(read_json_file(a.spec_path));

  copmix::MixtureSpec run_spec = spec;
  copmix::FitConfig cfg;
  cfg.algorithm = a.algorithm == "em" ? copmix::Algorithm::EM : copmix::Algorithm::ECM;
  cfg.rel_tol = a.tol;
  cfg.max_iter = a.max_iter;
  cfg.n_starts = a.starts;
  cfg.seed = a.seed;
  cfg.jobs = a.jobs > 0 ? a.jobs : default_jobs();
  cfg.partition = a.partition == "kmedoids" ? copmix::PartitionMethod::KMedoids
                                            : copmix::PartitionMethod::MinDistance;
  if (a.rotations) {
    cfg.rotation_enabled = true;
    for (auto& cs : run_spec.components)
      if (cs.angle == copmix::AngleMode::None) cs.angle = copmix::AngleMode::Free;
  }

  copmix::FitReport rep = [&] {
    if (!a.permute) return copmix::fit(run_spec, data, cfg);
    copmix::PermutationSearchResult sr =
        copmix::permutation_search(run_spec, data, cfg);
    std::cerr << "permutation search: " << sr.n_arrangements
              << " arrangements, best index " << sr.best_index << "\n";
    return std::move(sr.best);
  }();

  json out = copmix::report_to_json(rep);
  out["algorithm"] = a.algorithm;
  out["seed"] = a.seed;
  if (closed_form_applies(run_spec)) {
    const double direct = closed_form_normal_loglik(data);
    const double diff = std::abs(direct - rep.loglik);
    std::cerr << "closed-form check: independent-Normal single component; "
              << "direct MLE loglik " << format_g17(direct)
              << ", fitted " << format_g17(rep.loglik)
              << ", |diff| = " << format_g17(diff) << "\n";
    out["closed_form_check"] = {{"loglik_direct", direct}, {"abs_diff", diff}};
  }
  write_json_file(a.out_path, out);
  write_manifest(a.out_path, argv);
  if (!a.assignments_path.empty())
    write_assignments_csv(a.assignments_path, rep.assignments);

  for (const auto& w : rep.warnings) std::cerr << "warning: " << w << "\n";
  std::cerr << "loglik " << format_g17(rep.loglik) << "  bic "
            << format_g17(rep.bic) << "  iterations " << rep.iterations
            << (rep.converged ? "" : "  (max-iter reached)") << "\n";
  return rep.converged ? kExitOk : kExitNoConverge;
}

// ---- simulate -------------------------------------------------------------

struct SimArgs {
  std::string preset, model_path, out_path = "data.csv";
  std::uint64_t seed = 1;
  int n = 0;
};

int cmd_simulate(const SimArgs& a, const std::vector<std::string>& argv) {
  copmix::Dataset data;
  if (!a.model_path.empty()) {
    if (a.n < 1) throw std::invalid_argument("--n must be >= 1 with --model");
    const copmix::MixtureModel m =
        copmix::model_from_json(read_json_file(a.model_path));
    data = copmix::sample_mixture(m, a.n, a.seed);
  } else if (a.preset == "example1") {
    data = a.n > 0 ? copmix::make_example1(a.seed, a.n / 4)
                   : copmix::make_example1(a.seed);
  } else if (a.preset == "cognitive") {
    data = a.n > 0 ? copmix::make_cognitive_analog(a.seed, a.n)
                   : copmix::make_cognitive_analog(a.seed);
  } else {
    throw std::invalid_argument("unknown preset \"" + a.preset +
                                "\" (use example1 or cognitive)");
  }
  copmix::write_csv(data, a.out_path);
  write_manifest(a.out_path, argv);
  std::cerr << "wrote " << data.n() << "x" << data.p() << " dataset to "
            << a.out_path << "\n";
  return kExitOk;
}

// ---- evaluate ---------------------------------------------------------------

struct EvalArgs {
  std::string report_path, truth_path, out_path = "metrics.json";
};

int cmd_evaluate(const EvalArgs& a, const std::vector<std::string>& argv) {
  const copmix::FitReport rep =
      copmix::report_from_json(read_json_file(a.report_path));
  const copmix::Dataset truth = read_csv_checked(a.truth_path);
  if (!truth.has_labels())
    throw std::invalid_argument(a.truth_path + ": no label column");
  if (static_cast<int>(rep.assignments.size()) != truth.n())
    throw std::invalid_argument("report/truth row counts differ");

  json out;
  out["ari"] = copmix::adjusted_rand(rep.assignments, truth.labels);
  out["misclassification"] =
      copmix::misclassification(rep.assignments, truth.labels);
  out["bic"] = rep.bic;
  out["loglik"] = rep.loglik;
  out["q"] = rep.q;
  out["n"] = rep.n;
  write_json_file(a.out_path, out);
  write_manifest(a.out_path, argv);
  std::cerr << "ari " << out["ari"].get<double>() << "  misclassification "
            << out["misclassification"].get<double>() << "\n";
  return kExitOk;
}

// ---- contour ---------------------------------------------------------------

struct ContourArgs {
  std::string report_path, out_path = "grid.csv";
  int cx = 0, cy = 1;
  copmix::GridSpec grid;
  int jobs = 0;
};

int cmd_contour(const ContourArgs& a, const std::vector<std::string>& argv) {
  const copmix::FitReport rep =
      copmix::report_from_json(read_json_file(a.report_path));
  const copmix::Matrix g =
      copmix::contour_grid(rep.model, a.cx, a.cy, a.grid,
                           a.jobs > 0 ? a.jobs : default_jobs());
  const double dx = (a.grid.x_max - a.grid.x_min) / (a.grid.nx - 1);
  const double dy = (a.grid.y_max - a.grid.y_min) / (a.grid.ny - 1);
  std::ostringstream out;
  out << "x,y,density\n";
  for (int iy = 0; iy < a.grid.ny; ++iy)
    for (int ix = 0; ix < a.grid.nx; ++ix)
      out << format_g17(a.grid.x_min + ix * dx) << ','
          << format_g17(a.grid.y_min + iy * dy) << ','
          << format_g17(g(iy, ix)) << '\n';
  write_text_file(a.out_path, out.str());
  write_manifest(a.out_path, argv);
  return kExitOk;
}

int run(const std::vector<std::string>& argv);

// ---- replay ----------------------------------------------------------------

int cmd_replay(const std::string& manifest_path) {
  const json m = read_json_file(manifest_path);
  if (!m.contains("argv") || !m.at("argv").is_array())
    throw std::invalid_argument(manifest_path + ": missing argv");
  std::vector<std::string> argv;
  for (const auto& v : m.at("argv")) argv.push_back(v.get<std::string>());
  if (argv.empty() || argv[0] == "replay")
    throw std::invalid_argument(manifest_path + ": bad recorded command");
  return run(argv);
}

int run(const std::vector<std::string>& argv) {
  CLI::App app{"copula mixture models: simulate, fit, evaluate, contour"};
  app.require_subcommand(1);

  SimArgs sim;
  CLI::App* csim = app.add_subcommand("simulate", "draw a dataset");
  csim->add_option("--preset", sim.preset, "example1 or cognitive");
  csim->add_option("--model", sim.model_path, "model JSON to sample from");
  csim->add_option("--out", sim.out_path, "output CSV path");
  csim->add_option("--seed", sim.seed, "random seed");
  csim->add_option("--n", sim.n, "sample size (preset default otherwise)");

  FitArgs fita;
  CLI::App* cfit = app.add_subcommand("fit", "fit a mixture to a dataset");
  add_fit_options(cfit, &fita);

  EvalArgs eva;
  CLI::App* ceval = app.add_subcommand("evaluate", "clustering metrics");
  ceval->add_option("--report", eva.report_path, "fit report JSON")->required();
  ceval->add_option("--truth", eva.truth_path, "labeled dataset CSV")->required();
  ceval->add_option("--out", eva.out_path, "metrics JSON path");

  ContourArgs con;
  CLI::App* ccon = app.add_subcommand("contour", "density grid CSV");
  ccon->add_option("--report", con.report_path, "fit report JSON")->required();
  ccon->add_option("--out", con.out_path, "grid CSV path");
  ccon->add_option("--x", con.cx, "first coordinate (0-based)");
  ccon->add_option("--y", con.cy, "second coordinate (0-based)");
  ccon->add_option("--x-min", con.grid.x_min)->required();
  ccon->add_option("--x-max", con.grid.x_max)->required();
  ccon->add_option("--y-min", con.grid.y_min)->required();
  ccon->add_option("--y-max", con.grid.y_max)->required();
  ccon->add_option("--nx", con.grid.nx, "grid points along x");
  ccon->add_option("--ny", con.grid.ny, "grid points along y");
  ccon->add_option("--jobs", con.jobs, "worker threads");

  std::string manifest_path;
  CLI::App* crep = app.add_subcommand("replay", "re-run a recorded command");
  crep->add_option("manifest", manifest_path, "manifest JSON")->required();

  // CLI11 wants argv reversed and without the program name
  std::vector<std::string> rev(argv.rbegin(), argv.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (csim->parsed()) return cmd_simulate(sim, argv);
  if (cfit->parsed()) return cmd_fit(fita, argv);
  if (ceval->parsed()) return cmd_evaluate(eva, argv);
  if (ccon->parsed()) return cmd_contour(con, argv);
  if (crep->parsed()) return cmd_replay(manifest_path);
  return kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    return run(args);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}
