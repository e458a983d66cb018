// Command-line surface: fit/ci/select on user data, simulate, diagnose, scores.
#include "ldpe/diagnostics.hpp"
#include "ldpe/inference.hpp"
#include "ldpe/io.hpp"
#include "ldpe/parallel.hpp"
#include "ldpe/scaled_lasso.hpp"
#include "ldpe/score.hpp"
#include "ldpe/sim.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace {

using namespace ldpe;

struct CommonOpts {
  std::string design_path;
  std::string response_path;
  std::string out_path;
  std::string init_method = "scaled-lasso-lse";
  std::string score_method = "ldpe";
  Index m = 4;
  double kappa0 = 0.25;
  double kappa1 = 0.25;
  std::string lambda0 = "univ";
  double alpha = 0.05;
  int threads = 0;  // 0 → --threads/auto resolution
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string format = "json";
  bool header = false;
  bool center = false;
  std::string scores_in;
  std::string scores_out;
};

int thread_count(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("LDPE_THREADS")) {
    const int parsed = std::atoi(env);
    if (parsed > 0) return parsed;
  }
  return resolve_threads(0);
}

struct LoadedProblem {
  StandardizedDesign design;
  Vector y;
};

LoadedProblem load_problem(const CommonOpts& opts) {
  Matrix m = read_csv_matrix(opts.design_path, opts.header);
  Vector y = read_csv_vector(opts.response_path, opts.header);
  if (m.rows() != y.size())
    throw IoError("design has " + std::to_string(m.rows()) + " rows but response has " +
                  std::to_string(y.size()));
  if (opts.center) {
    center_columns(m);
    center(y);
  }
  return {standardize_columns(m), std::move(y)};
}

double resolve_lambda0(const std::string& text, Index n, Index p) {
  if (text == "univ") return lambda_univ(n, p);
  double value = 0.0;
  try {
    value = std::stod(text);
  } catch (...) {
    throw DomainError("--lambda0 must be 'univ' or a positive number");
  }
  if (!(value > 0.0)) throw DomainError("--lambda0 must be positive");
  return value;
}

struct PipelineResult {
  LdpeFit fit;
  std::shared_ptr<ScoreSet> scores;
};

PipelineResult run_pipeline(const CommonOpts& opts, const LoadedProblem& problem) {
  const Index n = problem.design.n();
  const Index p = problem.design.p();
  const double lambda0 = resolve_lambda0(opts.lambda0, n, p);
  ScoreSettings settings;
  settings.kappa0 = opts.kappa0;
  settings.kappa1 = opts.kappa1;
  const int threads = thread_count(opts.threads);

  std::shared_ptr<ScoreSet> scores;
  if (!opts.scores_in.empty()) {
    scores = std::make_shared<ScoreSet>(load_scores_for(opts.scores_in, problem.design));
  } else {
    const ScoreKind kind =
        opts.score_method == "r-ldpe" ? ScoreKind::restricted : ScoreKind::lasso_relaxed;
    scores = std::make_shared<ScoreSet>(
        build_all_scores(problem.design, settings, kind, opts.m, threads));
  }
  if (!opts.scores_out.empty()) save_scores(opts.scores_out, *scores);

  InitialFit init = opts.init_method == "scaled-lasso"
                        ? fit_scaled_lasso(problem.design, problem.y, lambda0)
                        : fit_scaled_lasso_lse(problem.design, problem.y, lambda0);
  if (!init.converged) throw Error("initial estimator failed to converge");
  return {ldpe_estimate(problem.design, problem.y, scores, init), scores};
}

void add_common(CLI::App* cmd, CommonOpts& opts, bool needs_data) {
  if (needs_data) {
    cmd->add_option("--design", opts.design_path, "design matrix CSV (numeric, rectangular)")
        ->required();
    cmd->add_option("--response", opts.response_path, "response CSV (single column)")->required();
  }
  cmd->add_option("--out", opts.out_path, "output path")->required();
  cmd->add_option("--init", opts.init_method, "initial estimator")
      ->check(CLI::IsMember({"scaled-lasso", "scaled-lasso-lse"}));
  cmd->add_option("--score", opts.score_method, "score construction")
      ->check(CLI::IsMember({"ldpe", "r-ldpe"}));
  cmd->add_option("--m", opts.m, "restricted-score window size");
  cmd->add_option("--kappa0", opts.kappa0, "Step-2 noise-factor slack");
  cmd->add_option("--kappa1", opts.kappa1, "Step-1 fallback inflation");
  cmd->add_option("--lambda0", opts.lambda0, "scaled-Lasso penalty: 'univ' or a value");
  cmd->add_option("--alpha", opts.alpha, "interval level alpha");
  cmd->add_option("--threads", opts.threads, "worker threads (0 = auto / LDPE_THREADS)");
  cmd->add_option("--format", opts.format, "output format")
      ->check(CLI::IsMember({"json", "csv"}));
  cmd->add_flag("--header", opts.header, "skip one header line in input CSVs");
  cmd->add_flag("--center", opts.center, "center y and design columns before standardizing");
  cmd->add_option("--scores-cache", opts.scores_in, "reuse a score cache file");
  cmd->add_option("--save-scores", opts.scores_out, "write the score cache file");
}

Contrast parse_contrast(const std::string& text, Index p) {
  Contrast a;
  std::stringstream ss(text);
  std::string term;
  while (std::getline(ss, term, ',')) {
    const auto colon = term.find(':');
    if (colon == std::string::npos) throw DomainError("contrast term must be index:weight");
    const long j = std::stol(term.substr(0, colon));
    const double w = std::stod(term.substr(colon + 1));
    if (j < 1 || j > p) throw DomainError("contrast index out of range (1-based)");
    a.emplace_back(static_cast<Index>(j - 1), w);
  }
  if (a.empty()) throw DomainError("empty contrast");
  return a;
}

std::vector<Index> parse_index_set(const std::string& text, Index p) {
  std::vector<Index> set;
  std::stringstream ss(text);
  std::string token;
  while (std::getline(ss, token, ',')) {
    const long j = std::stol(token);
    if (j < 1 || j > p) throw DomainError("index out of range (1-based)");
    set.push_back(static_cast<Index>(j - 1));
  }
  if (set.empty()) throw DomainError("empty index set");
  return set;
}

int cmd_fit(const CommonOpts& opts) {
  const LoadedProblem problem = load_problem(opts);
  const PipelineResult result = run_pipeline(opts, problem);
  std::optional<std::uint64_t> seed;
  if (opts.seed_given) seed = opts.seed;
  atomic_write(opts.out_path, opts.format == "csv" ? fit_to_csv(result.fit, opts.alpha)
                                                   : fit_to_json(result.fit, opts.alpha, seed));
  return 0;
}

int cmd_ci(const CommonOpts& opts, const std::string& contrast_text) {
  const LoadedProblem problem = load_problem(opts);
  const PipelineResult result = run_pipeline(opts, problem);
  const Contrast a = parse_contrast(contrast_text, problem.design.p());
  // The user's contrast targets original-scale coefficients; fold the column
  // scales into the weights before querying the standardized fit.
  Contrast scaled = a;
  for (auto& [j, w] : scaled) w /= problem.design.original_scales()[j];
  const IntervalEstimate est = confidence_interval(result.fit, scaled, opts.alpha);
  nlohmann::json doc;
  auto& terms = doc["contrast"] = nlohmann::json::array();
  for (const auto& [j, w] : a) terms.push_back({{"j", j + 1}, {"weight", w}});
  doc["point"] = est.point;
  doc["half_width"] = est.half_width;
  doc["low"] = est.point - est.half_width;
  doc["high"] = est.point + est.half_width;
  doc["level"] = est.level;
  atomic_write(opts.out_path, doc.dump(2) + "\n");
  return 0;
}

int cmd_select(const CommonOpts& opts, const std::string& mode_text, double c_n) {
  const LoadedProblem problem = load_problem(opts);
  const PipelineResult result = run_pipeline(opts, problem);
  const ThresholdMode mode = mode_text == "soft" ? ThresholdMode::soft : ThresholdMode::hard;
  const SelectionResult sel = threshold_ldpe(result.fit, opts.alpha, mode, c_n);
  nlohmann::json doc;
  doc["mode"] = mode_text;
  doc["alpha"] = opts.alpha;
  doc["c_n"] = c_n;
  auto& selected = doc["selected"] = nlohmann::json::array();
  for (Index j : sel.selected) selected.push_back(j + 1);
  auto& excluded = doc["excluded"] = nlohmann::json::array();
  for (Index j : sel.excluded) excluded.push_back(j + 1);
  auto& rows = doc["per_coefficient"] = nlohmann::json::array();
  for (Index j = 0; j < sel.estimates.size(); ++j) {
    const double scale = problem.design.original_scales()[j];
    nlohmann::json row;
    row["j"] = j + 1;
    row["estimate"] = sel.estimates[j] / scale;
    if (std::isnan(sel.thresholds[j]))
      row["threshold"] = nullptr;
    else
      row["threshold"] = sel.thresholds[j] / scale;
    rows.push_back(std::move(row));
  }
  atomic_write(opts.out_path, doc.dump(2) + "\n");
  return 0;
}

int cmd_scores(const CommonOpts& opts) {
  Matrix m = read_csv_matrix(opts.design_path, opts.header);
  if (opts.center) center_columns(m);
  const StandardizedDesign design = standardize_columns(m);
  ScoreSettings settings;
  settings.kappa0 = opts.kappa0;
  settings.kappa1 = opts.kappa1;
  const ScoreKind kind =
      opts.score_method == "r-ldpe" ? ScoreKind::restricted : ScoreKind::lasso_relaxed;
  const ScoreSet scores =
      build_all_scores(design, settings, kind, opts.m, thread_count(opts.threads));
  save_scores(opts.out_path, scores);
  return 0;
}

struct SimulateOpts {
  std::string setting_label = "A";
  bool desk = false;
  bool full = false;
  Index n = 0, p = 0;
  double rho = std::numeric_limits<double>::quiet_NaN();
  double alpha_decay = std::numeric_limits<double>::quiet_NaN();
  int reps = 0;
  double level = 0.95;
  std::string estimators_text;
  std::string out_dir;
  std::uint64_t seed = 0;
  int threads = 0;
  Index m = 4;
};

int cmd_simulate(const SimulateOpts& opts) {
  if (opts.setting_label.size() != 1) throw DomainError("setting must be one of A, B, C, D");
  SimSetting setting = paper_setting(opts.setting_label[0]);
  if (opts.full) scale_full(setting);
  if (opts.n > 0) setting.n = opts.n;
  if (opts.p > 0) setting.p = opts.p;
  if (!std::isnan(opts.rho)) setting.rho = opts.rho;
  if (!std::isnan(opts.alpha_decay)) setting.alpha_decay = opts.alpha_decay;
  if (opts.reps > 0) setting.reps = opts.reps;
  setting.level = opts.level;
  setting.master_seed = opts.seed;
  setting.threads = thread_count(opts.threads);
  setting.restricted_m = opts.m;
  if (!opts.estimators_text.empty()) {
    setting.estimators.clear();
    std::stringstream ss(opts.estimators_text);
    std::string token;
    while (std::getline(ss, token, ',')) {
      const auto e = estimator_from_name(token);
      if (!e) throw DomainError("unknown estimator '" + token + "'");
      setting.estimators.push_back(*e);
    }
  }
  const SimResult result = run_setting(setting);
  write_sim_outputs(result, opts.out_dir);
  double total_ms = 0.0;
  for (const auto& rec : result.records) total_ms += rec.ms_elapsed;
  std::cerr << "simulate: " << result.tables.reps_used << " replications ("
            << result.tables.reps_failed << " failed), " << total_ms / 1000.0
            << " s of replication time\n";
  return 0;
}

struct DiagnoseOpts {
  std::string s_text;
  double xi = 2.0;
  Index m = 2;
  double lambda1 = -1.0;
  double sparsity_s = -1.0;
  bool sampling = false;
  std::uint64_t seed = 0;
};

int cmd_diagnose(const CommonOpts& opts, const DiagnoseOpts& diag) {
  Matrix m = read_csv_matrix(opts.design_path, opts.header);
  if (opts.center) center_columns(m);
  const StandardizedDesign design = standardize_columns(m);
  RegularityReport report;
  report.s_set = parse_index_set(diag.s_text, design.p());
  report.xi = diag.xi;
  report.m = diag.m;
  report.kappa = compatibility_factor(design, report.s_set, diag.xi, diag.sampling,
                                      RngStream{diag.seed, 0});
  report.eigen = sparse_eigenvalues(design, report.s_set, diag.m, diag.sampling,
                                    RngStream{diag.seed, 1});
  const double lambda1 =
      diag.lambda1 >= 0.0
          ? diag.lambda1
          : 4.0 * std::sqrt(std::log(static_cast<double>(design.p())) /
                            static_cast<double>(design.n()));
  report.lambda1 = lambda1;
  const ThresholdedGram gram = thresholded_gram(design, lambda1);
  report.gram_eig_min = gram.eig_min;
  report.gram_eig_max = gram.eig_max;
  const double s_for_conditions =
      diag.sparsity_s > 0.0 ? diag.sparsity_s : static_cast<double>(report.s_set.size());
  report.conditions = gram_conditions(gram, s_for_conditions, diag.xi);

  nlohmann::json doc;
  auto& s_json = doc["S"] = nlohmann::json::array();
  for (Index j : report.s_set) s_json.push_back(j + 1);
  doc["xi"] = report.xi;
  doc["kappa_sq"] = {{"lower", report.kappa.lower},
                     {"upper", report.kappa.upper},
                     {"exact_mode", report.kappa.exact_mode}};
  doc["sparse_eigenvalues"] = {{"phi_minus", report.eigen.phi_minus},
                               {"phi_plus", report.eigen.phi_plus},
                               {"m", report.m},
                               {"exact_mode", report.eigen.exact_mode}};
  doc["thresholded_gram"] = {{"lambda1", report.lambda1},
                             {"eig_min", report.gram_eig_min},
                             {"eig_max", report.gram_eig_max}};
  doc["conditions"] = {{"s", s_for_conditions},
                       {"c_star", report.conditions.c_star},
                       {"c_sup", report.conditions.c_sup},
                       {"K", report.conditions.cap_k},
                       {"kappa_condition", report.conditions.kappa_condition},
                       {"eigen_condition", report.conditions.eigen_condition},
                       {"implied_kappa_sq_lower", report.conditions.implied_kappa_sq}};
  atomic_write(opts.out_path, doc.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Debiased inference for high-dimensional linear regression"};
  app.require_subcommand(1);

  CommonOpts fit_opts, ci_opts, select_opts, scores_opts, diag_common;
  std::string contrast_text, select_mode = "hard";
  double select_cn = 0.0;
  SimulateOpts sim_opts;
  DiagnoseOpts diag_opts;

  auto* fit = app.add_subcommand("fit", "debiased fit with per-coefficient intervals");
  add_common(fit, fit_opts, true);
  fit->add_option("--seed", fit_opts.seed, "provenance seed echoed into the output")
      ->each([&](const std::string&) { fit_opts.seed_given = true; });

  auto* ci = app.add_subcommand("ci", "confidence interval for a sparse contrast");
  add_common(ci, ci_opts, true);
  ci->add_option("--contrast", contrast_text, "terms as j:weight[,j:weight...] (1-based)")
      ->required();

  auto* select = app.add_subcommand("select", "thresholded-LDPE variable selection");
  add_common(select, select_opts, true);
  select->add_option("--mode", select_mode, "threshold rule")
      ->check(CLI::IsMember({"hard", "soft"}));
  select->add_option("--cn", select_cn, "threshold inflation c_n");

  auto* scores = app.add_subcommand("scores", "precompute the score-vector cache");
  scores->add_option("--design", scores_opts.design_path, "design matrix CSV")->required();
  scores->add_option("--out", scores_opts.out_path, "cache output path")->required();
  scores->add_option("--score", scores_opts.score_method, "score construction")
      ->check(CLI::IsMember({"ldpe", "r-ldpe"}));
  scores->add_option("--m", scores_opts.m, "restricted-score window size");
  scores->add_option("--kappa0", scores_opts.kappa0, "Step-2 noise-factor slack");
  scores->add_option("--kappa1", scores_opts.kappa1, "Step-1 fallback inflation");
  scores->add_option("--threads", scores_opts.threads, "worker threads");
  scores->add_flag("--header", scores_opts.header, "skip one header line");
  scores->add_flag("--center", scores_opts.center, "center design columns");

  auto* simulate = app.add_subcommand("simulate", "replication study with summary tables");
  simulate->add_option("--setting", sim_opts.setting_label, "paper case A|B|C|D");
  simulate->add_flag("--desk", sim_opts.desk, "desk-scale dimensions (default)");
  simulate->add_flag("--full", sim_opts.full, "paper-scale n=200, p=3000, 100 reps");
  simulate->add_option("--n", sim_opts.n, "override sample size");
  simulate->add_option("--p", sim_opts.p, "override dimension");
  simulate->add_option("--rho", sim_opts.rho, "override AR(1) correlation");
  simulate->add_option("--alpha-decay", sim_opts.alpha_decay, "override decay exponent");
  simulate->add_option("--reps", sim_opts.reps, "override replication count");
  simulate->add_option("--level", sim_opts.level, "confidence level");
  simulate->add_option("--estimators", sim_opts.estimators_text, "comma-separated subset");
  simulate->add_option("--m", sim_opts.m, "restricted-score window size");
  simulate->add_option("--out", sim_opts.out_dir, "output directory")->required();
  simulate->add_option("--seed", sim_opts.seed, "master seed");
  simulate->add_option("--threads", sim_opts.threads, "worker threads");

  auto* diagnose = app.add_subcommand("diagnose", "design regularity report");
  diagnose->add_option("--design", diag_common.design_path, "design matrix CSV")->required();
  diagnose->add_option("--out", diag_common.out_path, "report output path")->required();
  diagnose->add_flag("--header", diag_common.header, "skip one header line");
  diagnose->add_flag("--center", diag_common.center, "center design columns");
  diagnose->add_option("--S", diag_opts.s_text, "index set, comma-separated (1-based)")
      ->required();
  diagnose->add_option("--xi", diag_opts.xi, "cone opening (must be ≥ 1)");
  diagnose->add_option("--m", diag_opts.m, "sparse-eigenvalue width");
  diagnose->add_option("--lambda1", diag_opts.lambda1, "Gram threshold (default 4√(log p / n))");
  diagnose->add_option("--s", diag_opts.sparsity_s, "sparsity level for the condition check");
  diagnose->add_flag("--sampling", diag_opts.sampling, "force sampling mode");
  diagnose->add_option("--seed", diag_opts.seed, "sampling seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  try {
    if (*fit) return cmd_fit(fit_opts);
    if (*ci) return cmd_ci(ci_opts, contrast_text);
    if (*select) return cmd_select(select_opts, select_mode, select_cn);
    if (*scores) return cmd_scores(scores_opts);
    if (*simulate) return cmd_simulate(sim_opts);
    if (*diagnose) return cmd_diagnose(diag_common, diag_opts);
  } catch (const SizeError& e) {
    std::cerr << "error: " << e.what() << " (use --sampling)\n";
    return 5;
  } catch (const DegenerateResponseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ZeroColumnError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 2;
}
