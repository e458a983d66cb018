#pragma once

#include "ldpe/numerics.hpp"
#include "ldpe/rng.hpp"
#include "ldpe/score.hpp"
#include "ldpe/types.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ldpe {

enum class Estimator {
  lasso,
  scaled_lasso,
  scaled_lasso_lse,
  oracle,
  ldpe,
  r_ldpe,
  t_oracle,
  t_ldpe
};

std::string estimator_name(Estimator e);
std::optional<Estimator> estimator_from_name(const std::string& name);
std::vector<Estimator> all_estimators();

struct SimSetting {
  std::string label = "A";
  Index n = 100;
  Index p = 500;
  double rho = 0.2;
  double alpha_decay = 2.0;
  int reps = 50;
  std::uint64_t master_seed = 0;
  double level = 0.95;
  std::vector<Estimator> estimators = all_estimators();
  int threads = 1;
  Index restricted_m = 4;
  ScoreSettings score_settings;

  bool has(Estimator e) const;
};

/// Paper cases (A)–(D): (α,ρ) = (2,1/5), (1,1/5), (2,4/5), (1,4/5), at the
/// desk-scale dimensions; call scale_full for the paper's (200, 3000, 100).
SimSetting paper_setting(char label);
void scale_full(SimSetting& setting);

/// Each row follows x₁ = z₁, x_j = ρ·x_{j−1} + √(1−ρ²)·z_j with i.i.d. N(0,1)
/// draws, which realizes the AR(1) covariance ρ^{|j−k|} exactly; columns are
/// then rescaled to squared norm n.
std::pair<Matrix, StandardizedDesign> generate_design(Index n, Index p, double rho,
                                                      RngStream stream);

/// Signal pattern: spikes at {⌈p/2⌉ + k·⌈p/10⌉} (1-based, clipped at p) get
/// 3λ_univ; every other coefficient decays as 3λ_univ/j^α.
Vector generate_beta(Index p, double alpha_decay, Index n);
std::vector<Index> spike_indices(Index p);  // 0-based

struct ReplicationRecord {
  int rep_id = 0;
  bool failed = false;
  std::string error;
  std::map<Estimator, Vector> estimates;       // full length p (interval estimators)
  std::map<Estimator, Vector> half_widths;     // NaN where no interval
  std::map<Estimator, Vector> spike_estimates; // point estimators, spike order
  std::map<Estimator, double> l2_loss;
  std::map<Estimator, double> sigma_hat;
  double bias_excess = 0.0;  // max_j of |τ⁻¹Δ − zᵀε/‖z‖| − η‖init−β‖₁
  double ms_elapsed = 0.0;   // never written to output files
};

struct MaximalStat {
  double bias = 0.0;
  double sd = 0.0;
  double median_abs_error = 0.0;
};

struct LossStat {
  double mean = 0.0;
  double sd = 0.0;
  double median = 0.0;
};

struct SummaryTables {
  std::map<Estimator, MaximalStat> maximal;  // Table-2 layout, pooled over spikes
  std::map<Estimator, std::vector<MaximalStat>> maximal_per_index;
  std::map<Estimator, double> coverage_all;      // Table-3 layout
  std::map<Estimator, double> coverage_maximal;
  std::map<Estimator, double> width_ratio_median;  // Table-4 layout, vs oracle
  std::map<Estimator, double> mse_ratio_median;    // Table-5 layout
  std::map<Estimator, LossStat> l2;                // Table-6 layout
  std::map<Estimator, Vector> coverage_by_index;
  std::map<Estimator, Vector> width_ratio_by_index;
  std::map<Estimator, Vector> mse_ratio_by_index;
  int reps_used = 0;
  int reps_failed = 0;
  double bias_excess_max = 0.0;
};

struct SimResult {
  SimSetting setting;
  Vector beta;
  std::vector<Index> spikes;
  std::vector<ReplicationRecord> records;
  SummaryTables tables;
};

/// Runs every replication (parallel across replications, deterministic for any
/// thread count) and aggregates the paper's summary tables. Throws when more
/// than 5% of replications fail.
SimResult run_setting(const SimSetting& setting);

/// settings.json, replications.csv, summary_tables.{json,csv} and the three
/// plot-data files, all written atomically.
void write_sim_outputs(const SimResult& result, const std::string& out_dir);

}  // namespace ldpe
