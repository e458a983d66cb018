#include "ldpe/sim.hpp"

#include "ldpe/diagnostics.hpp"
#include "ldpe/inference.hpp"
#include "ldpe/io.hpp"
#include "ldpe/lasso.hpp"
#include "ldpe/parallel.hpp"
#include "ldpe/scaled_lasso.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

namespace ldpe {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

std::string estimator_name(Estimator e) {
  switch (e) {
    case Estimator::lasso: return "lasso";
    case Estimator::scaled_lasso: return "scaled_lasso";
    case Estimator::scaled_lasso_lse: return "scaled_lasso_lse";
    case Estimator::oracle: return "oracle";
    case Estimator::ldpe: return "ldpe";
    case Estimator::r_ldpe: return "r_ldpe";
    case Estimator::t_oracle: return "t_oracle";
    case Estimator::t_ldpe: return "t_ldpe";
  }
  return "?";
}

std::optional<Estimator> estimator_from_name(const std::string& name) {
  for (Estimator e : all_estimators())
    if (estimator_name(e) == name) return e;
  return std::nullopt;
}

std::vector<Estimator> all_estimators() {
  return {Estimator::lasso,  Estimator::scaled_lasso, Estimator::scaled_lasso_lse,
          Estimator::oracle, Estimator::ldpe,         Estimator::r_ldpe,
          Estimator::t_oracle, Estimator::t_ldpe};
}

bool SimSetting::has(Estimator e) const {
  return std::find(estimators.begin(), estimators.end(), e) != estimators.end();
}

SimSetting paper_setting(char label) {
  SimSetting s;
  switch (label) {
    case 'A': s.alpha_decay = 2.0; s.rho = 0.2; break;
    case 'B': s.alpha_decay = 1.0; s.rho = 0.2; break;
    case 'C': s.alpha_decay = 2.0; s.rho = 0.8; break;
    case 'D': s.alpha_decay = 1.0; s.rho = 0.8; break;
    default: throw DomainError("setting label must be A, B, C, or D");
  }
  s.label = std::string(1, label);
  return s;
}

void scale_full(SimSetting& setting) {
  setting.n = 200;
  setting.p = 3000;
  setting.reps = 100;
}

std::pair<Matrix, StandardizedDesign> generate_design(Index n, Index p, double rho,
                                                      RngStream stream) {
  if (!(std::abs(rho) < 1.0)) throw DomainError("rho must lie in (-1,1)");
  Rng rng(stream);
  Matrix raw(n, p);
  const double innovation = std::sqrt(1.0 - rho * rho);
  for (Index i = 0; i < n; ++i) {
    raw(i, 0) = rng.normal();
    for (Index j = 1; j < p; ++j) raw(i, j) = rho * raw(i, j - 1) + innovation * rng.normal();
  }
  StandardizedDesign design = standardize_columns(raw);
  return {std::move(raw), std::move(design)};
}

std::vector<Index> spike_indices(Index p) {
  std::vector<Index> spikes;
  const Index start = (p + 1) / 2;     // ⌈p/2⌉, 1-based
  const Index step = (p + 9) / 10;     // ⌈p/10⌉
  for (Index j = start; j <= p; j += step) spikes.push_back(j - 1);
  return spikes;
}

Vector generate_beta(Index p, double alpha_decay, Index n) {
  if (p < 2) throw DomainError("p must be at least 2");
  const double amplitude = 3.0 * lambda_univ(n, p);
  Vector beta(p);
  for (Index j = 0; j < p; ++j)
    beta[j] = amplitude / std::pow(static_cast<double>(j + 1), alpha_decay);
  for (Index j : spike_indices(p)) beta[j] = amplitude;
  return beta;
}

namespace {

struct OracleBatch {
  Vector estimates;    // β̂_j^(o)
  Vector half_widths;  // q · σ̂_j^(o) / ‖z_j^(o)‖
  Vector z_norms;
  Vector sigmas;
};

// Oracle estimates for every j; uses y − Xβ = ε to localize the adjustment.
OracleBatch oracle_all(const StandardizedDesign& design, const Vector& eps, const Vector& beta,
                       double quantile) {
  const Index p = design.p();
  const Index n = design.n();
  OracleBatch batch;
  batch.estimates = Vector::Constant(p, kNaN);
  batch.half_widths = Vector::Constant(p, kNaN);
  batch.z_norms = Vector::Constant(p, kNaN);
  batch.sigmas = Vector::Constant(p, kNaN);
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  Matrix window_cols(n, 3);
  Matrix neighbor_cols(n, 2);
  for (Index j = 0; j < p; ++j) {
    Index lo = j - 1, hi = j + 1;
    if (j == 0) { lo = 0; hi = 2; }
    if (j == p - 1) { lo = p - 3; hi = p - 1; }
    Index out = 0;
    for (Index k = lo; k <= hi; ++k) {
      window_cols.col(k - lo) = design.col(k);
      if (k != j) neighbor_cols.col(out++) = design.col(k);
    }
    const Vector z = ComplementProjector(neighbor_cols).residual(design.col(j));
    const double z_sq = z.squaredNorm();
    if (std::sqrt(z_sq) < 1e-10 * sqrt_n) continue;
    Vector adjusted = eps;
    for (Index k = lo; k <= hi; ++k) adjusted.noalias() += beta[k] * design.col(k);
    batch.estimates[j] = z.dot(adjusted) / z_sq;
    const double sigma_j = ComplementProjector(window_cols).residual(eps).norm() / sqrt_n;
    batch.z_norms[j] = std::sqrt(z_sq);
    batch.sigmas[j] = sigma_j;
    batch.half_widths[j] = quantile * sigma_j / batch.z_norms[j];
  }
  return batch;
}

double bias_excess_for(const LdpeFit& fit, const Vector& beta, const Vector& eps) {
  const double init_l1 = (fit.beta_init - beta).lpNorm<1>();
  double worst = -std::numeric_limits<double>::infinity();
  for (Index j = 0; j < fit.p(); ++j) {
    if (!fit.has_score[static_cast<std::size_t>(j)]) continue;
    const ScoreVector& s = fit.scores->at(j);
    const double z_norm = s.z.norm();
    const double lhs =
        std::abs((fit.beta_hat[j] - beta[j]) / s.tau - s.z.dot(eps) / z_norm);
    worst = std::max(worst, lhs - s.eta * init_l1);
  }
  return worst;
}

ReplicationRecord run_replication(const SimSetting& st, const Vector& beta,
                                  const std::vector<Index>& spikes, int rep) {
  const auto t0 = std::chrono::steady_clock::now();
  ReplicationRecord rec;
  rec.rep_id = rep;
  const auto rep_id = static_cast<std::uint64_t>(rep);
  auto [raw, design] =
      generate_design(st.n, st.p, st.rho, RngStream{st.master_seed, 2 * rep_id});
  const Vector eps = gaussian_vector(RngStream{st.master_seed, 2 * rep_id + 1}, st.n);
  const Vector y = design.X() * beta + eps;
  const Matrix gram = design.X().transpose() * design.X();
  const double lambda0 = lambda_univ(st.n, st.p);
  const double alpha = 1.0 - st.level;
  const double quantile = normal_quantile(1.0 - alpha / 2.0);

  auto spike_slice = [&](const Vector& full) {
    Vector out(static_cast<Index>(spikes.size()));
    for (std::size_t i = 0; i < spikes.size(); ++i) out[static_cast<Index>(i)] = full[spikes[i]];
    return out;
  };

  const bool need_lse = st.has(Estimator::scaled_lasso_lse) || st.has(Estimator::ldpe) ||
                        st.has(Estimator::r_ldpe) || st.has(Estimator::t_ldpe);
  const bool need_ldpe_fit = st.has(Estimator::ldpe) || st.has(Estimator::t_ldpe);
  const bool need_oracle = st.has(Estimator::oracle) || st.has(Estimator::t_oracle);

  if (st.has(Estimator::lasso)) {
    GramLassoSolver solver(gram, design.X().transpose() * y, st.n);
    solver.solve(lambda0, -1, 100000, 1e-9, 2e-8);
    const Vector coef = solver.gamma();
    rec.spike_estimates[Estimator::lasso] = spike_slice(coef);
    rec.l2_loss[Estimator::lasso] = (coef - beta).norm();
  }
  if (st.has(Estimator::scaled_lasso)) {
    const InitialFit fit = fit_scaled_lasso(design, y, lambda0, &gram);
    rec.spike_estimates[Estimator::scaled_lasso] = spike_slice(fit.beta_init);
    rec.l2_loss[Estimator::scaled_lasso] = (fit.beta_init - beta).norm();
    rec.sigma_hat[Estimator::scaled_lasso] = fit.sigma_hat;
  }

  InitialFit lse;
  if (need_lse) {
    lse = fit_scaled_lasso_lse(design, y, lambda0, &gram);
    if (st.has(Estimator::scaled_lasso_lse)) {
      rec.spike_estimates[Estimator::scaled_lasso_lse] = spike_slice(lse.beta_init);
      rec.l2_loss[Estimator::scaled_lasso_lse] = (lse.beta_init - beta).norm();
      rec.sigma_hat[Estimator::scaled_lasso_lse] = lse.sigma_hat;
    }
  }

  rec.bias_excess = -std::numeric_limits<double>::infinity();
  if (need_ldpe_fit) {
    auto scores = std::make_shared<ScoreSet>(build_all_scores(
        design, st.score_settings, ScoreKind::lasso_relaxed, 0, /*threads=*/1, &gram));
    const LdpeFit fit = ldpe_estimate(design, y, scores, lse);
    rec.bias_excess = std::max(rec.bias_excess, bias_excess_for(fit, beta, eps));
    if (st.has(Estimator::ldpe)) {
      rec.estimates[Estimator::ldpe] = fit.beta_hat;
      Vector widths = Vector::Constant(st.p, kNaN);
      for (Index j = 0; j < st.p; ++j)
        if (fit.has_score[static_cast<std::size_t>(j)])
          widths[j] = quantile * fit.sigma_hat * fit.tau[j];
      rec.half_widths[Estimator::ldpe] = std::move(widths);
      rec.l2_loss[Estimator::ldpe] = (fit.beta_hat - beta).norm();
    }
    if (st.has(Estimator::t_ldpe)) {
      const SelectionResult sel = threshold_ldpe(fit, 1.0, ThresholdMode::hard, 0.0);
      rec.l2_loss[Estimator::t_ldpe] = (sel.estimates - beta).norm();
    }
  }
  if (st.has(Estimator::r_ldpe)) {
    auto scores = std::make_shared<ScoreSet>(build_all_scores(
        design, st.score_settings, ScoreKind::restricted, st.restricted_m, /*threads=*/1, &gram));
    const LdpeFit fit = ldpe_estimate(design, y, scores, lse);
    rec.bias_excess = std::max(rec.bias_excess, bias_excess_for(fit, beta, eps));
    rec.estimates[Estimator::r_ldpe] = fit.beta_hat;
    Vector widths = Vector::Constant(st.p, kNaN);
    for (Index j = 0; j < st.p; ++j)
      if (fit.has_score[static_cast<std::size_t>(j)])
        widths[j] = quantile * fit.sigma_hat * fit.tau[j];
    rec.half_widths[Estimator::r_ldpe] = std::move(widths);
    rec.l2_loss[Estimator::r_ldpe] = (fit.beta_hat - beta).norm();
  }
  if (need_oracle) {
    const OracleBatch batch = oracle_all(design, eps, beta, quantile);
    if (st.has(Estimator::oracle)) {
      rec.estimates[Estimator::oracle] = batch.estimates;
      rec.half_widths[Estimator::oracle] = batch.half_widths;
      double sigma_sum = 0.0;
      Index valid = 0;
      for (Index j = 0; j < st.p; ++j)
        if (!std::isnan(batch.sigmas[j])) { sigma_sum += batch.sigmas[j]; ++valid; }
      rec.sigma_hat[Estimator::oracle] = valid > 0 ? sigma_sum / static_cast<double>(valid) : kNaN;
    }
    if (st.has(Estimator::t_oracle)) {
      const double l0 = normal_quantile(1.0 - 1.0 / (2.0 * static_cast<double>(st.p)));
      Vector thresholded = Vector::Zero(st.p);
      for (Index j = 0; j < st.p; ++j) {
        if (std::isnan(batch.estimates[j])) continue;
        const double t = batch.sigmas[j] * l0 / batch.z_norms[j];
        if (std::abs(batch.estimates[j]) > t) thresholded[j] = batch.estimates[j];
      }
      rec.l2_loss[Estimator::t_oracle] = (thresholded - beta).norm();
    }
  }
  rec.ms_elapsed =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

double median_of(std::vector<double> values) {
  if (values.empty()) return kNaN;
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  if (values.size() % 2 == 1) return values[mid];
  return 0.5 * (values[mid - 1] + values[mid]);
}

MaximalStat maximal_stat(const std::vector<double>& estimates, double truth) {
  MaximalStat stat;
  const double count = static_cast<double>(estimates.size());
  double mean = 0.0;
  for (double v : estimates) mean += v;
  mean /= count;
  stat.bias = mean - truth;
  double ss = 0.0;
  std::vector<double> abs_err;
  abs_err.reserve(estimates.size());
  for (double v : estimates) {
    ss += (v - mean) * (v - mean);
    abs_err.push_back(std::abs(v - truth));
  }
  stat.sd = estimates.size() > 1 ? std::sqrt(ss / (count - 1.0)) : 0.0;
  stat.median_abs_error = median_of(std::move(abs_err));
  return stat;
}

LossStat loss_stat(const std::vector<double>& losses) {
  LossStat stat;
  const double count = static_cast<double>(losses.size());
  for (double v : losses) stat.mean += v;
  stat.mean /= count;
  double ss = 0.0;
  for (double v : losses) ss += (v - stat.mean) * (v - stat.mean);
  stat.sd = losses.size() > 1 ? std::sqrt(ss / (count - 1.0)) : 0.0;
  stat.median = median_of(losses);
  return stat;
}

SummaryTables aggregate(const SimSetting& st, const Vector& beta, const std::vector<Index>& spikes,
                        const std::vector<ReplicationRecord>& records) {
  SummaryTables tables;
  tables.bias_excess_max = -std::numeric_limits<double>::infinity();
  std::vector<const ReplicationRecord*> ok;
  for (const auto& rec : records) {
    if (rec.failed) {
      ++tables.reps_failed;
    } else {
      ok.push_back(&rec);
      tables.bias_excess_max = std::max(tables.bias_excess_max, rec.bias_excess);
    }
  }
  tables.reps_used = static_cast<int>(ok.size());
  if (ok.empty()) return tables;
  const double spike_value = beta[spikes.front()];

  // Table 2: pooled and per-spike statistics of the maximal-β estimates.
  for (Estimator e : st.estimators) {
    std::vector<double> pooled;
    std::vector<std::vector<double>> per_index(spikes.size());
    for (const auto* rec : ok) {
      const Vector* source = nullptr;
      Vector slice;
      if (auto it = rec->spike_estimates.find(e); it != rec->spike_estimates.end()) {
        slice = it->second;
        source = &slice;
      } else if (auto it2 = rec->estimates.find(e); it2 != rec->estimates.end()) {
        slice.resize(static_cast<Index>(spikes.size()));
        for (std::size_t i = 0; i < spikes.size(); ++i)
          slice[static_cast<Index>(i)] = it2->second[spikes[i]];
        source = &slice;
      }
      if (source == nullptr) break;
      for (std::size_t i = 0; i < spikes.size(); ++i) {
        const double v = (*source)[static_cast<Index>(i)];
        if (std::isnan(v)) continue;
        pooled.push_back(v);
        per_index[i].push_back(v);
      }
    }
    if (pooled.empty()) continue;
    tables.maximal[e] = maximal_stat(pooled, spike_value);
    auto& breakdown = tables.maximal_per_index[e];
    for (auto& column : per_index) breakdown.push_back(maximal_stat(column, spike_value));
  }

  // Table 3 / coverage plot data.
  for (Estimator e : {Estimator::ldpe, Estimator::r_ldpe, Estimator::oracle}) {
    if (!st.has(e)) continue;
    Vector hits = Vector::Zero(st.p), counts = Vector::Zero(st.p);
    for (const auto* rec : ok) {
      const auto est_it = rec->estimates.find(e);
      const auto width_it = rec->half_widths.find(e);
      if (est_it == rec->estimates.end() || width_it == rec->half_widths.end()) continue;
      for (Index j = 0; j < st.p; ++j) {
        const double w = width_it->second[j];
        if (std::isnan(w)) continue;
        counts[j] += 1.0;
        if (std::abs(est_it->second[j] - beta[j]) <= w) hits[j] += 1.0;
      }
    }
    Vector freq = Vector::Constant(st.p, kNaN);
    double all_hits = 0.0, all_counts = 0.0, spike_hits = 0.0, spike_counts = 0.0;
    for (Index j = 0; j < st.p; ++j) {
      if (counts[j] > 0.0) freq[j] = hits[j] / counts[j];
      all_hits += hits[j];
      all_counts += counts[j];
    }
    for (Index j : spikes) {
      spike_hits += hits[j];
      spike_counts += counts[j];
    }
    if (all_counts > 0.0) tables.coverage_all[e] = all_hits / all_counts;
    if (spike_counts > 0.0) tables.coverage_maximal[e] = spike_hits / spike_counts;
    tables.coverage_by_index[e] = std::move(freq);
  }

  // Tables 4–5: width and MSE ratios against the oracle.
  if (st.has(Estimator::oracle)) {
    for (Estimator e : {Estimator::ldpe, Estimator::r_ldpe}) {
      if (!st.has(e)) continue;
      Vector width_med = Vector::Constant(st.p, kNaN);
      Vector mse_ratio = Vector::Constant(st.p, kNaN);
      std::vector<double> ratios;
      for (Index j = 0; j < st.p; ++j) {
        ratios.clear();
        double num = 0.0, den = 0.0;
        int num_n = 0, den_n = 0;
        for (const auto* rec : ok) {
          const auto we = rec->half_widths.find(e);
          const auto wo = rec->half_widths.find(Estimator::oracle);
          if (we != rec->half_widths.end() && wo != rec->half_widths.end() &&
              !std::isnan(we->second[j]) && !std::isnan(wo->second[j]) && wo->second[j] > 0.0)
            ratios.push_back(we->second[j] / wo->second[j]);
          const auto ee = rec->estimates.find(e);
          const auto eo = rec->estimates.find(Estimator::oracle);
          if (ee != rec->estimates.end() && !std::isnan(ee->second[j])) {
            const double d = ee->second[j] - beta[j];
            num += d * d;
            ++num_n;
          }
          if (eo != rec->estimates.end() && !std::isnan(eo->second[j])) {
            const double d = eo->second[j] - beta[j];
            den += d * d;
            ++den_n;
          }
        }
        if (!ratios.empty()) width_med[j] = median_of(ratios);
        if (num_n > 0 && den_n > 0 && den > 0.0)
          mse_ratio[j] = (num / num_n) / (den / den_n);
      }
      std::vector<double> med_pool, mse_pool;
      for (Index j = 0; j < st.p; ++j) {
        if (!std::isnan(width_med[j])) med_pool.push_back(width_med[j]);
        if (!std::isnan(mse_ratio[j])) mse_pool.push_back(mse_ratio[j]);
      }
      if (!med_pool.empty()) tables.width_ratio_median[e] = median_of(med_pool);
      if (!mse_pool.empty()) tables.mse_ratio_median[e] = median_of(mse_pool);
      tables.width_ratio_by_index[e] = std::move(width_med);
      tables.mse_ratio_by_index[e] = std::move(mse_ratio);
    }
  }

  // Table 6: ℓ2 losses.
  for (Estimator e : st.estimators) {
    std::vector<double> losses;
    for (const auto* rec : ok)
      if (auto it = rec->l2_loss.find(e); it != rec->l2_loss.end()) losses.push_back(it->second);
    if (!losses.empty()) tables.l2[e] = loss_stat(losses);
  }
  return tables;
}

}  // namespace

SimResult run_setting(const SimSetting& setting) {
  if (setting.reps < 1) throw DomainError("reps must be at least 1");
  SimResult result;
  result.setting = setting;
  result.beta = generate_beta(setting.p, setting.alpha_decay, setting.n);
  result.spikes = spike_indices(setting.p);
  result.records.resize(static_cast<std::size_t>(setting.reps));
  parallel_for(setting.reps, setting.threads, [&](Index rep) {
    auto& rec = result.records[static_cast<std::size_t>(rep)];
    try {
      rec = run_replication(setting, result.beta, result.spikes, static_cast<int>(rep));
    } catch (const std::exception& e) {
      rec = ReplicationRecord{};
      rec.rep_id = static_cast<int>(rep);
      rec.failed = true;
      rec.error = e.what();
    }
  });
  int failed = 0;
  for (const auto& rec : result.records) failed += rec.failed ? 1 : 0;
  if (failed * 20 > setting.reps)
    throw Error("replication failure rate above 5% (" + std::to_string(failed) + "/" +
                std::to_string(setting.reps) + ")");
  result.tables = aggregate(setting, result.beta, result.spikes, result.records);
  return result;
}

namespace {

nlohmann::json tables_to_json(const SimResult& result) {
  const auto& tables = result.tables;
  nlohmann::json doc;
  auto& t2 = doc["table2_maximal_beta"];
  for (const auto& [e, stat] : tables.maximal) {
    auto& entry = t2[estimator_name(e)];
    entry["bias"] = stat.bias;
    entry["sd"] = stat.sd;
    entry["median_abs_error"] = stat.median_abs_error;
    auto per = tables.maximal_per_index.find(e);
    if (per != tables.maximal_per_index.end()) {
      auto& rows = entry["per_index"] = nlohmann::json::array();
      for (std::size_t i = 0; i < per->second.size(); ++i) {
        nlohmann::json row;
        row["j"] = result.spikes[i] + 1;
        row["bias"] = per->second[i].bias;
        row["sd"] = per->second[i].sd;
        row["median_abs_error"] = per->second[i].median_abs_error;
        rows.push_back(std::move(row));
      }
    }
  }
  auto& t3 = doc["table3_coverage"];
  for (const auto& [e, value] : tables.coverage_all) t3[estimator_name(e)]["all"] = value;
  for (const auto& [e, value] : tables.coverage_maximal) t3[estimator_name(e)]["maximal"] = value;
  auto& t4 = doc["table4_width_ratio_median"];
  for (const auto& [e, value] : tables.width_ratio_median) t4[estimator_name(e)] = value;
  auto& t5 = doc["table5_mse_ratio_median"];
  for (const auto& [e, value] : tables.mse_ratio_median) t5[estimator_name(e)] = value;
  auto& t6 = doc["table6_l2_loss"];
  for (const auto& [e, stat] : tables.l2) {
    auto& entry = t6[estimator_name(e)];
    entry["mean"] = stat.mean;
    entry["sd"] = stat.sd;
    entry["median"] = stat.median;
  }
  doc["replications_used"] = tables.reps_used;
  doc["replications_failed"] = tables.reps_failed;
  doc["bias_bound_max_excess"] = tables.bias_excess_max;
  return doc;
}

std::string tables_to_csv(const SimResult& result) {
  std::ostringstream os;
  os << "table,row,estimator,value\n";
  for (const auto& [e, stat] : result.tables.maximal) {
    os << "table2_maximal_beta,bias," << estimator_name(e) << ',' << format_double(stat.bias)
       << "\n";
    os << "table2_maximal_beta,sd," << estimator_name(e) << ',' << format_double(stat.sd) << "\n";
    os << "table2_maximal_beta,median_abs_error," << estimator_name(e) << ','
       << format_double(stat.median_abs_error) << "\n";
  }
  for (const auto& [e, v] : result.tables.coverage_all)
    os << "table3_coverage,all," << estimator_name(e) << ',' << format_double(v) << "\n";
  for (const auto& [e, v] : result.tables.coverage_maximal)
    os << "table3_coverage,maximal," << estimator_name(e) << ',' << format_double(v) << "\n";
  for (const auto& [e, v] : result.tables.width_ratio_median)
    os << "table4_width_ratio,median," << estimator_name(e) << ',' << format_double(v) << "\n";
  for (const auto& [e, v] : result.tables.mse_ratio_median)
    os << "table5_mse_ratio,median," << estimator_name(e) << ',' << format_double(v) << "\n";
  for (const auto& [e, stat] : result.tables.l2) {
    os << "table6_l2_loss,mean," << estimator_name(e) << ',' << format_double(stat.mean) << "\n";
    os << "table6_l2_loss,sd," << estimator_name(e) << ',' << format_double(stat.sd) << "\n";
    os << "table6_l2_loss,median," << estimator_name(e) << ',' << format_double(stat.median)
       << "\n";
  }
  return os.str();
}

std::string replications_csv(const SimResult& result) {
  std::ostringstream os;
  os << "rep,j,estimator,estimate,true_beta,ci_low,ci_high,covered,l2_loss,sigma_hat\n";
  for (const auto& rec : result.records) {
    if (rec.failed) continue;
    for (Estimator e : result.setting.estimators) {
      const std::string name = estimator_name(e);
      const auto est_it = rec.estimates.find(e);
      const auto spike_it = rec.spike_estimates.find(e);
      if (est_it != rec.estimates.end()) {
        const auto width_it = rec.half_widths.find(e);
        for (Index j : result.spikes) {
          const double est = est_it->second[j];
          os << rec.rep_id << ',' << (j + 1) << ',' << name << ',' << format_double(est) << ','
             << format_double(result.beta[j]) << ',';
          if (width_it != rec.half_widths.end() && !std::isnan(width_it->second[j])) {
            const double w = width_it->second[j];
            os << format_double(est - w) << ',' << format_double(est + w) << ','
               << (std::abs(est - result.beta[j]) <= w ? 1 : 0);
          } else {
            os << ",,";
          }
          os << ",,\n";
        }
      } else if (spike_it != rec.spike_estimates.end()) {
        for (std::size_t i = 0; i < result.spikes.size(); ++i) {
          const Index j = result.spikes[i];
          os << rec.rep_id << ',' << (j + 1) << ',' << name << ','
             << format_double(spike_it->second[static_cast<Index>(i)]) << ','
             << format_double(result.beta[j]) << ",,,,,\n";
        }
      }
      const auto loss_it = rec.l2_loss.find(e);
      const auto sigma_it = rec.sigma_hat.find(e);
      if (loss_it != rec.l2_loss.end() || sigma_it != rec.sigma_hat.end()) {
        os << rec.rep_id << ",0," << name << ",,,,,,";
        if (loss_it != rec.l2_loss.end()) os << format_double(loss_it->second);
        os << ',';
        if (sigma_it != rec.sigma_hat.end()) os << format_double(sigma_it->second);
        os << "\n";
      }
    }
  }
  return os.str();
}

std::string plot_csv(const SimResult& result, const std::map<Estimator, Vector>& by_index,
                     bool with_beta) {
  std::ostringstream os;
  os << "j";
  if (with_beta) os << ",true_beta";
  std::vector<Estimator> cols;
  for (Estimator e : result.setting.estimators)
    if (by_index.count(e)) {
      cols.push_back(e);
      os << ',' << estimator_name(e);
    }
  os << "\n";
  for (Index j = 0; j < result.setting.p; ++j) {
    os << (j + 1);
    if (with_beta) os << ',' << format_double(result.beta[j]);
    for (Estimator e : cols) {
      const double v = by_index.at(e)[j];
      os << ',';
      if (!std::isnan(v)) os << format_double(v);
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace

void write_sim_outputs(const SimResult& result, const std::string& out_dir) {
  const SimSetting& st = result.setting;
  nlohmann::json settings;
  settings["label"] = st.label;
  settings["n"] = st.n;
  settings["p"] = st.p;
  settings["rho"] = st.rho;
  settings["alpha_decay"] = st.alpha_decay;
  settings["reps"] = st.reps;
  settings["master_seed"] = st.master_seed;
  settings["level"] = st.level;
  settings["restricted_m"] = st.restricted_m;
  settings["lambda_univ"] = lambda_univ(st.n, st.p);
  auto& names = settings["estimators"] = nlohmann::json::array();
  for (Estimator e : st.estimators) names.push_back(estimator_name(e));
  auto& spikes = settings["spike_indices"] = nlohmann::json::array();
  for (Index j : result.spikes) spikes.push_back(j + 1);

  atomic_write(out_dir + "/settings.json", settings.dump(2) + "\n");
  atomic_write(out_dir + "/replications.csv", replications_csv(result));
  atomic_write(out_dir + "/summary_tables.json", tables_to_json(result).dump(2) + "\n");
  atomic_write(out_dir + "/summary_tables.csv", tables_to_csv(result));
  if (!result.tables.coverage_by_index.empty())
    atomic_write(out_dir + "/plotdata_coverage.csv",
                 plot_csv(result, result.tables.coverage_by_index, true));
  if (!result.tables.width_ratio_by_index.empty())
    atomic_write(out_dir + "/plotdata_widths.csv",
                 plot_csv(result, result.tables.width_ratio_by_index, false));
  if (!result.tables.mse_ratio_by_index.empty())
    atomic_write(out_dir + "/plotdata_eff.csv",
                 plot_csv(result, result.tables.mse_ratio_by_index, false));
}

}  // namespace ldpe
