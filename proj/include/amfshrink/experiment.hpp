#pragma once

// Seeded Monte Carlo experiments over (p, n) cells, replicates and
// estimators, plus the derived convergence and comparison tables.
//
// Each (cell, replicate) draws its own population rotation, signal
// direction, training set and test observations from streams keyed by
// (master seed, p, n, replicate). Every estimator in a replicate sees the
// same training data and the same test noise, so estimators are paired.
// Results are reduced in index order, which makes output independent of
// the number of worker threads.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include "amfshrink/config.hpp"
#include "amfshrink/detector.hpp"
#include "amfshrink/parallel.hpp"

namespace amfshrink {

inline constexpr std::string_view kResultSchema = "amfshrink-result v1";

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct ReplicateRecord {
  std::size_t cell = 0;
  long replicate = 0;
  std::size_t estimator = 0;
  bool ok = false;
  std::string error;

  double nu = kNaN;
  double xi = kNaN;
  double mu_quad = kNaN;
  double amplitude = kNaN;
  double loss_vs_oracle = kNaN;  // p^-1 sum (d_j - d*_j)^2 on the sample eigenbasis
  int clipped_upper = 0;
  int clipped_lower = 0;
  int floored = 0;

  // One entry per alpha level.
  std::vector<double> threshold;
  std::vector<double> p0;            // empirical, conditional on the training data
  std::vector<double> p1;
  std::vector<double> p1_predicted;  // plug-in prediction from mu' R^-1 mu
  std::vector<double> p0_exact;      // exact conditional rates given the true R
  std::vector<double> p1_exact;
  std::vector<double> p1_matched;    // p1 at the threshold giving empirical p0 = alpha
};

struct SummaryStats {
  double mean = kNaN;
  double std = kNaN;
  double q05 = kNaN;
  double q95 = kNaN;
};

inline double quantile_sorted(const std::vector<double>& sorted, double u) {
  if (sorted.empty()) return kNaN;
  const double pos = u * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

inline SummaryStats summarize(std::vector<double> xs) {
  SummaryStats s;
  if (xs.empty()) return s;
  const double n = static_cast<double>(xs.size());
  s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : xs) ss += (x - s.mean) * (x - s.mean);
  s.std = xs.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  std::sort(xs.begin(), xs.end());
  s.q05 = quantile_sorted(xs, 0.05);
  s.q95 = quantile_sorted(xs, 0.95);
  return s;
}

struct CellSummary {
  std::size_t cell = 0;
  SizeCell size;
  std::size_t estimator = 0;
  std::string label;
  double alpha = 0.0;
  double threshold = 0.0;
  long replicates_ok = 0;
  long replicates_failed = 0;
  SummaryStats p0, p1, nu, xi;
  double p0_analytic = kNaN;
  double p1_predicted = kNaN;
  double p0_exact = kNaN;
  double p1_exact = kNaN;
  double p1_matched = kNaN;
  double amplitude = kNaN;
  double loss_vs_oracle = kNaN;
  double clipped_upper = kNaN;
  double clipped_lower = kNaN;
  double floored = kNaN;
  std::string error;  // first failure message, if any
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<ReplicateRecord> records;  // ordered by (cell, replicate, estimator)
  std::vector<CellSummary> summaries;    // ordered by (cell, estimator, alpha)
  double wall_seconds = 0.0;             // not part of any result file

  const ReplicateRecord& record(std::size_t cell, long replicate, std::size_t estimator) const {
    const std::size_t k = config.estimators.size();
    return records[(cell * static_cast<std::size_t>(config.replicates) +
                    static_cast<std::size_t>(replicate)) * k + estimator];
  }
};

/// Fits one configured estimator from the sample eigensystem. Oracle and
/// clairvoyant need the population.
template <FieldScalar S>
ShrinkageCovariance<S> fit_estimator(const EstimatorSpec& spec, const EigenSystem<S>& e, Index n,
                                     const PopulationCovariance<S>* population) {
  using M = EstimatorSpec::Method;
  switch (spec.method) {
    case M::Lw: return lw_estimator(e, n, spec.lw);
    case M::DiagonalLoading: {
      const double beta = spec.beta.value_or(spec.beta_scale * e.eigenvalues.sum() /
                                             static_cast<double>(e.dim()));
      return diagonal_loading(e, beta);
    }
    case M::Sample: return sample_estimator(e);
    case M::Oracle:
      if (!population) throw DataError("oracle estimator needs the population covariance");
      return oracle_estimator(e, *population);
    case M::Clairvoyant:
      if (!population) throw DataError("clairvoyant estimator needs the population covariance");
      return clairvoyant_estimator(*population);
  }
  throw DataError("unknown estimator");
}

inline std::uint64_t cell_key(const SizeCell& c) {
  return (static_cast<std::uint64_t>(c.p) << 32) ^ static_cast<std::uint64_t>(c.n);
}

namespace detail {

inline std::vector<ReplicateRecord> failed_records(std::size_t cell, long replicate,
                                                   std::size_t estimators, const std::string& why) {
  std::vector<ReplicateRecord> out(estimators);
  for (std::size_t i = 0; i < estimators; ++i) {
    out[i].cell = cell;
    out[i].replicate = replicate;
    out[i].estimator = i;
    out[i].error = why;
  }
  return out;
}

template <FieldScalar S>
std::vector<ReplicateRecord> run_replicate(const ExperimentConfig& cfg, std::size_t cell,
                                           long replicate) {
  const SizeCell size = cfg.sizes[cell];
  const std::size_t k = cfg.estimators.size();
  if (!cell_aspect_ok(size))
    return failed_records(cell, replicate, k,
                          "invalid cell: p/n = " +
                              format_double(static_cast<double>(size.p) / static_cast<double>(size.n)) +
                              " inside (0.95, 1.05)");

  const std::uint64_t key = cell_key(size);
  const auto rep = static_cast<std::uint64_t>(replicate);
  const PopulationCovariance<S> pop = build_population<S>(
      cfg.spectrum, size.p, cfg.rotate, derive_seed(cfg.master_seed, "population", key, rep));
  const Vector<S> mu =
      sample_signal_direction<S>(size.p, derive_seed(cfg.master_seed, "direction", key, rep));
  const TrainingSet<S> train = sample_training<S>(
      pop, size.n, cfg.entry_law, derive_seed(cfg.master_seed, "training", key, rep));

  const EigenSystem<S> eig = eig_hermitian(sample_covariance(train));
  const ShrinkageCovariance<S> oracle = oracle_estimator(eig, pop);

  std::vector<ReplicateRecord> out = failed_records(cell, replicate, k, "");
  std::vector<MatchedFilter<S>> filters;
  std::vector<std::size_t> filter_owner;
  for (std::size_t i = 0; i < k; ++i) {
    ReplicateRecord& rec = out[i];
    try {
      const ShrinkageCovariance<S> est = fit_estimator(cfg.estimators[i], eig, size.n, &pop);
      const DetectorDiagnostics d = diagnostics(mu, est, pop);
      rec.nu = d.nu;
      rec.xi = d.xi;
      rec.mu_quad = d.mu_quad;
      rec.amplitude = cfg.amplitude.mode == AmplitudeSpec::Mode::Fixed
                          ? cfg.amplitude.value
                          : cfg.amplitude.value / std::sqrt(d.mu_quad);
      if (cfg.estimators[i].method != EstimatorSpec::Method::Clairvoyant)
        rec.loss_vs_oracle = (est.shrunken() - oracle.shrunken()).squaredNorm() /
                             static_cast<double>(size.p);
      if (const auto& dg = est.diagnostics()) {
        rec.clipped_upper = dg->clipped_upper;
        rec.clipped_lower = dg->clipped_lower;
        rec.floored = dg->floored;
      }
      filters.push_back(make_filter(mu, est, pop, S(rec.amplitude)));
      filter_owner.push_back(i);
      rec.ok = true;
    } catch (const Error& e) {
      rec.error = e.what();
    }
  }
  if (filters.empty()) return out;

  const StatisticDraws draws = simulate_statistics<S>(
      std::span<const MatchedFilter<S>>(filters), size.p, cfg.trials,
      derive_seed(cfg.master_seed, "test", key, rep));

  for (std::size_t f = 0; f < filters.size(); ++f) {
    ReplicateRecord& rec = out[filter_owner[f]];
    std::vector<double> h0 = draws.h0[f];
    std::vector<double> h1 = draws.h1[f];
    std::sort(h0.begin(), h0.end());
    std::sort(h1.begin(), h1.end());
    const DetectorDiagnostics d{rec.xi, rec.nu, rec.mu_quad};
    for (double alpha : cfg.alphas) {
      const double t = threshold_for_alpha(alpha, cfg.field);
      rec.threshold.push_back(t);
      rec.p0.push_back(exceed_fraction(h0, t));
      rec.p1.push_back(exceed_fraction(h1, t));
      rec.p1_predicted.push_back(p1_analytic(t, std::abs(rec.amplitude), rec.mu_quad, cfg.field));
      rec.p0_exact.push_back(p0_conditional(t, d, cfg.field));
      rec.p1_exact.push_back(p1_conditional(t, std::abs(rec.amplitude), d, cfg.field));
      // Smallest order statistic leaving at most alpha of the null draws above it.
      const auto trials = static_cast<double>(h0.size());
      const auto idx = static_cast<std::size_t>(
          std::clamp(std::ceil((1.0 - alpha) * trials) - 1.0, 0.0, trials - 1.0));
      rec.p1_matched.push_back(exceed_fraction(h1, h0[idx]));
    }
  }
  return out;
}

}  // namespace detail

inline std::vector<CellSummary> summarize_records(const ExperimentConfig& cfg,
                                                  const std::vector<ReplicateRecord>& records) {
  const std::size_t k = cfg.estimators.size();
  const auto reps = static_cast<std::size_t>(cfg.replicates);
  std::vector<CellSummary> out;
  for (std::size_t c = 0; c < cfg.sizes.size(); ++c)
    for (std::size_t e = 0; e < k; ++e)
      for (std::size_t a = 0; a < cfg.alphas.size(); ++a) {
        CellSummary s;
        s.cell = c;
        s.size = cfg.sizes[c];
        s.estimator = e;
        s.label = cfg.estimators[e].label;
        s.alpha = cfg.alphas[a];
        s.threshold = threshold_for_alpha(s.alpha, cfg.field);
        s.p0_analytic = p0_analytic(s.threshold, cfg.field);
        std::vector<double> p0, p1, nu, xi, pred, e0, e1, matched, amp, loss, cu, cl, fl;
        for (std::size_t r = 0; r < reps; ++r) {
          const ReplicateRecord& rec = records[(c * reps + r) * k + e];
          if (!rec.ok) {
            ++s.replicates_failed;
            if (s.error.empty()) s.error = rec.error;
            continue;
          }
          ++s.replicates_ok;
          p0.push_back(rec.p0[a]);
          p1.push_back(rec.p1[a]);
          nu.push_back(rec.nu);
          xi.push_back(rec.xi);
          pred.push_back(rec.p1_predicted[a]);
          e0.push_back(rec.p0_exact[a]);
          e1.push_back(rec.p1_exact[a]);
          matched.push_back(rec.p1_matched[a]);
          amp.push_back(rec.amplitude);
          if (!std::isnan(rec.loss_vs_oracle)) loss.push_back(rec.loss_vs_oracle);
          cu.push_back(rec.clipped_upper);
          cl.push_back(rec.clipped_lower);
          fl.push_back(rec.floored);
        }
        s.p0 = summarize(p0);
        s.p1 = summarize(p1);
        s.nu = summarize(nu);
        s.xi = summarize(xi);
        s.p1_predicted = summarize(pred).mean;
        s.p0_exact = summarize(e0).mean;
        s.p1_exact = summarize(e1).mean;
        s.p1_matched = summarize(matched).mean;
        s.amplitude = summarize(amp).mean;
        s.loss_vs_oracle = summarize(loss).mean;
        s.clipped_upper = summarize(cu).mean;
        s.clipped_lower = summarize(cl).mean;
        s.floored = summarize(fl).mean;
        out.push_back(std::move(s));
      }
  return out;
}

inline ExperimentResult run_experiment(const ExperimentConfig& cfg, unsigned threads = 1) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  const std::size_t reps = static_cast<std::size_t>(cfg.replicates);
  const std::size_t tasks = cfg.sizes.size() * reps;
  std::vector<std::vector<ReplicateRecord>> slots(tasks);
  parallel_for(tasks, threads, [&](std::size_t task) {
    const std::size_t cell = task / reps;
    const long r = static_cast<long>(task % reps);
    try {
      slots[task] = cfg.field == Field::Complex ? detail::run_replicate<Complex>(cfg, cell, r)
                                                : detail::run_replicate<double>(cfg, cell, r);
    } catch (const Error& e) {
      slots[task] = detail::failed_records(cell, r, cfg.estimators.size(), e.what());
    }
  });
  ExperimentResult result;
  result.config = cfg;
  for (auto& s : slots)
    for (auto& rec : s) result.records.push_back(std::move(rec));
  result.summaries = summarize_records(cfg, result.records);
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

// ---------------------------------------------------------------------------
// CSV output

namespace detail {

inline std::string num(double x) {
  if (std::isnan(x)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

inline std::string csv_text(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

}  // namespace detail

inline void write_summary_csv(std::ostream& os, const ExperimentResult& r) {
  using detail::csv_text;
  using detail::num;
  os << "# " << kResultSchema << "\n";
  os << "cell,p,n,estimator,alpha,threshold,replicates_ok,replicates_failed,"
        "p0_mean,p0_std,p0_q05,p0_q95,p1_mean,p1_std,p1_q05,p1_q95,"
        "nu_mean,nu_std,nu_q05,nu_q95,xi_mean,xi_std,xi_q05,xi_q95,"
        "p0_analytic,p1_predicted,p0_exact,p1_exact,p1_matched,amplitude,loss_vs_oracle,"
        "clipped_upper,clipped_lower,floored,error\n";
  for (const auto& s : r.summaries) {
    os << s.cell << ',' << s.size.p << ',' << s.size.n << ',' << csv_text(s.label) << ','
       << num(s.alpha) << ',' << num(s.threshold) << ',' << s.replicates_ok << ','
       << s.replicates_failed;
    for (const SummaryStats* st : {&s.p0, &s.p1, &s.nu, &s.xi})
      os << ',' << num(st->mean) << ',' << num(st->std) << ',' << num(st->q05) << ','
         << num(st->q95);
    os << ',' << num(s.p0_analytic) << ',' << num(s.p1_predicted) << ',' << num(s.p0_exact) << ','
       << num(s.p1_exact) << ',' << num(s.p1_matched) << ',' << num(s.amplitude) << ','
       << num(s.loss_vs_oracle) << ',' << num(s.clipped_upper) << ',' << num(s.clipped_lower)
       << ',' << num(s.floored) << ',' << csv_text(s.error) << '\n';
  }
}

inline void write_replicates_csv(std::ostream& os, const ExperimentResult& r) {
  using detail::csv_text;
  using detail::num;
  os << "# " << kResultSchema << " replicates\n";
  os << "cell,p,n,replicate,estimator,alpha,ok,nu,xi,mu_quad,amplitude,loss_vs_oracle,"
        "threshold,p0,p1,p1_predicted,p0_exact,p1_exact,p1_matched,error\n";
  for (const auto& rec : r.records) {
    const SizeCell size = r.config.sizes[rec.cell];
    for (std::size_t a = 0; a < r.config.alphas.size(); ++a) {
      const auto at = [&](const std::vector<double>& v) { return rec.ok ? num(v[a]) : "nan"; };
      os << rec.cell << ',' << size.p << ',' << size.n << ',' << rec.replicate << ','
         << csv_text(r.config.estimators[rec.estimator].label) << ',' << num(r.config.alphas[a])
         << ',' << (rec.ok ? 1 : 0) << ',' << num(rec.nu) << ',' << num(rec.xi) << ','
         << num(rec.mu_quad) << ',' << num(rec.amplitude) << ',' << num(rec.loss_vs_oracle)
         << ',' << at(rec.threshold) << ',' << at(rec.p0) << ',' << at(rec.p1) << ','
         << at(rec.p1_predicted) << ',' << at(rec.p0_exact) << ',' << at(rec.p1_exact) << ','
         << at(rec.p1_matched) << ',' << csv_text(rec.error) << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// Convergence study

struct ConvergenceRow {
  std::string label;
  double alpha = 0.0;
  SizeCell size;
  long replicates_ok = 0;
  double p0_deviation = kNaN;  // mean over replicates of |empirical p0 - p0_analytic|
  double p1_deviation = kNaN;  // mean over replicates of |empirical p1 - p1_predicted|
  bool non_decreasing = false; // deviation did not shrink relative to the previous size
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;  // ordered by (estimator, alpha, size)
  ExperimentResult result;
};

inline void require_size_ladder(const ExperimentConfig& cfg) {
  if (cfg.sizes.size() < 3) throw DataError("convergence study needs at least 3 sizes");
  const double ratio = static_cast<double>(cfg.sizes[0].p) / static_cast<double>(cfg.sizes[0].n);
  for (const auto& s : cfg.sizes) {
    const double r = static_cast<double>(s.p) / static_cast<double>(s.n);
    if (std::abs(r - ratio) > 1e-9 * ratio)
      throw DataError("convergence study needs a fixed p/n across sizes");
  }
}

inline ConvergenceTable convergence_study(const ExperimentConfig& cfg, unsigned threads = 1) {
  require_size_ladder(cfg);
  ConvergenceTable table;
  table.result = run_experiment(cfg, threads);
  const auto reps = static_cast<std::size_t>(cfg.replicates);
  const std::size_t k = cfg.estimators.size();
  for (std::size_t e = 0; e < k; ++e)
    for (std::size_t a = 0; a < cfg.alphas.size(); ++a) {
      double previous = kNaN;
      for (std::size_t c = 0; c < cfg.sizes.size(); ++c) {
        ConvergenceRow row;
        row.label = cfg.estimators[e].label;
        row.alpha = cfg.alphas[a];
        row.size = cfg.sizes[c];
        const double p0a = p0_analytic(threshold_for_alpha(row.alpha, cfg.field), cfg.field);
        std::vector<double> d0, d1;
        for (std::size_t r = 0; r < reps; ++r) {
          const ReplicateRecord& rec = table.result.records[(c * reps + r) * k + e];
          if (!rec.ok) continue;
          d0.push_back(std::abs(rec.p0[a] - p0a));
          d1.push_back(std::abs(rec.p1[a] - rec.p1_predicted[a]));
        }
        row.replicates_ok = static_cast<long>(d0.size());
        row.p0_deviation = summarize(d0).mean;
        row.p1_deviation = summarize(d1).mean;
        const double worst = std::max(row.p0_deviation, row.p1_deviation);
        row.non_decreasing = !std::isnan(previous) && worst >= previous;
        previous = worst;
        table.rows.push_back(row);
      }
    }
  return table;
}

inline void write_convergence_csv(std::ostream& os, const ConvergenceTable& t) {
  using detail::csv_text;
  using detail::num;
  os << "# " << kResultSchema << " convergence\n";
  os << "estimator,alpha,p,n,replicates_ok,p0_deviation,p1_deviation,non_decreasing\n";
  for (const auto& r : t.rows)
    os << csv_text(r.label) << ',' << num(r.alpha) << ',' << r.size.p << ',' << r.size.n << ','
       << r.replicates_ok << ',' << num(r.p0_deviation) << ',' << num(r.p1_deviation) << ','
       << (r.non_decreasing ? 1 : 0) << '\n';
}

// ---------------------------------------------------------------------------
// Estimator comparison

struct RankingRow {
  std::size_t cell = 0;
  SizeCell size;
  double alpha = 0.0;
  std::string label;
  double nu_mean = kNaN;
  int nu_rank = 0;  // 1 = best
  double p1_matched_mean = kNaN;
  int p1_rank = 0;
};

struct PairRow {
  std::size_t cell = 0;
  SizeCell size;
  double alpha = 0.0;
  std::string label_a;
  std::string label_b;
  long pairs = 0;
  double nu_win_rate = kNaN;   // fraction of replicates with nu_a > nu_b; ties count 1/2
  double nu_delta_mean = kNaN; // mean of nu_a - nu_b
  double p1_win_rate = kNaN;   // same, for p1 at matched empirical p0
  double p1_delta_mean = kNaN;
};

struct ComparisonTable {
  std::vector<RankingRow> ranking;
  std::vector<PairRow> pairs;
  ExperimentResult result;
};

namespace detail {

inline std::vector<int> ranks_descending(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const bool na = std::isnan(v[a]), nb = std::isnan(v[b]);
    if (na != nb) return nb;
    return v[a] > v[b];
  });
  std::vector<int> rank(v.size());
  for (std::size_t i = 0; i < order.size(); ++i) rank[order[i]] = static_cast<int>(i + 1);
  return rank;
}

inline double win_score(double a, double b) { return a > b ? 1.0 : (a == b ? 0.5 : 0.0); }

}  // namespace detail

inline ComparisonTable compare_estimators(const ExperimentConfig& cfg, unsigned threads = 1) {
  if (cfg.estimators.size() < 2) throw DataError("comparison needs at least 2 estimators");
  ComparisonTable table;
  table.result = run_experiment(cfg, threads);
  const auto& res = table.result;
  const std::size_t k = cfg.estimators.size();
  for (std::size_t c = 0; c < cfg.sizes.size(); ++c)
    for (std::size_t a = 0; a < cfg.alphas.size(); ++a) {
      std::vector<double> nu_mean(k), p1_mean(k);
      for (std::size_t e = 0; e < k; ++e) {
        std::vector<double> nus, p1s;
        for (long r = 0; r < cfg.replicates; ++r) {
          const auto& rec = res.record(c, r, e);
          if (!rec.ok) continue;
          nus.push_back(rec.nu);
          p1s.push_back(rec.p1_matched[a]);
        }
        nu_mean[e] = summarize(nus).mean;
        p1_mean[e] = summarize(p1s).mean;
      }
      const auto nu_rank = detail::ranks_descending(nu_mean);
      const auto p1_rank = detail::ranks_descending(p1_mean);
      for (std::size_t e = 0; e < k; ++e)
        table.ranking.push_back({c, cfg.sizes[c], cfg.alphas[a], cfg.estimators[e].label,
                                 nu_mean[e], nu_rank[e], p1_mean[e], p1_rank[e]});

      for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i + 1; j < k; ++j) {
          PairRow row;
          row.cell = c;
          row.size = cfg.sizes[c];
          row.alpha = cfg.alphas[a];
          row.label_a = cfg.estimators[i].label;
          row.label_b = cfg.estimators[j].label;
          double nu_wins = 0, p1_wins = 0, nu_delta = 0, p1_delta = 0;
          for (long r = 0; r < cfg.replicates; ++r) {
            const auto& ra = res.record(c, r, i);
            const auto& rb = res.record(c, r, j);
            if (!ra.ok || !rb.ok) continue;
            ++row.pairs;
            nu_wins += detail::win_score(ra.nu, rb.nu);
            p1_wins += detail::win_score(ra.p1_matched[a], rb.p1_matched[a]);
            nu_delta += ra.nu - rb.nu;
            p1_delta += ra.p1_matched[a] - rb.p1_matched[a];
          }
          if (row.pairs > 0) {
            const auto m = static_cast<double>(row.pairs);
            row.nu_win_rate = nu_wins / m;
            row.p1_win_rate = p1_wins / m;
            row.nu_delta_mean = nu_delta / m;
            row.p1_delta_mean = p1_delta / m;
          }
          table.pairs.push_back(row);
        }
    }
  return table;
}

inline void write_comparison_csv(std::ostream& os, const ComparisonTable& t) {
  using detail::csv_text;
  using detail::num;
  os << "# " << kResultSchema << " comparison\n";
  os << "kind,p,n,alpha,estimator,opponent,pairs,nu_mean,nu_rank,p1_matched_mean,p1_rank,"
        "nu_win_rate,nu_delta_mean,p1_win_rate,p1_delta_mean\n";
  for (const auto& r : t.ranking)
    os << "rank," << r.size.p << ',' << r.size.n << ',' << num(r.alpha) << ',' << csv_text(r.label)
       << ",,," << num(r.nu_mean) << ',' << r.nu_rank << ',' << num(r.p1_matched_mean) << ','
       << r.p1_rank << ",,,,\n";
  for (const auto& r : t.pairs)
    os << "pair," << r.size.p << ',' << r.size.n << ',' << num(r.alpha) << ','
       << csv_text(r.label_a) << ',' << csv_text(r.label_b) << ',' << r.pairs << ",,,,,"
       << num(r.nu_win_rate) << ',' << num(r.nu_delta_mean) << ',' << num(r.p1_win_rate) << ','
       << num(r.p1_delta_mean) << '\n';
}

}  // namespace amfshrink
