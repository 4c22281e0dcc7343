#pragma once

// Command-line front end. Exit codes: 0 success, 1 usage, 2 data error,
// 3 numerical failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "amfshrink/config.hpp"
#include "amfshrink/detector.hpp"
#include "amfshrink/experiment.hpp"
#include "amfshrink/matrix_io.hpp"

namespace amfshrink::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

struct EstimatorFlags {
  std::string input;
  std::optional<long> n;
  std::string method = "lw";
  double t0 = 0.0;
  std::string upper_clip = "sample-max";
  std::string formula = "full-spectrum";
  std::optional<double> beta;

  void add_to(CLI::App* app) {
    app->add_option("--input", input,
                    "training matrix X (p x n), or a sample covariance when --n is given")
        ->required();
    app->add_option("--n", n, "number of samples behind a sample-covariance input");
    app->add_option("--method", method, "lw | diag | sample")
        ->check(CLI::IsMember({"lw", "diag", "diagonal-loading", "sample"}));
    app->add_option("--t0", t0, "lower clip for the lw estimator")->check(CLI::NonNegativeNumber);
    app->add_option("--upper-clip", upper_clip, "sample-max | mp-edge")
        ->check(CLI::IsMember({"sample-max", "mp-edge"}));
    app->add_option("--formula", formula, "full-spectrum | nonzero-only")
        ->check(CLI::IsMember({"full-spectrum", "nonzero-only"}));
    app->add_option("--beta", beta, "diagonal load (default 0.1 tr(S)/p)");
  }
};

namespace detail {

inline std::ostream& sink(const std::string& path, std::unique_ptr<std::ofstream>& file,
                          std::ostream& fallback) {
  if (path.empty()) return fallback;
  file = std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::trunc);
  if (!*file) throw IoError(IoErrorCode::Open, "cannot write '" + path + "'");
  return *file;
}

template <FieldScalar S>
struct FittedInput {
  HermitianMatrix<S> sample_cov;
  Index n;
};

template <FieldScalar S>
FittedInput<S> load_covariance(const MatrixGrid& grid, std::optional<long> n) {
  const Matrix<S> m = grid.as<S>();
  if (n) {
    if (*n < 1) throw DataError("--n must be >= 1");
    return {HermitianMatrix<S>(m), static_cast<Index>(*n)};
  }
  return {sample_covariance(m), m.cols()};
}

template <FieldScalar S>
ShrinkageCovariance<S> fit_from_flags(const EstimatorFlags& f, const FittedInput<S>& in) {
  EstimatorSpec spec;
  spec.method = parse_method(f.method);
  spec.lw.t0 = f.t0;
  spec.lw.upper_clip = parse_upper_clip(f.upper_clip);
  spec.lw.formula = parse_lw_formula(f.formula);
  spec.beta = f.beta;
  if (spec.beta && !(*spec.beta > 0.0)) throw DataError("--beta must be positive");
  return fit_estimator<S>(spec, eig_hermitian(in.sample_cov), in.n, nullptr);
}

template <FieldScalar S>
int estimate(const EstimatorFlags& f, const MatrixGrid& grid, const std::string& output,
             std::ostream& out) {
  const FittedInput<S> in = load_covariance<S>(grid, f.n);
  const ShrinkageCovariance<S> est = fit_from_flags(f, in);
  const auto& lams = est.eigensystem().eigenvalues;
  out << "index,lambda,d_raw,delta\n";
  for (Index j = 0; j < est.dim(); ++j) {
    out << j + 1 << ',' << amfshrink::detail::num(lams(j)) << ',';
    if (est.diagnostics()) out << amfshrink::detail::num(est.diagnostics()->raw(j));
    out << ',' << amfshrink::detail::num(est.shrunken()(j)) << '\n';
  }
  if (!output.empty()) write_matrix(MatrixGrid::from<S>(est.matrix()), output);
  return kOk;
}

template <FieldScalar S>
Vector<S> load_vector(const MatrixGrid& g, std::string_view what) {
  const Matrix<S> m = g.as<S>();
  if (m.cols() == 1) return m.col(0);
  if (m.rows() == 1) return m.row(0).transpose();
  throw DataError(std::string(what) + " must be a single row or column");
}

template <FieldScalar S>
int detect(const EstimatorFlags& f, const MatrixGrid& grid, const MatrixGrid& mu_grid,
           const MatrixGrid& y_grid, double alpha, std::ostream& out) {
  const FittedInput<S> in = load_covariance<S>(grid, f.n);
  const ShrinkageCovariance<S> est = fit_from_flags(f, in);
  const Vector<S> mu = load_vector<S>(mu_grid, "--mu");
  const Vector<S> y = load_vector<S>(y_grid, "--y");
  if (mu.size() != est.dim()) throw DataError("--mu length does not match the data dimension");
  const AmfStatistic<S> t = amf_statistic(mu, est, y);
  const double threshold = threshold_for_alpha(alpha, field_of<S>);
  out << "t_squared=" << amfshrink::detail::num(t.squared) << "\n"
      << "threshold=" << amfshrink::detail::num(threshold) << "\n"
      << "alpha=" << amfshrink::detail::num(alpha) << "\n"
      << "decision=" << (t.squared > threshold ? "H1" : "H0") << "\n";
  return kOk;
}

struct ReplicateDraw {
  std::uint64_t key;
  std::uint64_t rep;
};

template <FieldScalar S>
int roc(const ExperimentConfig& cfg, std::size_t cell, long replicate,
        std::vector<double> thresholds, std::ostream& out) {
  const SizeCell size = cfg.sizes.at(cell);
  if (!cell_aspect_ok(size)) throw DataError("roc: cell p/n lies in (0.95, 1.05)");
  const std::uint64_t key = cell_key(size);
  const auto rep = static_cast<std::uint64_t>(replicate);
  const auto pop = build_population<S>(cfg.spectrum, size.p, cfg.rotate,
                                       derive_seed(cfg.master_seed, "population", key, rep));
  const auto mu = sample_signal_direction<S>(size.p, derive_seed(cfg.master_seed, "direction", key, rep));
  const auto train = sample_training<S>(pop, size.n, cfg.entry_law,
                                        derive_seed(cfg.master_seed, "training", key, rep));
  const EigenSystem<S> eig = eig_hermitian(sample_covariance(train));
  out << "# " << kResultSchema << " roc\n";
  out << "estimator,threshold,p0,p1,se0,se1,provenance,trials\n";
  for (const auto& spec : cfg.estimators) {
    const ShrinkageCovariance<S> est = fit_estimator<S>(spec, eig, size.n, &pop);
    const double q = est.inv_quad(mu);
    const double a = cfg.amplitude.mode == AmplitudeSpec::Mode::Fixed
                         ? cfg.amplitude.value
                         : cfg.amplitude.value / std::sqrt(q);
    auto emit = [&](const std::vector<RocPoint>& pts) {
      for (const auto& pt : pts)
        out << amfshrink::detail::csv_text(spec.label) << ',' << amfshrink::detail::num(pt.threshold)
            << ',' << amfshrink::detail::num(pt.p0) << ',' << amfshrink::detail::num(pt.p1) << ','
            << amfshrink::detail::num(pt.se0) << ',' << amfshrink::detail::num(pt.se1) << ','
            << to_string(pt.provenance) << ',' << pt.trials << '\n';
    };
    emit(roc_curve<S>(mu, est, pop, S(a), thresholds, cfg.trials,
                      derive_seed(cfg.master_seed, "test", key, rep)));
    emit(analytic_roc(thresholds, std::abs(a), q, cfg.field));
  }
  return kOk;
}

template <FieldScalar S>
int simulate(const ExperimentConfig& cfg, std::size_t cell, long replicate, double amplitude,
             const std::string& training_out, const std::string& mu_out, const std::string& y_out,
             const std::string& population_out) {
  const SizeCell size = cfg.sizes.at(cell);
  const std::uint64_t key = cell_key(size);
  const auto rep = static_cast<std::uint64_t>(replicate);
  const auto pop = build_population<S>(cfg.spectrum, size.p, cfg.rotate,
                                       derive_seed(cfg.master_seed, "population", key, rep));
  const auto mu = sample_signal_direction<S>(size.p, derive_seed(cfg.master_seed, "direction", key, rep));
  const auto train = sample_training<S>(pop, size.n, cfg.entry_law,
                                        derive_seed(cfg.master_seed, "training", key, rep));
  const auto hyp = amplitude == 0.0 ? Hypothesis<S>::null() : Hypothesis<S>::alternative(S(amplitude));
  const auto obs =
      sample_observation<S>(pop, mu, hyp, derive_seed(cfg.master_seed, "observation", key, rep));
  if (!training_out.empty()) write_matrix(MatrixGrid::from<S>(train.x), training_out);
  if (!mu_out.empty()) write_matrix(MatrixGrid::from<S>(Matrix<S>(mu)), mu_out);
  if (!y_out.empty()) write_matrix(MatrixGrid::from<S>(Matrix<S>(obs.y)), y_out);
  if (!population_out.empty())
    write_matrix(MatrixGrid::from<S>(pop.matrix().matrix()), population_out);
  return kOk;
}

inline std::vector<double> parse_threshold_list(const std::string& s) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const std::size_t comma = s.find(',', start);
    std::string tok = s.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (tok == "inf") out.push_back(std::numeric_limits<double>::infinity());
    else out.push_back(parse_entry(tok).real());
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

inline ExperimentConfig load_config(const std::string& path, std::uint64_t seed) {
  ExperimentConfig cfg = parse_config(read_file(path));
  cfg.master_seed = seed;
  return cfg;
}

}  // namespace detail

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Nonlinear eigenvalue shrinkage and adaptive matched filter toolkit"};
  app.name("amfshrink");
  app.require_subcommand(1);

  // estimate
  EstimatorFlags est_flags;
  std::string est_output;
  auto* est_cmd = app.add_subcommand("estimate", "fit a shrinkage estimator and print its spectrum");
  est_flags.add_to(est_cmd);
  est_cmd->add_option("--output", est_output, "write the estimated covariance matrix here");

  // detect
  EstimatorFlags det_flags;
  std::string det_mu, det_y;
  double det_alpha = 0.1;
  auto* det_cmd = app.add_subcommand("detect", "evaluate |T|^2 and decide at level alpha");
  det_flags.add_to(det_cmd);
  det_cmd->add_option("--mu", det_mu, "signal direction (row or column)")->required();
  det_cmd->add_option("--y", det_y, "observation (row or column)")->required();
  det_cmd->add_option("--alpha", det_alpha, "false-alarm level")->check(CLI::Range(0.0, 1.0));

  // stochastic subcommands share --config/--seed/--threads/--output
  struct RunFlags {
    std::string config;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    std::string output;
  };
  auto add_run_flags = [](CLI::App* cmd, RunFlags& f) {
    cmd->add_option("--config", f.config, "experiment configuration (JSON)")->required();
    cmd->add_option("--seed", f.seed, "master seed")->required();
    cmd->add_option("--threads", f.threads, "worker threads")->check(CLI::PositiveNumber);
    cmd->add_option("--output", f.output, "output file (default stdout)");
  };

  RunFlags exp_flags;
  std::string exp_replicates;
  bool exp_timing = false;
  auto* exp_cmd = app.add_subcommand("experiment", "run a configured sweep and write summary records");
  add_run_flags(exp_cmd, exp_flags);
  exp_cmd->add_option("--replicates-output", exp_replicates, "also write per-replicate records");
  exp_cmd->add_flag("--timing", exp_timing, "report wall time on stderr");

  RunFlags cmp_flags;
  auto* cmp_cmd = app.add_subcommand("compare", "paired estimator comparison by nu and matched p1");
  add_run_flags(cmp_cmd, cmp_flags);

  RunFlags conv_flags;
  auto* conv_cmd = app.add_subcommand("converge", "deviation from the limiting rates along a size ladder");
  add_run_flags(conv_cmd, conv_flags);

  RunFlags roc_flags;
  std::string roc_thresholds;
  std::size_t roc_cell = 0;
  long roc_replicate = 0;
  int roc_points = 20;
  double roc_tmax = 0.0;
  auto* roc_cmd = app.add_subcommand("roc", "empirical and analytic ROC records for one replicate");
  add_run_flags(roc_cmd, roc_flags);
  roc_cmd->add_option("--thresholds", roc_thresholds, "comma-separated thresholds ('inf' allowed)");
  roc_cmd->add_option("--points", roc_points, "grid size when --thresholds is absent")
      ->check(CLI::Range(2, 100000));
  roc_cmd->add_option("--tmax", roc_tmax, "largest grid threshold (default: level 1e-3)");
  roc_cmd->add_option("--cell", roc_cell, "index into sizes");
  roc_cmd->add_option("--replicate", roc_replicate, "replicate index")->check(CLI::NonNegativeNumber);

  RunFlags sim_flags;
  std::size_t sim_cell = 0;
  long sim_replicate = 0;
  double sim_amplitude = 0.0;
  std::string sim_training, sim_mu, sim_y, sim_population;
  auto* sim_cmd = app.add_subcommand("simulate", "write one replicate's data to matrix files");
  sim_cmd->add_option("--config", sim_flags.config, "experiment configuration (JSON)")->required();
  sim_cmd->add_option("--seed", sim_flags.seed, "master seed")->required();
  sim_cmd->add_option("--cell", sim_cell, "index into sizes");
  sim_cmd->add_option("--replicate", sim_replicate, "replicate index")->check(CLI::NonNegativeNumber);
  sim_cmd->add_option("--amplitude", sim_amplitude, "signal amplitude for y (0 = no signal)");
  sim_cmd->add_option("--training-out", sim_training, "training matrix X");
  sim_cmd->add_option("--mu-out", sim_mu, "signal direction");
  sim_cmd->add_option("--y-out", sim_y, "test observation");
  sim_cmd->add_option("--population-out", sim_population, "population covariance R");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (est_cmd->parsed()) {
      const MatrixGrid grid = read_matrix(est_flags.input);
      return grid.field == Field::Complex
                 ? detail::estimate<Complex>(est_flags, grid, est_output, out)
                 : detail::estimate<double>(est_flags, grid, est_output, out);
    }
    if (det_cmd->parsed()) {
      const MatrixGrid grid = read_matrix(det_flags.input);
      const MatrixGrid mu = read_matrix(det_mu);
      const MatrixGrid y = read_matrix(det_y);
      const bool complex = grid.field == Field::Complex || mu.field == Field::Complex ||
                           y.field == Field::Complex;
      return complex ? detail::detect<Complex>(det_flags, grid, mu, y, det_alpha, out)
                     : detail::detect<double>(det_flags, grid, mu, y, det_alpha, out);
    }
    if (exp_cmd->parsed()) {
      const ExperimentConfig cfg = detail::load_config(exp_flags.config, exp_flags.seed);
      const ExperimentResult res = run_experiment(cfg, exp_flags.threads);
      std::unique_ptr<std::ofstream> file;
      write_summary_csv(detail::sink(exp_flags.output, file, out), res);
      if (!exp_replicates.empty()) {
        std::unique_ptr<std::ofstream> rep_file;
        write_replicates_csv(detail::sink(exp_replicates, rep_file, out), res);
      }
      if (exp_timing) err << "wall_seconds=" << res.wall_seconds << "\n";
      return kOk;
    }
    if (cmp_cmd->parsed()) {
      const ExperimentConfig cfg = detail::load_config(cmp_flags.config, cmp_flags.seed);
      std::unique_ptr<std::ofstream> file;
      write_comparison_csv(detail::sink(cmp_flags.output, file, out),
                           compare_estimators(cfg, cmp_flags.threads));
      return kOk;
    }
    if (conv_cmd->parsed()) {
      const ExperimentConfig cfg = detail::load_config(conv_flags.config, conv_flags.seed);
      std::unique_ptr<std::ofstream> file;
      write_convergence_csv(detail::sink(conv_flags.output, file, out),
                            convergence_study(cfg, conv_flags.threads));
      return kOk;
    }
    if (roc_cmd->parsed()) {
      const ExperimentConfig cfg = detail::load_config(roc_flags.config, roc_flags.seed);
      if (roc_cell >= cfg.sizes.size()) throw DataError("--cell is out of range");
      std::vector<double> thresholds;
      if (!roc_thresholds.empty()) {
        thresholds = detail::parse_threshold_list(roc_thresholds);
      } else {
        const double tmax = roc_tmax > 0.0 ? roc_tmax : threshold_for_alpha(1e-3, cfg.field);
        for (int i = 0; i < roc_points; ++i)
          thresholds.push_back(tmax * static_cast<double>(i) / static_cast<double>(roc_points - 1));
      }
      std::unique_ptr<std::ofstream> file;
      std::ostream& os = detail::sink(roc_flags.output, file, out);
      return cfg.field == Field::Complex
                 ? detail::roc<Complex>(cfg, roc_cell, roc_replicate, thresholds, os)
                 : detail::roc<double>(cfg, roc_cell, roc_replicate, thresholds, os);
    }
    if (sim_cmd->parsed()) {
      const ExperimentConfig cfg = detail::load_config(sim_flags.config, sim_flags.seed);
      if (sim_cell >= cfg.sizes.size()) throw DataError("--cell is out of range");
      return cfg.field == Field::Complex
                 ? detail::simulate<Complex>(cfg, sim_cell, sim_replicate, sim_amplitude,
                                             sim_training, sim_mu, sim_y, sim_population)
                 : detail::simulate<double>(cfg, sim_cell, sim_replicate, sim_amplitude,
                                            sim_training, sim_mu, sim_y, sim_population);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.kind() == ErrorKind::Numerical ? kNumerical : (e.kind() == ErrorKind::Usage ? kUsage : kData);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}

}  // namespace amfshrink::cli
