// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any criterion fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "amfshrink/amfshrink.hpp"
#include "amfshrink/cli.hpp"
#include "oracles.hpp"

using namespace amfshrink;

namespace {

constexpr Seed kSeed = 20261016;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

SpectrumModel two_atom() {
  return SpectrumModel({SpectrumModel::point_mass(1.0, 0.5), SpectrumModel::point_mass(5.0, 0.5)});
}

SpectrumModel identity() { return SpectrumModel({SpectrumModel::point_mass(1.0)}); }

EstimatorSpec spec(EstimatorSpec::Method m) {
  EstimatorSpec e;
  e.method = m;
  e.label = default_label(e);
  return e;
}

ExperimentConfig complex_config(SpectrumModel h, std::vector<SizeCell> sizes,
                                std::vector<EstimatorSpec> estimators, long replicates, long trials) {
  ExperimentConfig cfg;
  cfg.field = Field::Complex;
  cfg.spectrum = std::move(h);
  cfg.sizes = std::move(sizes);
  cfg.amplitude = {AmplitudeSpec::Mode::Deflection, 2.0};
  cfg.alphas = {0.1};
  cfg.estimators = std::move(estimators);
  cfg.replicates = replicates;
  cfg.trials = trials;
  cfg.master_seed = kSeed;
  return cfg;
}

// Shared by criteria 1 and 2.
const ExperimentResult& cfar_run(double* seconds = nullptr) {
  static double elapsed = 0.0;
  static const ExperimentResult result = [] {
    const auto start = std::chrono::steady_clock::now();
    auto r = run_experiment(
        complex_config(two_atom(), {{200, 400}}, {spec(EstimatorSpec::Method::Lw)}, 20, 10000));
    elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
  }();
  if (seconds) *seconds = elapsed;
  return result;
}

Verdict criterion_cfar() {
  double seconds = 0.0;
  const auto& r = cfar_run(&seconds);
  double sum = 0.0;
  long ok = 0;
  for (const auto& rec : r.records)
    if (rec.ok) {
      sum += rec.p0[0];
      ++ok;
    }
  const double p0 = sum / static_cast<double>(ok);
  const bool pass = ok == 20 && p0 >= 0.08 && p0 <= 0.12 && seconds <= 120.0;
  return {pass, fmt("mean p0 = %.4f over %ld x 10^4 draws (target [0.08, 0.12]), %.1f s", p0, ok, seconds)};
}

Verdict criterion_detection_rate() {
  const auto& r = cfar_run();
  int within = 0;
  double worst = 0.0;
  for (const auto& rec : r.records) {
    if (!rec.ok) continue;
    const double gap = std::abs(rec.p1[0] - rec.p1_predicted[0]);
    worst = std::max(worst, gap);
    within += gap <= 0.03;
  }
  const auto n = static_cast<int>(r.records.size());
  return {within * 10 >= n * 9,
          fmt("%d/%d replicates with |p1 - Q1 prediction| <= 0.03 (worst %.4f)", within, n, worst)};
}

Verdict criterion_optimality() {
  using M = EstimatorSpec::Method;
  const auto under = run_experiment(complex_config(two_atom(), {{200, 400}},
                                                   {spec(M::Lw), spec(M::DiagonalLoading), spec(M::Sample)}, 50, 1));
  const auto over =
      run_experiment(complex_config(two_atom(), {{400, 200}}, {spec(M::Lw), spec(M::DiagonalLoading)}, 50, 1));
  auto wins = [](const ExperimentResult& r, std::size_t other) {
    int w = 0;
    for (long rep = 0; rep < r.config.replicates; ++rep) {
      const auto& lw = r.record(0, rep, 0);
      const auto& b = r.record(0, rep, other);
      w += lw.ok && b.ok && lw.nu > b.nu;
    }
    return w;
  };
  const int diag_under = wins(under, 1), sample_under = wins(under, 2), diag_over = wins(over, 1);
  const bool pass = diag_under >= 45 && sample_under >= 45 && diag_over >= 45;
  return {pass, fmt("lw wins on nu: vs diag %d/50 at (200,400), %d/50 at (400,200); vs sample %d/50 at (200,400)",
                    diag_under, diag_over, sample_under)};
}

Verdict criterion_xi() {
  std::string detail;
  bool pass = true;
  for (const auto& [name, h] : {std::pair{"identity", identity()}, std::pair{"two-atom", two_atom()}}) {
    const auto r = run_experiment(complex_config(h, {{200, 400}}, {spec(EstimatorSpec::Method::Lw)}, 100, 1));
    int within = 0;
    double mean = 0.0;
    for (const auto& rec : r.records) {
      within += rec.ok && std::abs(rec.xi - 1.0) <= 0.1;
      mean += rec.xi / 100.0;
    }
    pass = pass && within >= 95;
    detail += fmt("%s %d/100 within 0.1 (mean xi %.4f); ", name, within, mean);
  }
  detail.resize(detail.size() - 2);
  return {pass, detail};
}

Verdict criterion_oracle_agreement() {
  std::string detail;
  bool pass = true;
  for (const auto& [name, h] : {std::pair{"identity", identity()}, std::pair{"two-atom", two_atom()}}) {
    const auto r = run_experiment(
        complex_config(h, {{100, 200}, {400, 800}}, {spec(EstimatorSpec::Method::Lw)}, 50, 1));
    int decreased = 0;
    double small = 0.0, large = 0.0;
    for (long rep = 0; rep < 50; ++rep) {
      const auto& a = r.record(0, rep, 0);
      const auto& b = r.record(1, rep, 0);
      decreased += a.ok && b.ok && b.loss_vs_oracle < a.loss_vs_oracle;
      small += a.loss_vs_oracle / 50.0;
      large += b.loss_vs_oracle / 50.0;
    }
    pass = pass && decreased >= 45;
    detail += fmt("%s %d/50 decreased (mean loss %.3g -> %.3g); ", name, decreased, small, large);
  }
  detail.resize(detail.size() - 2);
  return {pass, detail};
}

Verdict criterion_kernel() {
  RealVector ones(2);
  ones << 1.0, 1.0;
  const KernelEvaluation k = lw_kernel(1.0, ones, 2, 8);
  RealVector var(1);
  var << 2.0;
  const double raw = lw_shrink_raw(var, 1, 1000).raw(0);
  const double ref = oracle::shrunken_reference({2.0}, 1000)[0];
  const double err = std::max({std::abs(k.a - 0.0), std::abs(k.b - 1.341641), std::abs(raw - 2.003783),
                               std::abs(raw - ref)});
  return {err <= 1e-6, fmt("a = %.9f, b = %.9f, d_raw(p=1) = %.9f, independent form %.9f; max error %.2e",
                           k.a, k.b, raw, ref, err)};
}

Verdict criterion_concentration() {
  const Index p = 500;
  const RealVector diag = RealVector::LinSpaced(p, -2.0, 2.0);
  const Matrix<Complex> q = haar_rotation<Complex>(p, derive_seed(kSeed, "concentration-rotation"));
  const Matrix<Complex> a = q * diag.asDiagonal() * q.adjoint();
  const double bound = 5 * std::sqrt(std::log(static_cast<double>(p)) / static_cast<double>(p)) * 2.0;
  int ok = 0;
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const Vector<Complex> mu = sample_signal_direction<Complex>(p, derive_seed(kSeed, "concentration", k));
    const double dev = std::abs(real_part(mu.dot(a * mu)) - diag.sum() / static_cast<double>(p));
    worst = std::max(worst, dev);
    ok += dev <= bound;
  }
  return {ok >= 990, fmt("%d/1000 within %.4f (largest deviation %.4f)", ok, bound, worst)};
}

Verdict criterion_numerics() {
  const double series = oracle::marcum_q1_bessel_series(1.0, 1.0);
  const double q1 = marcum_q1(1.0, 1.0);
  double worst = 0.0;
  for (auto [t, m] : {std::pair{0.5, 0.5}, {2.302585, 1.0}, {2.302585, 2.0}, {4.60517, 3.0}, {1.0, 4.0}}) {
    const double analytic = p1_analytic(t, m, 1.0, Field::Complex);
    worst = std::max(worst, std::abs(analytic - oracle::complex_exceedance(m, t)));
  }
  const bool pass = std::abs(q1 - series) <= 1e-6 && worst <= 1e-6;
  return {pass, fmt("Q1(1,1) = %.10f, series %.10f; p1 vs 2-D quadrature max error %.2e at 5 points "
                    "(note: the often quoted 0.733276 is %.2e from the series)",
                    q1, series, worst, std::abs(0.733276 - series))};
}

Verdict criterion_determinism() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "amfshrink_acceptance";
  fs::create_directories(dir);
  const std::string config = std::string(AMFSHRINK_CONFIG_DIR) + "/two_atom_complex.json";
  auto run = [&](const std::string& tag, const std::string& threads) {
    const std::string summary = (dir / (tag + "_summary.csv")).string();
    const std::string reps = (dir / (tag + "_replicates.csv")).string();
    const char* argv[] = {"amfshrink", "experiment", "--config", config.c_str(), "--seed", "77",
                          "--threads", threads.c_str(), "--output", summary.c_str(),
                          "--replicates-output", reps.c_str()};
    std::ostringstream out, err;
    if (cli::run(12, argv, out, err) != 0) throw std::runtime_error("experiment failed: " + err.str());
    return read_file(summary) + "\x1e" + read_file(reps);
  };
  const std::string a = run("a1", "1"), b = run("b1", "1"), c = run("a8", "8"), d = run("b8", "8");
  fs::remove_all(dir);
  const bool pass = a == b && a == c && a == d && !a.empty();
  return {pass, fmt("4 runs (threads 1,1,8,8) of the shipped config: %s (%zu bytes)",
                    pass ? "byte-identical" : "DIFFER", a.size())};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria = {
      {"CFAR false-alarm rate", criterion_cfar},
      {"detection-rate prediction", criterion_detection_rate},
      {"nu ordering", criterion_optimality},
      {"xi near 1", criterion_xi},
      {"oracle agreement", criterion_oracle_agreement},
      {"kernel values", criterion_kernel},
      {"quadratic-form concentration", criterion_concentration},
      {"numerical oracles", criterion_numerics},
      {"determinism", criterion_determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failed += !v.pass;
    std::cout << "criterion " << i + 1 << ": " << (v.pass ? "PASS" : "FAIL") << "  " << criteria[i].first
              << "  " << v.detail << std::endl;
  }
  std::cout << (failed ? "acceptance: " + std::to_string(failed) + " criterion(s) failed" : "acceptance: all passed")
            << std::endl;
  return failed ? 1 : 0;
}
