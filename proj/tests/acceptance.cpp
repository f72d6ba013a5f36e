// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gradcheck.hpp"
#include "oracles.hpp"
#include "paddy/cli.hpp"
#include "paddy/eval.hpp"
#include "paddy/features.hpp"
#include "paddy/phenology.hpp"

using namespace paddy;

namespace {

// --- pinned tolerances and budgets --------------------------------------------
constexpr std::size_t kGradInstances = 20;
constexpr double kGradTolerance = 1e-5;
constexpr double kGradBudgetSeconds = 10.0;

constexpr double kBnMeanTolerance = 1e-8;
constexpr double kBnSdRelTolerance = 1e-6;
constexpr double kBnRecoveryTolerance = 1e-10;

constexpr std::size_t kMaskDraws = 1'000'000;
constexpr double kStdErrors = 3.0;
constexpr std::size_t kGaussianDraws = 400'000;
constexpr double kExpectedSigmoidTolerance = 0.01;
constexpr double kFastDropoutBudgetSeconds = 60.0;

constexpr std::size_t kBenchPerClass = 2000;
constexpr double kBenchNoise = 0.015;
constexpr std::uint64_t kBenchDataSeed = 11;
constexpr double kNoisyFloor = 0.80;
constexpr double kNoiselessFloor = 0.95;
constexpr double kBenchBudgetSeconds = 600.0;

constexpr int kRegSeeds = 10;
constexpr std::size_t kRegPerClass = 60;  // 300 balanced -> 200 train / 100 test
constexpr double kRegNoise = 0.05;

constexpr double kIndexTolerance = 1e-9;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void report(const std::string& name, const std::function<Outcome()>& criterion) {
  Outcome o;
  const auto t0 = Clock::now();
  try {
    o = criterion();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  char elapsed[32];
  std::snprintf(elapsed, sizeof elapsed, " [%.1f s]", seconds_since(t0));
  std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << elapsed << std::endl;
  if (!o.pass) ++failures;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

int run_cli(const std::vector<std::string>& args, std::string* out = nullptr) {
  std::ostringstream o, e;
  const int code = cli::run(args, o, e);
  if (out) *out = o.str();
  if (code != 0) std::cerr << e.str();
  return code;
}

// --- criteria --------------------------------------------------------------------

Outcome summary_table() {
  const auto dir = oracle::scratch_dir("acceptance_table");
  const auto data = (dir / "d.csv").string();
  if (run_cli({"synth", "--per-class", "40", "--noise", "0.02", "--seed", "3", "--out", data}) != 0)
    return {false, "synth failed"};
  std::string table;
  if (run_cli({"report", "--methods", "all", "--data", data, "--epochs", "3", "--out",
               (dir / "summary.csv").string(), "--table", (dir / "table.md").string()},
              &table) != 0)
    return {false, "report failed"};
  std::istringstream in(table);
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  bool ok = lines.size() == 2 + kAllMethods.size() && lines[0].find("Accuracy (%)") != std::string::npos;
  for (std::size_t i = 0; ok && i < kAllMethods.size(); ++i)
    ok = lines[i + 2].find("| " + std::string(method_label(kAllMethods[i])) + " ") == 0 &&
         lines[i + 2].size() == lines[0].size();
  const auto csv = oracle::slurp(dir / "summary.csv");
  ok = ok && csv.starts_with(std::string(kSummaryHeader)) &&
       std::count(csv.begin(), csv.end(), '\n') == 1 + static_cast<long>(kAllMethods.size());
  ok = ok && oracle::slurp(dir / "table.md") == table;
  return {ok, std::to_string(lines.size() > 2 ? lines.size() - 2 : 0) + " method rows, summary CSV and markdown written"};
}

Outcome gradient_suite() {
  const auto t0 = Clock::now();
  const auto results = gradcheck::all(kGradInstances, 20240601);
  const double elapsed = seconds_since(t0);
  Outcome o;
  for (const auto& r : results) {
    o.pass = o.pass && r.instances >= kGradInstances && r.worst < kGradTolerance;
    o.detail += r.name + " " + fmt("%.1e", r.worst) + "; ";
  }
  o.pass = o.pass && elapsed < kGradBudgetSeconds;
  o.detail += std::to_string(kGradInstances) + " instances each, " + fmt("%.2f s", elapsed);
  return o;
}

Outcome batchnorm_invariants() {
  std::mt19937_64 rng(404);
  double worst_mean = 0.0, worst_sd = 0.0, worst_recovery = 0.0;
  bool invariant = true;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 4 + trial % 29, c = 1 + trial % 6;
    BatchNormLayer bn(c);
    bn.gamma = oracle::random_vector(c, rng, -3, 3);
    bn.beta = oracle::random_vector(c, rng, -2, 2);
    const Matrix x = oracle::random_matrix(n, c, rng, -4, 7);
    const auto xs = oracle::column_stats(x);
    const auto ys = oracle::column_stats(batchnorm_forward_train(bn, x).output);
    for (std::size_t j = 0; j < c; ++j) {
      worst_mean = std::max(worst_mean, std::abs(ys.mean[j] - bn.beta[j]));
      const double expected = std::abs(bn.gamma[j]) * std::sqrt(xs.var[j] / (xs.var[j] + bn.eps()));
      worst_sd = std::max(worst_sd, std::abs(std::sqrt(ys.var[j]) - expected) / expected);
    }

    BatchNormLayer rec(c);
    for (std::size_t j = 0; j < c; ++j) {
      rec.gamma[j] = std::sqrt(xs.var[j] + rec.eps());
      rec.beta[j] = xs.mean[j];
    }
    const Matrix back = batchnorm_forward_train(rec, x).output;
    for (std::size_t i = 0; i < x.size(); ++i)
      worst_recovery = std::max(worst_recovery, std::abs(back.flat()[i] - x.flat()[i]));

    // After training the inference path must not depend on the batch.
    for (int s = 0; s < 3; ++s) batchnorm_forward_train(bn, oracle::random_matrix(n, c, rng));
    const Matrix probe = oracle::random_matrix(9, c, rng);
    const Matrix all = batchnorm_forward_infer(bn, probe);
    for (std::size_t r = 0; r < probe.rows(); ++r) {
      Matrix one(1, c);
      std::copy(probe.row(r).begin(), probe.row(r).end(), one.row(0).begin());
      const Matrix alone = batchnorm_forward_infer(bn, one);
      for (std::size_t j = 0; j < c; ++j) invariant = invariant && alone(0, j) == all(r, j);
    }
  }
  return {worst_mean < kBnMeanTolerance && worst_sd < kBnSdRelTolerance &&
              worst_recovery < kBnRecoveryTolerance && invariant,
          "mean dev " + fmt("%.1e", worst_mean) + ", sd rel dev " + fmt("%.1e", worst_sd) +
              ", recovery " + fmt("%.1e", worst_recovery) + ", batch-size invariant " +
              (invariant ? "yes" : "no")};
}

Outcome fast_dropout_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(77);
  bool moments_ok = true;
  double worst_z = 0.0;
  for (int k = 0; k < 4; ++k) {
    const auto w = oracle::random_vector(11, rng, -1.5, 1.5);
    const auto x = oracle::random_vector(11, rng, -2, 2);
    const double p = 0.2 + 0.2 * k, b = 0.25 * k - 0.3;
    const auto m = fd_moments(w, b, x, p);
    const auto mc = oracle::sampled_dropout_moments(w, b, x, p, kMaskDraws, 900 + k);
    const double zm = std::abs(m.mean - mc.mean) / mc.std_error;
    const double zv = std::abs(m.variance - mc.variance) / mc.var_std_error;
    worst_z = std::max({worst_z, zm, zv});
    moments_ok = moments_ok && zm < kStdErrors && zv < kStdErrors;
  }

  double worst_gap = 0.0, worst_mu = 0.0, worst_var = 0.0;
  for (int mu = -5; mu <= 5; ++mu)
    for (double var : {0.0, 0.5, 1.0, 2.0, 4.0, 6.0, 8.0, 10.0}) {
      const double mc = oracle::sampled_expected_sigmoid(mu, var, kGaussianDraws, 31 * (mu + 6) + static_cast<int>(var * 2));
      const double gap = std::abs(fd_expected_sigmoid({static_cast<double>(mu), var}) - mc);
      if (gap > worst_gap) {
        worst_gap = gap;
        worst_mu = mu;
        worst_var = var;
      }
    }

  // p = 1: moments, scores, per-sample gradients and the trained models are plain LR.
  bool reduces = true;
  for (int k = 0; k < 20; ++k) {
    const auto w = oracle::random_vector(11, rng), x = oracle::random_vector(11, rng, -2, 2);
    const double b = 0.1 * k - 1.0, y = k % 2;
    const auto m = fd_moments(w, b, x, 1.0);
    double z = 0.0;
    for (std::size_t i = 0; i < 11; ++i) z += w[i] * x[i];
    z = b + z;
    const double q = 1.0 / (1.0 + std::exp(-z));
    reduces = reduces && m.variance == 0.0 && m.mean == z && fd_expected_sigmoid(m) == q;
    const auto g = fd_loss_and_gradient(w, b, x, y, 1.0);
    for (std::size_t i = 0; i < 11; ++i) reduces = reduces && g.grad_w[i] == (q - y) * x[i];
    reduces = reduces && g.grad_b == q - y;
  }
  // Training and prediction on featurized samples, against one-vs-rest plain logistic regression.
  const Dataset d = synthesize_dataset(60, 0.02, 5);
  const auto rows = featurize_all(d);
  Matrix x(rows.size(), kFeatureCount);
  std::vector<std::size_t> y(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::copy(rows[r].values.begin(), rows[r].values.end(), x.row(r).begin());
    y[r] = index_of(*d.samples[r].stage);
  }
  TrainConfig tc;
  tc.epochs = 30;
  tc.seed = 8;
  const auto fd = fd_train(x, y, 1.0, tc);
  const auto lr = train_logistic_ovr(x, y, tc);
  reduces = reduces && fd.model.weights == lr.model.weights && fd.model.bias == lr.model.bias && fd.trace == lr.trace;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto s = fd_predict(fd.model, x.row(r)).scores;
    for (std::size_t c = 0; c < kStageCount; ++c) {
      double z = 0.0;
      for (std::size_t i = 0; i < kFeatureCount; ++i) z += fd.model.weights(c, i) * x(r, i);
      z = fd.model.bias[c] + z;
      reduces = reduces && s[c] == 1.0 / (1.0 + std::exp(-z));
    }
  }

  const double elapsed = seconds_since(t0);
  return {moments_ok && worst_gap < kExpectedSigmoidTolerance && reduces && elapsed < kFastDropoutBudgetSeconds,
          "moments worst " + fmt("%.2f SE", worst_z) + " over 1e6 masks, expected-sigmoid grid worst " +
              fmt("%.4f", worst_gap) + " at mu " + fmt("%g", worst_mu) + " var " + fmt("%g", worst_var) + ", p=1 reduces to LR " + (reduces ? "exactly" : "NOT exactly") + ", " +
              fmt("%.1f s", elapsed)};
}

Outcome end_to_end() {
  const auto t0 = Clock::now();
  ExperimentConfig cfg;
  cfg.seed = 1;
  Outcome o;
  for (double noise : {kBenchNoise, 0.0}) {
    const double floor = noise > 0.0 ? kNoisyFloor : kNoiselessFloor;
    const Dataset d = synthesize_dataset(kBenchPerClass, noise, kBenchDataSeed);
    o.detail += "noise " + fmt("%g", noise) + ":";
    for (Method m : kAllMethods) {
      const double acc = run_experiment(m, d, cfg).report.accuracy;
      o.pass = o.pass && acc >= floor;
      o.detail += " " + std::string(method_token(m)) + " " + fmt("%.3f", acc);
      std::cerr << "  end-to-end noise " << noise << " " << method_token(m) << " " << acc << std::endl;
    }
    o.detail += "; ";
  }
  const double elapsed = seconds_since(t0);
  o.pass = o.pass && elapsed < kBenchBudgetSeconds;
  o.detail += fmt("total %.0f s", elapsed);
  return o;
}

Outcome regularization() {
  ExperimentConfig cfg;
  cfg.train.epochs = 300;
  cfg.train.batch_size = 32;
  cfg.train.learning_rate = 0.05;
  cfg.arch.hidden = {256, 256};
  double plain_gap = 0.0, dropout_gap = 0.0;
  for (int s = 1; s <= kRegSeeds; ++s) {
    const Dataset d = synthesize_dataset(kRegPerClass, kRegNoise, 100 + s);
    cfg.seed = static_cast<std::uint64_t>(s);
    const auto plain = run_experiment(Method::dnn, d, cfg).report;
    const auto drop = run_experiment(Method::dnn_dropout, d, cfg).report;
    if (plain.n_train != 200) throw std::runtime_error("fixture drifted: n_train " + std::to_string(plain.n_train));
    plain_gap += plain.train_accuracy - plain.accuracy;
    dropout_gap += drop.train_accuracy - drop.accuracy;
  }
  plain_gap /= kRegSeeds;
  dropout_gap /= kRegSeeds;
  return {dropout_gap < plain_gap, "mean train-test gap over " + std::to_string(kRegSeeds) + " seeds: dnn " +
                                       fmt("%.4f", plain_gap) + ", dnn+dropout " + fmt("%.4f", dropout_gap)};
}

Outcome determinism() {
  const auto dir = oracle::scratch_dir("acceptance_determinism");
  const auto data = (dir / "d.csv").string();
  if (run_cli({"synth", "--per-class", "60", "--noise", "0.02", "--seed", "9", "--out", data}) != 0)
    return {false, "synth failed"};
  std::string detail;
  bool ok = true;
  for (const char* method : {"lr+fastdropout", "dnn+bn+dropout", "cnn+bn+dropout"}) {
    std::string files[2];
    for (int run = 0; run < 2; ++run) {
      const auto prefix = (dir / (std::string("run") + std::to_string(run))).string();
      if (run_cli({"train", "--method", method, "--data", data, "--epochs", "10", "--seed", "4", "--out", prefix}) != 0)
        return {false, std::string("train failed for ") + method};
      for (const char* ext : {".model", ".report.csv", ".report.txt"}) files[run] += oracle::slurp(prefix + ext);
    }
    ok = ok && !files[0].empty() && files[0] == files[1];
    detail += std::string(method) + (files[0] == files[1] ? " identical; " : " DIFFERENT; ");
  }
  return {ok, detail + "model + report files compared byte for byte"};
}

Outcome phenology_oracle() {
  const auto& p = canonical_profile();
  const auto raw = p.series();
  const auto r = analyze_series(raw, 3);
  auto steps = [&](const std::optional<Date>& d, std::size_t truth) {
    return d ? std::abs(*d - p.date_at(truth)) / static_cast<double>(p.cadence_days) : 1e9;
  };
  const double f = steps(r.windows.flooding, p.true_flooding);
  const double h = steps(r.windows.heading, p.true_heading);
  const double v = steps(r.windows.harvest, p.true_harvest);

  auto first_firing = [](const PhenologySeries& s) -> std::optional<std::size_t> {
    auto e = s.evi;
    std::sort(e.begin(), e.end());
    const double median = e.size() % 2 ? e[e.size() / 2] : 0.5 * (e[e.size() / 2 - 1] + e[e.size() / 2]);
    for (std::size_t i = 0; i < s.size(); ++i)
      if (s.lswi[i] + 0.05 >= s.evi[i] && s.evi[i] < median) return i;
    return std::nullopt;
  };
  const bool exact = detect_flooding(raw) == first_firing(raw) && detect_flooding(r.smoothed) == first_firing(r.smoothed) &&
                     first_firing(r.smoothed).has_value();
  return {f <= 1 && h <= 1 && v <= 1 && exact,
          "offsets in cadence steps: flooding " + fmt("%g", f) + ", heading " + fmt("%g", h) + ", harvest " +
              fmt("%g", v) + "; flooding fires at the first qualifying index: " + (exact ? "yes" : "no")};
}

Outcome index_spot_checks() {
  const double n = ndvi(0.5, 0.1).value;
  const double e = evi(0.4, 0.1, 0.05).value;
  const double a = arvi(0.4, 0.1, 0.05).value;
  bool anti = true;
  std::mt19937_64 rng(1000);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double x = u(rng), y = u(rng);
    anti = anti && lswi(x, y).value == -lswi(y, x).value;
  }
  const bool ok = std::abs(n - 2.0 / 3.0) < kIndexTolerance && std::abs(e - 0.75 / 1.625) < kIndexTolerance &&
                  std::abs(a - 0.25 / 0.65) < kIndexTolerance && anti;
  return {ok, "ndvi " + fmt("%.10f", n) + ", evi " + fmt("%.10f", e) + ", arvi " + fmt("%.10f", a) +
                  ", lswi antisymmetric on 1000 pairs: " + (anti ? "yes" : "no")};
}

}  // namespace

int main() {
  report("summary-table", summary_table);
  report("gradient-suite", gradient_suite);
  report("batchnorm-invariants", batchnorm_invariants);
  report("fast-dropout-oracle", fast_dropout_oracle);
  report("end-to-end-synthetic", end_to_end);
  report("regularization-effect", regularization);
  report("pipeline-determinism", determinism);
  report("phenology-oracle", phenology_oracle);
  report("index-spot-checks", index_spot_checks);
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
