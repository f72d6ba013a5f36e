#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "paddy/error.hpp"
#include "paddy/eval.hpp"

using namespace paddy;

namespace {

ExperimentConfig quick_config() {
  ExperimentConfig c;
  c.train.epochs = 20;
  c.train.batch_size = 32;
  c.seed = 3;
  return c;
}

std::string config_value(const ExperimentReport& r, const std::string& key) {
  for (const auto& [k, v] : r.config)
    if (k == key) return v;
  return "<missing>";
}

}  // namespace

TEST_CASE("confusion and accuracy") {
  std::vector<Stage> actual, predicted;
  for (int i = 0; i < 100; ++i) {
    actual.push_back(stage_from_index(i % 5));
    predicted.push_back(i < 68 ? actual.back() : stage_from_index((i + 1) % 5));
  }
  const auto m = confusion(actual, predicted);
  CHECK(m.total() == 100);
  CHECK(m.trace() == 68);
  CHECK(accuracy(m) == 0.68);
  for (Stage s : kAllStages) CHECK(m.row_sum(s) == 20);

  CHECK_THROWS_AS(accuracy(ConfusionMatrix{}), std::invalid_argument);
  CHECK_THROWS(confusion(actual, std::span<const Stage>(predicted).first(3)));
}

TEST_CASE("uniform guessing scores about one in five") {
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<std::size_t> pick(0, 4);
  const std::size_t n = 20000;
  std::vector<Stage> a(n), p(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = stage_from_index(pick(rng));
    p[i] = stage_from_index(pick(rng));
  }
  const double sd = std::sqrt(0.2 * 0.8 / n);
  CHECK(std::abs(accuracy(confusion(a, p)) - 0.2) < 4 * sd);
}

TEST_CASE("confusion invariants on random labels") {
  std::mt19937_64 rng(10);
  std::uniform_int_distribution<std::size_t> pick(0, 4);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + trial * 3;
    std::vector<Stage> a(n), p(n);
    std::array<std::uint64_t, 5> per_class{};
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = stage_from_index(pick(rng));
      p[i] = stage_from_index(pick(rng));
      ++per_class[index_of(a[i])];
      hits += a[i] == p[i];
    }
    const auto m = confusion(a, p);
    CHECK(m.total() == n);
    CHECK(m.trace() == hits);
    for (Stage s : kAllStages) CHECK(m.row_sum(s) == per_class[index_of(s)]);
    const double acc = accuracy(m);
    CHECK((acc >= 0.0 && acc <= 1.0));
    CHECK(confusion(a, a).trace() == n);
  }
}

TEST_CASE("methods") {
  CHECK(kAllMethods.size() == 10);
  for (Method m : kAllMethods) CHECK(parse_method(method_token(m)) == m);
  CHECK_FALSE(parse_method("svm").has_value());
  CHECK(method_label(Method::lr_fastdropout) == "LR + Fast Dropout");
  CHECK(method_list().find("cnn+bn+dropout") != std::string::npos);
}

TEST_CASE("dnn on noiseless data") {
  const Dataset d = synthesize_dataset(150, 0.0, 4);
  auto cfg = quick_config();
  cfg.train.epochs = 60;
  const auto out = run_experiment(Method::dnn, d, cfg);
  const auto& r = out.report;
  CHECK(r.accuracy >= 0.95);
  CHECK(r.accuracy == accuracy(r.confusion));
  CHECK(r.n_test == r.confusion.total());
  CHECK(r.n_train + r.n_test == 750);
  CHECK(r.n_train == out.train.size());

  // train_accuracy recomputed from the returned model
  const auto [labels, scores] = out.model.predict(out.train);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hit += stage_from_index(labels[i]) == *out.train.samples[i].stage;
  CHECK(r.train_accuracy == static_cast<double>(hit) / labels.size());
  CHECK(scores.rows() == out.train.size());
}

TEST_CASE("reports are byte-identical for a fixed seed") {
  const Dataset d = synthesize_dataset(40, 0.02, 5);
  for (Method m : {Method::lr_fastdropout, Method::cnn_bn_dropout}) {
    auto render = [&] {
      const auto r = run_experiment(m, d, quick_config()).report;
      std::ostringstream out;
      write_summary_header(out);
      write_summary_row(out, r);
      write_report_text(out, r);
      return out.str();
    };
    CHECK(render() == render());
  }
}

TEST_CASE("configuration snapshot records regularizers and placement") {
  const Dataset d = synthesize_dataset(30, 0.02, 6);
  auto cfg = quick_config();
  cfg.train.epochs = 2;
  const auto r = run_experiment(Method::dnn_bn_dropout, d, cfg).report;
  CHECK(config_value(r, "method") == "dnn+bn+dropout");
  CHECK(config_value(r, "regularizers") == "batchnorm+dropout");
  CHECK(config_value(r, "batchnorm_placement") == "linear>batchnorm>activation");
  CHECK(config_value(r, "dropout_placement") == "activation>dropout");
  CHECK(config_value(r, "dropout_rate") == "0.5");
  CHECK(config_value(r, "composition").find("bn(64)") != std::string::npos);

  const auto fd = run_experiment(Method::lr_fastdropout, d, cfg).report;
  CHECK(config_value(fd, "regularizers") == "fastdropout");
  CHECK(config_value(fd, "keep_prob") == "0.8");
  const auto plain = run_experiment(Method::lr, d, cfg).report;
  CHECK(config_value(plain, "regularizers") == "none");
}

TEST_CASE("pipeline failures name the step") {
  auto cfg = quick_config();
  SUBCASE("balance") {
    Dataset d = synthesize_dataset(20, 0.02, 7);
    d.samples[3].stage.reset();
    try {
      run_experiment(Method::lr, d, cfg);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).starts_with("[balance]"));
    }
  }
  SUBCASE("split") {
    cfg.split.train_fraction = 1.5;
    try {
      run_experiment(Method::lr, synthesize_dataset(20, 0.02, 7), cfg);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).starts_with("[split]"));
    }
  }
}

TEST_CASE("accuracy table") {
  std::vector<ExperimentReport> reports(2);
  reports[0].method = "lr";
  reports[0].accuracy = 0.8123;
  reports[1].method = "cnn+bn+dropout";
  reports[1].accuracy = 1.0;
  const auto table = format_accuracy_table(reports);
  std::istringstream in(table);
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  REQUIRE(lines.size() == 4);
  for (const auto& l : lines) {
    CHECK(l.size() == lines[0].size());
    CHECK(l.front() == '|');
    CHECK(l.back() == '|');
  }
  CHECK(lines[0].find("Accuracy (%)") != std::string::npos);
  CHECK(lines[2].find("| LR ") == 0);
  CHECK(lines[2].find("81.23") != std::string::npos);
  CHECK(lines[3].find("CNN+BN+Dropout") != std::string::npos);
  CHECK(lines[3].find("100.00") != std::string::npos);
}

TEST_CASE("cross-validation holds every balanced sample out once") {
  const Dataset d = synthesize_dataset(30, 0.02, 8);
  auto cfg = quick_config();
  cfg.train.epochs = 5;
  const auto cv = run_cross_validation(Method::lr, d, cfg, 3);
  CHECK(cv.fold_accuracy.size() == 3);
  CHECK(cv.pooled.n_test == 150);
  CHECK(cv.pooled.confusion.total() == 150);
  for (Stage s : kAllStages) CHECK(cv.pooled.confusion.row_sum(s) == 30);
  CHECK(cv.pooled.accuracy == accuracy(cv.pooled.confusion));
  CHECK(cv.pooled.n_train == 100);
  CHECK(config_value(cv.pooled, "validation") == "3-fold");
  CHECK_THROWS_AS(run_cross_validation(Method::lr, d, cfg, 1), Error);
}
