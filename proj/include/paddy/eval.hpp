#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "paddy/fastdropout.hpp"
#include "paddy/features.hpp"
#include "paddy/ingest.hpp"
#include "paddy/network.hpp"
#include "paddy/stage.hpp"

namespace paddy {

/// rows = actual stage, cols = predicted stage.
struct ConfusionMatrix {
  std::array<std::array<std::uint64_t, kStageCount>, kStageCount> counts{};

  std::uint64_t total() const;
  std::uint64_t trace() const;
  std::uint64_t row_sum(Stage actual) const;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

ConfusionMatrix confusion(std::span<const Stage> actual, std::span<const Stage> predicted);
/// trace / total; throws std::invalid_argument on an empty matrix.
double accuracy(const ConfusionMatrix& m);

enum class Method {
  lr,
  lr_fastdropout,
  dnn,
  dnn_dropout,
  dnn_bn,
  dnn_bn_dropout,
  cnn,
  cnn_dropout,
  cnn_bn,
  cnn_bn_dropout,
};

inline constexpr std::array<Method, 10> kAllMethods{
    Method::lr,     Method::lr_fastdropout, Method::dnn,         Method::dnn_dropout,
    Method::dnn_bn, Method::dnn_bn_dropout, Method::cnn,         Method::cnn_dropout,
    Method::cnn_bn, Method::cnn_bn_dropout};

/// Command-line token, e.g. "dnn+bn+dropout".
std::string_view method_token(Method m);
/// Table label, e.g. "DNN+BN+Dropout".
std::string_view method_label(Method m);
std::optional<Method> parse_method(std::string_view token);
/// "lr, lr+fastdropout, ..." for usage messages.
std::string method_list();

/// Architecture of a network method (family, regularizers).
ArchSpec arch_for(Method m, const ArchSpec& base);

struct ExperimentConfig {
  SplitSpec split;           // split.seed is overwritten from `seed`
  TrainConfig train;         // train.seed is overwritten from `seed`
  ArchSpec arch;             // family/regularizer flags come from the method
  double keep_prob = 0.8;    // fast dropout
  bool standardize = true;
  std::uint64_t seed = 1;
};

/// Flat key/value dump of everything that determines a run.
std::vector<std::pair<std::string, std::string>> config_snapshot(Method m, const ExperimentConfig& c,
                                                                 const std::string& composition);

struct ExperimentReport {
  std::string method;
  double accuracy = 0.0;        // test
  double train_accuracy = 0.0;  // infer-mode accuracy on the training split
  ConfusionMatrix confusion;    // test
  std::vector<std::pair<std::string, std::string>> config;
  std::uint64_t seed = 0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  double wall_seconds = 0.0;    // not serialized
};

/// A trained classifier plus the input scaling it expects.
struct TrainedModel {
  Standardizer standardizer = Standardizer::identity();
  std::variant<Network, FastDropoutModel> classifier;

  std::size_t feature_width() const;
  /// Predicted stage index and class scores per sample.
  std::pair<std::vector<std::size_t>, Matrix> predict(const Dataset& d) const;
};

struct ExperimentOutcome {
  ExperimentReport report;
  TrainedModel model;
  Dataset train;
  Dataset test;
};

/// featurize -> standardize -> train -> predict -> confusion on a given
/// partition (the tail of run_experiment).
ExperimentOutcome run_on_split(Method m, Dataset train, Dataset test, const ExperimentConfig& cfg);

/// clean -> balance -> split -> featurize -> standardize -> train -> predict
/// -> confusion. Failures are rethrown with the pipeline step in the message.
ExperimentOutcome run_experiment(Method m, const Dataset& data, const ExperimentConfig& cfg);

struct CrossValidation {
  /// Confusion summed over the held-out folds; accuracy is its trace / total.
  /// train_accuracy is the fold mean, n_train the mean training size and
  /// n_test the number of pooled held-out predictions.
  ExperimentReport pooled;
  std::vector<double> fold_accuracy;
};

/// Stratified k-fold variant of run_experiment: every balanced sample is held
/// out exactly once. Initialization and training seeds are shared by the folds.
CrossValidation run_cross_validation(Method m, const Dataset& data, const ExperimentConfig& cfg,
                                     std::size_t folds);

inline constexpr int kReportFormatVersion = 1;

inline constexpr std::string_view kSummaryHeader =
    "version,method,accuracy,train_accuracy,seed,n_train,n_test";
void write_summary_header(std::ostream& out);
void write_summary_row(std::ostream& out, const ExperimentReport& r);
/// Confusion matrix and configuration snapshot.
void write_report_text(std::ostream& out, const ExperimentReport& r);

/// Method / accuracy (%) table in the layout of a paper results table.
std::string format_accuracy_table(std::span<const ExperimentReport> reports);

}  // namespace paddy
