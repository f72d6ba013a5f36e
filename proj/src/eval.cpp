#include "paddy/eval.hpp"

#include <chrono>
#include <cstdio>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "paddy/error.hpp"
#include "paddy/text.hpp"

namespace paddy {

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t t = 0;
  for (const auto& row : counts)
    for (auto v : row) t += v;
  return t;
}

std::uint64_t ConfusionMatrix::trace() const {
  std::uint64_t t = 0;
  for (std::size_t i = 0; i < kStageCount; ++i) t += counts[i][i];
  return t;
}

std::uint64_t ConfusionMatrix::row_sum(Stage actual) const {
  std::uint64_t t = 0;
  for (auto v : counts[index_of(actual)]) t += v;
  return t;
}

ConfusionMatrix confusion(std::span<const Stage> actual, std::span<const Stage> predicted) {
  if (actual.size() != predicted.size())
    throw std::invalid_argument("confusion: actual/predicted length mismatch");
  if (actual.empty()) throw std::invalid_argument("confusion: no samples");
  ConfusionMatrix m;
  for (std::size_t i = 0; i < actual.size(); ++i) ++m.counts[index_of(actual[i])][index_of(predicted[i])];
  return m;
}

double accuracy(const ConfusionMatrix& m) {
  const auto total = m.total();
  if (total == 0) throw std::invalid_argument("accuracy: empty confusion matrix");
  return static_cast<double>(m.trace()) / static_cast<double>(total);
}

// --- methods ------------------------------------------------------------------

namespace {

struct MethodInfo {
  Method method;
  std::string_view token;
  std::string_view label;
};

constexpr std::array<MethodInfo, 10> kMethodInfo{{
    {Method::lr, "lr", "LR"},
    {Method::lr_fastdropout, "lr+fastdropout", "LR + Fast Dropout"},
    {Method::dnn, "dnn", "DNN"},
    {Method::dnn_dropout, "dnn+dropout", "DNN+Dropout"},
    {Method::dnn_bn, "dnn+bn", "DNN+BN"},
    {Method::dnn_bn_dropout, "dnn+bn+dropout", "DNN+BN+Dropout"},
    {Method::cnn, "cnn", "CNN"},
    {Method::cnn_dropout, "cnn+dropout", "CNN+Dropout"},
    {Method::cnn_bn, "cnn+bn", "CNN+BN"},
    {Method::cnn_bn_dropout, "cnn+bn+dropout", "CNN+BN+Dropout"},
}};

const MethodInfo& info(Method m) { return kMethodInfo[static_cast<std::size_t>(m)]; }

}  // namespace

std::string_view method_token(Method m) { return info(m).token; }
std::string_view method_label(Method m) { return info(m).label; }

std::optional<Method> parse_method(std::string_view token) {
  for (const auto& i : kMethodInfo)
    if (i.token == token) return i.method;
  return std::nullopt;
}

std::string method_list() {
  std::string out;
  for (const auto& i : kMethodInfo) {
    if (!out.empty()) out += ", ";
    out += i.token;
  }
  return out;
}

ArchSpec arch_for(Method m, const ArchSpec& base) {
  ArchSpec a = base;
  a.batchnorm = false;
  a.dropout = false;
  switch (m) {
    case Method::lr:
    case Method::lr_fastdropout:
      a.family = Family::linear;
      break;
    case Method::dnn_bn_dropout: a.dropout = true; [[fallthrough]];
    case Method::dnn_bn: a.batchnorm = true; a.family = Family::dense; break;
    case Method::dnn_dropout: a.dropout = true; [[fallthrough]];
    case Method::dnn: a.family = Family::dense; break;
    case Method::cnn_bn_dropout: a.dropout = true; [[fallthrough]];
    case Method::cnn_bn: a.batchnorm = true; a.family = Family::conv; break;
    case Method::cnn_dropout: a.dropout = true; [[fallthrough]];
    case Method::cnn: a.family = Family::conv; break;
  }
  return a;
}

namespace {

std::string join(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  std::mt19937_64 mix(seq);
  return mix();
}

enum SeedStream : std::uint64_t { kBalance = 1, kSplit = 2, kInit = 3, kTrain = 4 };

}  // namespace

std::vector<std::pair<std::string, std::string>> config_snapshot(Method m, const ExperimentConfig& c,
                                                                 const std::string& composition) {
  const ArchSpec a = arch_for(m, c.arch);
  const bool fd = m == Method::lr_fastdropout;
  std::vector<std::pair<std::string, std::string>> kv{
      {"method", std::string(method_token(m))},
      {"seed", std::to_string(c.seed)},
      {"train_fraction", text::shortest(c.split.train_fraction)},
      {"standardize", c.standardize ? "true" : "false"},
      {"epochs", std::to_string(c.train.epochs)},
      {"batch_size", std::to_string(c.train.batch_size)},
      {"learning_rate", text::shortest(c.train.learning_rate)},
      {"momentum", text::shortest(c.train.momentum)},
  };
  std::string regs;
  if (fd) regs = "fastdropout";
  if (a.batchnorm) regs = "batchnorm";
  if (a.dropout) regs += regs.empty() ? "dropout" : "+dropout";
  kv.emplace_back("regularizers", regs.empty() ? "none" : regs);
  if (fd) kv.emplace_back("keep_prob", text::shortest(c.keep_prob));
  if (a.batchnorm) kv.emplace_back("batchnorm_placement", "linear>batchnorm>activation");
  if (a.dropout) {
    kv.emplace_back("dropout_placement", "activation>dropout");
    kv.emplace_back("dropout_rate", text::shortest(a.dropout_rate));
  }
  if (a.family == Family::dense) kv.emplace_back("hidden", join(a.hidden));
  if (a.family == Family::conv) {
    kv.emplace_back("conv_filters", join(a.conv_filters));
    kv.emplace_back("kernel_width", std::to_string(a.kernel_width));
  }
  if (a.input_batchnorm) kv.emplace_back("input_batchnorm", "true");
  kv.emplace_back("composition", composition);
  return kv;
}

// --- trained model -------------------------------------------------------------

namespace {

Matrix feature_matrix(const std::vector<FeatureVector>& rows) {
  Matrix x(rows.size(), kFeatureCount);
  for (std::size_t r = 0; r < rows.size(); ++r)
    std::copy(rows[r].values.begin(), rows[r].values.end(), x.row(r).begin());
  return x;
}

Matrix standardized_features(const Dataset& d, const Standardizer& z) {
  auto rows = featurize_all(d);
  for (auto& v : rows) v = apply_standardizer(z, v);
  return feature_matrix(rows);
}

std::vector<std::size_t> label_indices(const Dataset& d) {
  std::vector<std::size_t> y(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!d.samples[i].stage) throw DataError("sample " + std::to_string(i) + " has no stage label");
    y[i] = index_of(*d.samples[i].stage);
  }
  return y;
}

std::vector<Stage> as_stages(std::span<const std::size_t> idx) {
  std::vector<Stage> out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) out[i] = stage_from_index(idx[i]);
  return out;
}

std::pair<std::vector<std::size_t>, Matrix> classify(const TrainedModel& model, const Matrix& x) {
  if (const auto* net = std::get_if<Network>(&model.classifier)) {
    auto p = predict(*net, x);
    return {std::move(p.labels), std::move(p.probabilities)};
  }
  const auto& fd = std::get<FastDropoutModel>(model.classifier);
  if (x.cols() != fd.feature_width())
    throw DataError("feature width " + std::to_string(x.cols()) + " does not match model input width " +
                    std::to_string(fd.feature_width()));
  std::vector<std::size_t> labels(x.rows());
  Matrix scores(x.rows(), kStageCount);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto p = fd_predict(fd, x.row(r));
    labels[r] = p.label;
    std::copy(p.scores.begin(), p.scores.end(), scores.row(r).begin());
  }
  return {std::move(labels), std::move(scores)};
}

double accuracy_of(std::span<const std::size_t> predicted, std::span<const std::size_t> actual) {
  if (actual.empty()) return 0.0;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < actual.size(); ++i) hit += predicted[i] == actual[i];
  return static_cast<double>(hit) / static_cast<double>(actual.size());
}

template <typename F>
auto step(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    const std::string msg = std::string("[") + name + "] " + e.what();
    switch (e.kind()) {
      case ErrorKind::usage: throw UsageError(msg);
      case ErrorKind::numeric: throw NumericError(msg);
      case ErrorKind::data: throw DataError(msg);
    }
    throw;
  } catch (const std::exception& e) {
    throw DataError(std::string("[") + name + "] " + e.what());
  }
}

}  // namespace

std::size_t TrainedModel::feature_width() const {
  if (const auto* net = std::get_if<Network>(&classifier)) return net->in_width();
  return std::get<FastDropoutModel>(classifier).feature_width();
}

std::pair<std::vector<std::size_t>, Matrix> TrainedModel::predict(const Dataset& d) const {
  return classify(*this, standardized_features(d, standardizer));
}

ExperimentOutcome run_on_split(Method m, Dataset train_set, Dataset test_set,
                               const ExperimentConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  ExperimentOutcome out;
  out.train = std::move(train_set);
  out.test = std::move(test_set);
  if (out.train.empty() || out.test.empty())
    throw DataError("[split] empty train or test partition");

  const auto train_rows = step("featurize", [&] { return featurize_all(out.train); });
  step("standardize", [&] {
    out.model.standardizer = cfg.standardize ? fit_standardizer(train_rows) : Standardizer::identity();
    return 0;
  });
  const Matrix x_train = standardized_features(out.train, out.model.standardizer);
  const Matrix x_test = standardized_features(out.test, out.model.standardizer);
  const auto y_train = step("featurize", [&] { return label_indices(out.train); });
  const auto y_test = step("featurize", [&] { return label_indices(out.test); });

  TrainConfig tc = cfg.train;
  tc.seed = derive_seed(cfg.seed, kTrain);
  std::string composition;
  step("train", [&] {
    if (m == Method::lr_fastdropout) {
      out.model.classifier = fd_train(x_train, y_train, cfg.keep_prob, tc).model;
      composition = "fastdropout-ovr(" + std::to_string(kFeatureCount) + ">" +
                    std::to_string(kStageCount) + ")";
    } else {
      Network net = build_network(arch_for(m, cfg.arch), kFeatureCount, derive_seed(cfg.seed, kInit));
      composition = net.describe();
      out.model.classifier = train(std::move(net), x_train, y_train, tc).network;
    }
    return 0;
  });

  const auto [test_pred, test_scores] = step("predict", [&] { return classify(out.model, x_test); });
  const auto train_pred = step("predict", [&] { return classify(out.model, x_train).first; });

  auto& r = out.report;
  r.method = std::string(method_token(m));
  r.confusion = step("confusion", [&] { return confusion(as_stages(y_test), as_stages(test_pred)); });
  r.accuracy = accuracy(r.confusion);
  r.train_accuracy = accuracy_of(train_pred, y_train);
  r.seed = cfg.seed;
  r.n_train = out.train.size();
  r.n_test = out.test.size();
  r.config = config_snapshot(m, cfg, composition);
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

namespace {

Dataset prepare(const Dataset& data, const ExperimentConfig& cfg) {
  const Dataset clean = step("clean", [&] { return remove_cloud(data); });
  return step("balance", [&] { return balance_classes(clean, derive_seed(cfg.seed, kBalance)); });
}

}  // namespace

ExperimentOutcome run_experiment(Method m, const Dataset& data, const ExperimentConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const Dataset balanced = prepare(data, cfg);
  auto [train_set, test_set] = step("split", [&] {
    SplitSpec split = cfg.split;
    split.seed = derive_seed(cfg.seed, kSplit);
    return split_train_test(balanced, split);
  });
  auto out = run_on_split(m, std::move(train_set), std::move(test_set), cfg);
  out.report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

CrossValidation run_cross_validation(Method m, const Dataset& data, const ExperimentConfig& cfg,
                                     std::size_t folds) {
  const auto start = std::chrono::steady_clock::now();
  const Dataset balanced = prepare(data, cfg);
  const auto parts = step("split", [&] { return stratified_folds(balanced, folds, derive_seed(cfg.seed, kSplit)); });

  CrossValidation cv;
  auto& r = cv.pooled;
  double train_acc = 0.0;
  for (std::size_t f = 0; f < folds; ++f) {
    Dataset train_set;
    train_set.provenance = balanced.provenance;
    for (std::size_t g = 0; g < folds; ++g)
      if (g != f) train_set.samples.insert(train_set.samples.end(), parts[g].samples.begin(), parts[g].samples.end());
    auto fold = run_on_split(m, std::move(train_set), parts[f], cfg).report;
    for (std::size_t a = 0; a < kStageCount; ++a)
      for (std::size_t p = 0; p < kStageCount; ++p) r.confusion.counts[a][p] += fold.confusion.counts[a][p];
    cv.fold_accuracy.push_back(fold.accuracy);
    train_acc += fold.train_accuracy;
    r.n_train += fold.n_train;
    if (f == 0) r.config = std::move(fold.config);
  }
  r.method = std::string(method_token(m));
  r.accuracy = accuracy(r.confusion);
  r.train_accuracy = train_acc / static_cast<double>(folds);
  r.seed = cfg.seed;
  r.n_train /= folds;
  r.n_test = static_cast<std::size_t>(r.confusion.total());
  r.config.insert(r.config.begin() + 3, {"validation", std::to_string(folds) + "-fold"});
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return cv;
}

// --- report files -------------------------------------------------------------

void write_summary_header(std::ostream& out) { out << kSummaryHeader << '\n'; }

void write_summary_row(std::ostream& out, const ExperimentReport& r) {
  out << kReportFormatVersion << ',' << r.method << ',' << text::shortest(r.accuracy) << ','
      << text::shortest(r.train_accuracy) << ',' << r.seed << ',' << r.n_train << ',' << r.n_test
      << '\n';
}

void write_report_text(std::ostream& out, const ExperimentReport& r) {
  out << "paddy-report " << kReportFormatVersion << '\n';
  out << "method " << r.method << '\n';
  out << "accuracy " << text::shortest(r.accuracy) << '\n';
  out << "train_accuracy " << text::shortest(r.train_accuracy) << '\n';
  out << "seed " << r.seed << '\n';
  out << "n_train " << r.n_train << '\n';
  out << "n_test " << r.n_test << '\n';
  out << "confusion rows=actual cols=predicted\n";
  out << "actual";
  for (Stage s : kAllStages) out << ' ' << to_string(s);
  out << '\n';
  for (Stage a : kAllStages) {
    out << to_string(a);
    for (Stage p : kAllStages) out << ' ' << r.confusion.counts[index_of(a)][index_of(p)];
    out << '\n';
  }
  out << "config\n";
  for (const auto& [k, v] : r.config) out << k << " = " << v << '\n';
}

std::string format_accuracy_table(std::span<const ExperimentReport> reports) {
  std::size_t width = std::string_view("Machine Learning Methods").size();
  for (const auto& r : reports) {
    const auto m = parse_method(r.method);
    width = std::max(width, m ? method_label(*m).size() : r.method.size());
  }
  std::ostringstream out;
  auto line = [&](std::string_view name, std::string_view acc) {
    out << "| " << name << std::string(width - name.size(), ' ') << " | " << acc
        << std::string(12 - std::min<std::size_t>(12, acc.size()), ' ') << " |\n";
  };
  line("Machine Learning Methods", "Accuracy (%)");
  out << "|" << std::string(width + 2, '-') << "|" << std::string(14, '-') << "|\n";
  for (const auto& r : reports) {
    const auto m = parse_method(r.method);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", 100.0 * r.accuracy);
    line(m ? method_label(*m) : std::string_view(r.method), buf);
  }
  return out.str();
}

}  // namespace paddy
