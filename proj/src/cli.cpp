#include "paddy/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "paddy/error.hpp"
#include "paddy/eval.hpp"
#include "paddy/model_io.hpp"
#include "paddy/phenology.hpp"
#include "paddy/text.hpp"

namespace paddy::cli {

namespace fs = std::filesystem;

namespace {

struct SynthArgs {
  std::size_t per_class = 0;
  double noise = 0.0;
  std::uint64_t seed = 1;
  std::string out;
  std::string series_out;
};

// Shared by train and report.
struct ExperimentArgs {
  std::string data;
  std::uint64_t seed = 1;
  double train_fraction = 2.0 / 3.0;
  std::size_t epochs = TrainConfig{}.epochs;
  std::size_t batch_size = TrainConfig{}.batch_size;
  double learning_rate = TrainConfig{}.learning_rate;
  double momentum = TrainConfig{}.momentum;
  double keep_prob = ExperimentConfig{}.keep_prob;
  double dropout_rate = ArchSpec{}.dropout_rate;
  std::string hidden = "64,32";
  std::string conv_filters = "16,16";
  std::size_t kernel_width = ArchSpec{}.kernel_width;
  bool input_batchnorm = false;
  bool standardize = true;
};

struct TrainArgs {
  ExperimentArgs exp;
  std::string method;
  std::string out;
  bool save_splits = false;
};

struct PredictArgs {
  std::string model;
  std::string data;
  std::string out;
};

struct PhenologyArgs {
  std::string series;
  std::string out;
  std::size_t window = 3;
};

struct ReportArgs {
  ExperimentArgs exp;
  std::string methods = "all";
  std::string out;
  std::string table;
  std::size_t folds = 0;
};

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  return out;
}

std::vector<std::size_t> parse_widths(const std::string& flag, const std::string& value) {
  std::vector<std::size_t> widths;
  for (auto token : text::split(value, ',')) {
    const auto w = text::parse_int<std::size_t>(token);
    if (!w || *w == 0)
      throw UsageError("--" + flag + " expects positive comma-separated integers, got '" + value + "'");
    widths.push_back(*w);
  }
  return widths;
}

void add_experiment_options(CLI::App& sub, ExperimentArgs& a) {
  sub.add_option("--data", a.data, "Labelled sample file")->required();
  sub.add_option("--seed", a.seed, "Seed for balancing, splitting, init and training");
  sub.add_option("--train-fraction", a.train_fraction, "Per-class training share");
  sub.add_option("--epochs", a.epochs)->check(CLI::PositiveNumber);
  sub.add_option("--batch-size", a.batch_size)->check(CLI::PositiveNumber);
  sub.add_option("--learning-rate", a.learning_rate)->check(CLI::PositiveNumber);
  sub.add_option("--momentum", a.momentum)->check(CLI::Range(0.0, 1.0));
  sub.add_option("--keep-prob", a.keep_prob, "Fast-dropout keep probability");
  sub.add_option("--dropout-rate", a.dropout_rate, "Drop probability of dropout layers");
  sub.add_option("--hidden", a.hidden, "Dense hidden widths, comma-separated");
  sub.add_option("--conv-filters", a.conv_filters, "Filters per conv block, comma-separated");
  sub.add_option("--kernel-width", a.kernel_width)->check(CLI::PositiveNumber);
  sub.add_option("--input-batchnorm", a.input_batchnorm, "Batch norm on the raw inputs");
  sub.add_option("--standardize", a.standardize, "Z-score features with train statistics");
}

ExperimentConfig to_config(const ExperimentArgs& a) {
  if (!(a.keep_prob > 0.0 && a.keep_prob <= 1.0))
    throw UsageError("--keep-prob must be in (0, 1]");
  if (!(a.dropout_rate >= 0.0 && a.dropout_rate < 1.0))
    throw UsageError("--dropout-rate must be in [0, 1)");
  if (!(a.train_fraction > 0.0 && a.train_fraction < 1.0))
    throw UsageError("--train-fraction must be in (0, 1)");
  ExperimentConfig c;
  c.seed = a.seed;
  c.split.train_fraction = a.train_fraction;
  c.train.epochs = a.epochs;
  c.train.batch_size = a.batch_size;
  c.train.learning_rate = a.learning_rate;
  c.train.momentum = a.momentum;
  c.keep_prob = a.keep_prob;
  c.standardize = a.standardize;
  c.arch.dropout_rate = a.dropout_rate;
  c.arch.hidden = parse_widths("hidden", a.hidden);
  c.arch.conv_filters = parse_widths("conv-filters", a.conv_filters);
  c.arch.kernel_width = a.kernel_width;
  c.arch.input_batchnorm = a.input_batchnorm;
  return c;
}

Method to_method(const std::string& token) {
  const auto m = parse_method(token);
  if (!m) throw UsageError("unknown method '" + token + "'; valid methods: " + method_list());
  return *m;
}

Dataset load_samples(const std::string& path) {
  if (!fs::exists(path)) throw DataError("sample file '" + path + "' does not exist");
  return parse_samples(fs::path(path));
}

/// Option values after parsing, defaults included.
void log_resolved(const CLI::App& sub, std::ostream& err) {
  err << "config " << sub.get_name() << '\n';
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_single_name();
    if (name == "help" || name == "config") continue;
    std::string value;
    if (opt->count() > 0) {
      for (const auto& r : opt->results()) value += (value.empty() ? "" : ",") + r;
    } else {
      value = opt->get_default_str();
    }
    err << "  " << name << " = " << value << '\n';
  }
}

// --- subcommands ----------------------------------------------------------------

void cmd_synth(const SynthArgs& a, std::ostream& out) {
  if (a.noise < 0.0) throw UsageError("--noise must be >= 0");
  const Dataset d = synthesize_dataset(a.per_class, a.noise, a.seed);
  auto file = open_output(a.out);
  write_samples(file, d);
  if (!file) throw DataError("write failed for '" + a.out + "'");
  if (!a.series_out.empty()) {
    auto series = open_output(a.series_out);
    write_series(series, canonical_profile().series());
  }
  out << "wrote " << d.size() << " samples to " << a.out << '\n';
  const auto counts = class_counts(d);
  for (Stage s : kAllStages) out << to_string(s) << ' ' << counts[index_of(s)] << '\n';
}

void cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  const Method m = to_method(a.method);
  const ExperimentConfig cfg = to_config(a.exp);
  const Dataset data = load_samples(a.exp.data);
  const ExperimentOutcome result = run_experiment(m, data, cfg);
  const auto& r = result.report;
  for (const auto& [k, v] : r.config) err << "  experiment." << k << " = " << v << '\n';

  save_model(fs::path(a.out + ".model"), result.model);
  {
    auto csv = open_output(a.out + ".report.csv");
    write_summary_header(csv);
    write_summary_row(csv, r);
  }
  {
    auto txt = open_output(a.out + ".report.txt");
    write_report_text(txt, r);
  }
  if (a.save_splits) {
    write_samples(fs::path(a.out + ".train.csv"), result.train);
    write_samples(fs::path(a.out + ".test.csv"), result.test);
  }
  out << r.method << " test accuracy " << text::shortest(r.accuracy) << " train accuracy "
      << text::shortest(r.train_accuracy) << " (n_train " << r.n_train << ", n_test " << r.n_test
      << ")\n";
}

void cmd_predict(const PredictArgs& a, std::ostream& out) {
  const TrainedModel model = load_model(fs::path(a.model));
  if (model.feature_width() != kFeatureCount)
    throw DataError("model expects " + std::to_string(model.feature_width()) +
                    " features but samples provide " + std::to_string(kFeatureCount));
  if (!fs::exists(a.data)) throw DataError("sample file '" + a.data + "' does not exist");
  auto file = open_output(a.out);
  // A zero-byte input yields a zero-byte output.
  if (fs::file_size(a.data) == 0) {
    out << "0 rows\n";
    return;
  }
  const Dataset d = parse_samples(fs::path(a.data));
  const auto [labels, scores] = model.predict(d);

  file << "row_index,stage";
  for (Stage s : kAllStages) file << ",p_" << to_string(s);
  file << '\n';
  std::size_t labelled = 0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    file << i << ',' << to_string(stage_from_index(labels[i]));
    for (double p : scores.row(i)) file << ',' << text::shortest(p);
    file << '\n';
    if (d.samples[i].stage) {
      ++labelled;
      correct += index_of(*d.samples[i].stage) == labels[i];
    }
  }
  if (!file) throw DataError("write failed for '" + a.out + "'");
  out << d.size() << " rows";
  if (labelled > 0)
    out << ", accuracy on " << labelled << " labelled rows "
        << text::shortest(static_cast<double>(correct) / static_cast<double>(labelled));
  out << '\n';
}

void cmd_phenology(const PhenologyArgs& a, std::ostream& out, std::ostream& err) {
  if (a.window % 2 == 0) throw UsageError("--window must be odd");
  if (!fs::exists(a.series)) throw DataError("series file '" + a.series + "' does not exist");
  const PhenologySeries raw = read_series(fs::path(a.series));
  const PhenologyResult result = analyze_series(raw, a.window);
  auto file = open_output(a.out);
  write_stages(file, raw, result.stages);
  const auto show = [](const std::optional<Date>& d) { return d ? d->str() : std::string("none"); };
  out << "flooding " << show(result.windows.flooding) << '\n'
      << "heading " << show(result.windows.heading) << '\n'
      << "harvest " << show(result.windows.harvest) << '\n';
  if (!result.windows.flooding)
    err << "warning: no flooding detected in " << a.series << "; every observation is GS5\n";
}

void cmd_report(const ReportArgs& a, std::ostream& out, std::ostream& err) {
  std::vector<Method> methods;
  if (a.methods == "all") {
    methods.assign(kAllMethods.begin(), kAllMethods.end());
  } else {
    for (auto token : text::split(a.methods, ',')) methods.push_back(to_method(std::string(text::trim(token))));
  }
  const ExperimentConfig cfg = to_config(a.exp);
  const Dataset data = load_samples(a.exp.data);

  std::vector<ExperimentReport> reports;
  for (Method m : methods) {
    ExperimentReport r;
    if (a.folds > 0) {
      auto cv = run_cross_validation(m, data, cfg, a.folds);
      err << "  " << cv.pooled.method << " folds:";
      for (double acc : cv.fold_accuracy) err << ' ' << text::shortest(acc);
      err << '\n';
      r = std::move(cv.pooled);
    } else {
      r = run_experiment(m, data, cfg).report;
    }
    err << "  " << r.method << ": " << text::shortest(r.accuracy) << " (" << r.wall_seconds << " s)\n";
    reports.push_back(std::move(r));
  }
  {
    auto csv = open_output(a.out);
    write_summary_header(csv);
    for (const auto& r : reports) write_summary_row(csv, r);
  }
  const std::string table = format_accuracy_table(reports);
  if (!a.table.empty()) {
    auto md = open_output(a.table);
    md << table;
  }
  out << table;
}

// --- config files -----------------------------------------------------------------

/// Turns `key = value` lines into `--key=value` arguments placed right after the
/// subcommand name, so explicit flags (parsed later) take precedence.
std::vector<std::string> expand_config(std::vector<std::string> args, CLI::App& app) {
  if (args.empty()) return args;
  CLI::App* sub = app.get_subcommand_no_throw(args[0]);
  if (sub == nullptr) return args;

  std::optional<std::string> path;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (!path) return args;

  std::ifstream in(*path);
  if (!in) throw UsageError("cannot read config file '" + *path + "'");
  std::vector<std::string> injected;
  std::string line;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    const auto row = text::trim(line);
    if (row.empty() || row.front() == '#') continue;
    const auto eq = row.find('=');
    const auto where = *path + ":" + std::to_string(line_no) + ": ";
    if (eq == std::string_view::npos) throw UsageError(where + "expected 'key = value'");
    std::string key(text::trim(row.substr(0, eq)));
    std::replace(key.begin(), key.end(), '_', '-');
    const std::string value(text::trim(row.substr(eq + 1)));
    if (key == "config" || sub->get_option_no_throw("--" + key) == nullptr)
      throw UsageError(where + "unknown key '" + key + "' for '" + args[0] + "'");
    injected.push_back("--" + key + "=" + value);
  }
  args.insert(args.begin() + 1, injected.begin(), injected.end());
  return args;
}

int exit_code(ErrorKind k) { return static_cast<int>(k); }

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Paddy growth-stage classification from multispectral samples", "paddy"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast)->always_capture_default();

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate a labelled synthetic sample file");
  s->add_option("--per-class", synth.per_class, "Samples per growth stage")->required()->check(CLI::PositiveNumber);
  s->add_option("--noise", synth.noise, "Gaussian band noise SD");
  s->add_option("--seed", synth.seed);
  s->add_option("--out", synth.out, "Output sample file")->required();
  s->add_option("--series-out", synth.series_out, "Also write the noiseless canonical EVI/LSWI series");

  TrainArgs train_args;
  auto* t = app.add_subcommand("train", "Train one method; write <out>.model and <out>.report.{csv,txt}");
  t->add_option("--method", train_args.method, "One of: " + method_list())->required();
  add_experiment_options(*t, train_args.exp);
  t->add_option("--out", train_args.out, "Output prefix")->required();
  t->add_flag("--save-splits", train_args.save_splits, "Also write <out>.train.csv and <out>.test.csv");

  PredictArgs predict_args;
  auto* p = app.add_subcommand("predict", "Classify a sample file with a saved model");
  p->add_option("--model", predict_args.model)->required();
  p->add_option("--data", predict_args.data)->required();
  p->add_option("--out", predict_args.out, "Predictions CSV")->required();

  PhenologyArgs phen;
  auto* ph = app.add_subcommand("phenology", "Detect flooding/heading/harvest and label a date,evi,lswi series");
  ph->add_option("--series", phen.series)->required();
  ph->add_option("--out", phen.out, "date,stage CSV")->required();
  ph->add_option("--window", phen.window, "Moving-average window (odd)")->check(CLI::PositiveNumber);

  ReportArgs report_args;
  auto* rp = app.add_subcommand("report", "Run several methods and print an accuracy table");
  rp->add_option("--methods", report_args.methods, "Comma-separated methods or 'all'");
  add_experiment_options(*rp, report_args.exp);
  rp->add_option("--out", report_args.out, "Summary CSV")->required();
  rp->add_option("--table", report_args.table, "Also write the markdown table here");
  rp->add_option("--folds", report_args.folds, "Stratified k-fold instead of the holdout split (0 = holdout)");

  for (auto* sub : {s, t, p, ph, rp}) sub->add_option("--config", "Flat key = value file; flags override it");

  try {
    const auto args = expand_config(raw_args, app);
    std::vector<const char*> argv{"paddy"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
      app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
      const int code = app.exit(e, out, err);
      return code == 0 ? 0 : exit_code(ErrorKind::usage);
    }

    CLI::App* chosen = app.get_subcommands().front();
    log_resolved(*chosen, err);
    if (chosen == s) cmd_synth(synth, out);
    else if (chosen == t) cmd_train(train_args, out, err);
    else if (chosen == p) cmd_predict(predict_args, out);
    else if (chosen == ph) cmd_phenology(phen, out, err);
    else cmd_report(report_args, out, err);
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code(ErrorKind::data);
  }
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace paddy::cli
