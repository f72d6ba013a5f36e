#include "paddy/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>

#include "paddy/error.hpp"
#include "paddy/text.hpp"

namespace paddy {

namespace {

[[noreturn]] void fail_line(const std::string& source, std::size_t line, const std::string& msg) {
  throw DataError(source + ":" + std::to_string(line) + ": " + msg);
}

Sample parse_row(std::string_view row, const std::string& source, std::size_t line_no) {
  const auto cols = text::split(row, ',');
  if (cols.size() != 10)
    fail_line(source, line_no,
              "expected 10 columns, found " + std::to_string(cols.size()));
  Sample s;
  try {
    s.date = Date::parse(text::trim(cols[0]));
  } catch (const std::invalid_argument& e) {
    fail_line(source, line_no, e.what());
  }
  for (std::size_t b = 0; b < kBandCount; ++b) {
    const auto v = text::parse_double(cols[1 + b]);
    if (!v || !std::isfinite(*v))
      fail_line(source, line_no,
                "band b" + std::to_string(b + 1) + " is not a finite number: '" +
                    std::string(cols[1 + b]) + "'");
    s.bands[b] = *v;
  }
  const auto cloud = text::trim(cols[8]);
  if (cloud == "0")
    s.cloud = false;
  else if (cloud == "1")
    s.cloud = true;
  else
    fail_line(source, line_no, "cloud flag must be 0 or 1: '" + std::string(cloud) + "'");
  const auto token = text::trim(cols[9]);
  if (!token.empty()) {
    s.stage = parse_stage(token);
    if (!s.stage) fail_line(source, line_no, "unknown stage token '" + std::string(token) + "'");
  }
  return s;
}

}  // namespace

Dataset parse_samples(std::istream& in, const std::string& source) {
  Dataset d;
  d.provenance = source;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto row = text::trim(line);
    if (!header_seen) {
      if (row != kSampleHeader)
        fail_line(source, line_no, "expected header '" + std::string(kSampleHeader) + "'");
      header_seen = true;
      continue;
    }
    if (row.empty()) continue;
    d.samples.push_back(parse_row(row, source, line_no));
  }
  if (!header_seen) fail_line(source, 1, "missing header");
  return d;
}

Dataset parse_samples(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open sample file '" + path.string() + "'");
  return parse_samples(in, path.string());
}

void write_samples(std::ostream& out, const Dataset& d) {
  out << kSampleHeader << '\n';
  for (const auto& s : d.samples) {
    out << s.date.str();
    for (double b : s.bands) out << ',' << text::shortest(b);
    out << ',' << (s.cloud ? '1' : '0') << ',';
    if (s.stage) out << to_string(*s.stage);
    out << '\n';
  }
}

void write_samples(const std::filesystem::path& path, const Dataset& d) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write sample file '" + path.string() + "'");
  write_samples(out, d);
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

Dataset remove_cloud(const Dataset& d) {
  Dataset out;
  out.provenance = d.provenance;
  std::copy_if(d.samples.begin(), d.samples.end(), std::back_inserter(out.samples),
               [](const Sample& s) { return !s.cloud; });
  return out;
}

std::array<std::size_t, kStageCount> class_counts(const Dataset& d) {
  std::array<std::size_t, kStageCount> counts{};
  for (std::size_t i = 0; i < d.samples.size(); ++i) {
    const auto& s = d.samples[i];
    if (!s.stage) throw DataError("sample " + std::to_string(i) + " has no stage label");
    ++counts[index_of(*s.stage)];
  }
  return counts;
}

namespace {

std::array<std::vector<std::size_t>, kStageCount> members_by_class(const Dataset& d) {
  std::array<std::vector<std::size_t>, kStageCount> members;
  for (std::size_t i = 0; i < d.samples.size(); ++i) {
    const auto& s = d.samples[i];
    if (!s.stage) throw DataError("sample " + std::to_string(i) + " has no stage label");
    members[index_of(*s.stage)].push_back(i);
  }
  return members;
}

Dataset gather(const Dataset& d, const std::vector<bool>& keep) {
  Dataset out;
  out.provenance = d.provenance;
  for (std::size_t i = 0; i < d.samples.size(); ++i)
    if (keep[i]) out.samples.push_back(d.samples[i]);
  return out;
}

}  // namespace

Dataset balance_classes(const Dataset& d, std::uint64_t seed) {
  const auto members = members_by_class(d);
  std::size_t target = 0;
  bool any = false;
  for (const auto& m : members) {
    if (m.empty()) continue;
    target = any ? std::min(target, m.size()) : m.size();
    any = true;
  }
  std::mt19937_64 rng(seed);
  std::vector<bool> keep(d.samples.size(), false);
  for (const auto& m : members) {
    if (m.size() == target) {
      for (auto i : m) keep[i] = true;
      continue;
    }
    std::vector<std::size_t> chosen;
    chosen.reserve(target);
    std::sample(m.begin(), m.end(), std::back_inserter(chosen), target, rng);
    for (auto i : chosen) keep[i] = true;
  }
  return gather(d, keep);
}

std::pair<Dataset, Dataset> split_train_test(const Dataset& d, const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0))
    throw UsageError("train_fraction must lie in (0,1)");
  const auto members = members_by_class(d);
  std::mt19937_64 rng(spec.seed);
  std::vector<bool> in_train(d.samples.size(), false);
  for (std::size_t c = 0; c < kStageCount; ++c) {
    auto m = members[c];
    if (m.empty()) continue;
    if (m.size() < 2)
      throw DataError("class " + std::string(to_string(stage_from_index(c))) +
                      " has fewer than 2 samples; cannot stratify");
    std::shuffle(m.begin(), m.end(), rng);
    const auto n_train =
        static_cast<std::size_t>(std::floor(spec.train_fraction * static_cast<double>(m.size())));
    for (std::size_t k = 0; k < n_train; ++k) in_train[m[k]] = true;
  }
  std::vector<bool> in_test(in_train.size());
  std::transform(in_train.begin(), in_train.end(), in_test.begin(), [](bool b) { return !b; });
  return {gather(d, in_train), gather(d, in_test)};
}

std::vector<Dataset> stratified_folds(const Dataset& d, std::size_t folds, std::uint64_t seed) {
  if (folds < 2) throw UsageError("k-fold validation needs at least 2 folds");
  const auto members = members_by_class(d);
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> fold_of(d.samples.size(), 0);
  for (std::size_t c = 0; c < kStageCount; ++c) {
    auto m = members[c];
    if (m.empty()) continue;
    if (m.size() < folds)
      throw DataError("class " + std::string(to_string(stage_from_index(c))) + " has " +
                      std::to_string(m.size()) + " samples, fewer than " + std::to_string(folds) +
                      " folds");
    std::shuffle(m.begin(), m.end(), rng);
    for (std::size_t k = 0; k < m.size(); ++k) fold_of[m[k]] = k % folds;
  }
  std::vector<Dataset> out(folds);
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<bool> keep(d.samples.size());
    for (std::size_t i = 0; i < keep.size(); ++i) keep[i] = fold_of[i] == f;
    out[f] = gather(d, keep);
  }
  return out;
}

}  // namespace paddy
