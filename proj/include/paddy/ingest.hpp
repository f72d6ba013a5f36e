#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "paddy/date.hpp"
#include "paddy/stage.hpp"

namespace paddy {

inline constexpr std::size_t kBandCount = 7;
using Bands = std::array<double, kBandCount>;

/// One pixel observation. Bands are OLI b1..b7 surface reflectance.
struct Sample {
  Date date;
  Bands bands{};
  bool cloud = false;
  std::optional<Stage> stage;

  friend bool operator==(const Sample&, const Sample&) = default;
};

struct Dataset {
  std::vector<Sample> samples;
  std::string provenance;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
};

struct SplitSpec {
  double train_fraction = 2.0 / 3.0;
  std::uint64_t seed = 0;
};

inline constexpr std::string_view kSampleHeader = "date,b1,b2,b3,b4,b5,b6,b7,cloud,stage";

/// Reads a sample file. Errors (DataError) name the offending line number.
Dataset parse_samples(const std::filesystem::path& path);
Dataset parse_samples(std::istream& in, const std::string& source = "<stream>");

void write_samples(std::ostream& out, const Dataset& d);
void write_samples(const std::filesystem::path& path, const Dataset& d);

Dataset remove_cloud(const Dataset& d);

/// Per-class sample counts, indexed by stage. Throws DataError on unlabeled samples.
std::array<std::size_t, kStageCount> class_counts(const Dataset& d);

/// Downsamples every present class to the smallest present class count.
/// Relative order of the kept samples is preserved.
Dataset balance_classes(const Dataset& d, std::uint64_t seed);

/// Stratified holdout: each class contributes floor(train_fraction * n_c) samples
/// to train and the remainder to test.
std::pair<Dataset, Dataset> split_train_test(const Dataset& d, const SplitSpec& spec);

/// Stratified k-fold partition: each class is shuffled and dealt round-robin
/// over the folds, so fold sizes per class differ by at most one. Every sample
/// lands in exactly one fold; original order is kept inside a fold.
std::vector<Dataset> stratified_folds(const Dataset& d, std::size_t folds, std::uint64_t seed);

/// Draws `n_per_class` samples per stage from the canonical phenology profile.
Dataset synthesize_dataset(std::size_t n_per_class, double noise_sd, std::uint64_t seed);

}  // namespace paddy
