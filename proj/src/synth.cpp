#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "paddy/ingest.hpp"
#include "paddy/phenology.hpp"

namespace paddy {

namespace {
// Per-sample date jitter around a cadence point, as a fraction of the cadence
// (field-to-field planting asynchrony).
constexpr double kDateJitter = 0.25;
}  // namespace

Dataset synthesize_dataset(std::size_t n_per_class, double noise_sd, std::uint64_t seed) {
  if (n_per_class == 0) throw std::invalid_argument("n_per_class must be >= 1");
  if (!(noise_sd >= 0.0)) throw std::invalid_argument("noise_sd must be >= 0");

  const CanonicalProfile& profile = canonical_profile();
  const PhenologyResult truth = analyze_series(profile.series());

  std::array<std::vector<std::size_t>, kStageCount> positions;
  for (std::size_t i = 0; i < truth.stages.size(); ++i)
    positions[index_of(truth.stages[i])].push_back(i);
  for (std::size_t c = 0; c < kStageCount; ++c)
    if (positions[c].empty())
      throw std::logic_error("canonical profile produced no " +
                             std::string(to_string(stage_from_index(c))) + " observations");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-kDateJitter, kDateJitter);
  std::normal_distribution<double> noise(0.0, noise_sd > 0.0 ? noise_sd : 1.0);
  const double last = static_cast<double>(profile.size() - 1);

  Dataset d;
  d.provenance = "synthetic(n_per_class=" + std::to_string(n_per_class) +
                 ",noise_sd=" + std::to_string(noise_sd) + ",seed=" + std::to_string(seed) + ")";
  d.samples.reserve(n_per_class * kStageCount);
  for (Stage stage : kAllStages) {
    const auto& pos = positions[index_of(stage)];
    std::uniform_int_distribution<std::size_t> pick(0, pos.size() - 1);
    for (std::size_t k = 0; k < n_per_class; ++k) {
      const double t = std::clamp(static_cast<double>(pos[pick(rng)]) + jitter(rng), 0.0, last);
      Sample s;
      s.date = profile.start.plus_days(std::lround(t * static_cast<double>(profile.cadence_days)));
      s.bands = profile.bands_at(t);
      if (noise_sd > 0.0)
        for (auto& b : s.bands) b = std::clamp(b + noise(rng), 0.0, 1.0);
      s.stage = stage;
      d.samples.push_back(s);
    }
  }
  return d;
}

}  // namespace paddy
