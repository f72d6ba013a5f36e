#pragma once

// EVI/LSWI time-series heuristics for locating the crop cycle
// (flooding/transplanting, heading, harvest) and labelling each observation
// with a growth stage.

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "paddy/date.hpp"
#include "paddy/ingest.hpp"
#include "paddy/stage.hpp"

namespace paddy {

struct PhenologySeries {
  std::vector<Date> dates;
  std::vector<double> evi;
  std::vector<double> lswi;

  std::size_t size() const { return dates.size(); }
  /// Strictly increasing dates, equal lengths, at least kMinLength points.
  void validate() const;

  static constexpr std::size_t kMinLength = 5;
};

/// Centered moving average (odd window). Near the ends the window is truncated
/// to the in-range neighbours.
std::vector<double> smooth_series(std::span<const double> values, std::size_t window);
PhenologySeries smooth(const PhenologySeries& s, std::size_t window);

/// Margin in the flooding criterion lswi + margin >= evi.
inline constexpr double kFloodMargin = 0.05;

/// First index with lswi + 0.05 >= evi while evi is below the series median.
std::optional<std::size_t> detect_flooding(const PhenologySeries& s);

/// Global EVI maximum at or after `flooding` (whole series if none); earliest on ties.
std::size_t detect_heading(const PhenologySeries& s, std::optional<std::size_t> flooding);

/// First index after heading where the EVI second difference has turned from
/// negative to positive and EVI has dropped below half of the peak's rise over
/// the pre-flood baseline. Falls back to the post-heading EVI minimum.
/// Empty when heading is the last point.
std::optional<std::size_t> detect_harvest(const PhenologySeries& s, std::size_t heading,
                                          std::optional<std::size_t> flooding);

struct StageWindows {
  std::optional<Date> flooding;
  std::optional<Date> heading;
  std::optional<Date> harvest;
  long cadence_days = 16;
};

/// Runs the three detectors on an (already smoothed) series.
StageWindows detect_windows(const PhenologySeries& s);

/// GS1 [flooding, midpoint), GS2 [midpoint, heading), GS3 [heading, harvest),
/// GS4 [harvest, harvest + cadence], GS5 elsewhere. Without a flooding date
/// everything is GS5. Throws DataError when the dates are out of order.
std::vector<Stage> assign_stages(const PhenologySeries& s, const StageWindows& w);

struct PhenologyResult {
  PhenologySeries smoothed;
  StageWindows windows;
  std::vector<Stage> stages;
};

/// smooth -> detect -> assign.
PhenologyResult analyze_series(const PhenologySeries& raw, std::size_t window = 3);

/// Median spacing between consecutive dates, in days.
long cadence_of(const PhenologySeries& s);

PhenologySeries read_series(const std::filesystem::path& path);
PhenologySeries read_series(std::istream& in, const std::string& source = "<stream>");
void write_series(std::ostream& out, const PhenologySeries& s);
void write_stages(std::ostream& out, const PhenologySeries& s, std::span<const Stage> stages);

// ---------------------------------------------------------------------------
// Canonical single-season paddy profile used to synthesize data.

/// Surface cover fractions of a paddy pixel.
struct CoverFractions {
  double water = 0.0;
  double green = 0.0;  // green canopy
  double dry = 0.0;    // senescent canopy / straw
  double soil = 0.0;
};

/// Linear mixture model: reflectance = sum of cover fraction x endmember spectrum.
struct Endmembers {
  Bands water;
  Bands green;
  Bands dry;
  Bands soil;
};

struct CanonicalProfile {
  Date start;
  long cadence_days = 16;
  Endmembers endmembers;
  std::vector<CoverFractions> cover;  // one entry per cadence step

  // Indices of the events the template was drawn around.
  std::size_t true_flooding = 0;
  std::size_t true_heading = 0;
  std::size_t true_harvest = 0;

  std::size_t size() const { return cover.size(); }
  /// Band vector at fractional cadence position t in [0, size-1].
  Bands bands_at(double t) const;
  Date date_at(std::size_t i) const { return start.plus_days(static_cast<long>(i) * cadence_days); }
  /// Noiseless EVI/LSWI series at the cadence dates.
  PhenologySeries series() const;
};

const CanonicalProfile& canonical_profile();

}  // namespace paddy
