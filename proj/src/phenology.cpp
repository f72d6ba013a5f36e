#include "paddy/phenology.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include "paddy/error.hpp"
#include "paddy/features.hpp"
#include "paddy/text.hpp"

namespace paddy {

void PhenologySeries::validate() const {
  if (evi.size() != dates.size() || lswi.size() != dates.size())
    throw DataError("series columns have different lengths");
  if (dates.size() < kMinLength)
    throw DataError("series too short: " + std::to_string(dates.size()) + " points, need at least " +
                    std::to_string(kMinLength));
  for (std::size_t i = 1; i < dates.size(); ++i)
    if (!(dates[i - 1] < dates[i]))
      throw DataError("series dates must be strictly increasing (at " + dates[i].str() + ")");
}

std::vector<double> smooth_series(std::span<const double> values, std::size_t window) {
  if (window == 0 || window % 2 == 0) throw std::invalid_argument("smoothing window must be odd");
  if (window > values.size())
    throw std::invalid_argument("smoothing window exceeds series length");
  const std::size_t half = window / 2;
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(values.size() - 1, i + half);
    double sum = 0.0;
    for (std::size_t j = lo; j <= hi; ++j) sum += values[j];
    out[i] = sum / static_cast<double>(hi - lo + 1);
  }
  return out;
}

PhenologySeries smooth(const PhenologySeries& s, std::size_t window) {
  PhenologySeries out;
  out.dates = s.dates;
  out.evi = smooth_series(s.evi, window);
  out.lswi = smooth_series(s.lswi, window);
  return out;
}

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::optional<std::size_t> detect_flooding(const PhenologySeries& s) {
  if (s.evi.empty()) return std::nullopt;
  const double med = median(s.evi);
  for (std::size_t i = 0; i < s.evi.size(); ++i)
    if (s.lswi[i] + kFloodMargin >= s.evi[i] && s.evi[i] < med) return i;
  return std::nullopt;
}

std::size_t detect_heading(const PhenologySeries& s, std::optional<std::size_t> flooding) {
  if (s.evi.empty()) throw std::invalid_argument("detect_heading: empty series");
  std::size_t best = flooding.value_or(0);
  for (std::size_t i = best + 1; i < s.evi.size(); ++i)
    if (s.evi[i] > s.evi[best]) best = i;
  return best;
}

std::optional<std::size_t> detect_harvest(const PhenologySeries& s, std::size_t heading,
                                          std::optional<std::size_t> flooding) {
  const auto& e = s.evi;
  const std::size_t n = e.size();
  if (heading + 1 >= n) return std::nullopt;

  // Baseline: lowest EVI up to the flooding date (up to heading without one).
  const std::size_t base_end = flooding.value_or(heading);
  const double baseline = *std::min_element(e.begin(), e.begin() + base_end + 1);
  const double guard = baseline + 0.5 * (e[heading] - baseline);

  bool seen_negative = false;
  for (std::size_t i = heading + 1; i + 1 < n; ++i) {
    const double d2 = e[i - 1] - 2.0 * e[i] + e[i + 1];
    if (d2 < 0.0) seen_negative = true;
    if (d2 > 0.0 && seen_negative && e[i] < guard) return i;
  }
  std::size_t low = heading + 1;
  for (std::size_t i = low + 1; i < n; ++i)
    if (e[i] < e[low]) low = i;
  return low;
}

long cadence_of(const PhenologySeries& s) {
  if (s.dates.size() < 2) return 16;
  std::vector<double> gaps;
  for (std::size_t i = 1; i < s.dates.size(); ++i)
    gaps.push_back(static_cast<double>(s.dates[i] - s.dates[i - 1]));
  return std::lround(median(gaps));
}

StageWindows detect_windows(const PhenologySeries& s) {
  StageWindows w;
  w.cadence_days = cadence_of(s);
  if (s.size() == 0) return w;
  const auto flood = detect_flooding(s);
  const std::size_t head = detect_heading(s, flood);
  const auto harvest = detect_harvest(s, head, flood);
  if (flood) w.flooding = s.dates[*flood];
  w.heading = s.dates[head];
  if (harvest) w.harvest = s.dates[*harvest];
  return w;
}

std::vector<Stage> assign_stages(const PhenologySeries& s, const StageWindows& w) {
  std::vector<Stage> stages(s.size(), Stage::GS5);
  if (!w.flooding) return stages;
  if (!w.heading || !(*w.flooding < *w.heading))
    throw DataError("inconsistent stage windows: flooding must precede heading");
  if (w.harvest && !(*w.heading < *w.harvest))
    throw DataError("inconsistent stage windows: heading must precede harvest");

  const Date flood = *w.flooding;
  const Date head = *w.heading;
  const Date mid = flood.plus_days((head - flood) / 2);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const Date d = s.dates[i];
    if (d < flood) continue;
    if (d < mid)
      stages[i] = Stage::GS1;
    else if (d < head)
      stages[i] = Stage::GS2;
    else if (!w.harvest || d < *w.harvest)
      stages[i] = Stage::GS3;
    else if (d <= w.harvest->plus_days(w.cadence_days))
      stages[i] = Stage::GS4;
  }
  return stages;
}

PhenologyResult analyze_series(const PhenologySeries& raw, std::size_t window) {
  raw.validate();
  PhenologyResult r;
  r.smoothed = smooth(raw, window);
  r.windows = detect_windows(r.smoothed);
  // A peak at the flooding point (or no rise at all) is not a crop cycle.
  if (r.windows.flooding && r.windows.heading && !(*r.windows.flooding < *r.windows.heading))
    r.windows.flooding.reset();
  r.stages = assign_stages(r.smoothed, r.windows);
  return r;
}

// --- series files ------------------------------------------------------------

PhenologySeries read_series(std::istream& in, const std::string& source) {
  PhenologySeries s;
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto row = text::trim(line);
    if (!header) {
      if (row != "date,evi,lswi")
        throw DataError(source + ":" + std::to_string(line_no) + ": expected header 'date,evi,lswi'");
      header = true;
      continue;
    }
    if (row.empty()) continue;
    const auto cols = text::split(row, ',');
    auto fail = [&](const std::string& msg) {
      throw DataError(source + ":" + std::to_string(line_no) + ": " + msg);
    };
    if (cols.size() != 3) fail("expected 3 columns");
    try {
      s.dates.push_back(Date::parse(text::trim(cols[0])));
    } catch (const std::invalid_argument& e) {
      fail(e.what());
    }
    const auto evi = text::parse_double(cols[1]);
    const auto lswi = text::parse_double(cols[2]);
    if (!evi || !lswi || !std::isfinite(*evi) || !std::isfinite(*lswi)) fail("non-numeric index value");
    s.evi.push_back(*evi);
    s.lswi.push_back(*lswi);
  }
  if (!header) throw DataError(source + ": missing header");
  return s;
}

PhenologySeries read_series(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open series file '" + path.string() + "'");
  return read_series(in, path.string());
}

void write_series(std::ostream& out, const PhenologySeries& s) {
  out << "date,evi,lswi\n";
  for (std::size_t i = 0; i < s.size(); ++i)
    out << s.dates[i].str() << ',' << text::shortest(s.evi[i]) << ',' << text::shortest(s.lswi[i])
        << '\n';
}

void write_stages(std::ostream& out, const PhenologySeries& s, std::span<const Stage> stages) {
  if (stages.size() != s.size()) throw std::invalid_argument("write_stages: length mismatch");
  out << "date,stage\n";
  for (std::size_t i = 0; i < s.size(); ++i) out << s.dates[i].str() << ',' << to_string(stages[i]) << '\n';
}

// --- canonical profile ------------------------------------------------------

Bands CanonicalProfile::bands_at(double t) const {
  const double last = static_cast<double>(cover.size() - 1);
  t = std::clamp(t, 0.0, last);
  const auto i0 = static_cast<std::size_t>(std::floor(t));
  const std::size_t i1 = std::min(i0 + 1, cover.size() - 1);
  const double a = t - static_cast<double>(i0);
  const CoverFractions& f0 = cover[i0];
  const CoverFractions& f1 = cover[i1];
  const CoverFractions f{(1 - a) * f0.water + a * f1.water, (1 - a) * f0.green + a * f1.green,
                         (1 - a) * f0.dry + a * f1.dry, (1 - a) * f0.soil + a * f1.soil};
  Bands b{};
  for (std::size_t k = 0; k < kBandCount; ++k)
    b[k] = f.water * endmembers.water[k] + f.green * endmembers.green[k] +
           f.dry * endmembers.dry[k] + f.soil * endmembers.soil[k];
  return b;
}

PhenologySeries CanonicalProfile::series() const {
  PhenologySeries s;
  for (std::size_t i = 0; i < cover.size(); ++i) {
    const Bands b = bands_at(static_cast<double>(i));
    s.dates.push_back(date_at(i));
    s.evi.push_back(evi(b[kNir], b[kRed], b[kBlue]).value);
    s.lswi.push_back(lswi(b[kNir], b[kSwir]).value);
  }
  return s;
}

const CanonicalProfile& canonical_profile() {
  static const CanonicalProfile profile = [] {
    CanonicalProfile p;
    p.start = Date(2015, 10, 2);
    p.cadence_days = 16;
    // OLI b1..b7 reflectance of the four cover types.
    p.endmembers.water = {0.085, 0.075, 0.070, 0.055, 0.035, 0.015, 0.008};
    p.endmembers.green = {0.030, 0.035, 0.080, 0.035, 0.450, 0.220, 0.100};
    p.endmembers.dry = {0.060, 0.070, 0.100, 0.130, 0.300, 0.350, 0.250};
    p.endmembers.soil = {0.080, 0.090, 0.120, 0.150, 0.220, 0.280, 0.240};
    // One season at 16-day cadence: fallow, flooding, growth to heading,
    // ripening, harvest, stubble and plowed soil.
    p.cover = {
        {0.00, 0.05, 0.15, 0.80}, {0.00, 0.04, 0.10, 0.86}, {0.00, 0.03, 0.05, 0.92},
        {0.10, 0.02, 0.03, 0.85}, {0.80, 0.05, 0.00, 0.15}, {0.65, 0.25, 0.00, 0.10},
        {0.45, 0.45, 0.00, 0.10}, {0.25, 0.68, 0.00, 0.07}, {0.10, 0.85, 0.00, 0.05},
        {0.03, 0.95, 0.02, 0.00}, {0.00, 0.85, 0.15, 0.00}, {0.00, 0.65, 0.35, 0.00},
        {0.00, 0.40, 0.55, 0.05}, {0.00, 0.15, 0.60, 0.25}, {0.00, 0.08, 0.40, 0.52},
        {0.00, 0.05, 0.25, 0.70}, {0.00, 0.05, 0.20, 0.75}, {0.00, 0.05, 0.18, 0.77},
        {0.00, 0.05, 0.17, 0.78}, {0.00, 0.05, 0.16, 0.79}, {0.00, 0.05, 0.16, 0.79},
        {0.00, 0.05, 0.15, 0.80}, {0.00, 0.05, 0.15, 0.80},
    };
    p.true_flooding = 4;
    p.true_heading = 9;
    p.true_harvest = 13;
    return p;
  }();
  return profile;
}

}  // namespace paddy
