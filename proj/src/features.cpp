#include "paddy/features.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "paddy/text.hpp"

namespace paddy {

namespace {

IndexValue normalized_difference(double a, double b) {
  const double den = a + b;
  if (den == 0.0) return {0.0, true};
  return {(a - b) / den, false};
}

constexpr double kEviMinDenominator = 1e-9;
constexpr double kEviClamp = 10.0;

}  // namespace

IndexValue ndvi(double nir, double red) { return normalized_difference(nir, red); }

IndexValue lswi(double nir, double swir) { return normalized_difference(nir, swir); }

IndexValue evi(double nir, double red, double blue, const EviCoefficients& c) {
  const double num = c.gain * (nir - red);
  const double den = nir + c.c_red * red - c.c_blue * blue + c.canopy;
  if (std::abs(den) < kEviMinDenominator) {
    if (num == 0.0) return {0.0, true};
    const bool positive = (num > 0.0) == (den >= 0.0);
    return {positive ? kEviClamp : -kEviClamp, true};
  }
  return {std::clamp(num / den, -kEviClamp, kEviClamp), false};
}

IndexValue arvi(double nir, double red, double blue) {
  const double den = nir + (2.0 * red + blue);
  if (den == 0.0) return {0.0, true};
  return {(nir - (2.0 * red - blue)) / den, false};
}

FeatureVector featurize(const Sample& s) {
  FeatureVector f;
  std::copy(s.bands.begin(), s.bands.end(), f.values.begin());
  const double blue = s.bands[kBlue], red = s.bands[kRed], nir = s.bands[kNir],
               swir = s.bands[kSwir];
  const IndexValue idx[] = {evi(nir, red, blue), ndvi(nir, red), arvi(nir, red, blue),
                            lswi(nir, swir)};
  for (std::size_t k = 0; k < 4; ++k) {
    f.values[kBandCount + k] = idx[k].value;
    if (idx[k].degenerate) f.degenerate |= static_cast<std::uint8_t>(1u << k);
  }
  return f;
}

std::vector<FeatureVector> featurize_all(const Dataset& d) {
  std::vector<FeatureVector> out(d.samples.size());
  const auto n = static_cast<std::ptrdiff_t>(d.samples.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = featurize(d.samples[i]);
  return out;
}

Standardizer Standardizer::identity() {
  Standardizer z;
  z.sds.fill(1.0);
  return z;
}

Standardizer fit_standardizer(std::span<const FeatureVector> train) {
  if (train.size() < 2) throw std::invalid_argument("fit_standardizer needs at least 2 vectors");
  Standardizer z;
  const double n = static_cast<double>(train.size());
  for (std::size_t j = 0; j < kFeatureCount; ++j) {
    double sum = 0.0;
    for (const auto& v : train) sum += v.values[j];
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto& v : train) ss += (v.values[j] - mean) * (v.values[j] - mean);
    z.means[j] = mean;
    z.sds[j] = std::sqrt(ss / n);
  }
  return z;
}

FeatureVector apply_standardizer(const Standardizer& z, const FeatureVector& v) {
  FeatureVector out;
  out.degenerate = v.degenerate;
  for (std::size_t j = 0; j < kFeatureCount; ++j) {
    const double sd = z.sds[j] == 0.0 ? 1.0 : z.sds[j];
    out.values[j] = (v.values[j] - z.means[j]) / sd;
  }
  return out;
}

void write_features(std::ostream& out, std::span<const FeatureVector> rows,
                    std::span<const std::optional<Stage>> stages) {
  if (!stages.empty() && stages.size() != rows.size())
    throw std::invalid_argument("write_features: stage count does not match row count");
  out << kFeatureHeader << '\n';
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (double v : rows[i].values) out << text::shortest(v) << ',';
    if (!stages.empty() && stages[i]) out << to_string(*stages[i]);
    out << '\n';
  }
}

}  // namespace paddy
