#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "paddy/ingest.hpp"

namespace paddy {

struct EviCoefficients {
  double gain = 2.5;
  double c_red = 6.0;
  double c_blue = 7.5;
  double canopy = 1.0;  // L
};

/// Index value plus a flag raised when the denominator vanished.
struct IndexValue {
  double value = 0.0;
  bool degenerate = false;
};

IndexValue ndvi(double nir, double red);
IndexValue lswi(double nir, double swir);
IndexValue evi(double nir, double red, double blue, const EviCoefficients& c = {});
/// Denominator is (nir + 2 red + blue), not the (2 red - blue) of the usual ARVI.
IndexValue arvi(double nir, double red, double blue);

// OLI band positions (zero-based) used by the indices.
inline constexpr std::size_t kBlue = 1;
inline constexpr std::size_t kRed = 3;
inline constexpr std::size_t kNir = 4;
inline constexpr std::size_t kSwir = 5;

inline constexpr std::size_t kFeatureCount = 11;

// Bits of FeatureVector::degenerate.
enum DegenerateBit : std::uint8_t {
  kEviDegenerate = 1u << 0,
  kNdviDegenerate = 1u << 1,
  kArviDegenerate = 1u << 2,
  kLswiDegenerate = 1u << 3,
};

/// [b1..b7, EVI, NDVI, ARVI, LSWI]
struct FeatureVector {
  std::array<double, kFeatureCount> values{};
  std::uint8_t degenerate = 0;
};

FeatureVector featurize(const Sample& s);

/// Row-major n x 11 feature block for a whole dataset (OpenMP over samples).
std::vector<FeatureVector> featurize_all(const Dataset& d);

struct Standardizer {
  std::array<double, kFeatureCount> means{};
  std::array<double, kFeatureCount> sds{};  // population SD; 0 is used as 1

  static Standardizer identity();
};

Standardizer fit_standardizer(std::span<const FeatureVector> train);
FeatureVector apply_standardizer(const Standardizer& z, const FeatureVector& v);

inline constexpr std::string_view kFeatureHeader = "b1,b2,b3,b4,b5,b6,b7,evi,ndvi,arvi,lswi,stage";

/// Feature matrix export; `stages` may be empty (stage column left blank).
void write_features(std::ostream& out, std::span<const FeatureVector> rows,
                    std::span<const std::optional<Stage>> stages);

}  // namespace paddy
