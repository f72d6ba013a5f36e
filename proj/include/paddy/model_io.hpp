#pragma once

// Versioned text container for trained models. Every real is written as a
// hexadecimal float, so a save/load round trip is bit-exact.
//
//   paddy-model 1
//   type network | fastdropout
//   section standardizer   (means / sds)
//   section network        (layer list in composition order)  -- or --
//   section fastdropout    (keep_prob, per-stage weights, bias)
//   end

#include <filesystem>
#include <iosfwd>
#include <string>

#include "paddy/eval.hpp"

namespace paddy {

inline constexpr int kModelFormatVersion = 1;

void save_model(std::ostream& out, const TrainedModel& model);
void save_model(const std::filesystem::path& path, const TrainedModel& model);

/// Throws DataError naming the container section on malformed input.
TrainedModel load_model(std::istream& in, const std::string& source = "<stream>");
TrainedModel load_model(const std::filesystem::path& path);

}  // namespace paddy
