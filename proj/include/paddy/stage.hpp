#pragma once

#include <array>
#include <cstdint>
#include <cstddef>
#include <optional>
#include <string_view>

namespace paddy {

/// Paddy growth stages: vegetative, reproductive, ripening,
/// harvesting/post-harvest, plowing.
enum class Stage : std::uint8_t { GS1 = 0, GS2, GS3, GS4, GS5 };

inline constexpr std::size_t kStageCount = 5;
inline constexpr std::array<Stage, kStageCount> kAllStages{Stage::GS1, Stage::GS2, Stage::GS3,
                                                           Stage::GS4, Stage::GS5};

constexpr std::size_t index_of(Stage s) { return static_cast<std::size_t>(s); }
constexpr Stage stage_from_index(std::size_t i) { return static_cast<Stage>(i); }

constexpr std::string_view to_string(Stage s) {
  constexpr std::array<std::string_view, kStageCount> names{"GS1", "GS2", "GS3", "GS4", "GS5"};
  return names[index_of(s)];
}

constexpr std::optional<Stage> parse_stage(std::string_view token) {
  for (Stage s : kAllStages)
    if (to_string(s) == token) return s;
  return std::nullopt;
}

}  // namespace paddy
