#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>

namespace narrprobe {

// Class indices are fixed across every module and every file format.
enum class NarrativeLabel : int {
  Time = 0,
  Space = 1,
  Causality = 2,
  Character = 3,
  Others = 4,
};

inline constexpr std::size_t kNumLabels = 5;

inline constexpr std::array<NarrativeLabel, kNumLabels> kAllLabels = {
    NarrativeLabel::Time, NarrativeLabel::Space, NarrativeLabel::Causality,
    NarrativeLabel::Character, NarrativeLabel::Others};

inline constexpr std::array<std::string_view, kNumLabels> kLabelNames = {
    "time", "space", "causality", "character", "others"};

constexpr int index_of(NarrativeLabel label) { return static_cast<int>(label); }

constexpr std::string_view to_string(NarrativeLabel label) {
  return kLabelNames[static_cast<std::size_t>(label)];
}

// Exact lowercase match only.
constexpr std::optional<NarrativeLabel> parse_label(std::string_view text) {
  for (std::size_t i = 0; i < kNumLabels; ++i) {
    if (kLabelNames[i] == text) return kAllLabels[i];
  }
  return std::nullopt;
}

}  // namespace narrprobe
