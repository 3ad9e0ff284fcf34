#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "narrprobe/labels.hpp"

namespace narrprobe {

struct AnnotatedToken {
  std::string doc_id;
  std::uint64_t sent_id = 1;
  // Multi-word expressions keep single internal spaces ("in front of").
  std::string token;
  NarrativeLabel label = NarrativeLabel::Others;
  std::optional<std::string> pos;
  // Unrecognized JSON fields, carried through serialization untouched.
  nlohmann::json extra = nlohmann::json::object();
};

using ClassCounts = std::array<std::size_t, kNumLabels>;

// Immutable once built; class_counts always covers every label.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::vector<AnnotatedToken> tokens);

  const std::vector<AnnotatedToken>& tokens() const noexcept { return tokens_; }
  const ClassCounts& class_counts() const noexcept { return class_counts_; }
  std::size_t size() const noexcept { return tokens_.size(); }
  bool empty() const noexcept { return tokens_.empty(); }

 private:
  std::vector<AnnotatedToken> tokens_;
  ClassCounts class_counts_{};
};

// Parses one JSONL record. line_no is only used in error messages.
AnnotatedToken parse_annotation_line(std::string_view line, std::size_t line_no = 0);

Dataset load_annotations(const std::filesystem::path& path);
Dataset parse_annotations(std::istream& in);

// One JSON object per line; known fields first, then extras in key order.
std::string to_json_line(const AnnotatedToken& token);
void write_annotations(const Dataset& ds, std::ostream& out);

// Trims and collapses whitespace runs to single spaces.
std::string normalize_token_text(std::string_view text);

std::size_t word_count(std::string_view token);

using LabelFractions = std::array<double, kNumLabels>;
using SpanLengthDistribution = std::array<std::map<std::size_t, double>, kNumLabels>;
using PosDistribution = std::array<std::map<std::string, double>, kNumLabels>;

// Throws EmptyDataset for an empty dataset.
LabelFractions label_distribution(const Dataset& ds);

// Labels with no tokens get an empty map.
SpanLengthDistribution span_length_distribution(const Dataset& ds);

// Untagged tokens are left out of the denominators. Throws NoPosTags when
// no token carries a tag.
PosDistribution pos_distribution(const Dataset& ds);

// CSV exports with header "label,key,fraction".
std::string label_distribution_csv(const LabelFractions& fractions);
std::string span_length_csv(const SpanLengthDistribution& dist);
std::string pos_distribution_csv(const PosDistribution& dist);

}  // namespace narrprobe
