#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace narrprobe {

struct VocabOptions {
  std::string unk_token = "[UNK]";
  std::string continuation_prefix = "##";
  std::size_t max_chars_per_word = 100;
};

// Subword vocabulary. Immutable after construction.
class Vocab {
 public:
  // Ids are assigned by position. Repeated entries keep their first id.
  // Throws InvalidArgument when unk_token is missing.
  explicit Vocab(const std::vector<std::string>& entries, VocabOptions options = {});

  // One subword per line; the 0-based line number is the id.
  static Vocab from_file(const std::filesystem::path& path, VocabOptions options = {});

  bool contains(const std::string& subword) const { return ids_.count(subword) != 0; }
  std::optional<std::int64_t> id_of(const std::string& subword) const;
  std::size_t size() const noexcept { return ids_.size(); }

  const std::string& unk_token() const noexcept { return options_.unk_token; }
  const std::string& continuation_prefix() const noexcept { return options_.continuation_prefix; }
  std::size_t max_chars_per_word() const noexcept { return options_.max_chars_per_word; }

 private:
  std::unordered_map<std::string, std::int64_t> ids_;
  VocabOptions options_;
};

struct Subword {
  std::string surface;
  std::int64_t vocab_id = 0;
  std::size_t word_index = 0;
};

using SubwordSequence = std::vector<Subword>;

// Uncased BERT-style pre-tokenization: drops control characters, spaces out
// CJK ideographs, lowercases, strips accents and isolates punctuation.
std::vector<std::string> basic_tokenize(std::string_view text);

// Greedy longest-match-first. Any unmatchable position, or a word longer than
// max_chars_per_word code points, yields {unk_token}.
std::vector<std::string> wordpiece_tokenize(std::string_view word, const Vocab& vocab);

SubwordSequence tokenize_document(std::string_view text, const Vocab& vocab);

// Surfaces only, for callers that do not need ids.
std::vector<std::string> subword_surfaces(std::string_view text, const Vocab& vocab);

}  // namespace narrprobe
