#include "narrprobe/wordpiece.hpp"

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include <fstream>

#include "narrprobe/error.hpp"
#include "narrprobe/textio.hpp"

namespace narrprobe {

namespace {

bool is_whitespace(UChar32 c) {
  if (c == ' ' || c == '\t' || c == '\n' || c == '\r') return true;
  return u_charType(c) == U_SPACE_SEPARATOR;
}

bool is_control(UChar32 c) {
  if (c == '\t' || c == '\n' || c == '\r') return false;
  const auto type = u_charType(c);
  return type == U_CONTROL_CHAR || type == U_FORMAT_CHAR;
}

bool is_punctuation(UChar32 c) {
  // ASCII symbols such as '$' and '^' count as punctuation for BERT.
  if ((c >= 33 && c <= 47) || (c >= 58 && c <= 64) || (c >= 91 && c <= 96) ||
      (c >= 123 && c <= 126)) {
    return true;
  }
  switch (u_charType(c)) {
    case U_DASH_PUNCTUATION:
    case U_START_PUNCTUATION:
    case U_END_PUNCTUATION:
    case U_CONNECTOR_PUNCTUATION:
    case U_OTHER_PUNCTUATION:
    case U_INITIAL_PUNCTUATION:
    case U_FINAL_PUNCTUATION:
      return true;
    default:
      return false;
  }
}

bool is_cjk(UChar32 c) {
  return (c >= 0x4E00 && c <= 0x9FFF) || (c >= 0x3400 && c <= 0x4DBF) ||
         (c >= 0x20000 && c <= 0x2A6DF) || (c >= 0x2A700 && c <= 0x2B73F) ||
         (c >= 0x2B740 && c <= 0x2B81F) || (c >= 0x2B820 && c <= 0x2CEAF) ||
         (c >= 0xF900 && c <= 0xFAFF) || (c >= 0x2F800 && c <= 0x2FA1F);
}

std::string to_utf8(const icu::UnicodeString& s) {
  std::string out;
  s.toUTF8String(out);
  return out;
}

// Lowercase, then NFD and drop nonspacing marks.
icu::UnicodeString fold_word(const icu::UnicodeString& word) {
  icu::UnicodeString lowered(word);
  lowered.toLower(icu::Locale::getRoot());
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfd = icu::Normalizer2::getNFDInstance(status);
  if (U_FAILURE(status)) throw Error(ErrorCode::Io, "ICU NFD normalizer unavailable");
  icu::UnicodeString decomposed = nfd->normalize(lowered, status);
  if (U_FAILURE(status)) throw Error(ErrorCode::InvalidArgument, "normalization failed");
  icu::UnicodeString out;
  for (int32_t i = 0; i < decomposed.length();) {
    const UChar32 c = decomposed.char32At(i);
    if (u_charType(c) != U_NON_SPACING_MARK) out.append(c);
    i += U16_LENGTH(c);
  }
  return out;
}

// Byte offsets of each code point start in a UTF-8 string, plus size().
std::vector<std::size_t> code_point_offsets(std::string_view s) {
  std::vector<std::size_t> offsets;
  offsets.reserve(s.size() + 1);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto byte = static_cast<unsigned char>(s[i]);
    if ((byte & 0xC0) != 0x80) offsets.push_back(i);
  }
  offsets.push_back(s.size());
  return offsets;
}

}  // namespace

Vocab::Vocab(const std::vector<std::string>& entries, VocabOptions options)
    : options_(std::move(options)) {
  ids_.reserve(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    ids_.emplace(entries[i], static_cast<std::int64_t>(i));
  }
  if (!contains(options_.unk_token)) {
    throw Error(ErrorCode::InvalidArgument, "vocabulary lacks unk token '" + options_.unk_token + "'");
  }
  if (options_.max_chars_per_word == 0) {
    throw Error(ErrorCode::InvalidArgument, "max_chars_per_word must be positive");
  }
}

Vocab Vocab::from_file(const std::filesystem::path& path, VocabOptions options) {
  const std::string contents = read_file(path);
  std::vector<std::string> entries;
  std::size_t start = 0;
  while (start < contents.size()) {
    std::size_t end = contents.find('\n', start);
    if (end == std::string::npos) end = contents.size();
    std::string line = contents.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    entries.push_back(std::move(line));
    start = end + 1;
  }
  return Vocab(entries, std::move(options));
}

std::optional<std::int64_t> Vocab::id_of(const std::string& subword) const {
  auto it = ids_.find(subword);
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> basic_tokenize(std::string_view text) {
  const icu::UnicodeString input = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));

  // Clean and split on whitespace; CJK ideographs become their own words.
  std::vector<icu::UnicodeString> words;
  icu::UnicodeString current;
  auto flush = [&] {
    if (!current.isEmpty()) {
      words.push_back(current);
      current.remove();
    }
  };
  for (int32_t i = 0; i < input.length();) {
    const UChar32 c = input.char32At(i);
    i += U16_LENGTH(c);
    if (c == 0 || c == 0xFFFD || is_control(c)) continue;
    if (is_whitespace(c)) {
      flush();
    } else if (is_cjk(c)) {
      flush();
      current.append(c);
      flush();
    } else {
      current.append(c);
    }
  }
  flush();

  std::vector<std::string> out;
  for (const auto& word : words) {
    const icu::UnicodeString folded = fold_word(word);
    icu::UnicodeString piece;
    for (int32_t i = 0; i < folded.length();) {
      const UChar32 c = folded.char32At(i);
      i += U16_LENGTH(c);
      if (is_punctuation(c)) {
        if (!piece.isEmpty()) out.push_back(to_utf8(piece));
        piece.remove();
        out.push_back(to_utf8(icu::UnicodeString(c)));
      } else {
        piece.append(c);
      }
    }
    if (!piece.isEmpty()) out.push_back(to_utf8(piece));
  }
  return out;
}

std::vector<std::string> wordpiece_tokenize(std::string_view word, const Vocab& vocab) {
  const std::vector<std::size_t> offsets = code_point_offsets(word);
  const std::size_t n_chars = offsets.size() - 1;
  if (n_chars == 0) return {};
  if (n_chars > vocab.max_chars_per_word()) return {vocab.unk_token()};

  std::vector<std::string> pieces;
  std::size_t start = 0;
  while (start < n_chars) {
    std::size_t end = n_chars;
    std::string match;
    bool found = false;
    while (start < end) {
      std::string candidate(word.substr(offsets[start], offsets[end] - offsets[start]));
      if (start > 0) candidate = vocab.continuation_prefix() + candidate;
      if (vocab.contains(candidate)) {
        match = std::move(candidate);
        found = true;
        break;
      }
      --end;
    }
    if (!found) return {vocab.unk_token()};
    pieces.push_back(std::move(match));
    start = end;
  }
  return pieces;
}

SubwordSequence tokenize_document(std::string_view text, const Vocab& vocab) {
  SubwordSequence out;
  const std::vector<std::string> words = basic_tokenize(text);
  for (std::size_t w = 0; w < words.size(); ++w) {
    for (auto& piece : wordpiece_tokenize(words[w], vocab)) {
      const std::int64_t id = *vocab.id_of(piece);
      out.push_back(Subword{std::move(piece), id, w});
    }
  }
  return out;
}

std::vector<std::string> subword_surfaces(std::string_view text, const Vocab& vocab) {
  std::vector<std::string> out;
  for (auto& sw : tokenize_document(text, vocab)) out.push_back(std::move(sw.surface));
  return out;
}

}  // namespace narrprobe
