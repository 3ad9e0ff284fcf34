#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "narrprobe/error.hpp"
#include "narrprobe/wordpiece.hpp"

using namespace narrprobe;

namespace {

Vocab toy_vocab() { return Vocab({"[UNK]", "un", "##aff", "##able", "a", "##ff"}); }

// Strips continuation prefixes and joins.
std::string rejoin(const std::vector<std::string>& pieces, const std::string& prefix) {
  std::string out;
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    const std::string& p = pieces[i];
    out += i > 0 && p.rfind(prefix, 0) == 0 ? p.substr(prefix.size()) : p;
  }
  return out;
}

}  // namespace

TEST_CASE("basic_tokenize lowercases, strips accents and isolates punctuation") {
  CHECK(basic_tokenize("Mr. Bennet") == std::vector<std::string>{"mr", ".", "bennet"});
  CHECK(basic_tokenize("good-humoured") == std::vector<std::string>{"good", "-", "humoured"});
  CHECK(basic_tokenize("Café") == std::vector<std::string>{"cafe"});
  CHECK(basic_tokenize("") == std::vector<std::string>{});
  CHECK(basic_tokenize("  \t\n ") == std::vector<std::string>{});
  CHECK(basic_tokenize("\xE2\x80\x9CYes,\xE2\x80\x9D said she") ==
        std::vector<std::string>{"\xE2\x80\x9C", "yes", ",", "\xE2\x80\x9D", "said", "she"});
}

TEST_CASE("basic_tokenize drops control characters and spaces out CJK") {
  CHECK(basic_tokenize("a\x01" "b") == std::vector<std::string>{"ab"});
  // U+00A0 is a space separator.
  CHECK(basic_tokenize("a\xC2\xA0" "b") == std::vector<std::string>{"a", "b"});
  // U+4E2D U+6587 become separate words.
  CHECK(basic_tokenize("x\xE4\xB8\xAD\xE6\x96\x87y") ==
        std::vector<std::string>{"x", "\xE4\xB8\xAD", "\xE6\x96\x87", "y"});
  // Zero-width joiner (Cf) is removed.
  CHECK(basic_tokenize("ab\xE2\x80\x8D" "c") == std::vector<std::string>{"abc"});
  // ASCII symbols split like punctuation.
  CHECK(basic_tokenize("$5^2") == std::vector<std::string>{"$", "5", "^", "2"});
}

TEST_CASE("wordpiece greedy longest match") {
  const Vocab v = toy_vocab();
  CHECK(wordpiece_tokenize("unaffable", v) == std::vector<std::string>{"un", "##aff", "##able"});
  CHECK(wordpiece_tokenize("un", v) == std::vector<std::string>{"un"});
  CHECK(wordpiece_tokenize("xyz", v) == std::vector<std::string>{"[UNK]"});
  // Dead end after a valid prefix still falls back to UNK.
  CHECK(wordpiece_tokenize("unx", v) == std::vector<std::string>{"[UNK]"});
}

TEST_CASE("over-long words map to UNK") {
  VocabOptions opt;
  opt.max_chars_per_word = 4;
  const Vocab v({"[UNK]", "a", "##a"}, opt);
  CHECK(wordpiece_tokenize("aaaa", v) == std::vector<std::string>{"a", "##a", "##a", "##a"});
  CHECK(wordpiece_tokenize("aaaaa", v) == std::vector<std::string>{"[UNK]"});
  // Limit counts code points, not bytes.
  const Vocab u({"[UNK]", "\xC3\xA9", "##\xC3\xA9"}, opt);
  CHECK(wordpiece_tokenize("\xC3\xA9\xC3\xA9\xC3\xA9\xC3\xA9", u).size() == 4);
}

TEST_CASE("vocab requires its unk token") {
  CHECK_THROWS_AS(Vocab({"a", "b"}), Error);
  const Vocab v({"[UNK]", "a", "a"});
  CHECK(v.id_of("a") == 1);
}

TEST_CASE("vocab file ids are line numbers") {
  const auto path = std::filesystem::temp_directory_path() / "narrprobe_vocab_test.txt";
  {
    std::ofstream out(path);
    out << "[PAD]\r\n[UNK]\nthe\n##s\n";
  }
  const Vocab v = Vocab::from_file(path);
  CHECK(v.id_of("[UNK]") == 1);
  CHECK(v.id_of("the") == 2);
  CHECK(v.id_of("##s") == 3);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(Vocab::from_file(path), Error);
}

TEST_CASE("tokenize_document composes the two stages") {
  const Vocab v = toy_vocab();
  CHECK(tokenize_document("", v).empty());
  const SubwordSequence seq = tokenize_document("un unaffable", v);
  REQUIRE(seq.size() == 4);
  CHECK(seq[0].surface == "un");
  CHECK(seq[0].word_index == 0);
  CHECK(seq[0].vocab_id == 1);
  for (std::size_t i = 1; i < 4; ++i) CHECK(seq[i].word_index == 1);
  CHECK(seq[3].surface == "##able");
  CHECK(seq[3].vocab_id == 3);
}

TEST_CASE("closure, determinism and word grouping on random text") {
  const Vocab v({"[UNK]", "the", "man", "##s", "a", "##b", "b", ".", ",", "##man"});
  std::mt19937 gen(3);
  const std::string alphabet = "themanbs .,x";
  for (int trial = 0; trial < 200; ++trial) {
    std::string text;
    const int len = static_cast<int>(gen() % 30);
    for (int i = 0; i < len; ++i) text += alphabet[gen() % alphabet.size()];
    const SubwordSequence a = tokenize_document(text, v);
    const SubwordSequence b = tokenize_document(text, v);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].surface == b[i].surface);
      CHECK(v.contains(a[i].surface));
      const bool continuation = a[i].surface.rfind("##", 0) == 0;
      if (i == 0 || a[i].word_index != a[i - 1].word_index) {
        CHECK_FALSE(continuation);
      }
      if (i > 0) CHECK(a[i].word_index >= a[i - 1].word_index);
    }
  }
}

TEST_CASE("greedy property: no emitted piece could have been longer") {
  const Vocab v({"[UNK]", "a", "ab", "abc", "##b", "##bc", "##c", "##cab", "c", "##a"});
  std::mt19937 gen(11);
  for (int trial = 0; trial < 500; ++trial) {
    std::string word;
    const int len = 1 + static_cast<int>(gen() % 9);
    for (int i = 0; i < len; ++i) word += "abc"[gen() % 3];
    const auto pieces = wordpiece_tokenize(word, v);
    if (pieces == std::vector<std::string>{"[UNK]"}) continue;
    REQUIRE(rejoin(pieces, "##") == word);
    std::size_t start = 0;
    for (std::size_t i = 0; i < pieces.size(); ++i) {
      const std::size_t len_i = pieces[i].size() - (i > 0 ? 2 : 0);
      for (std::size_t longer = len_i + 1; start + longer <= word.size(); ++longer) {
        const std::string candidate = (i > 0 ? "##" : "") + word.substr(start, longer);
        CHECK_FALSE(v.contains(candidate));
      }
      start += len_i;
    }
  }
}
