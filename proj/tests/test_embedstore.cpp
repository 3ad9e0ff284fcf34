#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <random>

#include "narrprobe/embedstore.hpp"
#include "narrprobe/error.hpp"
#include "narrprobe/textio.hpp"

using namespace narrprobe;

namespace {

ErrorCode decode_error(std::string_view bytes) {
  try {
    decode_embeddings(bytes);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected decode failure");
  return ErrorCode::Io;
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

EmbeddingMatrix random_matrix(std::size_t rows, std::size_t dim, unsigned seed) {
  std::mt19937 gen(seed);
  std::normal_distribution<float> normal(0.0f, 0.5f);
  EmbeddingMatrix m;
  m.data.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < m.data.size(); ++i) m.data.data()[i] = normal(gen);
  for (std::size_t r = 0; r < rows; ++r) m.manifest.push_back("w" + std::to_string(r));
  return m;
}

AnnotatedToken ann(std::string token, NarrativeLabel label) {
  AnnotatedToken t;
  t.doc_id = "Ch1";
  t.token = std::move(token);
  t.label = label;
  return t;
}

// Row r has every entry equal to r.
EmbeddingMatrix indexed_matrix(const std::vector<std::string>& manifest, std::size_t dim = 3) {
  EmbeddingMatrix m;
  m.manifest = manifest;
  m.data.resize(static_cast<Eigen::Index>(manifest.size()), static_cast<Eigen::Index>(dim));
  for (Eigen::Index r = 0; r < m.data.rows(); ++r) m.data.row(r).setConstant(static_cast<float>(r));
  return m;
}

const Vocab& vocab() {
  static const Vocab v({"[UNK]", "in", "front", "of", "the", "house", "mr", ".", "bennet", "she", "said", "zeb",
                        "##ra", ","});
  return v;
}

}  // namespace

TEST_CASE("EMBF round trip of a 2x3 matrix") {
  EmbeddingMatrix m;
  m.data.resize(2, 3);
  m.data << 1, 2, 3, 4, 5, 6;
  m.manifest = {"mr", "##s"};
  const std::string bytes = encode_embeddings(m);
  CHECK(bytes.substr(0, 4) == "EMBF");
  CHECK(bytes.size() == 24 + 6 * 4 + std::string(R"(["mr","##s"])").size() + 8);
  const EmbeddingMatrix back = decode_embeddings(bytes);
  CHECK(back.data == m.data);
  CHECK(back.manifest == m.manifest);
  CHECK(encode_embeddings(back) == bytes);
}

TEST_CASE("EMBF layout is little-endian") {
  EmbeddingMatrix m;
  m.data.resize(1, 1);
  m.data(0, 0) = 1.0f;  // 0x3F800000
  m.manifest = {"a"};
  const std::string bytes = encode_embeddings(m);
  CHECK(bytes.substr(4, 4) == std::string("\x01\x00\x00\x00", 4));
  CHECK(bytes.substr(8, 8) == std::string("\x01\0\0\0\0\0\0\0", 8));
  CHECK(bytes.substr(24, 4) == std::string("\x00\x00\x80\x3F", 4));
  CHECK(bytes.substr(bytes.size() - 8) == std::string("\x05\0\0\0\0\0\0\0", 8));
}

TEST_CASE("EMBF decode errors") {
  EmbeddingMatrix one;
  one.data.resize(1, 2);
  one.data << 1, 2;
  one.manifest = {"x"};
  const std::string good = encode_embeddings(one);

  CHECK(decode_error("EMB") == ErrorCode::TruncatedFile);
  CHECK(decode_error("NOPE" + good.substr(4)) == ErrorCode::BadMagic);
  std::string v2 = good;
  v2[4] = 2;
  CHECK(decode_error(v2) == ErrorCode::VersionUnsupported);

  // rows=1 header with no data bytes at all.
  std::string header = good.substr(0, 24);
  CHECK(decode_error(header) == ErrorCode::TruncatedFile);
  CHECK(decode_error(header + "[\"x\"]" + std::string("\x05\0\0\0\0\0\0\0", 8)) == ErrorCode::TruncatedFile);

  CHECK(decode_error(good.substr(0, good.size() - 3)) == ErrorCode::TruncatedFile);

  // Manifest with two entries for one row.
  const std::string manifest = R"(["x","y"])";
  std::string mismatch = good.substr(0, 24 + 8) + manifest;
  const std::uint64_t len = manifest.size();
  for (int i = 0; i < 8; ++i) mismatch.push_back(static_cast<char>((len >> (8 * i)) & 0xFF));
  CHECK(decode_error(mismatch) == ErrorCode::ManifestMismatch);

  EmbeddingMatrix bad = one;
  bad.manifest.clear();
  CHECK_THROWS_AS(encode_embeddings(bad), Error);
  bad = one;
  bad.data(0, 0) = std::numeric_limits<float>::quiet_NaN();
  CHECK_THROWS_AS(encode_embeddings(bad), Error);
}

TEST_CASE("large EMBF file round trips with equal checksums") {
  const EmbeddingMatrix m = random_matrix(3561, 768, 5);
  const std::string data_bytes(reinterpret_cast<const char*>(m.data.data()), m.data.size() * sizeof(float));
  const auto path = std::filesystem::temp_directory_path() / "narrprobe_large.embf";
  write_embeddings(m, path);
  const EmbeddingMatrix back = read_embeddings(path);
  const std::string back_bytes(reinterpret_cast<const char*>(back.data.data()), back.data.size() * sizeof(float));
  CHECK(fnv1a(back_bytes) == fnv1a(data_bytes));
  CHECK(back.manifest == m.manifest);
  CHECK(fnv1a(read_file(path)) == fnv1a(encode_embeddings(back)));
  std::filesystem::remove(path);
}

TEST_CASE("mean_pool") {
  EmbeddingMatrix m;
  m.data.resize(3, 3);
  m.data << 1, 1, 1, 3, 3, 3, 7, 8, 9;
  m.manifest = {"a", "b", "c"};
  CHECK(mean_pool(m, {0, 2}) == Eigen::RowVector3f(2, 2, 2));
  CHECK(mean_pool(m, {2, 3}) == m.data.row(2));
  CHECK_THROWS_AS(mean_pool(m, {1, 1}), Error);
  CHECK_THROWS_AS(mean_pool(m, {2, 4}), Error);

  // k copies of the same row pool back to that row exactly.
  EmbeddingMatrix same = random_matrix(1, 16, 2);
  const Eigen::RowVectorXf u = same.data.row(0);
  same.data = same.data.replicate(7, 1).eval();
  same.manifest.assign(7, "u");
  CHECK(mean_pool(same, {0, 7}) == u);
}

TEST_CASE("mean_pool agrees with naive summation") {
  for (unsigned seed = 0; seed < 20; ++seed) {
    const EmbeddingMatrix m = random_matrix(6, 32, seed);
    const Eigen::RowVectorXf pooled = mean_pool(m, {1, 5});
    for (Eigen::Index c = 0; c < 32; ++c) {
      long double s = 0;
      for (Eigen::Index r = 1; r < 5; ++r) s += m.data(r, c);
      CHECK(std::abs(static_cast<double>(pooled(c)) - static_cast<double>(s / 4)) < 1e-6);
    }
  }
}

TEST_CASE("align averages multi-word spans and skips unannotated subwords") {
  const EmbeddingMatrix emb = indexed_matrix({"she", "said", ",", "in", "front", "of", "the", "house", "."});
  const Dataset ds({ann("she", NarrativeLabel::Character), ann("in front of", NarrativeLabel::Space),
                    ann("house", NarrativeLabel::Space)});
  const AlignedDataset a = align(ds, emb, vocab());
  REQUIRE(a.size() == 3);
  CHECK(a.failures() == 0);
  CHECK(a.spans[0] == Span{0, 1});
  CHECK(a.spans[1] == Span{3, 6});
  CHECK(a.spans[2] == Span{7, 8});
  CHECK(a.X.row(1) == Eigen::RowVector3f(4, 4, 4));
  CHECK(a.X.row(0) == emb.data.row(0));
  CHECK(a.y == std::vector<int>{3, 1, 1});
}

TEST_CASE("align reconciles punctuation and case") {
  const EmbeddingMatrix emb = indexed_matrix({"mr", ".", "bennet", "said"});
  const Dataset ds({ann("Mr.", NarrativeLabel::Character), ann("Bennet", NarrativeLabel::Character)});
  const AlignedDataset a = align(ds, emb, vocab());
  REQUIRE(a.size() == 2);
  CHECK(a.spans[0] == Span{0, 2});
  CHECK(a.spans[1] == Span{2, 3});
  // Without the period, the stray "." row is simply skipped.
  const AlignedDataset b = align(Dataset({ann("Mr", NarrativeLabel::Character), ann("Bennet", NarrativeLabel::Character)}), emb, vocab());
  CHECK(b.spans[0] == Span{0, 1});
  CHECK(b.spans[1] == Span{2, 3});
}

TEST_CASE("align records failures outside the window") {
  std::vector<std::string> manifest(60, "the");
  manifest.push_back("zeb");
  manifest.push_back("##ra");
  const EmbeddingMatrix emb = indexed_matrix(manifest);
  const Dataset ds({ann("zebra", NarrativeLabel::Others), ann("the", NarrativeLabel::Others)});
  const AlignedDataset a = align(ds, emb, vocab());
  CHECK(a.size() == 1);
  CHECK(a.failures() == 1);
  CHECK_FALSE(a.records[0].span.has_value());
  CHECK(a.records[1].span == Span{0, 1});

  AlignOptions wide;
  wide.window = 61;
  CHECK(align(ds, emb, vocab(), wide).spans.front() == Span{60, 62});

  AlignOptions strict;
  strict.strict = true;
  try {
    align(ds, emb, vocab(), strict);
    FAIL("expected AlignmentFailure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::AlignmentFailure);
  }
}

TEST_CASE("alignment is monotone and conserves counts") {
  std::mt19937 gen(9);
  const std::vector<std::string> words = {"in", "front", "of", "the", "house", "she", "said", ","};
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::string> manifest;
    for (int i = 0; i < 80; ++i) manifest.push_back(words[gen() % words.size()]);
    std::vector<AnnotatedToken> tokens;
    for (int i = 0; i < 25; ++i) tokens.push_back(ann(words[gen() % words.size()], kAllLabels[gen() % 5]));
    const EmbeddingMatrix emb = indexed_matrix(manifest);
    const Dataset ds(tokens);
    const AlignedDataset a = align(ds, emb, vocab());
    CHECK(a.size() + a.failures() == ds.size());
    for (std::size_t i = 1; i < a.spans.size(); ++i) CHECK(a.spans[i].begin >= a.spans[i - 1].end);

    tokens.pop_back();
    const AlignedDataset shorter = align(Dataset(tokens), emb, vocab());
    REQUIRE(shorter.spans.size() <= a.spans.size());
    for (std::size_t i = 0; i < shorter.spans.size(); ++i) CHECK(shorter.spans[i] == a.spans[i]);
  }
}

TEST_CASE("multi-document alignment and dimension checks") {
  const EmbeddingMatrix ch1 = indexed_matrix({"she", "said"});
  const EmbeddingMatrix ch2 = indexed_matrix({"the", "house"});
  AnnotatedToken a = ann("said", NarrativeLabel::Others);
  AnnotatedToken b = ann("house", NarrativeLabel::Space);
  b.doc_id = "Ch2";
  const AlignedDataset out = align_documents(Dataset({a, b}), {ch1, ch2}, vocab());
  REQUIRE(out.size() == 2);
  CHECK(out.spans[0] == Span{1, 2});
  CHECK(out.spans[1] == Span{3, 4});

  const EmbeddingMatrix wide = indexed_matrix({"the", "house"}, 4);
  try {
    align_documents(Dataset({a, b}), {ch1, wide}, vocab());
    FAIL("expected DimMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DimMismatch);
  }
}

TEST_CASE("alignment CSV and aligned dataset persistence") {
  const EmbeddingMatrix emb = indexed_matrix({"she", "said", ",", "in", "front", "of"});
  AnnotatedToken quoted = ann("she", NarrativeLabel::Character);
  quoted.pos = "PRON";
  const Dataset ds({quoted, ann("zebra", NarrativeLabel::Others), ann("in front of", NarrativeLabel::Space)});
  const AlignedDataset a = align(ds, emb, vocab());
  CHECK(alignment_report_csv(ds, a) ==
        "annotation_index,doc_id,sent_id,token,row_start,row_end,status\n"
        "0,Ch1,1,she,0,1,aligned\n"
        "1,Ch1,1,zebra,,,failed\n"
        "2,Ch1,1,in front of,3,6,aligned\n");

  const auto stem = std::filesystem::temp_directory_path() / "narrprobe_aligned_test";
  save_aligned(a, stem);
  const AlignedDataset back = load_aligned(stem);
  CHECK(back.X == a.X);
  CHECK(back.y == a.y);
  CHECK(back.spans == a.spans);
  CHECK(back.failures() == 1);
  CHECK(back.source_tokens[0].pos == "PRON");
  std::filesystem::remove(std::filesystem::path(stem).concat(".embf"));
  std::filesystem::remove(std::filesystem::path(stem).concat(".json"));
}
