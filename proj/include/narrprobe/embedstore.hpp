#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "narrprobe/corpus.hpp"
#include "narrprobe/wordpiece.hpp"

namespace narrprobe {

using RowMatrixF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// One row per subword; manifest[i] is the surface of row i. Special tokens
// are never present.
struct EmbeddingMatrix {
  RowMatrixF data;
  std::vector<std::string> manifest;

  std::size_t rows() const noexcept { return static_cast<std::size_t>(data.rows()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(data.cols()); }
};

// EMBF layout, all integers little-endian:
//   "EMBF" | u32 version=1 | u64 rows | u64 dim | rows*dim f32 row-major
//   | UTF-8 JSON array of manifest strings | u64 byte length of that JSON
inline constexpr std::uint32_t kEmbfVersion = 1;

std::string encode_embeddings(const EmbeddingMatrix& m);
EmbeddingMatrix decode_embeddings(std::string_view bytes);

void write_embeddings(const EmbeddingMatrix& m, const std::filesystem::path& path);
EmbeddingMatrix read_embeddings(const std::filesystem::path& path);

// Half-open row range.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const noexcept { return end - begin; }
  friend bool operator==(const Span&, const Span&) = default;
};

// Componentwise mean with double accumulation. Throws EmptySpan, or
// InvalidArgument when the span runs past the matrix.
Eigen::RowVectorXf mean_pool(const EmbeddingMatrix& emb, Span span);

struct AlignOptions {
  // Start positions tried from the cursor before giving up on an annotation.
  std::size_t window = 50;
  // Throw AlignmentFailure on the first miss instead of recording it.
  bool strict = false;
};

struct AlignmentRecord {
  std::size_t annotation_index = 0;
  std::optional<Span> span;  // global row range; empty on failure
};

struct AlignedDataset {
  RowMatrixF X;
  std::vector<int> y;
  std::vector<Span> spans;
  std::vector<AnnotatedToken> source_tokens;
  // One per input annotation, in order.
  std::vector<AlignmentRecord> records;

  std::size_t size() const noexcept { return y.size(); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(X.cols()); }
  std::size_t failures() const noexcept { return records.size() - y.size(); }
};

// Walks a cursor through the manifest. Each annotation is pre-tokenized and
// WordPiece-split with `vocab`, matched contiguously at the first start
// position within the window, and its rows averaged. Unmatched annotations
// are recorded as failures and leave the cursor in place.
AlignedDataset align(const Dataset& annotations, const EmbeddingMatrix& emb, const Vocab& vocab,
                     const AlignOptions& options = {});

// Multi-document form. With one matrix every annotation is matched against
// it; otherwise documents (distinct doc_id in first-appearance order) pair up
// with matrices in order, and spans index the row-wise concatenation.
// Throws DimMismatch when matrices disagree on dim.
AlignedDataset align_documents(const Dataset& annotations, const std::vector<EmbeddingMatrix>& docs,
                               const Vocab& vocab, const AlignOptions& options = {});

// annotation_index,doc_id,sent_id,token,row_start,row_end,status
std::string alignment_report_csv(const Dataset& annotations, const AlignedDataset& aligned);

// Writes <stem>.embf (manifest = annotation tokens) and <stem>.json.
void save_aligned(const AlignedDataset& aligned, const std::filesystem::path& stem);
AlignedDataset load_aligned(const std::filesystem::path& stem);

}  // namespace narrprobe
