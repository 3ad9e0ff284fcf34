#include "narrprobe/embedstore.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <map>

#include <json.hpp>

#include "narrprobe/error.hpp"
#include "narrprobe/textio.hpp"

namespace narrprobe {

namespace {

constexpr std::string_view kMagic = "EMBF";
constexpr std::size_t kHeaderBytes = 4 + 4 + 8 + 8;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t get_le(std::string_view bytes, std::size_t offset, int width) {
  std::uint64_t v = 0;
  for (int i = 0; i < width; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[offset + i])) << (8 * i);
  }
  return v;
}

void check_finite(const RowMatrixF& data) {
  if (!data.allFinite()) throw Error(ErrorCode::InvalidArgument, "embedding matrix contains NaN or Inf");
}

std::vector<std::string> manifest_from_json(std::string_view text) {
  nlohmann::json arr;
  try {
    arr = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ManifestMismatch, std::string("manifest is not valid JSON: ") + e.what());
  }
  if (!arr.is_array()) throw Error(ErrorCode::ManifestMismatch, "manifest is not a JSON array");
  std::vector<std::string> out;
  out.reserve(arr.size());
  for (const auto& v : arr) {
    if (!v.is_string()) throw Error(ErrorCode::ManifestMismatch, "manifest entry is not a string");
    out.push_back(v.get<std::string>());
  }
  return out;
}

}  // namespace

std::string encode_embeddings(const EmbeddingMatrix& m) {
  if (m.manifest.size() != m.rows()) {
    throw Error(ErrorCode::ManifestMismatch, "manifest has " + std::to_string(m.manifest.size()) +
                                                 " entries for " + std::to_string(m.rows()) + " rows");
  }
  check_finite(m.data);
  const std::string manifest = nlohmann::json(m.manifest).dump();

  std::string out;
  out.reserve(kHeaderBytes + m.rows() * m.dim() * 4 + manifest.size() + 8);
  out.append(kMagic);
  put_u32(out, kEmbfVersion);
  put_u64(out, m.rows());
  put_u64(out, m.dim());
  for (Eigen::Index r = 0; r < m.data.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.data.cols(); ++c) {
      std::uint32_t bits = 0;
      const float v = m.data(r, c);
      std::memcpy(&bits, &v, sizeof bits);
      put_u32(out, bits);
    }
  }
  out.append(manifest);
  put_u64(out, manifest.size());
  return out;
}

EmbeddingMatrix decode_embeddings(std::string_view bytes) {
  if (bytes.size() < kMagic.size()) throw Error(ErrorCode::TruncatedFile, "shorter than the magic bytes");
  if (bytes.substr(0, kMagic.size()) != kMagic) throw Error(ErrorCode::BadMagic, "not an EMBF file");
  if (bytes.size() < kHeaderBytes) throw Error(ErrorCode::TruncatedFile, "header cut short");
  const auto version = static_cast<std::uint32_t>(get_le(bytes, 4, 4));
  if (version != kEmbfVersion) {
    throw Error(ErrorCode::VersionUnsupported, "EMBF version " + std::to_string(version));
  }
  const std::uint64_t rows = get_le(bytes, 8, 8);
  const std::uint64_t dim = get_le(bytes, 16, 8);

  const std::uint64_t max_cells = (bytes.size() - kHeaderBytes) / 4;
  if (dim != 0 && rows > max_cells / dim) {
    throw Error(ErrorCode::TruncatedFile, "matrix data exceeds file size");
  }
  const std::uint64_t data_bytes = rows * dim * 4;
  if (bytes.size() < kHeaderBytes + data_bytes + 8) {
    throw Error(ErrorCode::TruncatedFile, "matrix data or manifest trailer missing");
  }
  const std::uint64_t json_len = get_le(bytes, bytes.size() - 8, 8);
  if (json_len != bytes.size() - 8 - kHeaderBytes - data_bytes) {
    throw Error(ErrorCode::TruncatedFile, "manifest length trailer does not match file size");
  }

  EmbeddingMatrix m;
  m.data.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(dim));
  std::size_t offset = kHeaderBytes;
  for (Eigen::Index r = 0; r < m.data.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.data.cols(); ++c) {
      const auto bits = static_cast<std::uint32_t>(get_le(bytes, offset, 4));
      std::memcpy(&m.data(r, c), &bits, sizeof bits);
      offset += 4;
    }
  }
  m.manifest = manifest_from_json(bytes.substr(offset, json_len));
  if (m.manifest.size() != rows) {
    throw Error(ErrorCode::ManifestMismatch, "manifest has " + std::to_string(m.manifest.size()) +
                                                 " entries for " + std::to_string(rows) + " rows");
  }
  check_finite(m.data);
  return m;
}

void write_embeddings(const EmbeddingMatrix& m, const std::filesystem::path& path) {
  write_file(path, encode_embeddings(m));
}

EmbeddingMatrix read_embeddings(const std::filesystem::path& path) {
  return decode_embeddings(read_file(path));
}

Eigen::RowVectorXf mean_pool(const EmbeddingMatrix& emb, Span span) {
  if (span.end <= span.begin) throw Error(ErrorCode::EmptySpan, "cannot pool an empty span");
  if (span.end > emb.rows()) throw Error(ErrorCode::InvalidArgument, "span past end of matrix");
  const auto d = static_cast<Eigen::Index>(emb.dim());
  Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(d);
  for (std::size_t r = span.begin; r < span.end; ++r) {
    sum += emb.data.row(static_cast<Eigen::Index>(r)).cast<double>();
  }
  sum /= static_cast<double>(span.size());
  return sum.cast<float>();
}

namespace {

struct Cursor {
  const EmbeddingMatrix* emb;
  std::size_t row_offset;
  std::size_t position = 0;
};

std::optional<std::size_t> find_match(const std::vector<std::string>& manifest, std::size_t cursor,
                                      const std::vector<std::string>& pieces, std::size_t window) {
  if (pieces.empty()) return std::nullopt;
  for (std::size_t s = cursor; s < cursor + window && s + pieces.size() <= manifest.size(); ++s) {
    bool ok = true;
    for (std::size_t k = 0; k < pieces.size(); ++k) {
      if (manifest[s + k] != pieces[k]) {
        ok = false;
        break;
      }
    }
    if (ok) return s;
  }
  return std::nullopt;
}

}  // namespace

AlignedDataset align_documents(const Dataset& annotations, const std::vector<EmbeddingMatrix>& docs,
                               const Vocab& vocab, const AlignOptions& options) {
  if (docs.empty()) throw Error(ErrorCode::InvalidArgument, "no embedding matrices to align against");
  const std::size_t dim = docs.front().dim();
  for (const auto& doc : docs) {
    if (doc.dim() != dim) {
      throw Error(ErrorCode::DimMismatch, "embedding dims " + std::to_string(dim) + " and " +
                                              std::to_string(doc.dim()) + " differ");
    }
    if (doc.manifest.size() != doc.rows()) {
      throw Error(ErrorCode::ManifestMismatch, "manifest length differs from row count");
    }
  }

  // One cursor per matrix; annotations pick theirs by doc_id.
  std::vector<Cursor> cursors;
  std::size_t offset = 0;
  for (const auto& doc : docs) {
    cursors.push_back(Cursor{&doc, offset});
    offset += doc.rows();
  }
  std::map<std::string, std::size_t> doc_slot;
  if (docs.size() > 1) {
    for (const auto& t : annotations.tokens()) {
      if (doc_slot.count(t.doc_id)) continue;
      const std::size_t slot = doc_slot.size();
      if (slot >= docs.size()) {
        throw Error(ErrorCode::InvalidArgument, "more documents in annotations than embedding files");
      }
      doc_slot.emplace(t.doc_id, slot);
    }
    if (doc_slot.size() != docs.size()) {
      throw Error(ErrorCode::InvalidArgument, "fewer documents in annotations than embedding files");
    }
  }

  AlignedDataset out;
  std::vector<Eigen::RowVectorXf> rows;
  const auto& tokens = annotations.tokens();
  out.records.reserve(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    Cursor& cur = docs.size() > 1 ? cursors[doc_slot.at(tokens[i].doc_id)] : cursors.front();
    const std::vector<std::string> pieces = subword_surfaces(tokens[i].token, vocab);
    const auto start = find_match(cur.emb->manifest, cur.position, pieces, options.window);
    if (!start) {
      if (options.strict) {
        throw Error(ErrorCode::AlignmentFailure,
                    "annotation " + std::to_string(i) + " ('" + tokens[i].token + "') not found within " +
                        std::to_string(options.window) + " subwords of row " + std::to_string(cur.position));
      }
      out.records.push_back(AlignmentRecord{i, std::nullopt});
      continue;
    }
    const Span local{*start, *start + pieces.size()};
    cur.position = local.end;
    rows.push_back(mean_pool(*cur.emb, local));
    const Span global{local.begin + cur.row_offset, local.end + cur.row_offset};
    out.spans.push_back(global);
    out.y.push_back(index_of(tokens[i].label));
    out.source_tokens.push_back(tokens[i]);
    out.records.push_back(AlignmentRecord{i, global});
  }

  out.X.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t r = 0; r < rows.size(); ++r) out.X.row(static_cast<Eigen::Index>(r)) = rows[r];
  return out;
}

AlignedDataset align(const Dataset& annotations, const EmbeddingMatrix& emb, const Vocab& vocab,
                     const AlignOptions& options) {
  return align_documents(annotations, std::vector<EmbeddingMatrix>{emb}, vocab, options);
}

std::string alignment_report_csv(const Dataset& annotations, const AlignedDataset& aligned) {
  std::string out = "annotation_index,doc_id,sent_id,token,row_start,row_end,status\n";
  for (const auto& rec : aligned.records) {
    const auto& t = annotations.tokens().at(rec.annotation_index);
    out += std::to_string(rec.annotation_index) + ',' + csv_field(t.doc_id) + ',' +
           std::to_string(t.sent_id) + ',' + csv_field(t.token) + ',';
    if (rec.span) {
      out += std::to_string(rec.span->begin) + ',' + std::to_string(rec.span->end) + ",aligned\n";
    } else {
      out += ",,failed\n";
    }
  }
  return out;
}

void save_aligned(const AlignedDataset& aligned, const std::filesystem::path& stem) {
  EmbeddingMatrix m;
  m.data = aligned.X;
  for (const auto& t : aligned.source_tokens) m.manifest.push_back(t.token);
  write_embeddings(m, std::filesystem::path(stem).concat(".embf"));

  nlohmann::json meta;
  meta["format"] = "narrprobe-aligned";
  meta["version"] = 1;
  meta["rows"] = aligned.size();
  meta["dim"] = aligned.dim();
  meta["annotations"] = aligned.records.size();
  meta["failures"] = aligned.failures();
  nlohmann::json items = nlohmann::json::array();
  for (std::size_t i = 0; i < aligned.size(); ++i) {
    items.push_back({{"annotation", nlohmann::json::parse(to_json_line(aligned.source_tokens[i]))},
                     {"row_start", aligned.spans[i].begin},
                     {"row_end", aligned.spans[i].end}});
  }
  meta["items"] = std::move(items);
  nlohmann::json records = nlohmann::json::array();
  for (const auto& rec : aligned.records) {
    if (rec.span) {
      records.push_back({rec.annotation_index, rec.span->begin, rec.span->end});
    } else {
      records.push_back({rec.annotation_index, nullptr, nullptr});
    }
  }
  meta["records"] = std::move(records);
  write_file(std::filesystem::path(stem).concat(".json"), meta.dump(1) + "\n");
}

AlignedDataset load_aligned(const std::filesystem::path& stem) {
  EmbeddingMatrix m = read_embeddings(std::filesystem::path(stem).concat(".embf"));
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(read_file(std::filesystem::path(stem).concat(".json")));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedLine, std::string("aligned metadata: ") + e.what());
  }

  AlignedDataset out;
  try {
    const auto& items = meta.at("items");
    if (items.size() != m.rows()) {
      throw Error(ErrorCode::ManifestMismatch, "aligned metadata row count differs from matrix");
    }
    out.X = std::move(m.data);
    for (const auto& item : items) {
      AnnotatedToken tok = parse_annotation_line(item.at("annotation").dump());
      out.y.push_back(index_of(tok.label));
      out.spans.push_back(Span{item.at("row_start").get<std::size_t>(), item.at("row_end").get<std::size_t>()});
      out.source_tokens.push_back(std::move(tok));
    }
    for (const auto& rec : meta.at("records")) {
      AlignmentRecord r{rec.at(0).get<std::size_t>(), std::nullopt};
      if (!rec.at(1).is_null()) r.span = Span{rec.at(1).get<std::size_t>(), rec.at(2).get<std::size_t>()};
      out.records.push_back(r);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedLine, std::string("aligned metadata: ") + e.what());
  }
  return out;
}

}  // namespace narrprobe
