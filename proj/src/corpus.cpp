#include "narrprobe/corpus.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "narrprobe/error.hpp"
#include "narrprobe/textio.hpp"

namespace narrprobe {

namespace {

using nlohmann::json;

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_blank(std::string_view line) {
  for (char c : line) {
    if (!is_space(c)) return false;
  }
  return true;
}

}  // namespace

AnnotatedToken parse_annotation_line(std::string_view line, std::size_t line_no) {
  json obj;
  try {
    obj = json::parse(line);
  } catch (const json::parse_error& e) {
    throw LineError(ErrorCode::MalformedLine, line_no, e.what());
  }
  if (!obj.is_object()) {
    throw LineError(ErrorCode::MalformedLine, line_no, "not a JSON object");
  }

  AnnotatedToken tok;
  auto require = [&](const char* key) -> const json& {
    auto it = obj.find(key);
    if (it == obj.end()) {
      throw LineError(ErrorCode::MalformedLine, line_no, std::string("missing field '") + key + "'");
    }
    return *it;
  };

  const json& doc = require("doc_id");
  if (!doc.is_string()) throw LineError(ErrorCode::MalformedLine, line_no, "doc_id must be a string");
  tok.doc_id = doc.get<std::string>();

  const json& sent = require("sent_id");
  if (!sent.is_number_integer() || sent.get<std::int64_t>() < 1) {
    throw LineError(ErrorCode::MalformedLine, line_no, "sent_id must be an integer >= 1");
  }
  tok.sent_id = sent.get<std::uint64_t>();

  const json& text = require("token");
  if (!text.is_string()) throw LineError(ErrorCode::MalformedLine, line_no, "token must be a string");
  tok.token = normalize_token_text(text.get<std::string>());
  if (tok.token.empty()) throw LineError(ErrorCode::EmptyToken, line_no, "token is empty");

  const json& label = require("label");
  if (!label.is_string()) throw LineError(ErrorCode::MalformedLine, line_no, "label must be a string");
  auto parsed = parse_label(label.get<std::string>());
  if (!parsed) {
    throw LineError(ErrorCode::UnknownLabel, line_no, "unknown label '" + label.get<std::string>() + "'");
  }
  tok.label = *parsed;

  if (auto it = obj.find("pos"); it != obj.end() && !it->is_null()) {
    if (!it->is_string()) throw LineError(ErrorCode::MalformedLine, line_no, "pos must be a string");
    tok.pos = it->get<std::string>();
  }

  for (auto it = obj.begin(); it != obj.end(); ++it) {
    const std::string& key = it.key();
    if (key == "doc_id" || key == "sent_id" || key == "token" || key == "label" || key == "pos") continue;
    tok.extra[key] = it.value();
  }
  return tok;
}

namespace {

template <typename Map>
void append_rows(std::string& out, std::string_view label, const Map& map) {
  for (const auto& [key, fraction] : map) {
    std::ostringstream k;
    k << key;
    out += csv_field(label);
    out += ',';
    out += csv_field(k.str());
    out += ',';
    out += format_number(fraction);
    out += '\n';
  }
}

}  // namespace

Dataset::Dataset(std::vector<AnnotatedToken> tokens) : tokens_(std::move(tokens)) {
  for (const auto& t : tokens_) ++class_counts_[static_cast<std::size_t>(index_of(t.label))];
}

std::string normalize_token_text(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (char c : text) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += c;
  }
  return out;
}

Dataset parse_annotations(std::istream& in) {
  std::vector<AnnotatedToken> tokens;
  std::map<std::string, std::uint64_t> last_sent;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    AnnotatedToken tok = parse_annotation_line(line, line_no);
    auto [it, inserted] = last_sent.emplace(tok.doc_id, tok.sent_id);
    if (!inserted) {
      if (tok.sent_id < it->second) {
        throw LineError(ErrorCode::MalformedLine, line_no,
                        "sent_id decreases within document '" + tok.doc_id + "'");
      }
      it->second = tok.sent_id;
    }
    tokens.push_back(std::move(tok));
  }
  if (in.bad()) throw Error(ErrorCode::Io, "read failed");
  return Dataset(std::move(tokens));
}

Dataset load_annotations(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    throw Error(ErrorCode::MissingInput, "no such file: " + path.string());
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return parse_annotations(in);
}

std::string to_json_line(const AnnotatedToken& token) {
  // ordered_json keeps the canonical field order on output.
  nlohmann::ordered_json obj;
  obj["doc_id"] = token.doc_id;
  obj["sent_id"] = token.sent_id;
  obj["token"] = token.token;
  obj["label"] = std::string(to_string(token.label));
  if (token.pos) obj["pos"] = *token.pos;
  for (auto it = token.extra.begin(); it != token.extra.end(); ++it) {
    obj[it.key()] = it.value();
  }
  return obj.dump();
}

void write_annotations(const Dataset& ds, std::ostream& out) {
  for (const auto& t : ds.tokens()) out << to_json_line(t) << '\n';
}

std::size_t word_count(std::string_view token) {
  std::size_t words = 0;
  bool in_word = false;
  for (char c : token) {
    if (is_space(c)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++words;
    }
  }
  return words;
}

LabelFractions label_distribution(const Dataset& ds) {
  if (ds.empty()) throw Error(ErrorCode::EmptyDataset, "label distribution of an empty dataset");
  LabelFractions out{};
  const double n = static_cast<double>(ds.size());
  for (std::size_t c = 0; c < kNumLabels; ++c) {
    out[c] = static_cast<double>(ds.class_counts()[c]) / n;
  }
  return out;
}

SpanLengthDistribution span_length_distribution(const Dataset& ds) {
  std::array<std::map<std::size_t, std::size_t>, kNumLabels> counts;
  for (const auto& t : ds.tokens()) {
    ++counts[static_cast<std::size_t>(index_of(t.label))][word_count(t.token)];
  }
  SpanLengthDistribution out;
  for (std::size_t c = 0; c < kNumLabels; ++c) {
    const double total = static_cast<double>(ds.class_counts()[c]);
    for (const auto& [len, n] : counts[c]) out[c][len] = static_cast<double>(n) / total;
  }
  return out;
}

PosDistribution pos_distribution(const Dataset& ds) {
  std::array<std::map<std::string, std::size_t>, kNumLabels> counts;
  std::array<std::size_t, kNumLabels> tagged{};
  bool any = false;
  for (const auto& t : ds.tokens()) {
    if (!t.pos) continue;
    any = true;
    const auto c = static_cast<std::size_t>(index_of(t.label));
    ++counts[c][*t.pos];
    ++tagged[c];
  }
  if (!any) throw Error(ErrorCode::NoPosTags, "no token carries a pos tag");
  PosDistribution out;
  for (std::size_t c = 0; c < kNumLabels; ++c) {
    for (const auto& [tag, n] : counts[c]) {
      out[c][tag] = static_cast<double>(n) / static_cast<double>(tagged[c]);
    }
  }
  return out;
}

std::string label_distribution_csv(const LabelFractions& fractions) {
  std::string out = "label,key,fraction\n";
  for (std::size_t c = 0; c < kNumLabels; ++c) {
    append_rows(out, kLabelNames[c], std::map<std::string, double>{{"all", fractions[c]}});
  }
  return out;
}

std::string span_length_csv(const SpanLengthDistribution& dist) {
  std::string out = "label,key,fraction\n";
  for (std::size_t c = 0; c < kNumLabels; ++c) append_rows(out, kLabelNames[c], dist[c]);
  return out;
}

std::string pos_distribution_csv(const PosDistribution& dist) {
  std::string out = "label,key,fraction\n";
  for (std::size_t c = 0; c < kNumLabels; ++c) append_rows(out, kLabelNames[c], dist[c]);
  return out;
}

}  // namespace narrprobe
