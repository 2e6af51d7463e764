#include "spanie/corpus.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"

namespace spanie {

using json = nlohmann::json;

FormatError::FormatError(const std::string &what, std::size_t line,
                         bool annotate)
    : Error(annotate && line > 0 ? "line " + std::to_string(line) + ": " + what
                                 : what),
      line_(line) {}

std::string ToString(const Span &span) {
  if (span.is_null()) return "NULL";
  return "(" + std::to_string(span.start()) + "," + std::to_string(span.end()) +
         ")";
}

std::string_view LabelName(ArgLabel label) {
  switch (label) {
    case ArgLabel::kA0: return "A0";
    case ArgLabel::kA1: return "A1";
    case ArgLabel::kA2: return "A2";
    case ArgLabel::kA3: return "A3";
  }
  return "?";
}

std::optional<ArgLabel> ParseArgLabel(std::string_view name) {
  for (ArgLabel label : kArgLabels) {
    if (LabelName(label) == name) return label;
  }
  return std::nullopt;
}

std::string Lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return out;
}

void ValidateSentence(const Sentence &sentence) {
  const int n = sentence.size();
  if (n == 0) throw InvariantError("sentence has no tokens", 0);
  int roots = 0;
  for (int i = 0; i < n; ++i) {
    int head = sentence.tokens[i].dep_head;
    if (head == kRoot) {
      ++roots;
    } else if (head < 0 || head >= n) {
      throw InvariantError("token " + std::to_string(i) + " has head " +
                               std::to_string(head) + " outside the sentence",
                           0);
    } else if (head == i) {
      throw InvariantError("token " + std::to_string(i) + " heads itself", 0);
    }
  }
  if (roots != 1) {
    throw InvariantError(
        "dependency tree has " + std::to_string(roots) + " roots", 0);
  }
  // Every token must reach the root within n steps.
  for (int i = 0; i < n; ++i) {
    int cur = i;
    int steps = 0;
    while (cur != kRoot) {
      cur = sentence.tokens[cur].dep_head;
      if (++steps > n) {
        throw InvariantError(
            "dependency cycle through token " + std::to_string(i), 0);
      }
    }
  }
}

namespace {

bool InBounds(const Span &span, int n) {
  return !span.is_null() && span.start() >= 0 && span.start() <= span.end() &&
         span.end() < n;
}

bool Intersects(const Span &a, const Span &b) {
  return a.start() <= b.end() && b.start() <= a.end();
}

}  // namespace

void ValidateExtraction(const Extraction &extraction,
                        const Sentence &sentence) {
  const int n = sentence.size();
  if (!InBounds(extraction.predicate, n)) {
    throw InvariantError("predicate span " + ToString(extraction.predicate) +
                             " out of range for " + std::to_string(n) +
                             " tokens",
                         0);
  }
  for (const auto &[label, span] : extraction.args) {
    std::string name(LabelName(label));
    if (!InBounds(span, n)) {
      throw InvariantError(name + " span " + ToString(span) +
                               " out of range for " + std::to_string(n) +
                               " tokens",
                           0);
    }
    if (Intersects(span, extraction.predicate)) {
      throw InvariantError(name + " span " + ToString(span) +
                               " overlaps the predicate",
                           0);
    }
  }
  if (!(extraction.confidence >= 0.0) || std::isinf(extraction.confidence)) {
    throw InvariantError("confidence must be finite and non-negative", 0);
  }
}

namespace {

Span ReadSpan(const json &j, const char *what) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() ||
      !j[1].is_number_integer()) {
    throw Error(std::string(what) + " must be an array [start, end]");
  }
  return Span(j[0].get<int>(), j[1].get<int>());
}

template <typename T>
std::vector<T> ReadList(const json &record, const char *key) {
  auto it = record.find(key);
  if (it == record.end() || !it->is_array()) {
    throw Error(std::string("missing list \"") + key + "\"");
  }
  return it->get<std::vector<T>>();
}

AnnotatedSentence ParseRecord(const json &record, std::size_t line,
                              const LoadOptions &options, LoadReport *report) {
  if (!record.is_object()) throw Error("record is not a JSON object");
  AnnotatedSentence out;
  Sentence &s = out.sentence;
  if (auto it = record.find("id"); it != record.end()) {
    s.id = it->is_string() ? it->get<std::string>() : it->dump();
  } else {
    s.id = std::to_string(line);
  }
  auto surfaces = ReadList<std::string>(record, "tokens");
  auto pos = ReadList<std::string>(record, "pos");
  auto heads = ReadList<int>(record, "dep_head");
  auto rels = ReadList<std::string>(record, "dep_rel");
  if (pos.size() != surfaces.size() || heads.size() != surfaces.size() ||
      rels.size() != surfaces.size()) {
    throw Error("tokens, pos, dep_head and dep_rel differ in length");
  }
  for (std::size_t i = 0; i < surfaces.size(); ++i) {
    s.tokens.push_back({surfaces[i], pos[i], heads[i], rels[i]});
  }
  try {
    ValidateSentence(s);
  } catch (const InvariantError &e) {
    throw InvariantError(e.what(), line);
  }

  auto ex = record.find("extractions");
  if (ex != record.end() && !ex->is_null()) {
    if (!ex->is_array()) throw Error("\"extractions\" must be a list");
    for (const json &item : *ex) {
      Extraction e;
      if (!item.contains("pred")) throw Error("extraction without \"pred\"");
      e.predicate = ReadSpan(item["pred"], "pred");
      if (auto a = item.find("args"); a != item.end()) {
        if (!a->is_object()) throw Error("\"args\" must be an object");
        for (const auto &[name, value] : a->items()) {
          auto label = ParseArgLabel(name);
          if (!label) {
            if (report) ++report->skipped_labels[name];
            continue;
          }
          e.args[*label] = ReadSpan(value, "argument");
        }
      }
      if (auto c = item.find("confidence"); c != item.end()) {
        if (!c->is_number()) throw Error("\"confidence\" must be a number");
        e.confidence = c->get<double>();
      }
      try {
        ValidateExtraction(e, s);
      } catch (const InvariantError &err) {
        throw InvariantError(err.what(), line);
      }
      if (e.confidence > options.max_confidence) {
        throw InvariantError("confidence " + std::to_string(e.confidence) +
                                 " above " +
                                 std::to_string(options.max_confidence),
                             line);
      }
      out.extractions.push_back(std::move(e));
    }
  }
  if (options.require_gold && out.extractions.empty()) {
    throw InvariantError("record has no extractions", line);
  }
  return out;
}

}  // namespace

Dataset ParseCorpus(std::istream &in, const LoadOptions &options,
                    LoadReport *report) {
  Dataset dataset;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::exception &e) {
      throw FormatError(std::string("malformed JSON: ") + e.what(), line_no);
    }
    try {
      dataset.push_back(ParseRecord(record, line_no, options, report));
    } catch (const FormatError &) {
      throw;
    } catch (const json::exception &e) {
      throw FormatError(e.what(), line_no);
    } catch (const Error &e) {
      throw FormatError(e.what(), line_no);
    }
    if (report) {
      ++report->records;
      report->extractions += dataset.back().extractions.size();
    }
  }
  return dataset;
}

Dataset LoadCorpus(const std::string &path, const LoadOptions &options,
                   LoadReport *report) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open corpus " + path);
  try {
    return ParseCorpus(in, options, report);
  } catch (const InvariantError &e) {
    throw InvariantError(path + ": " + e.what(), e.line(), false);
  } catch (const FormatError &e) {
    throw FormatError(path + ": " + e.what(), e.line(), false);
  }
}

namespace {

json SpanJson(const Span &span) { return json::array({span.start(), span.end()}); }

}  // namespace

void WriteCorpus(std::ostream &out, const Dataset &dataset) {
  for (const AnnotatedSentence &as : dataset) {
    const Sentence &s = as.sentence;
    json record;
    record["id"] = s.id;
    json tokens = json::array(), pos = json::array(), heads = json::array(),
         rels = json::array();
    for (const Token &t : s.tokens) {
      tokens.push_back(t.surface);
      pos.push_back(t.pos);
      heads.push_back(t.dep_head);
      rels.push_back(t.dep_rel);
    }
    record["tokens"] = std::move(tokens);
    record["pos"] = std::move(pos);
    record["dep_head"] = std::move(heads);
    record["dep_rel"] = std::move(rels);
    json extractions = json::array();
    for (const Extraction &e : as.extractions) {
      json item;
      item["pred"] = SpanJson(e.predicate);
      json args = json::object();
      for (const auto &[label, span] : e.args) {
        args[std::string(LabelName(label))] = SpanJson(span);
      }
      item["args"] = std::move(args);
      item["confidence"] = e.confidence;
      extractions.push_back(std::move(item));
    }
    record["extractions"] = std::move(extractions);
    out << record.dump() << '\n';
  }
}

void SaveExtractions(const std::string &path, const Dataset &dataset) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  WriteCorpus(out, dataset);
  if (!out) throw Error("write failed for " + path);
}

EmbeddingTable::EmbeddingTable(std::vector<std::string> words,
                               Eigen::MatrixXd vectors)
    : words_(std::move(words)), vectors_(std::move(vectors)) {
  if (vectors_.rows() != static_cast<Eigen::Index>(words_.size()) + 1) {
    throw Error("embedding matrix must have one row per word plus UNK");
  }
  for (std::size_t i = 0; i < words_.size(); ++i) {
    // First occurrence wins on duplicates.
    index_.emplace(words_[i], static_cast<int>(i));
  }
}

int EmbeddingTable::IndexOf(std::string_view surface) const {
  if (auto it = index_.find(std::string(surface)); it != index_.end()) {
    return it->second;
  }
  if (auto it = index_.find(Lowercase(surface)); it != index_.end()) {
    return it->second;
  }
  return unk_index();
}

EmbeddingTable ParseEmbeddings(std::istream &in, int dim) {
  if (dim < 1) throw Error("embedding dimension must be positive");
  std::vector<std::string> words;
  std::vector<double> values;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string word;
    if (!(fields >> word)) continue;
    std::size_t before = values.size();
    double v;
    while (fields >> v) values.push_back(v);
    if (!fields.eof()) {
      throw FormatError("non-numeric embedding component", line_no);
    }
    std::size_t got = values.size() - before;
    if (got != static_cast<std::size_t>(dim)) {
      throw FormatError("expected " + std::to_string(dim) +
                            " components, found " + std::to_string(got),
                        line_no);
    }
    words.push_back(std::move(word));
  }
  if (words.empty()) throw Error("embedding file is empty");

  const Eigen::Index n = static_cast<Eigen::Index>(words.size());
  Eigen::MatrixXd matrix(n + 1, dim);
  matrix.topRows(n) =
      Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                     Eigen::RowMajor>>(values.data(), n, dim);
  matrix.row(n) = matrix.topRows(n).colwise().mean();
  return EmbeddingTable(std::move(words), std::move(matrix));
}

EmbeddingTable LoadEmbeddings(const std::string &path, int dim) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open embeddings " + path);
  try {
    return ParseEmbeddings(in, dim);
  } catch (const FormatError &e) {
    throw FormatError(path + ": " + e.what(), e.line(), false);
  }
}

Eigen::VectorXd LookupToken(const EmbeddingTable &table,
                            std::string_view surface) {
  return table.vectors().row(table.IndexOf(surface)).transpose();
}

}  // namespace spanie
