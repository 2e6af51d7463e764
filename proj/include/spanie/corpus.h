// Annotated sentences, extraction tuples and embedding tables, plus their
// on-disk formats (see docs/FORMATS.md).

#ifndef SPANIE_CORPUS_H_
#define SPANIE_CORPUS_H_

#include <array>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

namespace spanie {

// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input, carrying the 1-based line it was found on (0 if unknown).
class FormatError : public Error {
 public:
  // Prefixes "line N: " to the message unless `annotate` is false.
  FormatError(const std::string &what, std::size_t line, bool annotate = true);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Well-formed input that violates a data-model invariant.
class InvariantError : public FormatError {
 public:
  using FormatError::FormatError;
};

inline constexpr int kRoot = -1;

struct Token {
  std::string surface;
  std::string pos;
  int dep_head = kRoot;
  std::string dep_rel;
};

struct Sentence {
  std::string id;
  std::vector<Token> tokens;

  int size() const { return static_cast<int>(tokens.size()); }
};

// Throws InvariantError unless the sentence is non-empty and its dependency
// arcs form a single-rooted tree.
void ValidateSentence(const Sentence &sentence);

// Contiguous token interval [start, end] (0-based, inclusive) or the NULL
// sentinel that stands for "label absent".
class Span {
 public:
  constexpr Span() = default;
  constexpr Span(int start, int end) : start_(start), end_(end) {}

  static constexpr Span Null() {
    Span s;
    s.null_ = true;
    return s;
  }

  constexpr bool is_null() const { return null_; }
  constexpr int start() const { return start_; }
  constexpr int end() const { return end_; }
  constexpr int length() const { return end_ - start_ + 1; }
  constexpr bool contains(int token) const {
    return !null_ && token >= start_ && token <= end_;
  }

  friend constexpr bool operator==(const Span &a, const Span &b) {
    if (a.null_ || b.null_) return a.null_ == b.null_;
    return a.start_ == b.start_ && a.end_ == b.end_;
  }
  // Lexicographic (start, end); NULL sorts after every real span.
  friend constexpr bool operator<(const Span &a, const Span &b) {
    if (a.null_ != b.null_) return b.null_;
    if (a.null_) return false;
    return a.start_ != b.start_ ? a.start_ < b.start_ : a.end_ < b.end_;
  }

 private:
  int start_ = 0;
  int end_ = 0;
  bool null_ = false;
};

std::string ToString(const Span &span);

// Closed label inventories.
enum class ArgLabel { kA0 = 0, kA1 = 1, kA2 = 2, kA3 = 3 };
inline constexpr int kNumArgLabels = 4;
inline constexpr std::array<ArgLabel, kNumArgLabels> kArgLabels = {
    ArgLabel::kA0, ArgLabel::kA1, ArgLabel::kA2, ArgLabel::kA3};

enum class PredLabel { kPred = 0, kNotPred = 1 };
inline constexpr int kNumPredLabels = 2;

std::string_view LabelName(ArgLabel label);
std::optional<ArgLabel> ParseArgLabel(std::string_view name);
inline int LabelIndex(ArgLabel label) { return static_cast<int>(label); }

struct Extraction {
  Span predicate;
  std::map<ArgLabel, Span> args;
  double confidence = 1.0;
};

// Throws InvariantError if the extraction is inconsistent with the sentence.
void ValidateExtraction(const Extraction &extraction, const Sentence &sentence);

struct AnnotatedSentence {
  Sentence sentence;
  std::vector<Extraction> extractions;
};

using Dataset = std::vector<AnnotatedSentence>;

struct LoadOptions {
  // Every record must carry at least one extraction.
  bool require_gold = false;
  // Upper bound on extraction confidence; bootstrapped corpora use 1.0.
  double max_confidence = std::numeric_limits<double>::infinity();
};

// Things dropped (not rejected) while loading.
struct LoadReport {
  std::size_t records = 0;
  std::size_t extractions = 0;
  std::map<std::string, std::size_t> skipped_labels;
};

Dataset LoadCorpus(const std::string &path, const LoadOptions &options = {},
                   LoadReport *report = nullptr);
Dataset ParseCorpus(std::istream &in, const LoadOptions &options = {},
                    LoadReport *report = nullptr);

void SaveExtractions(const std::string &path, const Dataset &dataset);
void WriteCorpus(std::ostream &out, const Dataset &dataset);

// Pretrained word vectors. Rows of `vectors` are words; the last row is UNK,
// initialized to the mean of all loaded vectors.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::vector<std::string> words, Eigen::MatrixXd vectors);

  int dim() const { return static_cast<int>(vectors_.cols()); }
  int rows() const { return static_cast<int>(vectors_.rows()); }
  int unk_index() const { return rows() - 1; }
  const std::vector<std::string> &words() const { return words_; }
  const Eigen::MatrixXd &vectors() const { return vectors_; }

  // Exact match, then lowercased match, then UNK.
  int IndexOf(std::string_view surface) const;

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> index_;
  Eigen::MatrixXd vectors_;
};

EmbeddingTable LoadEmbeddings(const std::string &path, int dim);
EmbeddingTable ParseEmbeddings(std::istream &in, int dim);

Eigen::VectorXd LookupToken(const EmbeddingTable &table,
                            std::string_view surface);

std::string Lowercase(std::string_view s);

}  // namespace spanie

#endif  // SPANIE_CORPUS_H_
