// Scoring system extractions against gold tuples: matching, precision and
// recall at confidence thresholds, P-R curve, area under it and best F1.

#ifndef SPANIE_EVALUATION_H_
#define SPANIE_EVALUATION_H_

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "spanie/corpus.h"

namespace spanie {

enum class PredicateRule {
  // The system predicate contains the gold predicate's syntactic head token.
  kHeadContainment,
  kExactSpan,
};

struct MatchPolicy {
  PredicateRule predicate_rule = PredicateRule::kHeadContainment;
  // Minimum |system ∩ gold| / |gold| per compared argument; in (0, 1].
  double min_ratio = 0.5;
  // When false, gold labels the system did not produce are not compared.
  bool require_all_gold_args = false;

  void Validate() const;
};

bool MatchExtraction(const Extraction &system, const Extraction &gold,
                     const Sentence &sentence, const MatchPolicy &policy);

// Same, but rejects extractions from two different sentences.
bool MatchExtraction(const Extraction &system, const Sentence &system_sentence,
                     const Extraction &gold, const Sentence &gold_sentence,
                     const MatchPolicy &policy);

struct PRPoint {
  double threshold = 0.0;
  double precision = 1.0;
  double recall = 0.0;
  std::size_t matched = 0;
  std::size_t kept = 0;
  std::size_t gold = 0;
  // Set when nothing was kept; precision is then 1.0 by convention.
  bool precision_undefined = false;
};

// System and gold sentences paired by id. Throws Error listing every id that
// appears on only one side, or appears twice.
using AlignedCorpus =
    std::vector<std::pair<const AnnotatedSentence *, const AnnotatedSentence *>>;
AlignedCorpus AlignById(const Dataset &system, const Dataset &gold);

// Gold index matched by each system extraction of one sentence (-1 if none),
// keeping only extractions with confidence >= threshold.
std::vector<int> MatchSentence(const AnnotatedSentence &system,
                               const AnnotatedSentence &gold, double threshold,
                               const MatchPolicy &policy);

PRPoint ScoreAtThreshold(const AlignedCorpus &aligned, double threshold,
                         const MatchPolicy &policy, int workers = 1);
PRPoint ScoreAtThreshold(const Dataset &system, const Dataset &gold,
                         double threshold, const MatchPolicy &policy);

// One point per distinct system confidence, highest threshold first.
std::vector<PRPoint> PrCurve(const AlignedCorpus &aligned,
                             const MatchPolicy &policy, int workers = 1);
std::vector<PRPoint> PrCurve(const Dataset &system, const Dataset &gold,
                             const MatchPolicy &policy);

// Trapezoidal area over recall. With `extend_to_zero`, the curve is extended
// horizontally from its lowest-recall point down to recall 0.
double Auc(const std::vector<PRPoint> &curve, bool extend_to_zero = true);

double BestF1(const std::vector<PRPoint> &curve);

struct EvalSummary {
  double auc = 0.0;
  double best_f1 = 0.0;
  std::size_t gold = 0;
  std::size_t system = 0;
  std::vector<PRPoint> curve;
};

EvalSummary Evaluate(const Dataset &system, const Dataset &gold,
                     const MatchPolicy &policy, bool extend_to_zero = true,
                     int workers = 1);

}  // namespace spanie

#endif  // SPANIE_EVALUATION_H_
