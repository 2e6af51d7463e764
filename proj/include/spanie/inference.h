// Two-stage decoding: predicate detection with subsumption filtering, greedy
// argument assignment and extraction confidence.

#ifndef SPANIE_INFERENCE_H_
#define SPANIE_INFERENCE_H_

#include <map>
#include <vector>

#include "spanie/model.h"
#include "spanie/network.h"

namespace spanie {

struct DecodeConfig {
  // Minimum PRED probability for a predicate span; must lie in (0, 1).
  double predicate_threshold = 0.5;
  bool enforce_syntactic_at_inference = true;
  // The training-time length limits are normally lifted at inference; this
  // keeps them, restricting decoding to span lengths the models were
  // trained on.
  bool enforce_max_len_at_inference = false;
  int max_arg_len = 10;
  int max_pred_len = 5;
  // Forbid two labels from taking the same non-NULL span.
  bool no_span_reuse = false;
  // Forbid overlapping argument spans across labels.
  bool no_argument_overlap = false;

  void Validate() const;
};

struct ScoredSpan {
  Span span;
  double score = 0.0;
};

struct ScoredTuple {
  Span span;
  ArgLabel label = ArgLabel::kA0;
  double score = 0.0;
};

// Greedy scan order: score descending, then start, then length, then label.
// NULL sorts after every real span on ties.
bool TupleBefore(const ScoredTuple &a, const ScoredTuple &b);

// Drops every span contained in another span of the list (identical
// duplicates collapse to one). Survivors come back sorted by (start, end).
std::vector<ScoredSpan> FilterSubsumed(const std::vector<ScoredSpan> &spans);

std::vector<ScoredSpan> PredictPredicates(const Model &pred_model,
                                          const Sentence &sentence,
                                          const DecodeConfig &config);

struct ArgumentAssignment {
  std::map<ArgLabel, Span> spans;
  std::map<ArgLabel, double> scores;
};

// Scans tuples in TupleBefore order, giving each unassigned label the span of
// its first admissible tuple; labels that end on NULL are dropped.
ArgumentAssignment GreedyAssign(std::vector<ScoredTuple> tuples,
                                const DecodeConfig &config);

// Tuples for every (candidate, label) pair of a per-label probability matrix.
std::vector<ScoredTuple> MakeTuples(const std::vector<Span> &candidates,
                                    const Matrix &probabilities);

ArgumentAssignment PredictArguments(const Model &arg_model,
                                    const Sentence &sentence,
                                    const Span &predicate,
                                    const DecodeConfig &config);

// Predicate probability plus the probabilities of the surviving arguments.
double ExtractionConfidence(double pred_score,
                            const std::map<ArgLabel, double> &arg_scores);

std::vector<Extraction> Extract(const Model &pred_model, const Model &arg_model,
                                const Sentence &sentence,
                                const DecodeConfig &config);

// Runs Extract over every sentence with up to `workers` threads; output order
// follows the input.
Dataset ExtractAll(const Model &pred_model, const Model &arg_model,
                   const Dataset &input, const DecodeConfig &config,
                   int workers = 1);

}  // namespace spanie

#endif  // SPANIE_INFERENCE_H_
