// Candidate span generation under the length, no-overlap and syntactic
// constraints.

#ifndef SPANIE_SPANS_H_
#define SPANIE_SPANS_H_

#include <optional>
#include <vector>

#include "spanie/corpus.h"

namespace spanie {

struct CandidateConfig {
  // Spans must be strictly shorter than these when enforce_max_len is set.
  int max_arg_len = 10;
  int max_pred_len = 5;
  bool enforce_max_len = true;
  bool enforce_syntactic = true;
  // Present when generating argument candidates for a known predicate.
  std::optional<Span> predicate_span;
  // Whether the NULL sentinel is appended (argument candidates need it).
  bool include_null = true;
};

// All n(n+1)/2 spans of an n-token sentence in (start, end) order.
std::vector<Span> EnumerateAllSpans(int n);

// Interval intersection of two non-NULL spans.
bool Overlaps(const Span &a, const Span &b);

// Every token of the span either heads another token of the span or has its
// own head inside it. Single-token spans pass.
bool SatisfiesSyntacticConstraint(const Span &span, const Sentence &sentence);

// Filtered candidates in (start, end) order, NULL last. The length limit is
// max_arg_len in argument mode (predicate_span set) and max_pred_len
// otherwise.
std::vector<Span> CandidateSpans(const Sentence &sentence,
                                 const CandidateConfig &config);

// Leftmost token of the span whose head lies outside it (or is ROOT).
int SyntacticHead(const Span &span, const Sentence &sentence);

// Head of SyntacticHead(span); kRoot when the span head is the sentence root.
int SyntacticParent(const Span &span, const Sentence &sentence);

}  // namespace spanie

#endif  // SPANIE_SPANS_H_
