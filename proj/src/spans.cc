#include "spanie/spans.h"

namespace spanie {

namespace {

void CheckBounds(const Span &span, const Sentence &sentence) {
  if (span.is_null() || span.start() < 0 || span.start() > span.end() ||
      span.end() >= sentence.size()) {
    throw Error("span " + ToString(span) + " out of range for sentence '" +
                sentence.id + "'");
  }
}

}  // namespace

std::vector<Span> EnumerateAllSpans(int n) {
  if (n < 1) throw Error("cannot enumerate spans of an empty sentence");
  std::vector<Span> spans;
  spans.reserve(static_cast<std::size_t>(n) * (n + 1) / 2);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) spans.emplace_back(i, j);
  }
  return spans;
}

bool Overlaps(const Span &a, const Span &b) {
  if (a.is_null() || b.is_null()) {
    throw Error("overlap is undefined for the NULL span");
  }
  return a.start() <= b.end() && b.start() <= a.end();
}

bool SatisfiesSyntacticConstraint(const Span &span, const Sentence &sentence) {
  CheckBounds(span, sentence);
  if (span.length() == 1) return true;
  // heads_child[k]: token start+k is the head of some other token in the span.
  std::vector<bool> heads_child(span.length(), false);
  for (int w = span.start(); w <= span.end(); ++w) {
    int head = sentence.tokens[w].dep_head;
    if (span.contains(head)) heads_child[head - span.start()] = true;
  }
  for (int w = span.start(); w <= span.end(); ++w) {
    if (heads_child[w - span.start()]) continue;
    if (span.contains(sentence.tokens[w].dep_head)) continue;
    return false;
  }
  return true;
}

std::vector<Span> CandidateSpans(const Sentence &sentence,
                                 const CandidateConfig &config) {
  const bool argument_mode = config.predicate_span.has_value();
  if (argument_mode) CheckBounds(*config.predicate_span, sentence);
  const int max_len = argument_mode ? config.max_arg_len : config.max_pred_len;
  if (config.max_arg_len < 1 || config.max_pred_len < 1) {
    throw Error("maximum span lengths must be at least 1");
  }

  std::vector<Span> out;
  for (const Span &s : EnumerateAllSpans(sentence.size())) {
    if (config.enforce_max_len && s.length() >= max_len) continue;
    if (argument_mode && Overlaps(s, *config.predicate_span)) continue;
    if (config.enforce_syntactic && !SatisfiesSyntacticConstraint(s, sentence)) {
      continue;
    }
    out.push_back(s);
  }
  if (config.include_null) out.push_back(Span::Null());
  return out;
}

int SyntacticHead(const Span &span, const Sentence &sentence) {
  CheckBounds(span, sentence);
  for (int w = span.start(); w <= span.end(); ++w) {
    if (!span.contains(sentence.tokens[w].dep_head)) return w;
  }
  // Unreachable for a valid tree: some token in any span heads outside it.
  throw Error("span " + ToString(span) + " has no external head");
}

int SyntacticParent(const Span &span, const Sentence &sentence) {
  return sentence.tokens[SyntacticHead(span, sentence)].dep_head;
}

}  // namespace spanie
