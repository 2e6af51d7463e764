#include "spanie/inference.h"

#include <algorithm>

#include "spanie/parallel.h"
#include "spanie/spans.h"

namespace spanie {

void DecodeConfig::Validate() const {
  if (!(predicate_threshold > 0.0 && predicate_threshold < 1.0)) {
    throw Error("predicate threshold must lie in (0, 1)");
  }
  if (max_arg_len < 1 || max_pred_len < 1) {
    throw Error("maximum span lengths must be at least 1");
  }
}

bool TupleBefore(const ScoredTuple &a, const ScoredTuple &b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.span.is_null() != b.span.is_null()) return b.span.is_null();
  if (!a.span.is_null()) {
    if (a.span.start() != b.span.start()) {
      return a.span.start() < b.span.start();
    }
    if (a.span.length() != b.span.length()) {
      return a.span.length() < b.span.length();
    }
  }
  return a.label < b.label;
}

namespace {

bool ContainedIn(const Span &a, const Span &b) {
  return a.start() >= b.start() && a.end() <= b.end();
}

}  // namespace

std::vector<ScoredSpan> FilterSubsumed(const std::vector<ScoredSpan> &spans) {
  std::vector<ScoredSpan> out;
  for (const ScoredSpan &a : spans) {
    bool dropped = false;
    for (const ScoredSpan &b : spans) {
      if (!(a.span == b.span) && ContainedIn(a.span, b.span)) {
        dropped = true;
        break;
      }
    }
    if (dropped) continue;
    auto dup = std::find_if(out.begin(), out.end(), [&a](const ScoredSpan &s) {
      return s.span == a.span;
    });
    if (dup == out.end()) {
      out.push_back(a);
    } else if (a.score > dup->score) {
      dup->score = a.score;
    }
  }
  std::sort(out.begin(), out.end(), [](const ScoredSpan &a, const ScoredSpan &b) {
    return a.span < b.span;
  });
  return out;
}

std::vector<ScoredSpan> PredictPredicates(const Model &pred_model,
                                          const Sentence &sentence,
                                          const DecodeConfig &config) {
  if (pred_model.config().kind != ModelKind::kPredicate) {
    throw Error("predicate detection needs a predicate model");
  }
  CandidateConfig cc;
  cc.enforce_max_len = config.enforce_max_len_at_inference;
  cc.max_arg_len = config.max_arg_len;
  cc.max_pred_len = config.max_pred_len;
  cc.enforce_syntactic = config.enforce_syntactic_at_inference;
  cc.include_null = false;
  std::vector<Span> candidates = CandidateSpans(sentence, cc);
  if (candidates.empty()) return {};

  ForwardPass pass =
      Forward(pred_model, sentence, std::nullopt, std::move(candidates));
  Matrix probs = SoftmaxOverLabels(pass.scores());
  const int pred = static_cast<int>(PredLabel::kPred);
  std::vector<ScoredSpan> kept;
  for (std::size_t k = 0; k < pass.candidates.size(); ++k) {
    double p = probs(static_cast<Eigen::Index>(k), pred);
    if (p >= config.predicate_threshold) kept.push_back({pass.candidates[k], p});
  }
  return FilterSubsumed(kept);
}

std::vector<ScoredTuple> MakeTuples(const std::vector<Span> &candidates,
                                    const Matrix &probabilities) {
  std::vector<ScoredTuple> tuples;
  tuples.reserve(candidates.size() * kNumArgLabels);
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    for (ArgLabel label : kArgLabels) {
      tuples.push_back({candidates[k], label,
                        probabilities(static_cast<Eigen::Index>(k),
                                      LabelIndex(label))});
    }
  }
  return tuples;
}

ArgumentAssignment GreedyAssign(std::vector<ScoredTuple> tuples,
                                const DecodeConfig &config) {
  std::sort(tuples.begin(), tuples.end(), TupleBefore);
  std::map<ArgLabel, ScoredTuple> chosen;
  for (const ScoredTuple &t : tuples) {
    if (static_cast<int>(chosen.size()) == kNumArgLabels) break;
    if (chosen.count(t.label)) continue;
    if (!t.span.is_null()) {
      bool blocked = false;
      for (const auto &[label, other] : chosen) {
        if (other.span.is_null()) continue;
        if (config.no_span_reuse && other.span == t.span) blocked = true;
        if (config.no_argument_overlap && Overlaps(other.span, t.span)) {
          blocked = true;
        }
      }
      if (blocked) continue;
    }
    chosen.emplace(t.label, t);
  }
  ArgumentAssignment out;
  for (const auto &[label, t] : chosen) {
    if (t.span.is_null()) continue;
    out.spans[label] = t.span;
    out.scores[label] = t.score;
  }
  return out;
}

ArgumentAssignment PredictArguments(const Model &arg_model,
                                    const Sentence &sentence,
                                    const Span &predicate,
                                    const DecodeConfig &config) {
  if (arg_model.config().kind != ModelKind::kArgument) {
    throw Error("argument selection needs an argument model");
  }
  CandidateConfig cc;
  cc.enforce_max_len = config.enforce_max_len_at_inference;
  cc.max_arg_len = config.max_arg_len;
  cc.max_pred_len = config.max_pred_len;
  cc.enforce_syntactic = config.enforce_syntactic_at_inference;
  cc.predicate_span = predicate;
  cc.include_null = true;
  std::vector<Span> candidates = CandidateSpans(sentence, cc);

  ForwardPass pass = Forward(arg_model, sentence, predicate, candidates);
  Matrix probs(pass.scores().rows(), kNumArgLabels);
  for (int l = 0; l < kNumArgLabels; ++l) {
    probs.col(l) = SoftmaxOverCandidates(pass.scores(), l);
  }
  return GreedyAssign(MakeTuples(candidates, probs), config);
}

double ExtractionConfidence(double pred_score,
                            const std::map<ArgLabel, double> &arg_scores) {
  double cs = pred_score;
  for (const auto &[label, score] : arg_scores) cs += score;
  return cs;
}

std::vector<Extraction> Extract(const Model &pred_model, const Model &arg_model,
                                const Sentence &sentence,
                                const DecodeConfig &config) {
  config.Validate();
  std::vector<Extraction> out;
  for (const ScoredSpan &pred :
       PredictPredicates(pred_model, sentence, config)) {
    ArgumentAssignment args =
        PredictArguments(arg_model, sentence, pred.span, config);
    Extraction e;
    e.predicate = pred.span;
    e.args = std::move(args.spans);
    e.confidence = ExtractionConfidence(pred.score, args.scores);
    out.push_back(std::move(e));
  }
  return out;
}

Dataset ExtractAll(const Model &pred_model, const Model &arg_model,
                   const Dataset &input, const DecodeConfig &config,
                   int workers) {
  config.Validate();
  Dataset out(input.size());
  ParallelFor(input.size(), workers, [&](std::size_t i) {
    out[i].sentence = input[i].sentence;
    out[i].extractions =
        Extract(pred_model, arg_model, input[i].sentence, config);
  });
  return out;
}

}  // namespace spanie
