#include "spanie/evaluation.h"

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "spanie/parallel.h"
#include "spanie/spans.h"

namespace spanie {

void MatchPolicy::Validate() const {
  if (!(min_ratio > 0.0 && min_ratio <= 1.0)) {
    throw Error("min_ratio must lie in (0, 1]");
  }
}

namespace {

int OverlapTokens(const Span &a, const Span &b) {
  int lo = std::max(a.start(), b.start());
  int hi = std::min(a.end(), b.end());
  return hi >= lo ? hi - lo + 1 : 0;
}

bool PredicateMatches(const Span &system, const Span &gold,
                      const Sentence &sentence, PredicateRule rule) {
  if (rule == PredicateRule::kExactSpan) return system == gold;
  return system.contains(SyntacticHead(gold, sentence));
}

}  // namespace

bool MatchExtraction(const Extraction &system, const Extraction &gold,
                     const Sentence &sentence, const MatchPolicy &policy) {
  if (!PredicateMatches(system.predicate, gold.predicate, sentence,
                        policy.predicate_rule)) {
    return false;
  }
  for (const auto &[label, gold_span] : gold.args) {
    auto it = system.args.find(label);
    if (it == system.args.end()) {
      if (policy.require_all_gold_args) return false;
      continue;
    }
    double ratio = static_cast<double>(OverlapTokens(it->second, gold_span)) /
                   static_cast<double>(gold_span.length());
    if (ratio < policy.min_ratio) return false;
  }
  return true;
}

bool MatchExtraction(const Extraction &system, const Sentence &system_sentence,
                     const Extraction &gold, const Sentence &gold_sentence,
                     const MatchPolicy &policy) {
  if (system_sentence.id != gold_sentence.id ||
      system_sentence.size() != gold_sentence.size()) {
    throw Error("cannot match extractions of sentence '" + system_sentence.id +
                "' against sentence '" + gold_sentence.id + "'");
  }
  return MatchExtraction(system, gold, gold_sentence, policy);
}

AlignedCorpus AlignById(const Dataset &system, const Dataset &gold) {
  std::map<std::string, const AnnotatedSentence *> by_id;
  std::vector<std::string> problems;
  for (const AnnotatedSentence &g : gold) {
    if (!by_id.emplace(g.sentence.id, &g).second) {
      problems.push_back("duplicate gold id '" + g.sentence.id + "'");
    }
  }
  AlignedCorpus aligned;
  std::set<std::string> seen;
  for (const AnnotatedSentence &s : system) {
    if (!seen.insert(s.sentence.id).second) {
      problems.push_back("duplicate system id '" + s.sentence.id + "'");
      continue;
    }
    auto it = by_id.find(s.sentence.id);
    if (it == by_id.end()) {
      problems.push_back("system id '" + s.sentence.id + "' not in gold");
      continue;
    }
    if (it->second->sentence.size() != s.sentence.size()) {
      problems.push_back("sentence '" + s.sentence.id +
                         "' has different token counts");
      continue;
    }
    aligned.emplace_back(&s, it->second);
  }
  for (const auto &[id, g] : by_id) {
    if (!seen.count(id)) problems.push_back("gold id '" + id + "' not in system");
  }
  if (!problems.empty()) {
    std::string msg = "system and gold sentences differ:";
    for (const std::string &p : problems) msg += "\n  " + p;
    throw Error(msg);
  }
  return aligned;
}

namespace {

// Total order on extraction content, used so results do not depend on the
// order extractions were listed in.
bool ContentBefore(const Extraction &a, const Extraction &b) {
  if (!(a.predicate == b.predicate)) return a.predicate < b.predicate;
  if (a.args.size() != b.args.size()) return a.args.size() < b.args.size();
  for (auto ia = a.args.begin(), ib = b.args.begin(); ia != a.args.end();
       ++ia, ++ib) {
    if (ia->first != ib->first) return ia->first < ib->first;
    if (!(ia->second == ib->second)) return ia->second < ib->second;
  }
  return false;
}

std::vector<std::size_t> SortedOrder(const std::vector<Extraction> &items,
                                     bool by_confidence) {
  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    const Extraction &a = items[x];
    const Extraction &b = items[y];
    if (by_confidence && a.confidence != b.confidence) {
      return a.confidence > b.confidence;
    }
    return ContentBefore(a, b);
  });
  return order;
}

}  // namespace

std::vector<int> MatchSentence(const AnnotatedSentence &system,
                               const AnnotatedSentence &gold, double threshold,
                               const MatchPolicy &policy) {
  std::vector<int> result(system.extractions.size(), -1);
  std::vector<std::size_t> gold_order = SortedOrder(gold.extractions, false);
  std::vector<bool> used(gold.extractions.size(), false);
  for (std::size_t si : SortedOrder(system.extractions, true)) {
    const Extraction &e = system.extractions[si];
    if (e.confidence < threshold) continue;
    // An identical unused gold tuple is preferred over any looser match.
    int pick = -1;
    for (std::size_t gi : gold_order) {
      const Extraction &g = gold.extractions[gi];
      if (!used[gi] && g.predicate == e.predicate && g.args == e.args) {
        pick = static_cast<int>(gi);
        break;
      }
    }
    for (std::size_t k = 0; pick < 0 && k < gold_order.size(); ++k) {
      std::size_t gi = gold_order[k];
      if (used[gi]) continue;
      if (MatchExtraction(e, system.sentence, gold.extractions[gi],
                          gold.sentence, policy)) {
        pick = static_cast<int>(gi);
      }
    }
    if (pick >= 0) {
      used[pick] = true;
      result[si] = pick;
    }
  }
  return result;
}

PRPoint ScoreAtThreshold(const AlignedCorpus &aligned, double threshold,
                         const MatchPolicy &policy, int workers) {
  policy.Validate();
  std::vector<std::size_t> matched(aligned.size(), 0);
  std::vector<std::size_t> kept(aligned.size(), 0);
  ParallelFor(aligned.size(), workers, [&](std::size_t i) {
    const auto &[sys, gold] = aligned[i];
    std::vector<int> m = MatchSentence(*sys, *gold, threshold, policy);
    for (std::size_t k = 0; k < m.size(); ++k) {
      if (sys->extractions[k].confidence >= threshold) ++kept[i];
      if (m[k] >= 0) ++matched[i];
    }
  });
  PRPoint point;
  point.threshold = threshold;
  for (std::size_t i = 0; i < aligned.size(); ++i) {
    point.matched += matched[i];
    point.kept += kept[i];
    point.gold += aligned[i].second->extractions.size();
  }
  if (point.kept == 0) {
    point.precision = 1.0;
    point.precision_undefined = true;
  } else {
    point.precision = static_cast<double>(point.matched) /
                      static_cast<double>(point.kept);
  }
  point.recall = point.gold == 0 ? 0.0
                                 : static_cast<double>(point.matched) /
                                       static_cast<double>(point.gold);
  return point;
}

PRPoint ScoreAtThreshold(const Dataset &system, const Dataset &gold,
                         double threshold, const MatchPolicy &policy) {
  return ScoreAtThreshold(AlignById(system, gold), threshold, policy);
}

std::vector<PRPoint> PrCurve(const AlignedCorpus &aligned,
                             const MatchPolicy &policy, int workers) {
  std::set<double, std::greater<>> thresholds;
  for (const auto &[sys, gold] : aligned) {
    for (const Extraction &e : sys->extractions) thresholds.insert(e.confidence);
  }
  if (thresholds.empty()) {
    thresholds.insert(std::numeric_limits<double>::infinity());
  }
  std::vector<PRPoint> curve;
  for (double t : thresholds) {
    curve.push_back(ScoreAtThreshold(aligned, t, policy, workers));
  }
  return curve;
}

std::vector<PRPoint> PrCurve(const Dataset &system, const Dataset &gold,
                             const MatchPolicy &policy) {
  return PrCurve(AlignById(system, gold), policy);
}

double Auc(const std::vector<PRPoint> &curve, bool extend_to_zero) {
  if (curve.empty()) throw Error("AUC of an empty curve");
  std::vector<PRPoint> pts = curve;
  std::stable_sort(pts.begin(), pts.end(), [](const PRPoint &a, const PRPoint &b) {
    if (a.recall != b.recall) return a.recall < b.recall;
    return a.precision > b.precision;
  });
  double area = extend_to_zero ? pts.front().recall * pts.front().precision : 0.0;
  for (std::size_t k = 1; k < pts.size(); ++k) {
    area += (pts[k].recall - pts[k - 1].recall) *
            (pts[k].precision + pts[k - 1].precision) / 2.0;
  }
  return area;
}

double BestF1(const std::vector<PRPoint> &curve) {
  if (curve.empty()) throw Error("best F1 of an empty curve");
  double best = 0.0;
  for (const PRPoint &p : curve) {
    double denom = p.precision + p.recall;
    if (denom > 0.0) best = std::max(best, 2.0 * p.precision * p.recall / denom);
  }
  return best;
}

EvalSummary Evaluate(const Dataset &system, const Dataset &gold,
                     const MatchPolicy &policy, bool extend_to_zero,
                     int workers) {
  AlignedCorpus aligned = AlignById(system, gold);
  EvalSummary summary;
  for (const auto &[sys, g] : aligned) {
    summary.system += sys->extractions.size();
    summary.gold += g->extractions.size();
  }
  summary.curve = PrCurve(aligned, policy, workers);
  summary.auc = Auc(summary.curve, extend_to_zero);
  summary.best_f1 = BestF1(summary.curve);
  return summary;
}

}  // namespace spanie
