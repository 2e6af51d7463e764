#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "fixtures.h"
#include "spanie/evaluation.h"

using namespace spanie;
using spanie::testing::WantsSentence;

namespace {

const std::string kData = SPANIE_DATA_DIR;

Extraction E(Span pred, std::map<ArgLabel, Span> args, double conf = 1.0) {
  return {pred, std::move(args), conf};
}

MatchPolicy Strict() {
  MatchPolicy p;
  p.predicate_rule = PredicateRule::kExactSpan;
  p.min_ratio = 1.0;
  return p;
}

Dataset Load(const std::string &name) {
  return LoadCorpus(kData + "/" + name);
}

// Piecewise-linear interpolant through the points, integrated segment by
// segment with Simpson's rule in extended precision (exact for lines).
long double ReferenceArea(std::vector<std::pair<double, double>> rp) {
  std::sort(rp.begin(), rp.end());
  long double area = static_cast<long double>(rp.front().first) * rp.front().second;
  for (std::size_t k = 1; k < rp.size(); ++k) {
    long double a = rp[k - 1].first, b = rp[k].first;
    long double fa = rp[k - 1].second, fb = rp[k].second;
    long double fm = (fa + fb) / 2;
    area += (b - a) / 6 * (fa + 4 * fm + fb);
  }
  return area;
}

}  // namespace

TEST_CASE("match examples") {
  Sentence s = WantsSentence();
  Extraction g = E(Span(1, 1), {{ArgLabel::kA0, Span(0, 1)}, {ArgLabel::kA1, Span(2, 5)}});
  for (PredicateRule rule : {PredicateRule::kExactSpan, PredicateRule::kHeadContainment}) {
    for (double ratio : {0.1, 0.5, 1.0}) {
      for (bool all : {false, true}) {
        MatchPolicy p;
        p.predicate_rule = rule;
        p.min_ratio = ratio;
        p.require_all_gold_args = all;
        CHECK(MatchExtraction(g, g, s, p));
      }
    }
  }
  CHECK_FALSE(MatchExtraction(E(Span(4, 5), {}), g, s, {}));
  Extraction wide = E(Span(1, 1), {{ArgLabel::kA0, Span(0, 3)}});
  CHECK(MatchExtraction(wide, E(Span(1, 1), {{ArgLabel::kA0, Span(0, 1)}}), s, Strict()));
  Extraction half = E(Span(1, 1), {{ArgLabel::kA0, Span(1, 2)}});
  Extraction gold_a0 = E(Span(1, 1), {{ArgLabel::kA0, Span(0, 1)}});
  MatchPolicy p;
  CHECK(MatchExtraction(half, gold_a0, s, p));
  p.min_ratio = 0.6;
  CHECK_FALSE(MatchExtraction(half, gold_a0, s, p));
}

TEST_CASE("head containment and missing labels") {
  Sentence s = WantsSentence();
  // Head of [wants to sell] is "wants".
  Extraction g = E(Span(1, 3), {{ArgLabel::kA0, Span(0, 0)}});
  CHECK(MatchExtraction(E(Span(1, 1), {{ArgLabel::kA0, Span(0, 0)}}), g, s, {}));
  CHECK_FALSE(MatchExtraction(E(Span(3, 3), {{ArgLabel::kA0, Span(0, 0)}}), g, s, {}));
  CHECK_FALSE(MatchExtraction(E(Span(1, 1), {{ArgLabel::kA0, Span(0, 0)}}), g, s, Strict()));
  Extraction bare = E(Span(1, 3), {});
  MatchPolicy p;
  CHECK(MatchExtraction(bare, g, s, p));
  p.require_all_gold_args = true;
  CHECK_FALSE(MatchExtraction(bare, g, s, p));
  MatchPolicy bad;
  bad.min_ratio = 0.0;
  CHECK_THROWS_AS(bad.Validate(), Error);
  bad.min_ratio = 1.5;
  CHECK_THROWS_AS(bad.Validate(), Error);
}

TEST_CASE("cross-sentence comparison is rejected") {
  Sentence a = WantsSentence();
  Sentence b = spanie::testing::PurchaseSentence();
  Extraction e = E(Span(1, 1), {});
  CHECK_THROWS_AS(MatchExtraction(e, a, e, b, {}), Error);
  CHECK(MatchExtraction(e, a, e, a, {}));
}

TEST_CASE("threshold examples") {
  Dataset gold = Load("eval_gold.jsonl");
  PRPoint p = ScoreAtThreshold(gold, gold, 0.5, {});
  CHECK(p.precision == 1.0);
  CHECK(p.recall == 1.0);
  CHECK_FALSE(p.precision_undefined);

  Dataset one = gold;
  one[0].extractions.resize(1);
  one[1].extractions.clear();
  Dataset two_gold = gold;
  two_gold[1].extractions.clear();
  p = ScoreAtThreshold(one, two_gold, 0.5, {});
  CHECK(p.precision == 1.0);
  CHECK(p.recall == 0.5);

  p = ScoreAtThreshold(gold, gold, 1.5, {});
  CHECK(p.kept == 0);
  CHECK(p.recall == 0.0);
  CHECK(p.precision == 1.0);
  CHECK(p.precision_undefined);
}

TEST_CASE("five-extraction fixture reproduces its hand-computed curve") {
  Dataset sys = Load("eval_system.jsonl");
  Dataset gold = Load("eval_gold.jsonl");
  std::vector<PRPoint> curve = PrCurve(sys, gold, Strict());
  struct Expected {
    double t, p, r;
    std::size_t matched, kept;
  };
  const Expected expected[] = {{0.9, 1.0, 1.0 / 3, 1, 1},
                               {0.8, 0.5, 1.0 / 3, 1, 2},
                               {0.7, 2.0 / 3, 2.0 / 3, 2, 3},
                               {0.6, 0.5, 2.0 / 3, 2, 4},
                               {0.5, 0.6, 1.0, 3, 5}};
  REQUIRE(curve.size() == 5);
  for (int k = 0; k < 5; ++k) {
    CHECK(curve[k].threshold == expected[k].t);
    CHECK(std::abs(curve[k].precision - expected[k].p) < 1e-12);
    CHECK(std::abs(curve[k].recall - expected[k].r) < 1e-12);
    CHECK(curve[k].matched == expected[k].matched);
    CHECK(curve[k].kept == expected[k].kept);
    CHECK(curve[k].gold == 3);
  }
  // 1/3 + 7/36 + 11/60 with the extension, 7/36 + 11/60 without.
  CHECK(std::abs(Auc(curve) - 32.0 / 45) < 1e-12);
  CHECK(std::abs(Auc(curve, false) - 17.0 / 45) < 1e-12);
  CHECK(std::abs(BestF1(curve) - 0.75) < 1e-12);

  // The looser default policy credits the 0.8 extraction's half-span A1.
  PRPoint loose = ScoreAtThreshold(sys, gold, 0.8, {});
  CHECK(loose.matched == 2);
}

TEST_CASE("identical system tuples are matched before looser ones") {
  Dataset gold = Load("eval_gold.jsonl");
  Dataset sys = gold;
  sys[0].extractions = {E(Span(1, 1), {{ArgLabel::kA0, Span(0, 0)}}, 0.9)};
  // Only the first gold predicate contains the system predicate's token.
  std::vector<int> m = MatchSentence(sys[0], gold[0], 0.0, {});
  CHECK(m == std::vector<int>{0});
  sys[0].extractions = {E(Span(1, 1), {{ArgLabel::kA0, Span(0, 0)}, {ArgLabel::kA1, Span(2, 5)}}, 0.9),
                        E(Span(1, 1), {{ArgLabel::kA0, Span(0, 0)}, {ArgLabel::kA1, Span(2, 5)}}, 0.8)};
  m = MatchSentence(sys[0], gold[0], 0.0, {});
  CHECK(m == std::vector<int>{0, -1});
}

TEST_CASE("auc and best F1 examples") {
  PRPoint a;
  a.recall = 1.0;
  a.precision = 1.0;
  CHECK(Auc({a}) == 1.0);
  CHECK(BestF1({a}) == 1.0);
  PRPoint b, c;
  b.recall = 0.5;
  b.precision = 1.0;
  c.recall = 1.0;
  c.precision = 0.5;
  CHECK(Auc({b, c}) == 0.875);
  CHECK(Auc({c, b}) == 0.875);
  PRPoint d, e;
  d.precision = 1.0;
  d.recall = 0.5;
  e.precision = 0.6;
  e.recall = 0.6;
  CHECK(std::abs(BestF1({d, e}) - 2.0 / 3) < 1e-15);
  PRPoint zero;
  zero.precision = 0.0;
  zero.recall = 0.0;
  CHECK(BestF1({zero, zero}) == 0.0);
  CHECK(Auc({zero}) == 0.0);
  CHECK_THROWS_AS(Auc({}), Error);
  CHECK_THROWS_AS(BestF1({}), Error);
}

TEST_CASE("trapezoid area matches an independent integration") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 12);
    std::vector<double> recalls;
    while (static_cast<int>(recalls.size()) < n) {
      double r = u(rng);
      if (std::find(recalls.begin(), recalls.end(), r) == recalls.end()) {
        recalls.push_back(r);
      }
    }
    std::vector<PRPoint> curve;
    std::vector<std::pair<double, double>> rp;
    for (double r : recalls) {
      PRPoint p;
      p.recall = r;
      p.precision = u(rng);
      curve.push_back(p);
      rp.emplace_back(r, p.precision);
    }
    std::shuffle(curve.begin(), curve.end(), rng);
    double got = Auc(curve);
    CHECK(std::abs(got - static_cast<double>(ReferenceArea(rp))) < 1e-12);
    CHECK(got >= 0.0);
    CHECK(got <= 1.0);
  }
}

TEST_CASE("gold against itself scores exactly one") {
  Dataset gold = Load("toy_corpus.jsonl");
  Dataset sys = gold;
  for (AnnotatedSentence &as : sys) {
    for (Extraction &e : as.extractions) e.confidence = 1.0;
  }
  for (PredicateRule rule : {PredicateRule::kExactSpan, PredicateRule::kHeadContainment}) {
    MatchPolicy p;
    p.predicate_rule = rule;
    EvalSummary s = Evaluate(sys, gold, p);
    CHECK(s.auc == 1.0);
    CHECK(s.best_f1 == 1.0);
    CHECK(s.curve.size() == 1);
  }
}

TEST_CASE("empty system output gives one undefined-precision point") {
  Dataset gold = Load("eval_gold.jsonl");
  Dataset sys = gold;
  for (AnnotatedSentence &as : sys) as.extractions.clear();
  EvalSummary s = Evaluate(sys, gold, {});
  REQUIRE(s.curve.size() == 1);
  CHECK(s.curve[0].precision_undefined);
  CHECK(s.curve[0].recall == 0.0);
  CHECK(s.auc == 0.0);
  CHECK(s.best_f1 == 0.0);
}

TEST_CASE("scoring ignores sentence and extraction order") {
  Dataset sys = Load("eval_system.jsonl");
  Dataset gold = Load("eval_gold.jsonl");
  std::vector<PRPoint> base = PrCurve(sys, gold, {});
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    Dataset s2 = sys, g2 = gold;
    std::shuffle(s2.begin(), s2.end(), rng);
    std::shuffle(g2.begin(), g2.end(), rng);
    for (AnnotatedSentence &as : s2) std::shuffle(as.extractions.begin(), as.extractions.end(), rng);
    for (AnnotatedSentence &as : g2) std::shuffle(as.extractions.begin(), as.extractions.end(), rng);
    std::vector<PRPoint> again = PrCurve(s2, g2, {});
    REQUIRE(again.size() == base.size());
    for (std::size_t k = 0; k < base.size(); ++k) {
      CHECK(again[k].matched == base[k].matched);
      CHECK(again[k].kept == base[k].kept);
      CHECK(again[k].threshold == base[k].threshold);
    }
  }
}

TEST_CASE("curve properties on random systems") {
  Dataset gold = Load("toy_corpus.jsonl");
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    Dataset sys = gold;
    for (AnnotatedSentence &as : sys) {
      for (Extraction &e : as.extractions) {
        e.confidence = std::round(u(rng) * 10) / 10;
        if (u(rng) < 0.3) e.args.clear();
        if (u(rng) < 0.2) e.predicate = Span(0, 0);
      }
      if (u(rng) < 0.3) as.extractions.push_back(E(Span(0, 0), {}, u(rng)));
    }
    std::vector<PRPoint> curve = PrCurve(sys, gold, {});
    for (std::size_t k = 0; k < curve.size(); ++k) {
      CHECK(curve[k].matched <= std::min(curve[k].kept, curve[k].gold));
      if (k > 0) {
        CHECK(curve[k].threshold < curve[k - 1].threshold);
        CHECK(curve[k].recall >= curve[k - 1].recall);
      }
    }
    CHECK(Evaluate(sys, gold, {}, true, 3).auc == Evaluate(sys, gold, {}).auc);
  }
}

TEST_CASE("alignment errors list every offending id") {
  Dataset gold = Load("eval_gold.jsonl");
  Dataset sys = gold;
  sys[1].sentence.id = "zz";
  try {
    AlignById(sys, gold);
    FAIL("expected an alignment error");
  } catch (const Error &e) {
    std::string msg = e.what();
    CHECK(msg.find("'zz'") != std::string::npos);
    CHECK(msg.find("'e2'") != std::string::npos);
  }
  Dataset dup = gold;
  dup.push_back(gold[0]);
  CHECK_THROWS_AS(AlignById(dup, gold), Error);
  CHECK_THROWS_AS(AlignById(gold, dup), Error);
  Dataset shorter = gold;
  shorter[1].sentence.tokens.pop_back();
  CHECK_THROWS_AS(AlignById(shorter, gold), Error);
}
