#include <algorithm>
#include <random>
#include <set>
#include <tuple>

#include "doctest.h"
#include "fixtures.h"
#include "spanie/inference.h"
#include "spanie/spans.h"
#include "spanie/synthetic.h"

using namespace spanie;
using spanie::testing::TinyModel;
using spanie::testing::WantsSentence;

namespace {

bool Contains(const Span &outer, const Span &inner) {
  return inner.start() >= outer.start() && inner.end() <= outer.end();
}

// Pairwise filter written out directly: keep a span only if no other distinct
// span contains it.
std::set<std::pair<int, int>> BruteSubsumption(const std::vector<Span> &spans) {
  std::set<std::pair<int, int>> out;
  for (const Span &a : spans) {
    bool inside = false;
    for (const Span &b : spans) {
      if (!(a == b) && Contains(b, a)) inside = true;
    }
    if (!inside) out.insert({a.start(), a.end()});
  }
  return out;
}

// Reference greedy scan: explicit sort key, then a straight replay.
std::map<ArgLabel, Span> ReplayGreedy(std::vector<ScoredTuple> tuples,
                                      bool no_reuse, bool no_overlap) {
  auto key = [](const ScoredTuple &t) {
    int start = t.span.is_null() ? 1 << 20 : t.span.start();
    int len = t.span.is_null() ? 1 << 20 : t.span.length();
    return std::make_tuple(-t.score, t.span.is_null() ? 1 : 0, start, len,
                           LabelIndex(t.label));
  };
  std::sort(tuples.begin(), tuples.end(),
            [&](const ScoredTuple &a, const ScoredTuple &b) {
              return key(a) < key(b);
            });
  std::map<ArgLabel, Span> assigned;
  std::set<ArgLabel> done;
  for (const ScoredTuple &t : tuples) {
    if (done.count(t.label)) continue;
    if (!t.span.is_null()) {
      bool ok = true;
      for (const auto &[l, s] : assigned) {
        if (no_reuse && s == t.span) ok = false;
        if (no_overlap && Overlaps(s, t.span)) ok = false;
      }
      if (!ok) continue;
      assigned[t.label] = t.span;
    }
    done.insert(t.label);
  }
  return assigned;
}

std::vector<Span> WithNull(std::vector<Span> spans) {
  spans.push_back(Span::Null());
  return spans;
}

Matrix RandomProbs(std::size_t k, std::mt19937_64 &rng, bool coarse) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix p(static_cast<Eigen::Index>(k), kNumArgLabels);
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    double v = u(rng);
    p.data()[i] = coarse ? std::round(v * 4.0) / 4.0 : v;
  }
  for (int l = 0; l < kNumArgLabels; ++l) p.col(l) /= p.col(l).sum() + 1e-9;
  return p;
}

Model SharpModel(ModelKind kind, std::uint64_t seed) {
  Model m = TinyModel(kind, false, seed);
  m.mutable_params().ff_out_w *= 8.0;
  m.mutable_params().ff_out_b.setZero();
  return m;
}

Sentence FuzzSentence(int n, std::mt19937_64 &rng) {
  return RandomSentence(n, rng, {"the", "keys", "were", "locked", "in", "car", "zz"},
                        {"X", "DET", "NOUN"}, {"dep"});
}

}  // namespace

TEST_CASE("subsumption keeps wants-to-sell over to-sell") {
  Sentence s = WantsSentence();
  std::vector<ScoredSpan> kept = {{Span(2, 3), 0.9}, {Span(1, 3), 0.7}};
  std::vector<ScoredSpan> out = FilterSubsumed(kept);
  REQUIRE(out.size() == 1);
  CHECK(out[0].span == Span(1, 3));
  CHECK(out[0].score == 0.7);
  CHECK(FilterSubsumed({}).empty());
}

TEST_CASE("subsumption: A contains B contains C leaves A") {
  std::vector<ScoredSpan> chain = {{Span(3, 4), 0.6}, {Span(1, 6), 0.6}, {Span(2, 5), 0.8}};
  std::vector<ScoredSpan> out = FilterSubsumed(chain);
  REQUIRE(out.size() == 1);
  CHECK(out[0].span == Span(1, 6));
  std::vector<ScoredSpan> dup = {{Span(0, 1), 0.6}, {Span(0, 1), 0.7}, {Span(3, 3), 0.9}};
  out = FilterSubsumed(dup);
  REQUIRE(out.size() == 2);
  CHECK(out[0].span == Span(0, 1));
  CHECK(out[1].span == Span(3, 3));
}

TEST_CASE("subsumption agrees with the pairwise filter on random span sets") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 9);
    const int count = static_cast<int>(rng() % 7);
    std::vector<ScoredSpan> spans;
    std::vector<Span> raw;
    for (int k = 0; k < count; ++k) {
      Span s = RandomSpan(n, rng);
      spans.push_back({s, 0.5});
      raw.push_back(s);
    }
    std::vector<ScoredSpan> out = FilterSubsumed(spans);
    std::set<std::pair<int, int>> got;
    for (const ScoredSpan &s : out) got.insert({s.span.start(), s.span.end()});
    CHECK(got == BruteSubsumption(raw));
    CHECK(got.size() == out.size());
    for (std::size_t i = 0; i + 1 < out.size(); ++i) {
      CHECK(out[i].span.start() <= out[i + 1].span.start());
    }
  }
}

TEST_CASE("greedy equals per-label argmax when argmaxes do not conflict") {
  std::vector<Span> cands = WithNull({Span(0, 0), Span(2, 3), Span(4, 5), Span(6, 6)});
  Matrix p = Matrix::Constant(5, kNumArgLabels, 0.05);
  p(0, 0) = 0.8;
  p(1, 1) = 0.7;
  p(2, 2) = 0.6;
  p(3, 3) = 0.55;
  ArgumentAssignment a = GreedyAssign(MakeTuples(cands, p), {});
  CHECK(a.spans.at(ArgLabel::kA0) == Span(0, 0));
  CHECK(a.spans.at(ArgLabel::kA1) == Span(2, 3));
  CHECK(a.spans.at(ArgLabel::kA2) == Span(4, 5));
  CHECK(a.spans.at(ArgLabel::kA3) == Span(6, 6));
  CHECK(a.scores.at(ArgLabel::kA2) == 0.6);
}

TEST_CASE("all-NULL argmax gives an empty argument map") {
  std::vector<Span> cands = WithNull({Span(0, 0), Span(1, 2)});
  Matrix p = Matrix::Constant(3, kNumArgLabels, 0.1);
  p.row(2).setConstant(0.8);
  ArgumentAssignment a = GreedyAssign(MakeTuples(cands, p), {});
  CHECK(a.spans.empty());
  CHECK(a.scores.empty());
}

TEST_CASE("tie order: start, then length, then label, NULL last") {
  std::vector<ScoredTuple> t = {{Span(2, 2), ArgLabel::kA0, 0.5},
                                {Span(1, 3), ArgLabel::kA0, 0.5},
                                {Span(1, 1), ArgLabel::kA1, 0.5},
                                {Span::Null(), ArgLabel::kA0, 0.5},
                                {Span(1, 1), ArgLabel::kA0, 0.5},
                                {Span(0, 0), ArgLabel::kA2, 0.4}};
  std::sort(t.begin(), t.end(), TupleBefore);
  CHECK(t[0].span == Span(1, 1));
  CHECK(t[0].label == ArgLabel::kA0);
  CHECK(t[1].span == Span(1, 1));
  CHECK(t[1].label == ArgLabel::kA1);
  CHECK(t[2].span == Span(1, 3));
  CHECK(t[3].span == Span(2, 2));
  CHECK(t[4].span.is_null());
  CHECK(t[5].score == 0.4);
}

TEST_CASE("span reuse is allowed by default and blocked by flags") {
  std::vector<Span> cands = WithNull({Span(0, 1), Span(1, 2), Span(4, 4)});
  Matrix p = Matrix::Constant(4, kNumArgLabels, 0.0);
  p.col(0) << 0.9, 0.05, 0.03, 0.02;
  p.col(1) << 0.8, 0.15, 0.03, 0.02;
  p.col(2) << 0.1, 0.1, 0.1, 0.7;
  p.col(3) << 0.1, 0.1, 0.1, 0.7;
  DecodeConfig c;
  ArgumentAssignment a = GreedyAssign(MakeTuples(cands, p), c);
  CHECK(a.spans.at(ArgLabel::kA1) == Span(0, 1));
  c.no_span_reuse = true;
  a = GreedyAssign(MakeTuples(cands, p), c);
  CHECK(a.spans.at(ArgLabel::kA1) == Span(1, 2));
  c.no_argument_overlap = true;
  a = GreedyAssign(MakeTuples(cands, p), c);
  CHECK(a.spans.at(ArgLabel::kA0) == Span(0, 1));
  CHECK(a.spans.at(ArgLabel::kA1) == Span(4, 4));
  CHECK(a.spans.count(ArgLabel::kA2) == 0);
}

TEST_CASE("greedy matches an independent replay on 200 seeded cases") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    std::mt19937_64 rng(seed);
    Sentence s = FuzzSentence(6, rng);
    CandidateConfig cc;
    cc.enforce_max_len = false;
    cc.predicate_span = RandomSpan(6, rng);
    std::vector<Span> cands = CandidateSpans(s, cc);
    Matrix p = RandomProbs(cands.size(), rng, seed % 2 == 0);
    DecodeConfig dc;
    dc.no_span_reuse = seed % 3 == 1;
    dc.no_argument_overlap = seed % 5 == 2;
    std::vector<ScoredTuple> tuples = MakeTuples(cands, p);
    ArgumentAssignment a = GreedyAssign(tuples, dc);
    CHECK(a.spans == ReplayGreedy(tuples, dc.no_span_reuse, dc.no_argument_overlap));
  }
}

TEST_CASE("extraction confidence is the plain sum") {
  CHECK(ExtractionConfidence(0.9, {{ArgLabel::kA0, 0.8}, {ArgLabel::kA1, 0.7}}) ==
        doctest::Approx(2.4).epsilon(1e-15));
  CHECK(ExtractionConfidence(0.65, {}) == 0.65);
  CHECK(ExtractionConfidence(0.65, {{ArgLabel::kA3, 0.2}}) >
        ExtractionConfidence(0.65, {{ArgLabel::kA3, 0.1}}));
}

TEST_CASE("decode configuration validation") {
  DecodeConfig c;
  CHECK_NOTHROW(c.Validate());
  c.predicate_threshold = 1.0;
  CHECK_THROWS_AS(c.Validate(), Error);
  c.predicate_threshold = 0.0;
  CHECK_THROWS_AS(c.Validate(), Error);
  c.predicate_threshold = 0.5;
  c.max_pred_len = 0;
  CHECK_THROWS_AS(c.Validate(), Error);
}

TEST_CASE("models must match their decoding stage") {
  Model pred = TinyModel(ModelKind::kPredicate);
  Model arg = TinyModel(ModelKind::kArgument);
  Sentence s = WantsSentence();
  CHECK_THROWS_AS(PredictPredicates(arg, s, {}), Error);
  CHECK_THROWS_AS(PredictArguments(pred, s, Span(1, 1), {}), Error);
  CHECK_THROWS_AS(Extract(arg, pred, s, {}), Error);
}

TEST_CASE("a threshold nothing reaches gives no extractions") {
  Model pred = TinyModel(ModelKind::kPredicate);
  Model arg = TinyModel(ModelKind::kArgument);
  pred.mutable_params().ff_out_w.setZero();
  pred.mutable_params().ff_out_b.setZero();
  // Both labels tie at 0.5, so anything above that rejects every span.
  DecodeConfig c;
  c.predicate_threshold = 0.6;
  CHECK(Extract(pred, arg, WantsSentence(), c).empty());
  c.predicate_threshold = 0.5;
  std::vector<Extraction> all = Extract(pred, arg, WantsSentence(), c);
  REQUIRE(all.size() == 1);
  CHECK(all[0].predicate == Span(0, 5));
}

TEST_CASE("a higher threshold can expose contained predicates") {
  // Same filter, two thresholds: the container alone, then its two parts.
  std::vector<ScoredSpan> low = {{Span(1, 3), 0.4}, {Span(1, 1), 0.9}, {Span(3, 3), 0.8}};
  CHECK(FilterSubsumed(low).size() == 1);
  std::vector<ScoredSpan> high = {{Span(1, 1), 0.9}, {Span(3, 3), 0.8}};
  CHECK(FilterSubsumed(high).size() == 2);
}

TEST_CASE("inference length limit restricts candidates") {
  Model pred = TinyModel(ModelKind::kPredicate);
  pred.mutable_params().ff_out_w.setZero();
  pred.mutable_params().ff_out_b.setZero();
  DecodeConfig c;
  c.enforce_syntactic_at_inference = false;
  c.enforce_max_len_at_inference = true;
  c.max_pred_len = 3;
  std::vector<ScoredSpan> p = PredictPredicates(pred, WantsSentence(), c);
  // Everything ties, so the survivors are the maximal spans of length 2.
  REQUIRE(p.size() == 5);
  for (const ScoredSpan &s : p) CHECK(s.span.length() == 2);
}

TEST_CASE("decoding invariants on fuzzed sentences") {
  Model pred = SharpModel(ModelKind::kPredicate, 21);
  Model arg = SharpModel(ModelKind::kArgument, 22);
  std::mt19937_64 rng(99);
  int produced = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Sentence s = FuzzSentence(1 + static_cast<int>(rng() % 9), rng);
    DecodeConfig low;
    low.predicate_threshold = 0.3;
    DecodeConfig high = low;
    high.predicate_threshold = 0.7;
    std::vector<Extraction> a = Extract(pred, arg, s, low);
    std::vector<Extraction> b = Extract(pred, arg, s, high);
    produced += static_cast<int>(a.size());
    for (const Extraction &e : b) {
      bool inside = false;
      for (const Extraction &f : a) inside = inside || Contains(f.predicate, e.predicate);
      CHECK(inside);
    }
    for (const Extraction &e : a) {
      for (const auto &[label, span] : e.args) {
        CHECK_FALSE(Overlaps(span, e.predicate));
        CHECK(span.end() < s.size());
      }
      for (const Extraction &f : a) {
        if (&e != &f) CHECK_FALSE(Contains(f.predicate, e.predicate));
      }
    }
  }
  CHECK(produced > 0);
}

TEST_CASE("ExtractAll keeps input order for any worker count") {
  Model pred = SharpModel(ModelKind::kPredicate, 31);
  Model arg = SharpModel(ModelKind::kArgument, 32);
  std::mt19937_64 rng(4);
  Dataset input;
  for (int i = 0; i < 25; ++i) {
    AnnotatedSentence as;
    as.sentence = FuzzSentence(2 + i % 7, rng);
    as.sentence.id = "f" + std::to_string(i);
    input.push_back(as);
  }
  Dataset one = ExtractAll(pred, arg, input, {}, 1);
  Dataset four = ExtractAll(pred, arg, input, {}, 4);
  REQUIRE(one.size() == input.size());
  REQUIRE(four.size() == input.size());
  for (std::size_t i = 0; i < input.size(); ++i) {
    CHECK(one[i].sentence.id == input[i].sentence.id);
    CHECK(four[i].sentence.id == input[i].sentence.id);
    REQUIRE(one[i].extractions.size() == four[i].extractions.size());
    for (std::size_t k = 0; k < one[i].extractions.size(); ++k) {
      CHECK(one[i].extractions[k].predicate == four[i].extractions[k].predicate);
      CHECK(one[i].extractions[k].args == four[i].extractions[k].args);
      CHECK(one[i].extractions[k].confidence == four[i].extractions[k].confidence);
    }
  }
}
