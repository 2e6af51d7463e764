// Forward and backward passes of the span scorer: token features, stacked
// BiLSTM, span features, feed-forward scorer and per-label softmax.
//
// Sequences are stored one token per column. Score matrices are
// |candidates| x |labels|.

#ifndef SPANIE_NETWORK_H_
#define SPANIE_NETWORK_H_

#include <optional>
#include <random>
#include <vector>

#include "spanie/model.h"

namespace spanie {

// Per-token row indices into the four embedding tables.
struct FeatureIds {
  std::vector<int> word;
  std::vector<int> pos;
  std::vector<int> pred_flag;
  std::vector<int> dep;
};

FeatureIds BuildFeatureIds(const Model &model, const Sentence &sentence,
                           const std::optional<Span> &predicate);

// word ⊕ pos ⊕ predicate-flag ⊕ dependency-relation, one column per token.
Matrix Featurize(const Model &model, const FeatureIds &ids);
Matrix Featurize(const Model &model, const Sentence &sentence,
                 const std::optional<Span> &predicate);

struct DirectionCache {
  Matrix gates;  // activated i, f, g, o stacked (4H x T), indexed by token
  Matrix cells;
  Matrix tanh_cells;
  Matrix hidden;
};

struct LayerCache {
  Matrix input;  // after dropout
  Matrix mask;   // empty when dropout was not applied
  DirectionCache dirs[2];
  Matrix output;  // forward ⊕ backward (2H x T)
};

struct EncoderCache {
  std::vector<LayerCache> layers;
  const Matrix &output() const { return layers.back().output; }
};

// Stacked BiLSTM. Dropout on each layer's input is applied only when
// `dropout_rng` is non-null.
EncoderCache Encode(const Matrix &features, const Parameters &params,
                    const ModelConfig &config,
                    std::mt19937_64 *dropout_rng = nullptr);

// Accumulates parameter gradients into `grads` and returns d(features).
Matrix EncodeBackward(const EncoderCache &cache, const Matrix &d_output,
                      const Parameters &params, const ModelConfig &config,
                      Parameters *grads);

// h_start ⊕ h_end ⊕ (h_start + h_end) ⊕ (h_start - h_end); NULL maps to the
// learned NULL vector (whose size includes the syntax block when enabled).
Vector SpanFeature(const Matrix &states, const Span &span,
                   const Parameters &params);

// SpanFeature ⊕ h_parent, where parent is the head of the span's syntactic
// head; the learned root state is used when that head is the sentence root.
Vector SpanFeatureSyntactic(const Matrix &states, const Span &span,
                            const Sentence &sentence,
                            const Parameters &params);

// One column per candidate, using the syntactic variant when configured.
Matrix SpanFeatures(const Matrix &states, const std::vector<Span> &candidates,
                    const Sentence &sentence, const Parameters &params,
                    const ModelConfig &config);

void SpanFeaturesBackward(const Matrix &d_features,
                          const std::vector<Span> &candidates,
                          const Sentence &sentence, const ModelConfig &config,
                          Matrix *d_states, Parameters *grads);

struct ScoreCache {
  Matrix pre_activation;  // ff_hidden x K
  Matrix activation;
  Matrix scores;  // K x labels
};

// Raw label scores for every candidate column of `span_features`.
ScoreCache ScoreSpans(const Matrix &span_features, const Parameters &params,
                      const ModelConfig &config);

// Returns d(span_features).
Matrix ScoreSpansBackward(const ScoreCache &cache, const Matrix &span_features,
                          const Matrix &d_scores, const Parameters &params,
                          const ModelConfig &config, Parameters *grads);

// Distribution over candidates (rows) for one label column.
Vector SoftmaxOverCandidates(const Matrix &scores, int label);
// Distribution over labels (columns) for each candidate row.
Matrix SoftmaxOverLabels(const Matrix &scores);

// Everything needed to backpropagate one sentence.
struct ForwardPass {
  std::vector<Span> candidates;
  FeatureIds ids;
  Matrix features;
  EncoderCache encoder;
  Matrix span_features;
  ScoreCache scorer;

  const Matrix &scores() const { return scorer.scores; }
};

ForwardPass Forward(const Model &model, const Sentence &sentence,
                    const std::optional<Span> &predicate,
                    std::vector<Span> candidates,
                    std::mt19937_64 *dropout_rng = nullptr);

void Backward(const Model &model, const Sentence &sentence,
              const ForwardPass &pass, const Matrix &d_scores,
              Parameters *grads);

}  // namespace spanie

#endif  // SPANIE_NETWORK_H_
