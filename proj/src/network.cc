#include "spanie/network.h"

#include <cmath>

#include "spanie/spans.h"

namespace spanie {

namespace {

double Sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

FeatureIds BuildFeatureIds(const Model &model, const Sentence &sentence,
                           const std::optional<Span> &predicate) {
  FeatureIds ids;
  const int n = sentence.size();
  ids.word.reserve(n);
  ids.pos.reserve(n);
  ids.pred_flag.reserve(n);
  ids.dep.reserve(n);
  for (int i = 0; i < n; ++i) {
    const Token &t = sentence.tokens[i];
    ids.word.push_back(model.WordIndex(t.surface));
    ids.pos.push_back(model.pos_vocab().IndexOf(t.pos));
    ids.pred_flag.push_back(predicate && predicate->contains(i) ? 1 : 0);
    ids.dep.push_back(model.dep_vocab().IndexOf(t.dep_rel));
  }
  return ids;
}

Matrix Featurize(const Model &model, const FeatureIds &ids) {
  const ModelConfig &c = model.config();
  const Parameters &p = model.params();
  const int n = static_cast<int>(ids.word.size());
  Matrix x(c.feature_dim(), n);
  for (int i = 0; i < n; ++i) {
    int row = 0;
    x.col(i).segment(row, c.word_dim) = p.word.col(ids.word[i]);
    row += c.word_dim;
    x.col(i).segment(row, c.pos_dim) = p.pos.col(ids.pos[i]);
    row += c.pos_dim;
    x.col(i).segment(row, c.pred_flag_dim) = p.pred_flag.col(ids.pred_flag[i]);
    row += c.pred_flag_dim;
    x.col(i).segment(row, c.dep_dim) = p.dep.col(ids.dep[i]);
  }
  return x;
}

Matrix Featurize(const Model &model, const Sentence &sentence,
                 const std::optional<Span> &predicate) {
  return Featurize(model, BuildFeatureIds(model, sentence, predicate));
}

namespace {

void FeaturizeBackward(const ModelConfig &c, const FeatureIds &ids,
                       const Matrix &d_x, Parameters *grads) {
  for (Eigen::Index i = 0; i < d_x.cols(); ++i) {
    int row = 0;
    grads->word.col(ids.word[i]) += d_x.col(i).segment(row, c.word_dim);
    row += c.word_dim;
    grads->pos.col(ids.pos[i]) += d_x.col(i).segment(row, c.pos_dim);
    row += c.pos_dim;
    grads->pred_flag.col(ids.pred_flag[i]) +=
        d_x.col(i).segment(row, c.pred_flag_dim);
    row += c.pred_flag_dim;
    grads->dep.col(ids.dep[i]) += d_x.col(i).segment(row, c.dep_dim);
  }
}

// One LSTM pass over `input` (in x T); reverse processes tokens T-1..0.
DirectionCache RunDirection(const Matrix &input, const LstmWeights &w,
                            int hidden, bool reverse) {
  const Eigen::Index n = input.cols();
  const int h = hidden;
  DirectionCache out;
  out.gates.resize(4 * h, n);
  out.cells.resize(h, n);
  out.tanh_cells.resize(h, n);
  out.hidden.resize(h, n);
  Matrix projected = w.input * input;
  projected.colwise() += w.bias.col(0);

  Vector h_prev = Vector::Zero(h);
  Vector c_prev = Vector::Zero(h);
  for (Eigen::Index step = 0; step < n; ++step) {
    Eigen::Index t = reverse ? n - 1 - step : step;
    Vector a = projected.col(t) + w.recurrent * h_prev;
    auto gates = out.gates.col(t);
    for (int k = 0; k < h; ++k) {
      gates(k) = Sigmoid(a(k));
      gates(h + k) = Sigmoid(a(h + k));
      gates(2 * h + k) = std::tanh(a(2 * h + k));
      gates(3 * h + k) = Sigmoid(a(3 * h + k));
    }
    Vector c = gates.segment(h, h).cwiseProduct(c_prev) +
               gates.segment(0, h).cwiseProduct(gates.segment(2 * h, h));
    Vector tc = c.array().tanh().matrix();
    out.cells.col(t) = c;
    out.tanh_cells.col(t) = tc;
    out.hidden.col(t) = gates.segment(3 * h, h).cwiseProduct(tc);
    h_prev = out.hidden.col(t);
    c_prev = c;
  }
  return out;
}

// Backpropagates d(hidden) through one direction; returns d(input).
Matrix BackwardDirection(const Matrix &input, const DirectionCache &cache,
                         const Matrix &d_hidden, const LstmWeights &w,
                         int hidden, bool reverse, LstmWeights *g) {
  const Eigen::Index n = input.cols();
  const int h = hidden;
  Matrix d_pre(4 * h, n);
  Matrix h_prevs = Matrix::Zero(h, n);
  Vector dh_next = Vector::Zero(h);
  Vector dc_next = Vector::Zero(h);
  for (Eigen::Index step = n - 1; step >= 0; --step) {
    Eigen::Index t = reverse ? n - 1 - step : step;
    bool first = step == 0;
    Eigen::Index t_prev = reverse ? t + 1 : t - 1;
    auto gates = cache.gates.col(t);
    auto i = gates.segment(0, h).array();
    auto f = gates.segment(h, h).array();
    auto gg = gates.segment(2 * h, h).array();
    auto o = gates.segment(3 * h, h).array();
    auto tc = cache.tanh_cells.col(t).array();

    Eigen::ArrayXd dh = d_hidden.col(t).array() + dh_next.array();
    Eigen::ArrayXd dc = dh * o * (1.0 - tc * tc) + dc_next.array();
    Eigen::ArrayXd c_prev = first ? Eigen::ArrayXd(Eigen::ArrayXd::Zero(h))
                                  : Eigen::ArrayXd(cache.cells.col(t_prev).array());
    if (!first) h_prevs.col(t) = cache.hidden.col(t_prev);

    auto d = d_pre.col(t);
    d.segment(0, h) = (dc * gg * i * (1.0 - i)).matrix();
    d.segment(h, h) = (dc * c_prev * f * (1.0 - f)).matrix();
    d.segment(2 * h, h) = (dc * i * (1.0 - gg * gg)).matrix();
    d.segment(3 * h, h) = (dh * tc * o * (1.0 - o)).matrix();

    dh_next = w.recurrent.transpose() * d;
    dc_next = (dc * f).matrix();
  }
  g->input.noalias() += d_pre * input.transpose();
  g->recurrent.noalias() += d_pre * h_prevs.transpose();
  g->bias.col(0) += d_pre.rowwise().sum();
  return w.input.transpose() * d_pre;
}

}  // namespace

EncoderCache Encode(const Matrix &features, const Parameters &params,
                    const ModelConfig &config, std::mt19937_64 *dropout_rng) {
  if (features.cols() == 0) throw Error("cannot encode an empty sequence");
  EncoderCache cache;
  cache.layers.resize(config.layers);
  const int h = config.hidden;
  const Matrix *input = &features;
  for (int layer = 0; layer < config.layers; ++layer) {
    LayerCache &lc = cache.layers[layer];
    if (dropout_rng != nullptr && config.dropout > 0.0) {
      std::bernoulli_distribution keep(1.0 - config.dropout);
      const double scale = 1.0 / (1.0 - config.dropout);
      lc.mask.resize(input->rows(), input->cols());
      for (Eigen::Index j = 0; j < lc.mask.cols(); ++j) {
        for (Eigen::Index r = 0; r < lc.mask.rows(); ++r) {
          lc.mask(r, j) = keep(*dropout_rng) ? scale : 0.0;
        }
      }
      lc.input = input->cwiseProduct(lc.mask);
    } else {
      lc.input = *input;
    }
    for (int dir = 0; dir < 2; ++dir) {
      lc.dirs[dir] =
          RunDirection(lc.input, params.lstm[2 * layer + dir], h, dir == 1);
    }
    lc.output.resize(2 * h, lc.input.cols());
    lc.output.topRows(h) = lc.dirs[0].hidden;
    lc.output.bottomRows(h) = lc.dirs[1].hidden;
    input = &lc.output;
  }
  return cache;
}

Matrix EncodeBackward(const EncoderCache &cache, const Matrix &d_output,
                      const Parameters &params, const ModelConfig &config,
                      Parameters *grads) {
  const int h = config.hidden;
  Matrix d_out = d_output;
  for (int layer = config.layers - 1; layer >= 0; --layer) {
    const LayerCache &lc = cache.layers[layer];
    Matrix d_in = Matrix::Zero(lc.input.rows(), lc.input.cols());
    for (int dir = 0; dir < 2; ++dir) {
      Matrix d_hidden = dir == 0 ? Matrix(d_out.topRows(h))
                                 : Matrix(d_out.bottomRows(h));
      d_in += BackwardDirection(lc.input, lc.dirs[dir], d_hidden,
                                params.lstm[2 * layer + dir], h, dir == 1,
                                &grads->lstm[2 * layer + dir]);
    }
    if (lc.mask.size() > 0) d_in = d_in.cwiseProduct(lc.mask);
    d_out = std::move(d_in);
  }
  return d_out;
}

Vector SpanFeature(const Matrix &states, const Span &span,
                   const Parameters &params) {
  if (span.is_null()) return params.null_span.col(0);
  const Eigen::Index d = states.rows();
  if (span.start() < 0 || span.end() >= states.cols() ||
      span.start() > span.end()) {
    throw Error("span " + ToString(span) + " out of range");
  }
  Vector f(4 * d);
  auto hi = states.col(span.start());
  auto hj = states.col(span.end());
  f.segment(0, d) = hi;
  f.segment(d, d) = hj;
  f.segment(2 * d, d) = hi + hj;
  f.segment(3 * d, d) = hi - hj;
  return f;
}

Vector SpanFeatureSyntactic(const Matrix &states, const Span &span,
                            const Sentence &sentence,
                            const Parameters &params) {
  if (span.is_null()) return params.null_span.col(0);
  if (params.root_state.rows() != states.rows()) {
    throw Error("model was built without the syntactic span feature");
  }
  const Eigen::Index d = states.rows();
  Vector f(5 * d);
  f.head(4 * d) = SpanFeature(states, span, params);
  int parent = SyntacticParent(span, sentence);
  f.tail(d) = parent == kRoot ? Vector(params.root_state.col(0))
                              : Vector(states.col(parent));
  return f;
}

Matrix SpanFeatures(const Matrix &states, const std::vector<Span> &candidates,
                    const Sentence &sentence, const Parameters &params,
                    const ModelConfig &config) {
  Matrix out(config.span_dim(), static_cast<Eigen::Index>(candidates.size()));
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    out.col(k) = config.use_syntax_feature
                     ? SpanFeatureSyntactic(states, candidates[k], sentence,
                                            params)
                     : SpanFeature(states, candidates[k], params);
  }
  return out;
}

void SpanFeaturesBackward(const Matrix &d_features,
                          const std::vector<Span> &candidates,
                          const Sentence &sentence, const ModelConfig &config,
                          Matrix *d_states, Parameters *grads) {
  const Eigen::Index d = config.state_dim();
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    const Span &s = candidates[k];
    auto df = d_features.col(k);
    if (s.is_null()) {
      grads->null_span.col(0) += df;
      continue;
    }
    d_states->col(s.start()) +=
        df.segment(0, d) + df.segment(2 * d, d) + df.segment(3 * d, d);
    d_states->col(s.end()) +=
        df.segment(d, d) + df.segment(2 * d, d) - df.segment(3 * d, d);
    if (config.use_syntax_feature) {
      int parent = SyntacticParent(s, sentence);
      if (parent == kRoot) {
        grads->root_state.col(0) += df.segment(4 * d, d);
      } else {
        d_states->col(parent) += df.segment(4 * d, d);
      }
    }
  }
}

ScoreCache ScoreSpans(const Matrix &span_features, const Parameters &params,
                      const ModelConfig &config) {
  if (span_features.cols() == 0) throw Error("no candidates to score");
  ScoreCache cache;
  cache.pre_activation = params.ff_hidden_w * span_features;
  cache.pre_activation.colwise() += params.ff_hidden_b.col(0);
  if (config.activation == Activation::kRelu) {
    cache.activation = cache.pre_activation.cwiseMax(0.0);
  } else {
    cache.activation = cache.pre_activation.array().tanh().matrix();
  }
  Matrix out = params.ff_out_w * cache.activation;
  out.colwise() += params.ff_out_b.col(0);
  cache.scores = out.transpose();
  return cache;
}

Matrix ScoreSpansBackward(const ScoreCache &cache, const Matrix &span_features,
                          const Matrix &d_scores, const Parameters &params,
                          const ModelConfig &config, Parameters *grads) {
  Matrix d_out = d_scores.transpose();  // labels x K
  grads->ff_out_w.noalias() += d_out * cache.activation.transpose();
  grads->ff_out_b.col(0) += d_out.rowwise().sum();
  Matrix d_act = params.ff_out_w.transpose() * d_out;
  Matrix d_pre;
  if (config.activation == Activation::kRelu) {
    d_pre = (cache.pre_activation.array() > 0.0)
                .select(d_act, Matrix::Zero(d_act.rows(), d_act.cols()));
  } else {
    d_pre = d_act.cwiseProduct(
        (1.0 - cache.activation.array().square()).matrix());
  }
  grads->ff_hidden_w.noalias() += d_pre * span_features.transpose();
  grads->ff_hidden_b.col(0) += d_pre.rowwise().sum();
  return params.ff_hidden_w.transpose() * d_pre;
}

Vector SoftmaxOverCandidates(const Matrix &scores, int label) {
  if (scores.rows() == 0) throw Error("softmax over zero candidates");
  Vector col = scores.col(label);
  Vector e = (col.array() - col.maxCoeff()).exp().matrix();
  return e / e.sum();
}

Matrix SoftmaxOverLabels(const Matrix &scores) {
  Matrix out(scores.rows(), scores.cols());
  for (Eigen::Index k = 0; k < scores.rows(); ++k) {
    Eigen::RowVectorXd row = scores.row(k);
    Eigen::RowVectorXd e = (row.array() - row.maxCoeff()).exp().matrix();
    out.row(k) = e / e.sum();
  }
  return out;
}

ForwardPass Forward(const Model &model, const Sentence &sentence,
                    const std::optional<Span> &predicate,
                    std::vector<Span> candidates,
                    std::mt19937_64 *dropout_rng) {
  const ModelConfig &c = model.config();
  const Parameters &p = model.params();
  ForwardPass pass;
  pass.candidates = std::move(candidates);
  pass.ids = BuildFeatureIds(model, sentence, predicate);
  pass.features = Featurize(model, pass.ids);
  pass.encoder = Encode(pass.features, p, c, dropout_rng);
  pass.span_features =
      SpanFeatures(pass.encoder.output(), pass.candidates, sentence, p, c);
  pass.scorer = ScoreSpans(pass.span_features, p, c);
  return pass;
}

void Backward(const Model &model, const Sentence &sentence,
              const ForwardPass &pass, const Matrix &d_scores,
              Parameters *grads) {
  const ModelConfig &c = model.config();
  const Parameters &p = model.params();
  Matrix d_span =
      ScoreSpansBackward(pass.scorer, pass.span_features, d_scores, p, c, grads);
  Matrix d_states = Matrix::Zero(c.state_dim(), sentence.size());
  SpanFeaturesBackward(d_span, pass.candidates, sentence, c, &d_states, grads);
  Matrix d_x = EncodeBackward(pass.encoder, d_states, p, c, grads);
  FeaturizeBackward(c, pass.ids, d_x, grads);
}

}  // namespace spanie
