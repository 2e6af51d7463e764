#include "spanie/gradcheck.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "spanie/network.h"
#include "spanie/spans.h"
#include "spanie/synthetic.h"
#include "spanie/training.h"

namespace spanie {

double RelativeError(double analytic, double numeric, double floor) {
  double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

namespace {

using MatrixL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
using VectorL = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

struct Evaluation {
  long double loss = 0.0L;
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> active;
};

// Dropout masks drawn in the same order as the encoder draws them.
std::vector<Matrix> DrawMasks(const ModelConfig &c, int n,
                              const std::mt19937_64 &seed_rng) {
  std::vector<Matrix> masks;
  if (c.dropout <= 0.0) return masks;
  std::mt19937_64 rng = seed_rng;
  std::bernoulli_distribution keep(1.0 - c.dropout);
  const double scale = 1.0 / (1.0 - c.dropout);
  for (int layer = 0; layer < c.layers; ++layer) {
    Matrix m(layer == 0 ? c.feature_dim() : c.state_dim(), n);
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      for (Eigen::Index r = 0; r < m.rows(); ++r) {
        m(r, j) = keep(rng) ? scale : 0.0;
      }
    }
    masks.push_back(std::move(m));
  }
  return masks;
}

long double SigmoidL(long double x) { return 1.0L / (1.0L + std::exp(-x)); }

MatrixL RunLstm(const MatrixL &input, const LstmWeights &w, int h,
                bool reverse) {
  const MatrixL wi = w.input.cast<long double>();
  const MatrixL wr = w.recurrent.cast<long double>();
  const VectorL b = w.bias.col(0).cast<long double>();
  const Eigen::Index n = input.cols();
  MatrixL out(h, n);
  VectorL hp = VectorL::Zero(h), cp = VectorL::Zero(h);
  for (Eigen::Index step = 0; step < n; ++step) {
    const Eigen::Index t = reverse ? n - 1 - step : step;
    VectorL a = wi * input.col(t) + wr * hp + b;
    VectorL c(h), hn(h);
    for (int k = 0; k < h; ++k) {
      c(k) = SigmoidL(a(h + k)) * cp(k) + SigmoidL(a(k)) * std::tanh(a(2 * h + k));
      hn(k) = SigmoidL(a(3 * h + k)) * std::tanh(c(k));
    }
    out.col(t) = hn;
    hp = hn;
    cp = c;
  }
  return out;
}

long double LogSumExp(const VectorL &v) {
  const long double m = v.maxCoeff();
  return m + std::log((v.array() - m).exp().sum());
}

// Weighted loss recomputed in extended precision, independent of the
// network code, so finite differences are not swamped by rounding.
Evaluation Evaluate(const Model &model, const Example &ex,
                    const std::vector<Span> &candidates,
                    const std::vector<int> &targets,
                    const std::vector<Matrix> &masks) {
  const ModelConfig &c = model.config();
  const Parameters &p = model.params();
  const Sentence &sentence = *ex.sentence;
  const int n = sentence.size();
  const FeatureIds ids = BuildFeatureIds(model, sentence, ex.predicate);

  MatrixL x(c.feature_dim(), n);
  for (int i = 0; i < n; ++i) {
    x.col(i) << p.word.col(ids.word[i]).cast<long double>(),
        p.pos.col(ids.pos[i]).cast<long double>(),
        p.pred_flag.col(ids.pred_flag[i]).cast<long double>(),
        p.dep.col(ids.dep[i]).cast<long double>();
  }
  for (int layer = 0; layer < c.layers; ++layer) {
    if (!masks.empty()) x = x.cwiseProduct(masks[layer].cast<long double>());
    MatrixL next(2 * c.hidden, n);
    next.topRows(c.hidden) = RunLstm(x, p.lstm[2 * layer], c.hidden, false);
    next.bottomRows(c.hidden) =
        RunLstm(x, p.lstm[2 * layer + 1], c.hidden, true);
    x = std::move(next);
  }

  const Eigen::Index d = x.rows();
  const Eigen::Index k = static_cast<Eigen::Index>(candidates.size());
  MatrixL feats(c.span_dim(), k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const Span &s = candidates[j];
    if (s.is_null()) {
      feats.col(j) = p.null_span.col(0).cast<long double>();
      continue;
    }
    VectorL hi = x.col(s.start()), hj = x.col(s.end());
    feats.col(j).head(4 * d) << hi, hj, hi + hj, hi - hj;
    if (c.use_syntax_feature) {
      const int parent = SyntacticParent(s, sentence);
      feats.col(j).tail(d) = parent == kRoot
                                 ? VectorL(p.root_state.col(0).cast<long double>())
                                 : VectorL(x.col(parent));
    }
  }
  MatrixL pre = p.ff_hidden_w.cast<long double>() * feats;
  pre.colwise() += p.ff_hidden_b.col(0).cast<long double>();
  MatrixL act = c.activation == Activation::kRelu
                    ? MatrixL(pre.cwiseMax(0.0L))
                    : MatrixL(pre.array().tanh().matrix());
  MatrixL scores = p.ff_out_w.cast<long double>() * act;
  scores.colwise() += p.ff_out_b.col(0).cast<long double>();  // labels x K

  Evaluation out;
  out.active = pre.array() > 0.0L;
  if (c.kind == ModelKind::kArgument) {
    for (Eigen::Index l = 0; l < scores.rows(); ++l) {
      VectorL row = scores.row(l).transpose();
      out.loss += LogSumExp(row) - row(targets[l]);
    }
  } else {
    for (Eigen::Index j = 0; j < k; ++j) {
      VectorL col = scores.col(j);
      out.loss += LogSumExp(col) - col(targets[j]);
    }
  }
  out.loss *= ex.weight;
  return out;
}

void AddNoise(Parameters &params, std::mt19937_64 &rng) {
  std::uniform_real_distribution<double> noise(-0.3, 0.3);
  params.ForEach([&](const std::string &, Matrix &m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] += noise(rng);
  });
}

}  // namespace

GradCheckReport RunGradCheck(const GradCheckOptions &options) {
  std::mt19937_64 rng(options.seed);
  const std::vector<std::string> words = {"the", "keys", "were", "locked",
                                          "in", "car", "unseen"};
  const std::vector<std::string> pos = {"DET", "NOUN", "VERB", "ADP"};
  const std::vector<std::string> deps = {"det", "nsubj", "root", "prep",
                                         "pobj", "odd"};
  std::uniform_int_distribution<int> length(4, 6);
  Sentence sentence = RandomSentence(length(rng), rng, words, pos, deps,
                                     "gradcheck-" + std::to_string(options.seed));
  const int n = sentence.size();

  // The last word and dependency label stay out of the vocabularies so the
  // UNK rows get exercised.
  std::vector<std::string> known_words(words.begin(), words.end() - 1);
  std::uniform_real_distribution<double> unit(-0.5, 0.5);
  Matrix vectors(static_cast<Eigen::Index>(known_words.size()) + 1, 4);
  for (Eigen::Index i = 0; i < vectors.size(); ++i) vectors.data()[i] = unit(rng);
  EmbeddingTable table(known_words, vectors);
  std::vector<std::string> known_deps(deps.begin(), deps.end() - 1);

  ModelConfig config;
  config.word_dim = 4;
  config.pos_dim = 3;
  config.dep_dim = 3;
  config.pred_flag_dim = 2;
  config.hidden = 3;
  config.layers = 2;
  config.ff_hidden = 5;
  config.dropout = options.dropout;
  config.use_syntax_feature = options.use_syntax_feature;
  config.activation = options.activation;
  config.train_word_embeddings = true;

  TrainConfig train;
  train.enforce_max_len = false;
  // Unconstrained spans also reach the multi-head branch of the syntax
  // feature.
  train.enforce_syntactic = false;

  GradCheckReport report;
  for (ModelKind kind : {ModelKind::kPredicate, ModelKind::kArgument}) {
    config.kind = kind;
    Model model(config, table, pos, known_deps, rng());
    AddNoise(model.mutable_params(), rng);

    Example ex;
    ex.sentence = &sentence;
    ex.weight = std::uniform_real_distribution<double>(0.2, 1.0)(rng);
    if (kind == ModelKind::kArgument) {
      ex.predicate = RandomSpan(n, rng);
    } else {
      ex.gold_predicates = {RandomSpan(n, rng), RandomSpan(n, rng)};
    }
    std::vector<Span> candidates =
        CandidateSpans(sentence, TrainingCandidates(train, ex.predicate));
    std::vector<int> targets;
    if (kind == ModelKind::kArgument) {
      std::bernoulli_distribution present(0.6);
      for (ArgLabel label : kArgLabels) {
        std::uniform_int_distribution<std::size_t> pick(0,
                                                         candidates.size() - 2);
        if (candidates.size() > 1 && present(rng)) {
          ex.args[label] = candidates[pick(rng)];
          targets.push_back(static_cast<int>(
              std::find(candidates.begin(), candidates.end(), ex.args[label]) -
              candidates.begin()));
        } else {
          targets.push_back(static_cast<int>(candidates.size()) - 1);
        }
      }
    } else {
      for (const Span &c : candidates) {
        bool gold = std::find(ex.gold_predicates.begin(),
                              ex.gold_predicates.end(),
                              c) != ex.gold_predicates.end();
        targets.push_back(static_cast<int>(gold ? PredLabel::kPred
                                                : PredLabel::kNotPred));
      }
    }

    const std::mt19937_64 dropout_rng(rng());
    Parameters grads = model.params().ZerosLike();
    {
      std::mt19937_64 r = dropout_rng;
      ComputeExampleLoss(model, ex, train,
                         config.dropout > 0.0 ? &r : nullptr, 1.0, &grads);
    }
    const std::vector<Matrix> masks =
        DrawMasks(config, n, dropout_rng);
    const Evaluation base = Evaluate(model, ex, candidates, targets, masks);

    std::vector<std::pair<std::string, Matrix *>> grad_tensors;
    grads.ForEach([&grad_tensors](const std::string &name, Matrix &m) {
      grad_tensors.emplace_back(name, &m);
    });
    std::size_t idx = 0;
    model.mutable_params().ForEach([&](const std::string &name, Matrix &p) {
      const Matrix &g = *grad_tensors[idx++].second;
      GradCheckGroup group;
      group.model = std::string(ModelKindName(kind));
      group.tensor = name;
      for (Eigen::Index i = 0; i < p.size(); ++i) {
        const double saved = p.data()[i];
        p.data()[i] = saved + options.epsilon;
        const double up = p.data()[i];
        Evaluation plus = Evaluate(model, ex, candidates, targets, masks);
        p.data()[i] = saved - options.epsilon;
        const double down = p.data()[i];
        Evaluation minus = Evaluate(model, ex, candidates, targets, masks);
        p.data()[i] = saved;
        if (config.activation == Activation::kRelu &&
            ((plus.active != base.active).any() ||
             (minus.active != base.active).any())) {
          ++group.skipped;
          continue;
        }
        const double numeric = static_cast<double>(
            (plus.loss - minus.loss) / (static_cast<long double>(up) - down));
        const double analytic = g.data()[i];
        group.max_relative_error =
            std::max(group.max_relative_error,
                     RelativeError(analytic, numeric, options.floor));
        group.max_abs_gradient =
            std::max(group.max_abs_gradient, std::abs(analytic));
        ++group.checked;
      }
      report.max_relative_error =
          std::max(report.max_relative_error, group.max_relative_error);
      report.groups.push_back(std::move(group));
    });
  }
  report.passed = report.max_relative_error < options.tolerance;
  return report;
}

}  // namespace spanie
