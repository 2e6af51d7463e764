#include "spanie/training.h"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace spanie {

void TrainConfig::Validate() const {
  if (batch_size < 1) throw Error("batch size must be at least 1");
  if (!(learning_rate > 0.0)) throw Error("learning rate must be positive");
  if (!(decay >= 0.0 && decay < 1.0)) throw Error("decay must lie in [0, 1)");
  if (decay_every < 1) throw Error("decay interval must be at least 1");
  if (max_steps < 0) throw Error("max steps must be non-negative");
  if (max_arg_len < 1 || max_pred_len < 1) {
    throw Error("maximum span lengths must be at least 1");
  }
}

double CrossEntropyLoss(const Matrix &probabilities,
                        const std::vector<int> &gold) {
  if (static_cast<Eigen::Index>(gold.size()) > probabilities.cols()) {
    throw Error("more gold labels than probability columns");
  }
  double loss = 0.0;
  for (std::size_t l = 0; l < gold.size(); ++l) {
    if (gold[l] < 0) continue;
    if (gold[l] >= probabilities.rows()) {
      throw Error("gold candidate index " + std::to_string(gold[l]) +
                  " out of range for " +
                  std::to_string(probabilities.rows()) + " candidates");
    }
    loss -= std::log(probabilities(gold[l], static_cast<Eigen::Index>(l)));
  }
  return loss;
}

std::vector<Example> MakeArgumentExamples(const Dataset &dataset,
                                          const TrainConfig &config) {
  std::vector<Example> out;
  for (const AnnotatedSentence &as : dataset) {
    for (const Extraction &e : as.extractions) {
      if (e.confidence < config.confidence_floor) continue;
      Example ex;
      ex.sentence = &as.sentence;
      ex.predicate = e.predicate;
      ex.args = e.args;
      ex.weight = config.weighted_loss ? e.confidence : 1.0;
      out.push_back(std::move(ex));
    }
  }
  return out;
}

std::vector<Example> MakePredicateExamples(const Dataset &dataset,
                                           const TrainConfig &config) {
  std::vector<Example> out;
  for (const AnnotatedSentence &as : dataset) {
    Example ex;
    ex.sentence = &as.sentence;
    double best = -1.0;
    for (const Extraction &e : as.extractions) {
      if (e.confidence < config.confidence_floor) continue;
      if (std::find(ex.gold_predicates.begin(), ex.gold_predicates.end(),
                    e.predicate) == ex.gold_predicates.end()) {
        ex.gold_predicates.push_back(e.predicate);
      }
      best = std::max(best, e.confidence);
    }
    if (ex.gold_predicates.empty()) continue;
    ex.weight = config.weighted_loss ? best : 1.0;
    out.push_back(std::move(ex));
  }
  return out;
}

CandidateConfig TrainingCandidates(const TrainConfig &config,
                                   const std::optional<Span> &predicate) {
  CandidateConfig c;
  c.max_arg_len = config.max_arg_len;
  c.max_pred_len = config.max_pred_len;
  c.enforce_max_len = config.enforce_max_len;
  c.enforce_syntactic = config.enforce_syntactic;
  c.predicate_span = predicate;
  c.include_null = predicate.has_value();
  return c;
}

namespace {

// log-softmax of one column, stable under large scores.
Vector LogSoftmax(const Vector &scores) {
  double m = scores.maxCoeff();
  double lse = m + std::log((scores.array() - m).exp().sum());
  return (scores.array() - lse).matrix();
}

}  // namespace

ExampleLoss ComputeExampleLoss(const Model &model, const Example &example,
                               const TrainConfig &config,
                               std::mt19937_64 *dropout_rng, double scale,
                               Parameters *grads) {
  const Sentence &sentence = *example.sentence;
  const bool argument = model.config().kind == ModelKind::kArgument;
  if (argument != example.predicate.has_value()) {
    throw Error("example does not match the model kind");
  }
  std::vector<Span> candidates =
      CandidateSpans(sentence, TrainingCandidates(config, example.predicate));
  ExampleLoss result;
  if (candidates.empty()) return result;

  ForwardPass pass =
      Forward(model, sentence, example.predicate, std::move(candidates),
              dropout_rng);
  const Matrix &scores = pass.scores();
  const Eigen::Index k = scores.rows();
  Matrix d_scores = Matrix::Zero(k, scores.cols());

  if (argument) {
    const Eigen::Index null_index = k - 1;
    for (ArgLabel label : kArgLabels) {
      const int l = LabelIndex(label);
      Eigen::Index gold = null_index;
      if (auto it = example.args.find(label); it != example.args.end()) {
        auto pos = std::find(pass.candidates.begin(), pass.candidates.end(),
                             it->second);
        if (pos == pass.candidates.end()) {
          ++result.untrainable_labels;
          continue;
        }
        gold = pos - pass.candidates.begin();
      }
      Vector log_p = LogSoftmax(scores.col(l));
      result.loss -= log_p(gold);
      d_scores.col(l) = log_p.array().exp().matrix();
      d_scores(gold, l) -= 1.0;
    }
  } else {
    const int pred = static_cast<int>(PredLabel::kPred);
    const int not_pred = static_cast<int>(PredLabel::kNotPred);
    for (Eigen::Index c = 0; c < k; ++c) {
      bool is_gold = std::find(example.gold_predicates.begin(),
                               example.gold_predicates.end(),
                               pass.candidates[c]) !=
                     example.gold_predicates.end();
      int target = is_gold ? pred : not_pred;
      Vector log_p = LogSoftmax(scores.row(c).transpose());
      result.loss -= log_p(target);
      d_scores.row(c) = log_p.array().exp().matrix().transpose();
      d_scores(c, target) -= 1.0;
    }
  }

  if (!std::isfinite(result.loss)) {
    throw TrainingError("non-finite loss on sentence '" + sentence.id + "'");
  }
  if (grads != nullptr) {
    const double factor = scale * example.weight;
    if (factor != 0.0) {
      d_scores *= factor;
      Backward(model, sentence, pass, d_scores, grads);
    }
  }
  return result;
}

double LearningRateAt(const TrainConfig &config, long completed_steps) {
  const long k = completed_steps / config.decay_every;
  if (config.decay_form == DecayForm::kInverse) {
    return config.learning_rate / (1.0 + config.decay * static_cast<double>(k));
  }
  return config.learning_rate *
         std::pow(1.0 - config.decay, static_cast<double>(k));
}

Trainer::Trainer(Model *model, const TrainConfig &config)
    : model_(model),
      config_(config),
      grads_(model->params().ZerosLike()),
      first_moment_(model->params().ZerosLike()),
      second_moment_(model->params().ZerosLike()),
      dropout_rng_(config.seed ^ 0x9e3779b97f4a7c15ULL) {
  config_.Validate();
}

double Trainer::Gradient(std::span<const Example> batch, Parameters *grads,
                         std::mt19937_64 *dropout_rng) const {
  if (batch.empty()) throw Error("empty batch");
  grads->SetZero();
  const double scale = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  for (const Example &ex : batch) {
    ExampleLoss el =
        ComputeExampleLoss(*model_, ex, config_, dropout_rng, scale, grads);
    total += WeightedLoss(el.loss, ex.weight);
  }
  return total * scale;
}

double Trainer::Step(std::span<const Example> batch) {
  std::mt19937_64 *rng =
      model_->config().dropout > 0.0 ? &dropout_rng_ : nullptr;
  double loss = Gradient(batch, &grads_, rng);

  const double lr = learning_rate();
  ++steps_;
  const double b1 = config_.adam_beta1;
  const double b2 = config_.adam_beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(steps_));

  // Walk the four tensor sets in lockstep.
  std::vector<Matrix *> g, m, v;
  grads_.ForEach([&g](const std::string &, Matrix &t) { g.push_back(&t); });
  first_moment_.ForEach(
      [&m](const std::string &, Matrix &t) { m.push_back(&t); });
  second_moment_.ForEach(
      [&v](const std::string &, Matrix &t) { v.push_back(&t); });
  std::size_t idx = 0;
  model_->mutable_params().ForEach([&](const std::string &name, Matrix &p) {
    const std::size_t i = idx++;
    if (!model_->IsTrainable(name) || p.size() == 0) return;
    m[i]->array() = b1 * m[i]->array() + (1.0 - b1) * g[i]->array();
    v[i]->array() = b2 * v[i]->array() + (1.0 - b2) * g[i]->array().square();
    p.array() -= lr * (m[i]->array() / correction1) /
                 ((v[i]->array() / correction2).sqrt() + config_.adam_epsilon);
  });

  if (steps_ % 100 == 0 && !model_->params().AllFinite()) {
    throw TrainingError("non-finite parameter after step " +
                        std::to_string(steps_));
  }
  return loss;
}

TrainResult Train(Model *model, const std::vector<Example> &examples,
                  const TrainConfig &config, const TrainHooks &hooks) {
  config.Validate();
  TrainResult result;
  if (config.max_steps == 0) return result;
  if (examples.empty()) throw Error("no training examples");

  Trainer trainer(model, config);
  std::mt19937_64 shuffle_rng(config.seed);
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), shuffle_rng);
  std::size_t cursor = 0;

  std::vector<Example> batch;
  double window_loss = 0.0;
  long window_steps = 0;
  while (trainer.steps() < config.max_steps) {
    batch.clear();
    while (static_cast<int>(batch.size()) < config.batch_size) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        cursor = 0;
      }
      batch.push_back(examples[order[cursor++]]);
    }
    const double lr = trainer.learning_rate();
    window_loss += trainer.Step(batch);
    ++window_steps;
    const long step = trainer.steps();
    if (step % config.log_every == 0 || step == config.max_steps) {
      LossPoint point{step, lr, window_loss / static_cast<double>(window_steps)};
      result.curve.push_back(point);
      if (hooks.on_log) hooks.on_log(point);
      window_loss = 0.0;
      window_steps = 0;
    }
    if (hooks.on_checkpoint && hooks.checkpoint_every > 0 &&
        step % hooks.checkpoint_every == 0 && step != config.max_steps) {
      hooks.on_checkpoint(step);
    }
  }
  result.steps = trainer.steps();
  if (hooks.on_checkpoint) hooks.on_checkpoint(result.steps);
  return result;
}

}  // namespace spanie
