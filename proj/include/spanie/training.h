// Losses, training examples and the Adam training loop for the predicate and
// argument models.

#ifndef SPANIE_TRAINING_H_
#define SPANIE_TRAINING_H_

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "spanie/model.h"
#include "spanie/network.h"
#include "spanie/spans.h"

namespace spanie {

class TrainingError : public Error {
 public:
  using Error::Error;
};

enum class DecayForm { kMultiplicative, kInverse };

struct TrainConfig {
  int batch_size = 20;
  double learning_rate = 0.01;
  // Applied once per `decay_every` completed steps.
  double decay = 0.005;
  int decay_every = 100;
  DecayForm decay_form = DecayForm::kMultiplicative;
  long max_steps = 55470;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  bool weighted_loss = true;
  // Extractions below this confidence are not trained on.
  double confidence_floor = 0.0;
  std::uint64_t seed = 1;
  // Training-time candidate constraints.
  int max_arg_len = 10;
  int max_pred_len = 5;
  bool enforce_max_len = true;
  bool enforce_syntactic = true;
  int log_every = 100;

  void Validate() const;
};

// -sum over labels of log P(gold | label). `probabilities` holds one
// candidate distribution per label column; gold[l] < 0 means label l has no
// term.
double CrossEntropyLoss(const Matrix &probabilities,
                        const std::vector<int> &gold);

// Confidence-weighted loss: cs4 * loss.
inline double WeightedLoss(double loss, double cs4) { return cs4 * loss; }

// One training instance. Argument examples carry a predicate and its
// argument map; predicate examples carry every gold predicate of a sentence.
struct Example {
  const Sentence *sentence = nullptr;
  std::optional<Span> predicate;
  std::map<ArgLabel, Span> args;
  std::vector<Span> gold_predicates;
  double weight = 1.0;
};

// One example per extraction whose confidence clears the floor.
std::vector<Example> MakeArgumentExamples(const Dataset &dataset,
                                          const TrainConfig &config);
// One example per sentence with at least one extraction clearing the floor;
// weight is the highest such confidence.
std::vector<Example> MakePredicateExamples(const Dataset &dataset,
                                           const TrainConfig &config);

CandidateConfig TrainingCandidates(const TrainConfig &config,
                                   const std::optional<Span> &predicate);

struct ExampleLoss {
  double loss = 0.0;  // unweighted
  int untrainable_labels = 0;  // gold spans missing from the candidates
};

// Forward pass plus loss for one example. When `grads` is non-null the
// gradient of scale * weight * loss is accumulated into it.
ExampleLoss ComputeExampleLoss(const Model &model, const Example &example,
                               const TrainConfig &config,
                               std::mt19937_64 *dropout_rng, double scale,
                               Parameters *grads);

double LearningRateAt(const TrainConfig &config, long completed_steps);

class Trainer {
 public:
  Trainer(Model *model, const TrainConfig &config);

  // One Adam update on the batch; returns the mean weighted loss. Dropout is
  // drawn from the trainer's generator unless the model's dropout is zero.
  double Step(std::span<const Example> batch);

  // Mean weighted loss and its gradient, without updating anything.
  double Gradient(std::span<const Example> batch, Parameters *grads,
                  std::mt19937_64 *dropout_rng) const;

  long steps() const { return steps_; }
  double learning_rate() const { return LearningRateAt(config_, steps_); }

 private:
  Model *model_;
  TrainConfig config_;
  Parameters grads_;
  Parameters first_moment_;
  Parameters second_moment_;
  std::mt19937_64 dropout_rng_;
  long steps_ = 0;
};

struct LossPoint {
  long step = 0;
  double learning_rate = 0.0;
  double loss = 0.0;  // mean batch loss over the logging window
};

struct TrainHooks {
  std::function<void(const LossPoint &)> on_log;
  // Called after every `checkpoint_every` steps and at the end.
  std::function<void(long)> on_checkpoint;
  long checkpoint_every = 0;
};

struct TrainResult {
  long steps = 0;
  std::vector<LossPoint> curve;
};

// Runs up to config.max_steps updates over shuffled examples.
TrainResult Train(Model *model, const std::vector<Example> &examples,
                  const TrainConfig &config, const TrainHooks &hooks = {});

}  // namespace spanie

#endif  // SPANIE_TRAINING_H_
