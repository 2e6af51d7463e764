// Model configuration, vocabularies and trainable tensors for one span scorer
// (either the predicate model or the argument model).

#ifndef SPANIE_MODEL_H_
#define SPANIE_MODEL_H_

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "spanie/corpus.h"

namespace spanie {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class ModelKind { kPredicate, kArgument };
enum class Activation { kRelu, kTanh };

std::string_view ModelKindName(ModelKind kind);
ModelKind ParseModelKind(std::string_view name);
std::string_view ActivationName(Activation act);
Activation ParseActivation(std::string_view name);

struct ModelConfig {
  ModelKind kind = ModelKind::kArgument;
  int word_dim = 100;
  int pos_dim = 10;
  int dep_dim = 20;
  int pred_flag_dim = 10;
  int hidden = 200;
  int layers = 2;
  double dropout = 0.3;
  bool use_syntax_feature = false;
  int ff_hidden = 300;
  Activation activation = Activation::kRelu;
  bool train_word_embeddings = false;

  int label_count() const {
    return kind == ModelKind::kPredicate ? kNumPredLabels : kNumArgLabels;
  }
  int feature_dim() const { return word_dim + pos_dim + pred_flag_dim + dep_dim; }
  int state_dim() const { return 2 * hidden; }
  int span_dim() const { return (use_syntax_feature ? 5 : 4) * state_dim(); }

  // Throws Error on a non-positive dimension or dropout outside [0, 1).
  void Validate() const;
};

bool operator==(const ModelConfig &a, const ModelConfig &b);

// String-to-id map with a reserved unknown entry at id 0.
class Vocabulary {
 public:
  static constexpr int kUnk = 0;
  static constexpr std::string_view kUnkToken = "<unk>";

  Vocabulary();
  explicit Vocabulary(const std::vector<std::string> &entries);

  int Add(const std::string &entry);
  int IndexOf(std::string_view entry) const;
  int size() const { return static_cast<int>(entries_.size()); }
  const std::vector<std::string> &entries() const { return entries_; }

 private:
  std::vector<std::string> entries_;
  std::unordered_map<std::string, int> index_;
};

// Input-to-hidden, hidden-to-hidden and bias of one LSTM direction. Gate rows
// are ordered input, forget, candidate, output.
struct LstmWeights {
  Matrix input;
  Matrix recurrent;
  Matrix bias;
};

// All tensors of one model. Embedding tables store one entry per column.
// The same struct doubles as gradient and optimizer-moment storage.
struct Parameters {
  Matrix word;
  Matrix pos;
  Matrix dep;
  Matrix pred_flag;
  // layers * 2 entries: index 2 * layer + direction (0 forward, 1 backward).
  std::vector<LstmWeights> lstm;
  Matrix null_span;
  // Stand-in for the parent state when a span is headed by the root.
  Matrix root_state;
  Matrix ff_hidden_w;
  Matrix ff_hidden_b;
  Matrix ff_out_w;
  Matrix ff_out_b;

  // Visits every tensor in a fixed order with a stable name.
  void ForEach(const std::function<void(const std::string &, Matrix &)> &fn);
  void ForEach(
      const std::function<void(const std::string &, const Matrix &)> &fn) const;

  // Same shapes, all zeros.
  Parameters ZerosLike() const;
  void SetZero();
  bool AllFinite() const;
};

class Model {
 public:
  Model() = default;
  // Random initialization. The word table is copied from `embeddings`;
  // POS and dependency vocabularies come from `pos_tags` / `dep_rels`.
  Model(const ModelConfig &config, const EmbeddingTable &embeddings,
        const std::vector<std::string> &pos_tags,
        const std::vector<std::string> &dep_rels, std::uint64_t seed);
  // Reassembles a model from stored pieces; shapes are checked.
  Model(const ModelConfig &config, std::vector<std::string> words,
        Vocabulary pos_vocab, Vocabulary dep_vocab, Parameters params);

  const ModelConfig &config() const { return config_; }
  const Parameters &params() const { return params_; }
  Parameters &mutable_params() { return params_; }
  const Vocabulary &pos_vocab() const { return pos_vocab_; }
  const Vocabulary &dep_vocab() const { return dep_vocab_; }
  const std::vector<std::string> &words() const { return words_; }

  // Column of the word table for a surface form: exact, lowercased, UNK.
  int WordIndex(std::string_view surface) const;
  int word_unk() const { return static_cast<int>(words_.size()); }

  // Tensors the optimizer may update.
  bool IsTrainable(const std::string &name) const;

 private:
  void CheckShapes() const;

  ModelConfig config_;
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> word_index_;
  Vocabulary pos_vocab_;
  Vocabulary dep_vocab_;
  Parameters params_;
};

// Distinct POS tags and dependency relations in corpus order.
std::vector<std::string> CollectPosTags(const Dataset &dataset);
std::vector<std::string> CollectDepRels(const Dataset &dataset);

}  // namespace spanie

#endif  // SPANIE_MODEL_H_
