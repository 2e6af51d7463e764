#include "spanie/model.h"

#include <cmath>
#include <random>
#include <set>

namespace spanie {

std::string_view ModelKindName(ModelKind kind) {
  return kind == ModelKind::kPredicate ? "predicate" : "argument";
}

ModelKind ParseModelKind(std::string_view name) {
  if (name == "predicate") return ModelKind::kPredicate;
  if (name == "argument") return ModelKind::kArgument;
  throw Error("unknown model kind '" + std::string(name) + "'");
}

std::string_view ActivationName(Activation act) {
  return act == Activation::kRelu ? "relu" : "tanh";
}

Activation ParseActivation(std::string_view name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "tanh") return Activation::kTanh;
  throw Error("unknown activation '" + std::string(name) + "'");
}

void ModelConfig::Validate() const {
  if (word_dim < 1 || pos_dim < 1 || dep_dim < 1 || pred_flag_dim < 1 ||
      hidden < 1 || layers < 1 || ff_hidden < 1) {
    throw Error("all model dimensions must be at least 1");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) {
    throw Error("dropout must lie in [0, 1)");
  }
}

bool operator==(const ModelConfig &a, const ModelConfig &b) {
  return a.kind == b.kind && a.word_dim == b.word_dim &&
         a.pos_dim == b.pos_dim && a.dep_dim == b.dep_dim &&
         a.pred_flag_dim == b.pred_flag_dim && a.hidden == b.hidden &&
         a.layers == b.layers && a.dropout == b.dropout &&
         a.use_syntax_feature == b.use_syntax_feature &&
         a.ff_hidden == b.ff_hidden && a.activation == b.activation &&
         a.train_word_embeddings == b.train_word_embeddings;
}

Vocabulary::Vocabulary() { Add(std::string(kUnkToken)); }

Vocabulary::Vocabulary(const std::vector<std::string> &entries) : Vocabulary() {
  for (const std::string &e : entries) Add(e);
}

int Vocabulary::Add(const std::string &entry) {
  auto [it, inserted] = index_.emplace(entry, size());
  if (inserted) entries_.push_back(entry);
  return it->second;
}

int Vocabulary::IndexOf(std::string_view entry) const {
  auto it = index_.find(std::string(entry));
  return it == index_.end() ? kUnk : it->second;
}

void Parameters::ForEach(
    const std::function<void(const std::string &, Matrix &)> &fn) {
  fn("embed.word", word);
  fn("embed.pos", pos);
  fn("embed.dep", dep);
  fn("embed.pred_flag", pred_flag);
  for (std::size_t k = 0; k < lstm.size(); ++k) {
    std::string prefix = "lstm.l" + std::to_string(k / 2) +
                         (k % 2 == 0 ? ".fwd." : ".bwd.");
    fn(prefix + "input", lstm[k].input);
    fn(prefix + "recurrent", lstm[k].recurrent);
    fn(prefix + "bias", lstm[k].bias);
  }
  fn("span.null", null_span);
  fn("span.root", root_state);
  fn("ff.hidden.w", ff_hidden_w);
  fn("ff.hidden.b", ff_hidden_b);
  fn("ff.out.w", ff_out_w);
  fn("ff.out.b", ff_out_b);
}

void Parameters::ForEach(
    const std::function<void(const std::string &, const Matrix &)> &fn) const {
  const_cast<Parameters *>(this)->ForEach(
      [&fn](const std::string &name, Matrix &m) { fn(name, m); });
}

Parameters Parameters::ZerosLike() const {
  Parameters out = *this;
  out.SetZero();
  return out;
}

void Parameters::SetZero() {
  ForEach([](const std::string &, Matrix &m) { m.setZero(); });
}

bool Parameters::AllFinite() const {
  bool ok = true;
  ForEach([&ok](const std::string &, const Matrix &m) {
    ok = ok && m.allFinite();
  });
  return ok;
}

namespace {

void FillUniform(Matrix &m, double bound, std::mt19937_64 &rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = dist(rng);
  }
}

void FillGlorot(Matrix &m, std::mt19937_64 &rng) {
  FillUniform(m, std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols())),
              rng);
}

void RequireShape(const Matrix &m, Eigen::Index rows, Eigen::Index cols,
                  const std::string &name) {
  if (m.rows() != rows || m.cols() != cols) {
    throw Error("tensor " + name + " has shape " + std::to_string(m.rows()) +
                "x" + std::to_string(m.cols()) + ", expected " +
                std::to_string(rows) + "x" + std::to_string(cols));
  }
}

}  // namespace

Model::Model(const ModelConfig &config, const EmbeddingTable &embeddings,
             const std::vector<std::string> &pos_tags,
             const std::vector<std::string> &dep_rels, std::uint64_t seed)
    : config_(config),
      words_(embeddings.words()),
      pos_vocab_(pos_tags),
      dep_vocab_(dep_rels) {
  config_.Validate();
  if (embeddings.dim() != config_.word_dim) {
    throw Error("embedding dimension " + std::to_string(embeddings.dim()) +
                " does not match word_dim " + std::to_string(config_.word_dim));
  }
  for (std::size_t i = 0; i < words_.size(); ++i) {
    word_index_.emplace(words_[i], static_cast<int>(i));
  }

  std::mt19937_64 rng(seed);
  const int h = config_.hidden;
  params_.word = embeddings.vectors().transpose();
  params_.pos.resize(config_.pos_dim, pos_vocab_.size());
  params_.dep.resize(config_.dep_dim, dep_vocab_.size());
  params_.pred_flag.resize(config_.pred_flag_dim, 2);
  FillUniform(params_.pos, 0.1, rng);
  FillUniform(params_.dep, 0.1, rng);
  FillUniform(params_.pred_flag, 0.1, rng);

  params_.lstm.resize(2 * config_.layers);
  for (int k = 0; k < 2 * config_.layers; ++k) {
    int in = k < 2 ? config_.feature_dim() : config_.state_dim();
    LstmWeights &w = params_.lstm[k];
    w.input.resize(4 * h, in);
    w.recurrent.resize(4 * h, h);
    w.bias = Matrix::Zero(4 * h, 1);
    FillGlorot(w.input, rng);
    FillGlorot(w.recurrent, rng);
    // Forget-gate bias starts at 1.
    w.bias.block(h, 0, h, 1).setOnes();
  }

  params_.null_span.resize(config_.span_dim(), 1);
  FillUniform(params_.null_span, 0.1, rng);
  if (config_.use_syntax_feature) {
    params_.root_state.resize(config_.state_dim(), 1);
    FillUniform(params_.root_state, 0.1, rng);
  } else {
    params_.root_state.resize(0, 1);
  }
  params_.ff_hidden_w.resize(config_.ff_hidden, config_.span_dim());
  params_.ff_hidden_b = Matrix::Zero(config_.ff_hidden, 1);
  params_.ff_out_w.resize(config_.label_count(), config_.ff_hidden);
  params_.ff_out_b = Matrix::Zero(config_.label_count(), 1);
  FillGlorot(params_.ff_hidden_w, rng);
  FillGlorot(params_.ff_out_w, rng);
  CheckShapes();
}

Model::Model(const ModelConfig &config, std::vector<std::string> words,
             Vocabulary pos_vocab, Vocabulary dep_vocab, Parameters params)
    : config_(config),
      words_(std::move(words)),
      pos_vocab_(std::move(pos_vocab)),
      dep_vocab_(std::move(dep_vocab)),
      params_(std::move(params)) {
  config_.Validate();
  for (std::size_t i = 0; i < words_.size(); ++i) {
    word_index_.emplace(words_[i], static_cast<int>(i));
  }
  CheckShapes();
}

void Model::CheckShapes() const {
  const ModelConfig &c = config_;
  const int h = c.hidden;
  RequireShape(params_.word, c.word_dim,
               static_cast<Eigen::Index>(words_.size()) + 1, "embed.word");
  RequireShape(params_.pos, c.pos_dim, pos_vocab_.size(), "embed.pos");
  RequireShape(params_.dep, c.dep_dim, dep_vocab_.size(), "embed.dep");
  RequireShape(params_.pred_flag, c.pred_flag_dim, 2, "embed.pred_flag");
  if (static_cast<int>(params_.lstm.size()) != 2 * c.layers) {
    throw Error("expected " + std::to_string(2 * c.layers) +
                " LSTM directions, found " +
                std::to_string(params_.lstm.size()));
  }
  for (int k = 0; k < 2 * c.layers; ++k) {
    int in = k < 2 ? c.feature_dim() : c.state_dim();
    RequireShape(params_.lstm[k].input, 4 * h, in, "lstm.input");
    RequireShape(params_.lstm[k].recurrent, 4 * h, h, "lstm.recurrent");
    RequireShape(params_.lstm[k].bias, 4 * h, 1, "lstm.bias");
  }
  RequireShape(params_.null_span, c.span_dim(), 1, "span.null");
  RequireShape(params_.root_state, c.use_syntax_feature ? c.state_dim() : 0, 1,
               "span.root");
  RequireShape(params_.ff_hidden_w, c.ff_hidden, c.span_dim(), "ff.hidden.w");
  RequireShape(params_.ff_hidden_b, c.ff_hidden, 1, "ff.hidden.b");
  RequireShape(params_.ff_out_w, c.label_count(), c.ff_hidden, "ff.out.w");
  RequireShape(params_.ff_out_b, c.label_count(), 1, "ff.out.b");
}

int Model::WordIndex(std::string_view surface) const {
  if (auto it = word_index_.find(std::string(surface));
      it != word_index_.end()) {
    return it->second;
  }
  if (auto it = word_index_.find(Lowercase(surface)); it != word_index_.end()) {
    return it->second;
  }
  return word_unk();
}

bool Model::IsTrainable(const std::string &name) const {
  return name != "embed.word" || config_.train_word_embeddings;
}

std::vector<std::string> CollectPosTags(const Dataset &dataset) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const AnnotatedSentence &as : dataset) {
    for (const Token &t : as.sentence.tokens) {
      if (seen.insert(t.pos).second) out.push_back(t.pos);
    }
  }
  return out;
}

std::vector<std::string> CollectDepRels(const Dataset &dataset) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const AnnotatedSentence &as : dataset) {
    for (const Token &t : as.sentence.tokens) {
      if (seen.insert(t.dep_rel).second) out.push_back(t.dep_rel);
    }
  }
  return out;
}

}  // namespace spanie
