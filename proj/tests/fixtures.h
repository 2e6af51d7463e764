// Hand-built sentences and tiny models shared by the unit tests.

#ifndef SPANIE_TESTS_FIXTURES_H_
#define SPANIE_TESTS_FIXTURES_H_

#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "spanie/corpus.h"
#include "spanie/model.h"

namespace spanie::testing {

inline Sentence MakeSentence(const std::vector<std::string> &words,
                             const std::vector<int> &heads,
                             const std::string &id = "s") {
  Sentence s;
  s.id = id;
  for (std::size_t i = 0; i < words.size(); ++i) {
    s.tokens.push_back({words[i], "X", heads[i], heads[i] < 0 ? "root" : "dep"});
  }
  return s;
}

// "Repeat customers can purchase luxury items at reduced prices ."
inline Sentence PurchaseSentence() {
  return MakeSentence({"Repeat", "customers", "can", "purchase", "luxury",
                       "items", "at", "reduced", "prices", "."},
                      {1, 3, 3, kRoot, 5, 3, 3, 8, 6, 3}, "purchase");
}

// "James wants to sell his company"
inline Sentence WantsSentence() {
  return MakeSentence({"James", "wants", "to", "sell", "his", "company"},
                      {1, kRoot, 3, 1, 5, 3}, "wants");
}

inline EmbeddingTable SmallTable(int dim, std::uint64_t seed = 3) {
  std::vector<std::string> words = {"the", "keys", "were", "locked", "in",
                                    "car", "a", "dog"};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  Eigen::MatrixXd m(static_cast<Eigen::Index>(words.size()) + 1, dim);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return EmbeddingTable(words, m);
}

inline ModelConfig TinyConfig(ModelKind kind, bool syntax = false) {
  ModelConfig c;
  c.kind = kind;
  c.word_dim = 6;
  c.pos_dim = 3;
  c.dep_dim = 3;
  c.pred_flag_dim = 2;
  c.hidden = 5;
  c.layers = 2;
  c.ff_hidden = 7;
  c.dropout = 0.0;
  c.use_syntax_feature = syntax;
  return c;
}

inline Model TinyModel(ModelKind kind, bool syntax = false,
                       std::uint64_t seed = 11) {
  return Model(TinyConfig(kind, syntax), SmallTable(6), {"X", "DET", "NOUN"},
               {"dep", "root"}, seed);
}

inline Dataset ParseText(const std::string &text) {
  std::istringstream in(text);
  return ParseCorpus(in);
}

}  // namespace spanie::testing

#endif  // SPANIE_TESTS_FIXTURES_H_
