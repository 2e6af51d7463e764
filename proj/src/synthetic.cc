#include "spanie/synthetic.h"

#include <algorithm>
#include <numeric>

namespace spanie {

std::vector<int> RandomHeads(int n, std::mt19937_64 &rng) {
  if (n < 1) throw Error("a tree needs at least one token");
  // Attach tokens in random order, each to a uniformly chosen earlier one.
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> heads(n, kRoot);
  for (int k = 1; k < n; ++k) {
    std::uniform_int_distribution<int> pick(0, k - 1);
    heads[order[k]] = order[pick(rng)];
  }
  return heads;
}

Sentence RandomSentence(int n, std::mt19937_64 &rng,
                        const std::vector<std::string> &words,
                        const std::vector<std::string> &pos_tags,
                        const std::vector<std::string> &dep_rels,
                        const std::string &id) {
  if (words.empty() || pos_tags.empty() || dep_rels.empty()) {
    throw Error("random sentences need non-empty inventories");
  }
  auto draw = [&rng](const std::vector<std::string> &from) {
    std::uniform_int_distribution<std::size_t> pick(0, from.size() - 1);
    return from[pick(rng)];
  };
  Sentence s;
  s.id = id;
  std::vector<int> heads = RandomHeads(n, rng);
  for (int i = 0; i < n; ++i) {
    s.tokens.push_back({draw(words), draw(pos_tags), heads[i], draw(dep_rels)});
  }
  return s;
}

Span RandomSpan(int n, std::mt19937_64 &rng) {
  std::uniform_int_distribution<int> pick(0, n - 1);
  int a = pick(rng);
  int b = pick(rng);
  return Span(std::min(a, b), std::max(a, b));
}

}  // namespace spanie
