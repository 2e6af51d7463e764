// Random sentences with valid dependency trees, for property tests, fuzzing
// and gradient checks.

#ifndef SPANIE_SYNTHETIC_H_
#define SPANIE_SYNTHETIC_H_

#include <random>
#include <string>
#include <vector>

#include "spanie/corpus.h"

namespace spanie {

// Heads of a random single-rooted tree over n tokens (root head is kRoot).
std::vector<int> RandomHeads(int n, std::mt19937_64 &rng);

// Tokens drawn uniformly from the given inventories.
Sentence RandomSentence(int n, std::mt19937_64 &rng,
                        const std::vector<std::string> &words,
                        const std::vector<std::string> &pos_tags,
                        const std::vector<std::string> &dep_rels,
                        const std::string &id = "synthetic");

// Uniform random non-NULL span of an n-token sentence.
Span RandomSpan(int n, std::mt19937_64 &rng);

}  // namespace spanie

#endif  // SPANIE_SYNTHETIC_H_
