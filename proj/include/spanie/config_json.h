// JSON mapping for every configuration struct. Unknown keys are rejected so a
// misspelled option never silently falls back to its default.

#ifndef SPANIE_CONFIG_JSON_H_
#define SPANIE_CONFIG_JSON_H_

#include "json.hpp"
#include "spanie/evaluation.h"
#include "spanie/inference.h"
#include "spanie/model.h"
#include "spanie/training.h"

namespace spanie {

void to_json(nlohmann::json &j, const ModelConfig &c);
void from_json(const nlohmann::json &j, ModelConfig &c);
void to_json(nlohmann::json &j, const TrainConfig &c);
void from_json(const nlohmann::json &j, TrainConfig &c);
void to_json(nlohmann::json &j, const DecodeConfig &c);
void from_json(const nlohmann::json &j, DecodeConfig &c);
void to_json(nlohmann::json &j, const MatchPolicy &c);
void from_json(const nlohmann::json &j, MatchPolicy &c);

}  // namespace spanie

#endif  // SPANIE_CONFIG_JSON_H_
