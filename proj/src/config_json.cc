#include "spanie/config_json.h"

#include <set>
#include <string>

namespace spanie {

using json = nlohmann::json;

namespace {

// Copies present keys into fields and rejects keys nobody asked for.
class Reader {
 public:
  Reader(const json &j, const char *what) : j_(j), what_(what) {
    if (!j.is_object()) throw Error(std::string(what) + " must be an object");
  }

  template <typename T>
  Reader &Get(const char *key, T &field) {
    known_.insert(key);
    if (auto it = j_.find(key); it != j_.end()) {
      try {
        field = it->get<T>();
      } catch (const json::exception &e) {
        throw Error(std::string(what_) + "." + key + ": " + e.what());
      }
    }
    return *this;
  }

  ~Reader() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto &[key, value] : j_.items()) {
      if (!known_.count(key)) {
        throw Error("unknown " + std::string(what_) + " option '" + key + "'");
      }
    }
  }

 private:
  const json &j_;
  const char *what_;
  std::set<std::string> known_;
};

}  // namespace

void to_json(json &j, const ModelConfig &c) {
  j = json{{"kind", ModelKindName(c.kind)},
           {"word_dim", c.word_dim},
           {"pos_dim", c.pos_dim},
           {"dep_dim", c.dep_dim},
           {"pred_flag_dim", c.pred_flag_dim},
           {"hidden", c.hidden},
           {"layers", c.layers},
           {"dropout", c.dropout},
           {"use_syntax_feature", c.use_syntax_feature},
           {"ff_hidden", c.ff_hidden},
           {"activation", ActivationName(c.activation)},
           {"train_word_embeddings", c.train_word_embeddings}};
}

void from_json(const json &j, ModelConfig &c) {
  std::string kind(ModelKindName(c.kind));
  std::string activation(ActivationName(c.activation));
  {
    Reader r(j, "model");
    r.Get("kind", kind)
        .Get("word_dim", c.word_dim)
        .Get("pos_dim", c.pos_dim)
        .Get("dep_dim", c.dep_dim)
        .Get("pred_flag_dim", c.pred_flag_dim)
        .Get("hidden", c.hidden)
        .Get("layers", c.layers)
        .Get("dropout", c.dropout)
        .Get("use_syntax_feature", c.use_syntax_feature)
        .Get("ff_hidden", c.ff_hidden)
        .Get("activation", activation)
        .Get("train_word_embeddings", c.train_word_embeddings);
  }
  c.kind = ParseModelKind(kind);
  c.activation = ParseActivation(activation);
}

void to_json(json &j, const TrainConfig &c) {
  j = json{{"batch_size", c.batch_size},
           {"learning_rate", c.learning_rate},
           {"decay", c.decay},
           {"decay_every", c.decay_every},
           {"decay_form", c.decay_form == DecayForm::kInverse
                              ? "inverse"
                              : "multiplicative"},
           {"max_steps", c.max_steps},
           {"adam_beta1", c.adam_beta1},
           {"adam_beta2", c.adam_beta2},
           {"adam_epsilon", c.adam_epsilon},
           {"weighted_loss", c.weighted_loss},
           {"confidence_floor", c.confidence_floor},
           {"seed", c.seed},
           {"max_arg_len", c.max_arg_len},
           {"max_pred_len", c.max_pred_len},
           {"enforce_max_len", c.enforce_max_len},
           {"enforce_syntactic", c.enforce_syntactic},
           {"log_every", c.log_every}};
}

void from_json(const json &j, TrainConfig &c) {
  std::string form =
      c.decay_form == DecayForm::kInverse ? "inverse" : "multiplicative";
  {
    Reader r(j, "training");
    r.Get("batch_size", c.batch_size)
        .Get("learning_rate", c.learning_rate)
        .Get("decay", c.decay)
        .Get("decay_every", c.decay_every)
        .Get("decay_form", form)
        .Get("max_steps", c.max_steps)
        .Get("adam_beta1", c.adam_beta1)
        .Get("adam_beta2", c.adam_beta2)
        .Get("adam_epsilon", c.adam_epsilon)
        .Get("weighted_loss", c.weighted_loss)
        .Get("confidence_floor", c.confidence_floor)
        .Get("seed", c.seed)
        .Get("max_arg_len", c.max_arg_len)
        .Get("max_pred_len", c.max_pred_len)
        .Get("enforce_max_len", c.enforce_max_len)
        .Get("enforce_syntactic", c.enforce_syntactic)
        .Get("log_every", c.log_every);
  }
  if (form == "inverse") {
    c.decay_form = DecayForm::kInverse;
  } else if (form == "multiplicative") {
    c.decay_form = DecayForm::kMultiplicative;
  } else {
    throw Error("unknown decay form '" + form + "'");
  }
}

void to_json(json &j, const DecodeConfig &c) {
  j = json{{"predicate_threshold", c.predicate_threshold},
           {"enforce_syntactic_at_inference", c.enforce_syntactic_at_inference},
           {"enforce_max_len_at_inference", c.enforce_max_len_at_inference},
           {"max_arg_len", c.max_arg_len},
           {"max_pred_len", c.max_pred_len},
           {"no_span_reuse", c.no_span_reuse},
           {"no_argument_overlap", c.no_argument_overlap}};
}

void from_json(const json &j, DecodeConfig &c) {
  Reader r(j, "decode");
  r.Get("predicate_threshold", c.predicate_threshold)
      .Get("enforce_syntactic_at_inference", c.enforce_syntactic_at_inference)
      .Get("enforce_max_len_at_inference", c.enforce_max_len_at_inference)
      .Get("max_arg_len", c.max_arg_len)
      .Get("max_pred_len", c.max_pred_len)
      .Get("no_span_reuse", c.no_span_reuse)
      .Get("no_argument_overlap", c.no_argument_overlap);
}

void to_json(json &j, const MatchPolicy &c) {
  j = json{{"predicate_rule", c.predicate_rule == PredicateRule::kExactSpan
                                  ? "exact-span"
                                  : "head-containment"},
           {"min_ratio", c.min_ratio},
           {"require_all_gold_args", c.require_all_gold_args}};
}

void from_json(const json &j, MatchPolicy &c) {
  std::string rule = c.predicate_rule == PredicateRule::kExactSpan
                         ? "exact-span"
                         : "head-containment";
  {
    Reader r(j, "match");
    r.Get("predicate_rule", rule)
        .Get("min_ratio", c.min_ratio)
        .Get("require_all_gold_args", c.require_all_gold_args);
  }
  if (rule == "exact-span") {
    c.predicate_rule = PredicateRule::kExactSpan;
  } else if (rule == "head-containment") {
    c.predicate_rule = PredicateRule::kHeadContainment;
  } else {
    throw Error("unknown predicate rule '" + rule + "'");
  }
}

}  // namespace spanie
