#include "spanie/cli.h"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "spanie/checkpoint.h"
#include "spanie/config_json.h"
#include "spanie/corpus.h"
#include "spanie/evaluation.h"
#include "spanie/gradcheck.h"
#include "spanie/inference.h"
#include "spanie/training.h"

namespace spanie {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct CommonArgs {
  std::uint64_t seed = 1;
  int workers = 1;
  std::string out_dir = ".";
  std::string config_path;
};

struct TrainArgs {
  std::string corpus;
  std::string embeddings;
  std::string mode = "argument";
  ModelConfig model;
  TrainConfig train;
  long checkpoint_every = 0;
};

struct ExtractArgs {
  std::string input;
  std::string predicate_model;
  std::string argument_model;
  std::string output;
  DecodeConfig decode;
  std::optional<bool> syntax_feature;
};

struct EvalArgs {
  std::string system;
  std::string gold;
  MatchPolicy match;
  bool no_extend = false;
  std::string match_report;
};

struct GradCheckArgs {
  GradCheckOptions options;
  int seeds = 1;
  std::string activation = "relu";
};

std::string FormatNumber(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

// Looks for --config before the real parse so file values become the
// defaults that explicit flags then override.
std::string FindConfigPath(const std::vector<std::string> &args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
  }
  return "";
}

json ReadJsonFile(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path);
  try {
    json j = json::parse(in);
    // A run manifest nests everything under "config".
    if (j.contains("config") && j["config"].is_object()) return j["config"];
    return j;
  } catch (const json::exception &e) {
    throw Error(path + ": " + e.what());
  }
}

template <typename T>
void Fill(const json &config, const char *section, T &target) {
  if (auto it = config.find(section); it != config.end()) {
    // Merge over the current values so absent keys keep their defaults.
    json merged = target;
    for (const auto &[k, v] : it->items()) merged[k] = v;
    target = merged.get<T>();
  }
}

void FillString(const json &config, const char *key, std::string &target) {
  if (auto it = config.find(key); it != config.end() && it->is_string()) {
    target = it->get<std::string>();
  }
}

fs::path EnsureDir(const std::string &dir) {
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw Error("cannot create output directory " + dir);
  return p;
}

void WriteText(const fs::path &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

void WriteManifest(const fs::path &path, const std::string &command,
                   const CommonArgs &common, json config, json inputs,
                   json outputs) {
  json manifest;
  manifest["command"] = command;
  manifest["version"] = kVersion;
  manifest["seed"] = common.seed;
  config["workers"] = common.workers;
  config["out_dir"] = common.out_dir;
  manifest["config"] = std::move(config);
  manifest["inputs"] = std::move(inputs);
  manifest["outputs"] = std::move(outputs);
  WriteText(path, manifest.dump(2) + "\n");
}

void AddCommon(CLI::App *cmd, CommonArgs &common) {
  cmd->add_option("--seed", common.seed, "Random seed")->capture_default_str();
  cmd->add_option("--workers", common.workers, "Worker threads")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--out-dir", common.out_dir, "Output directory")
      ->capture_default_str();
  cmd->add_option("--config", common.config_path,
                  "JSON config or run manifest supplying defaults");
}

int RunTrain(const TrainArgs &a, const CommonArgs &common, std::ostream &out) {
  ModelConfig mc = a.model;
  mc.kind = ParseModelKind(a.mode);
  TrainConfig tc = a.train;
  tc.seed = common.seed;

  LoadOptions lo;
  lo.max_confidence = 1.0;
  LoadReport report;
  Dataset corpus = LoadCorpus(a.corpus, lo, &report);
  for (const auto &[label, count] : report.skipped_labels) {
    out << "skipped " << count << " argument(s) labelled " << label << "\n";
  }
  EmbeddingTable table = LoadEmbeddings(a.embeddings, mc.word_dim);

  std::vector<Example> examples = mc.kind == ModelKind::kPredicate
                                      ? MakePredicateExamples(corpus, tc)
                                      : MakeArgumentExamples(corpus, tc);
  if (examples.empty() && tc.max_steps > 0) {
    throw Error("corpus " + a.corpus + " yields no training examples");
  }
  Model model(mc, table, CollectPosTags(corpus), CollectDepRels(corpus),
              common.seed);

  const fs::path dir = EnsureDir(common.out_dir);
  const std::string mode(ModelKindName(mc.kind));
  const fs::path ckpt = dir / (mode + ".ckpt");
  const fs::path loss_csv = dir / (mode + ".loss.csv");

  std::string csv = "step,lr,loss\n";
  TrainHooks hooks;
  hooks.on_log = [&](const LossPoint &p) {
    csv += std::to_string(p.step) + "," + FormatNumber(p.learning_rate) + "," +
           FormatNumber(p.loss) + "\n";
    out << "step " << p.step << " lr " << FormatNumber(p.learning_rate)
        << " loss " << FormatNumber(p.loss) << "\n";
  };
  hooks.checkpoint_every = a.checkpoint_every;
  hooks.on_checkpoint = [&](long) { SaveCheckpoint(ckpt.string(), model); };
  Train(&model, examples, tc, hooks);
  if (tc.max_steps == 0) SaveCheckpoint(ckpt.string(), model);
  WriteText(loss_csv, csv);

  json config{{"model", mc}, {"training", tc}};
  WriteManifest(dir / (mode + ".manifest.json"), "train", common, config,
                {{"corpus", a.corpus}, {"embeddings", a.embeddings}},
                {{"checkpoint", ckpt.string()}, {"loss_csv", loss_csv.string()}});
  out << "wrote " << ckpt.string() << "\n";
  return 0;
}

int RunExtract(const ExtractArgs &a, const CommonArgs &common,
               std::ostream &out) {
  Model pred = LoadCheckpoint(a.predicate_model);
  Model arg = LoadCheckpoint(a.argument_model);
  if (pred.config().kind != ModelKind::kPredicate) {
    throw Error(a.predicate_model + " is not a predicate model");
  }
  if (arg.config().kind != ModelKind::kArgument) {
    throw Error(a.argument_model + " is not an argument model");
  }
  if (a.syntax_feature) {
    for (const auto &[path, model] :
         {std::pair{a.predicate_model, &pred}, std::pair{a.argument_model, &arg}}) {
      if (model->config().use_syntax_feature != *a.syntax_feature) {
        throw Error("configuration mismatch: --syntax-feature=" +
                    std::string(*a.syntax_feature ? "true" : "false") +
                    " but " + path + " was trained with use_syntax_feature=" +
                    (model->config().use_syntax_feature ? "true" : "false"));
      }
    }
  }
  Dataset input = LoadCorpus(a.input);
  Dataset result = ExtractAll(pred, arg, input, a.decode, common.workers);

  const fs::path dir = EnsureDir(common.out_dir);
  const fs::path output =
      a.output.empty() ? dir / "extractions.jsonl" : fs::path(a.output);
  SaveExtractions(output.string(), result);
  std::size_t total = 0;
  for (const AnnotatedSentence &s : result) total += s.extractions.size();

  json config{{"decode", a.decode}};
  WriteManifest(dir / "extract.manifest.json", "extract", common, config,
                {{"input", a.input},
                 {"predicate_model", a.predicate_model},
                 {"argument_model", a.argument_model}},
                {{"extractions", output.string()}});
  out << "wrote " << total << " extractions for " << result.size()
      << " sentences to " << output.string() << "\n";
  return 0;
}

int RunEval(const EvalArgs &a, const CommonArgs &common, std::ostream &out) {
  Dataset system = LoadCorpus(a.system);
  Dataset gold = LoadCorpus(a.gold);
  EvalSummary summary =
      Evaluate(system, gold, a.match, !a.no_extend, common.workers);

  const fs::path dir = EnsureDir(common.out_dir);
  std::string csv = "threshold,precision,recall\n";
  for (const PRPoint &p : summary.curve) {
    csv += FormatNumber(p.threshold) + "," + FormatNumber(p.precision) + "," +
           FormatNumber(p.recall) + "\n";
  }
  WriteText(dir / "curve.csv", csv);

  std::ostringstream line;
  line << std::fixed << "auc=" << std::setprecision(3) << summary.auc
       << " best_f1=" << std::setprecision(2) << 100.0 * summary.best_f1
       << " gold=" << summary.gold << " system=" << summary.system
       << " points=" << summary.curve.size();
  WriteText(dir / "summary.txt", line.str() + "\n");
  out << line.str() << "\n";

  json outputs{{"curve_csv", (dir / "curve.csv").string()},
               {"summary", (dir / "summary.txt").string()}};
  if (!a.match_report.empty()) {
    // Per-sentence matches at the lowest threshold (every extraction kept).
    AlignedCorpus aligned = AlignById(system, gold);
    std::string report = "sentence_id,system_index,confidence,gold_index\n";
    for (const auto &[sys, g] : aligned) {
      std::vector<int> m = MatchSentence(*sys, *g, -1.0, a.match);
      for (std::size_t k = 0; k < m.size(); ++k) {
        report += sys->sentence.id + "," + std::to_string(k) + "," +
                  FormatNumber(sys->extractions[k].confidence) + "," +
                  std::to_string(m[k]) + "\n";
      }
    }
    WriteText(a.match_report, report);
    outputs["match_report"] = a.match_report;
  }
  json config{{"match", a.match}, {"extend_to_zero", !a.no_extend}};
  WriteManifest(dir / "eval.manifest.json", "eval", common, config,
                {{"system", a.system}, {"gold", a.gold}}, outputs);
  return 0;
}

int RunGradCheckCommand(const GradCheckArgs &a, const CommonArgs &common,
                        std::ostream &out) {
  GradCheckOptions options = a.options;
  options.activation = ParseActivation(a.activation);
  bool all_passed = true;
  for (int k = 0; k < a.seeds; ++k) {
    options.seed = common.seed + static_cast<std::uint64_t>(k);
    GradCheckReport report = RunGradCheck(options);
    out << "seed " << options.seed << "\n";
    for (const GradCheckGroup &g : report.groups) {
      out << "  " << std::left << std::setw(10) << g.model << std::setw(22)
          << g.tensor << " checked " << std::setw(5) << g.checked
          << " skipped " << std::setw(3) << g.skipped << " max_rel_err "
          << std::scientific << std::setprecision(3) << g.max_relative_error
          << std::defaultfloat << "\n";
    }
    out << "  max relative error " << std::scientific << std::setprecision(3)
        << report.max_relative_error << std::defaultfloat << " -> "
        << (report.passed ? "PASS" : "FAIL") << "\n";
    all_passed = all_passed && report.passed;
  }
  out << (all_passed ? "gradcheck PASS" : "gradcheck FAIL") << "\n";
  return all_passed ? 0 : 1;
}

}  // namespace

int RunCli(const std::vector<std::string> &args, std::ostream &out,
           std::ostream &err) {
  CLI::App app{"Span-based open information extraction"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  CommonArgs common;
  TrainArgs train;
  ExtractArgs extract;
  EvalArgs eval;
  GradCheckArgs grad;

  try {
    if (std::string path = FindConfigPath(args); !path.empty()) {
      json config = ReadJsonFile(path);
      Fill(config, "model", train.model);
      Fill(config, "training", train.train);
      Fill(config, "decode", extract.decode);
      Fill(config, "match", eval.match);
      if (auto it = config.find("seed"); it != config.end()) {
        common.seed = it->get<std::uint64_t>();
      } else if (auto t = config.find("training");
                 t != config.end() && t->contains("seed")) {
        common.seed = (*t)["seed"].get<std::uint64_t>();
      }
      if (auto it = config.find("workers"); it != config.end()) {
        common.workers = it->get<int>();
      }
      FillString(config, "out_dir", common.out_dir);
      if (train.model.kind == ModelKind::kPredicate) train.mode = "predicate";
    }
  } catch (const std::exception &e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  // train
  CLI::App *t = app.add_subcommand("train", "Train a predicate or argument model");
  AddCommon(t, common);
  t->add_option("--corpus", train.corpus, "Training corpus (JSON lines)")
      ->required();
  t->add_option("--embeddings", train.embeddings, "Word vectors (text)")
      ->required();
  t->add_option("--mode", train.mode, "predicate | argument")
      ->check(CLI::IsMember({"predicate", "argument"}))
      ->capture_default_str();
  t->add_option("--steps", train.train.max_steps, "Training steps")
      ->capture_default_str();
  t->add_option("--batch-size", train.train.batch_size)->capture_default_str();
  t->add_option("--learning-rate", train.train.learning_rate)
      ->capture_default_str();
  t->add_option("--decay", train.train.decay,
                "Learning-rate decay applied every --decay-every steps")
      ->capture_default_str();
  t->add_option("--decay-every", train.train.decay_every)->capture_default_str();
  t->add_option_function<std::string>(
      "--decay-form",
      [&](const std::string &v) {
        train.train.decay_form =
            v == "inverse" ? DecayForm::kInverse : DecayForm::kMultiplicative;
      },
      "multiplicative | inverse")
      ->check(CLI::IsMember({"multiplicative", "inverse"}));
  t->add_option("--dropout", train.model.dropout)->capture_default_str();
  t->add_option("--word-dim", train.model.word_dim)->capture_default_str();
  t->add_option("--pos-dim", train.model.pos_dim)->capture_default_str();
  t->add_option("--dep-dim", train.model.dep_dim)->capture_default_str();
  t->add_option("--pred-flag-dim", train.model.pred_flag_dim)
      ->capture_default_str();
  t->add_option("--hidden", train.model.hidden, "BiLSTM hidden size")
      ->capture_default_str();
  t->add_option("--layers", train.model.layers, "BiLSTM layers")
      ->capture_default_str();
  t->add_option("--ff-hidden", train.model.ff_hidden)->capture_default_str();
  t->add_option_function<std::string>(
      "--activation",
      [&](const std::string &v) { train.model.activation = ParseActivation(v); },
      "relu | tanh")
      ->check(CLI::IsMember({"relu", "tanh"}));
  t->add_flag("--syntax-feature{true},!--no-syntax-feature",
              train.model.use_syntax_feature,
              "Append the parent-of-head state to span features");
  t->add_flag("--train-word-embeddings{true}", train.model.train_word_embeddings);
  t->add_option("--weighted-loss", train.train.weighted_loss,
                "Scale each extraction's loss by its confidence")
      ->capture_default_str();
  t->add_option("--confidence-floor", train.train.confidence_floor)
      ->capture_default_str();
  t->add_option("--max-arg-len", train.train.max_arg_len)->capture_default_str();
  t->add_option("--max-pred-len", train.train.max_pred_len)
      ->capture_default_str();
  t->add_option("--max-len-constraint", train.train.enforce_max_len)
      ->capture_default_str();
  t->add_option("--syntactic-constraint", train.train.enforce_syntactic)
      ->capture_default_str();
  t->add_option("--log-every", train.train.log_every)->capture_default_str();
  t->add_option("--checkpoint-every", train.checkpoint_every)
      ->capture_default_str();

  // extract
  CLI::App *x = app.add_subcommand("extract", "Extract tuples with trained models");
  AddCommon(x, common);
  x->add_option("--input", extract.input, "Sentences (JSON lines)")->required();
  x->add_option("--predicate-model", extract.predicate_model)->required();
  x->add_option("--argument-model", extract.argument_model)->required();
  x->add_option("--output", extract.output,
                "Output file (default <out-dir>/extractions.jsonl)");
  x->add_option("--threshold", extract.decode.predicate_threshold)
      ->capture_default_str();
  x->add_option("--syntactic-constraint",
                extract.decode.enforce_syntactic_at_inference)
      ->capture_default_str();
  x->add_option("--max-len-constraint",
                extract.decode.enforce_max_len_at_inference,
                "Keep the training-time span length limits")
      ->capture_default_str();
  x->add_option("--max-arg-len", extract.decode.max_arg_len)
      ->capture_default_str();
  x->add_option("--max-pred-len", extract.decode.max_pred_len)
      ->capture_default_str();
  x->add_flag("--no-span-reuse{true}", extract.decode.no_span_reuse);
  x->add_flag("--no-argument-overlap{true}", extract.decode.no_argument_overlap);
  x->add_option_function<bool>(
      "--syntax-feature",
      [&](const bool &v) { extract.syntax_feature = v; },
      "Require checkpoints trained with (true) or without (false) the "
      "syntactic span feature")
      ->expected(0, 1)
      ->default_str("true");

  // eval
  CLI::App *e = app.add_subcommand("eval", "Score extractions against gold");
  AddCommon(e, common);
  e->add_option("--system", eval.system)->required();
  e->add_option("--gold", eval.gold)->required();
  e->add_option("--min-ratio", eval.match.min_ratio)->capture_default_str();
  e->add_option_function<std::string>(
      "--predicate-rule",
      [&](const std::string &v) {
        eval.match.predicate_rule = v == "exact-span"
                                        ? PredicateRule::kExactSpan
                                        : PredicateRule::kHeadContainment;
      },
      "head-containment | exact-span")
      ->check(CLI::IsMember({"head-containment", "exact-span"}));
  e->add_flag("--require-all-args{true}", eval.match.require_all_gold_args);
  e->add_flag("--no-extend{true}", eval.no_extend,
              "Do not extend the curve to recall 0 for AUC");
  e->add_option("--match-report", eval.match_report,
                "Write per-extraction matches to this CSV");

  // gradcheck
  CLI::App *g = app.add_subcommand("gradcheck", "Finite-difference gradient check");
  AddCommon(g, common);
  g->add_option("--seeds", grad.seeds, "Number of consecutive seeds")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  g->add_flag("--use-syntax-feature{true}", grad.options.use_syntax_feature);
  g->add_option("--activation", grad.activation)
      ->check(CLI::IsMember({"relu", "tanh"}))
      ->capture_default_str();
  g->add_option("--dropout", grad.options.dropout)->capture_default_str();
  g->add_option("--epsilon", grad.options.epsilon)->capture_default_str();
  g->add_option("--tolerance", grad.options.tolerance)->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError &pe) {
    std::ostringstream cli_out, cli_err;
    int code = app.exit(pe, cli_out, cli_err);
    out << cli_out.str();
    err << cli_err.str();
    return code;
  }

  try {
    if (t->parsed()) return RunTrain(train, common, out);
    if (x->parsed()) return RunExtract(extract, common, out);
    if (e->parsed()) return RunEval(eval, common, out);
    if (g->parsed()) return RunGradCheckCommand(grad, common, out);
  } catch (const std::exception &ex) {
    err << "error: " << ex.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace spanie
