#include "semrel/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>

#include "CLI11.hpp"
#include "semrel/error.hpp"
#include "semrel/gradcheck.hpp"
#include "semrel/text.hpp"

namespace semrel::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

json score_json(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

struct Context {
  RunConfig rc;
  std::ostream& out;
  std::ostream& err;
};

std::string lang_list(const std::map<LanguageCode, Dataset>& sets) {
  std::string s;
  for (const auto& [lang, _] : sets) s += (s.empty() ? "" : ",") + lang.str();
  return s;
}

// Spearman against gold, or NaN when the set is unscored or constant.
double score_or_nan(std::span<const double> pred, const Dataset& ds, std::ostream& err) {
  if (!ds.fully_scored() || ds.size() < 2) return kNaN;
  try {
    return spearman(pred, ds.gold_scores());
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kUndefinedSpearman) throw;
    err << "warning: " << ds.lang.str() << ": " << e.what() << "\n";
    return kNaN;
  }
}

bool uses_translation(const Checkpoint& ck) { return ck.manifest.config.value("data", "") == "translated"; }

// Eval-time inputs of a translated model go through the primary backend.
Dataset eval_input(const Context& ctx, const Checkpoint& ck, const Dataset& ds, TranslationCache& cache) {
  if (!uses_translation(ck)) return ds;
  return translate_eval(ds, ctx.rc.backends, cache, ctx.rc.translation).dataset;
}

void write_results(const fs::path& path, std::span<const EvalResult> results,
                   const std::vector<std::string>& routed = {}) {
  std::string body;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    json j{{"model", r.model}, {"lang", r.lang.str()}, {"split", to_string(r.split)},
           {"spearman", score_json(r.spearman)}, {"n", r.n}};
    if (i < routed.size()) j["routed_model"] = routed[i];
    body += j.dump() + "\n";
  }
  write_file(path, body);
}

std::vector<EvalResult> read_results(const fs::path& path) {
  std::vector<EvalResult> out;
  std::istringstream in(read_file(path));
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    try {
      const json j = json::parse(line);
      EvalResult r;
      r.model = j.at("model").get<std::string>();
      r.lang = LanguageCode(j.at("lang").get<std::string>());
      r.split = parse_split(j.value("split", "test"));
      r.spearman = j.at("spearman").is_null() ? kNaN : j.at("spearman").get<double>();
      r.n = j.value("n", std::size_t{0});
      out.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kMalformedRow, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

struct TranSemInputs {
  Dataset train;
  Dataset dev;
};

TranSemInputs transem_inputs(const Context& ctx, const Dataset& train_ds, const Dataset& dev_ds,
                             TranslationCache& cache) {
  if (!ctx.rc.train_translated) return {train_ds, dev_ds};
  if (ctx.rc.backends.empty()) throw Error(ErrorCode::kEmptyInput, "train.data is \"translated\" but no backends are configured");
  auto aug = augment_training(train_ds, ctx.rc.backends, cache, ctx.rc.translation);
  auto dev = translate_eval(dev_ds, ctx.rc.backends, cache, ctx.rc.translation);
  return {std::move(aug.dataset), std::move(dev.dataset)};
}

std::map<LanguageCode, Dataset> require_split(const RunConfig& rc, Split split) {
  auto sets = rc.load_split(split);
  if (sets.empty()) {
    throw Error(ErrorCode::kEmptyInput, "no " + std::string(to_string(split)) + " data configured");
  }
  return sets;
}

const Dataset& dev_for(const std::map<LanguageCode, Dataset>& devs, const LanguageCode& lang) {
  auto it = devs.find(lang);
  if (it == devs.end()) throw Error(ErrorCode::kInvalidConfig, "no dev set configured for " + lang.str());
  return it->second;
}

void check_compatible(const Context& ctx, const Checkpoint& ck) {
  const auto& m = ck.manifest;
  const TokenizerConfig& want = ctx.rc.train.tokenizer;
  if (ctx.rc.tokenizer_explicit && !(m.tokenizer == want)) {
    throw Error(ErrorCode::kShapeMismatch,
                "checkpoint tokenizer (V=" + std::to_string(m.tokenizer.vocab_size) + ", hash_seed=" +
                    std::to_string(m.tokenizer.hash_seed) + ") differs from the configured one (V=" +
                    std::to_string(want.vocab_size) + ", hash_seed=" + std::to_string(want.hash_seed) + ")");
  }
  if (ctx.rc.encoder_explicit && m.dim != ctx.rc.train.dim) {
    throw Error(ErrorCode::kShapeMismatch, "checkpoint d=" + std::to_string(m.dim) + " differs from encoder.dim=" +
                                               std::to_string(ctx.rc.train.dim));
  }
}

std::string default_name(const Checkpoint& ck) {
  return ck.manifest.model_kind == ModelKind::kBiEncoder ? "TranSem" : "FineSem";
}

// ---------------------------------------------------------------------------

int cmd_augment(Context& ctx) {
  const RunConfig& rc = ctx.rc;
  if (rc.backends.empty()) throw Error(ErrorCode::kEmptyInput, "augment needs at least one backend");
  const auto trains = require_split(rc, Split::kTrain);
  auto cache = TranslationCache::load(rc.cache_path);
  json summary = json::array();
  for (const auto& [lang, ds] : trains) {
    auto result = augment_training(ds, rc.backends, cache, rc.translation);
    write_file(rc.out / "augmented" / (lang.str() + ".train.tsv"), write_columnar(result.dataset));
    summary.push_back({{"lang", lang.str()},
                       {"in_count", ds.size()},
                       {"out_count", result.dataset.size()},
                       {"backends", result.backends_used},
                       {"passthrough", result.passthrough}});
    ctx.out << lang.str() << "  " << ds.size() << " -> " << result.dataset.size()
            << (result.passthrough ? "  (passthrough)" : "") << "\n";
  }
  cache.save(rc.cache_path);
  write_file(rc.out / "augment_summary.json", summary.dump(2) + "\n");
  return 0;
}

int train_transem(Context& ctx) {
  const RunConfig& rc = ctx.rc;
  const auto trains = require_split(rc, Split::kTrain);
  const auto devs = rc.load_split(Split::kDev);
  auto cache = TranslationCache::load(rc.cache_path);
  for (const auto& [lang, train_ds] : trains) {
    const auto inputs = transem_inputs(ctx, train_ds, dev_for(devs, lang), cache);
    TrainHooks hooks;
    hooks.on_epoch = [&, code = lang.str()](const EpochRecord& r) {
      ctx.err << code << " epoch " << r.epoch << " loss " << text::format_fixed(r.train_loss, 6) << " dev "
              << (std::isfinite(r.dev_spearman) ? text::format_fixed(r.dev_spearman, 4) : std::string("undefined"))
              << "\n";
    };
    auto result = train(inputs.train, inputs.dev, rc.train, hooks);
    result.best.manifest.config["data"] = rc.train_translated ? "translated" : "original";
    result.best.manifest.config["lang"] = lang.str();
    const fs::path dir = rc.out / "transem" / lang.str();
    save_checkpoint(result.best, dir / "checkpoint");
    write_file(dir / "history.jsonl", history_jsonl(result.history));
    const auto& best = result.history[result.best_epoch - 1];
    ctx.out << lang.str() << "  best_epoch " << result.best_epoch << "  epochs " << result.history.size()
            << "  dev_spearman "
            << (std::isfinite(best.dev_spearman) ? text::format_fixed(best.dev_spearman, 4) : std::string("-"))
            << "\n";
  }
  if (rc.train_translated) cache.save(rc.cache_path);
  return 0;
}

int train_finesem(Context& ctx) {
  const RunConfig& rc = ctx.rc;
  const auto trains = require_split(rc, Split::kTrain);
  const auto devs = rc.load_split(Split::kDev);
  std::map<LanguageCode, LanguageData> data;
  for (const auto& [lang, ds] : trains) {
    LanguageData ld{ds, std::nullopt};
    if (auto it = devs.find(lang); it != devs.end()) ld.dev = it->second;
    data.emplace(lang, std::move(ld));
  }
  auto cache = TranslationCache::load(rc.cache_path);
  const TranslationLayer layer{rc.backends, &cache, rc.translation};
  auto result = train_regime(data, rc.regime, &layer, rc.finesem);
  const bool translated = rc.regime == Regime::kTranslated;

  const fs::path root = rc.out / "finesem";
  for (auto& [name, model] : result.models) {
    std::string epochs;
    for (auto& ck : model.checkpoints) {
      ck.manifest.config["data"] = translated ? "translated" : "original";
      ck.manifest.config["regime"] = std::string(to_string(rc.regime));
      save_checkpoint(ck, root / "models" / name / ("epoch_" + std::to_string(ck.manifest.epoch)));
    }
    for (const auto& e : model.epochs) {
      epochs += json{{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"pairs_seen", e.pairs_seen}}.dump() + "\n";
    }
    write_file(root / "models" / name / "epochs.jsonl", epochs);
    ctx.err << "model " << name << ": " << model.checkpoints.size() << " checkpoints\n";
  }

  ModelRegistry registry;
  json selection = json::array();
  for (const auto& [lang, model_name] : result.model_for_lang) {
    const auto& cks = result.models.at(model_name).checkpoints;
    auto dev = result.dev_sets.find(lang);
    const Dataset* dev_ds = dev == result.dev_sets.end() ? nullptr : &dev->second;
    Selection sel;
    if (rc.fixed_epoch) {
      sel = select_fixed_epoch(cks, *rc.fixed_epoch, dev_ds);
    } else if (dev_ds) {
      sel = select_checkpoint(cks, *dev_ds);
    } else {
      ctx.err << "warning: no dev set for " << lang.str() << "; using the final epoch\n";
      sel = select_fixed_epoch(cks, cks.size(), nullptr);
      sel.dev_spearman = kNaN;
    }
    const std::string entry = rc.regime == Regime::kIndividual ? lang.str() : model_name + "." + lang.str();
    selection.push_back({{"lang", lang.str()},
                         {"model", model_name},
                         {"registry_name", entry},
                         {"chosen_epoch", sel.epoch},
                         {"dev_spearman", score_json(sel.dev_spearman)}});
    registry[entry] = sel.checkpoint;
    ctx.out << lang.str() << "  model " << model_name << "  chosen_epoch " << sel.epoch << "  dev_spearman "
            << (std::isfinite(sel.dev_spearman) ? text::format_fixed(sel.dev_spearman, 4) : std::string("-"))
            << "\n";
  }
  save_registry(registry, root / "registry");
  write_file(root / "selection.json", selection.dump(2) + "\n");
  if (translated) cache.save(rc.cache_path);
  return 0;
}

int cmd_train(Context& ctx) {
  return ctx.rc.model == ModelChoice::kTranSem ? train_transem(ctx) : train_finesem(ctx);
}

struct EvalArgs {
  std::string checkpoint;
  std::string lang;
  std::string split;
  std::string data;
  std::string format = "columnar";
  std::string name;
};

int cmd_eval(Context& ctx, const EvalArgs& args) {
  const RunConfig& rc = ctx.rc;
  const Checkpoint ck = load_checkpoint(args.checkpoint);
  check_compatible(ctx, ck);
  const Split split = args.split.empty() ? rc.eval_split : parse_split(args.split);

  LanguageCode lang;
  if (!args.lang.empty()) {
    lang = LanguageCode(args.lang);
  } else if (rc.data.size() == 1) {
    lang = rc.data.begin()->first;
  } else if (auto code = ck.manifest.config.find("lang"); code != ck.manifest.config.end() && code->is_string()) {
    lang = LanguageCode(code->get<std::string>());
  } else {
    throw Error(ErrorCode::kInvalidConfig, "eval needs --lang");
  }

  Dataset ds;
  if (!args.data.empty()) {
    ds = read_dataset(args.data, parse_format(args.format), lang, split);
  } else {
    auto it = rc.data.find(lang);
    if (it == rc.data.end() || !it->second.get(split)) {
      throw Error(ErrorCode::kInvalidConfig,
                  "no " + std::string(to_string(split)) + " data configured for " + lang.str());
    }
    ds = read_dataset(*it->second.get(split), it->second.format, lang, split);
  }

  auto cache = TranslationCache::load(rc.cache_path);
  const Dataset input = eval_input(ctx, ck, ds, cache);
  const auto preds = predict_any(ck, input);
  if (preds.degenerate > 0) ctx.err << "warning: " << preds.degenerate << " zero-norm embeddings scored as 0\n";
  const std::string stem = lang.str() + "." + std::string(to_string(split));
  write_file(rc.out / "eval" / (stem + ".predictions.csv"), write_predictions(ds, preds.scores));
  if (uses_translation(ck)) cache.save(rc.cache_path);

  if (!ds.fully_scored()) {
    ctx.err << "no gold scores in " << stem << "; wrote predictions only\n";
    return 0;
  }
  EvalResult r{args.name.empty() ? default_name(ck) : args.name, lang, split,
               score_or_nan(preds.scores, ds, ctx.err), ds.size()};
  std::vector<EvalResult> results{r};
  write_results(rc.out / "eval" / (stem + ".results.jsonl"), results);
  ctx.out << report_table(results, rc.baseline);
  return 0;
}

int cmd_sweep(Context& ctx, const std::string& axis) {
  const RunConfig& rc = ctx.rc;
  if (axis != "batch_size" && axis != "pooling") {
    throw Error(ErrorCode::kInvalidConfig, "--axis must be batch_size or pooling");
  }
  if (rc.model != ModelChoice::kTranSem) throw Error(ErrorCode::kInvalidConfig, "sweep runs the transem trainer");
  const auto trains = require_split(rc, Split::kTrain);
  const auto devs = rc.load_split(Split::kDev);
  const auto evals = rc.load_split(rc.eval_split);
  auto cache = TranslationCache::load(rc.cache_path);

  std::vector<std::pair<std::string, TrainConfig>> rows;
  if (axis == "batch_size") {
    for (std::size_t b : rc.sweep_batch_sizes) {
      TrainConfig cfg = rc.train;
      cfg.batch_size = b;
      cfg.grad_accum_steps = 1;
      rows.emplace_back(std::to_string(b), cfg);
    }
  } else {
    for (Pooling p : {Pooling::kCls, Pooling::kMean, Pooling::kMax}) {
      TrainConfig cfg = rc.train;
      cfg.pooling = p;
      rows.emplace_back(std::string(display_name(p)), cfg);
    }
  }

  std::vector<EvalResult> results;
  json doc_rows = json::array();
  for (const auto& [label, cfg] : rows) {
    json scores = json::object();
    for (const auto& [lang, train_ds] : trains) {
      auto ev = evals.find(lang);
      if (ev == evals.end()) {
        throw Error(ErrorCode::kInvalidConfig,
                    "no " + std::string(to_string(rc.eval_split)) + " data configured for " + lang.str());
      }
      const auto inputs = transem_inputs(ctx, train_ds, dev_for(devs, lang), cache);
      const auto result = train(inputs.train, inputs.dev, cfg);
      const Dataset eval_ds =
          rc.train_translated ? translate_eval(ev->second, rc.backends, cache, rc.translation).dataset : ev->second;
      const double rho = score_or_nan(predict(result.best, eval_ds).scores, ev->second, ctx.err);
      results.push_back(EvalResult{label, lang, rc.eval_split, rho, ev->second.size()});
      scores[lang.str()] = score_json(rho);
      ctx.err << axis << "=" << label << " " << lang.str() << " best_epoch " << result.best_epoch << "\n";
    }
    doc_rows.push_back({{"value", label}, {"scores", scores}});
  }
  if (rc.train_translated) cache.save(rc.cache_path);

  const std::string table = report_table(results, rc.baseline);
  const fs::path dir = rc.out / "sweep";
  write_file(dir / (axis + ".txt"), table);
  write_file(dir / (axis + ".json"),
             json{{"axis", axis}, {"split", to_string(rc.eval_split)}, {"langs", lang_list(trains)}, {"rows", doc_rows}}
                     .dump(2) +
                 "\n");
  write_results(dir / (axis + ".results.jsonl"), results);
  ctx.out << table;
  return 0;
}

std::vector<LanguageCode> parse_langs(const std::string& list) {
  std::vector<LanguageCode> out;
  std::size_t start = 0;
  while (start <= list.size()) {
    const auto comma = list.find(',', start);
    const std::string part(text::trim(list.substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (!part.empty()) out.emplace_back(part);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

int cmd_crosslingual(Context& ctx, const std::string& registry_dir, const std::optional<std::string>& langs_arg,
                     const std::string& name) {
  const RunConfig& rc = ctx.rc;
  const ModelRegistry registry = load_registry(registry_dir);
  std::vector<LanguageCode> langs;
  if (langs_arg) {
    langs = parse_langs(*langs_arg);
  } else {
    for (const auto& [lang, _] : rc.data) langs.push_back(lang);
  }
  std::vector<std::string> routes;
  for (const auto& lang : langs) routes.push_back(crosslingual_route(lang, registry));

  auto cache = TranslationCache::load(rc.cache_path);
  bool translated = false;
  std::vector<EvalResult> results;
  const fs::path dir = rc.out / "crosslingual";
  for (std::size_t i = 0; i < langs.size(); ++i) {
    const auto& lang = langs[i];
    const Checkpoint& ck = registry.at(routes[i]);
    check_compatible(ctx, ck);
    auto it = rc.data.find(lang);
    if (it == rc.data.end() || !it->second.get(rc.eval_split)) {
      throw Error(ErrorCode::kInvalidConfig,
                  "no " + std::string(to_string(rc.eval_split)) + " data configured for " + lang.str());
    }
    const Dataset ds = read_dataset(*it->second.get(rc.eval_split), it->second.format, lang, rc.eval_split);
    translated = translated || uses_translation(ck);
    const auto preds = predict_any(ck, eval_input(ctx, ck, ds, cache));
    write_file(dir / (lang.str() + "." + std::string(to_string(rc.eval_split)) + ".predictions.csv"),
               write_predictions(ds, preds.scores));
    results.push_back(EvalResult{name, lang, rc.eval_split, score_or_nan(preds.scores, ds, ctx.err), ds.size()});
    ctx.err << lang.str() << " -> model " << routes[i] << "\n";
  }
  if (translated) cache.save(rc.cache_path);
  const std::string table = report_table(results, rc.baseline);
  write_file(dir / "report.txt", table);
  write_results(dir / "results.jsonl", results, routes);
  ctx.out << table;
  return 0;
}

int cmd_gradcheck(Context& ctx, bool inject_wrong_sign) {
  GradcheckOptions opts;
  opts.seed = ctx.rc.seed;
  opts.flip_sign = inject_wrong_sign;
  const auto report = run_gradcheck(opts);
  ctx.out << report.to_text();
  return report.passed() ? 0 : 1;
}

int cmd_report(Context& ctx, const std::vector<std::string>& files, const std::string& csv_path,
               const std::string& baseline_path) {
  Baseline baseline = ctx.rc.baseline;
  if (!baseline_path.empty()) {
    RunConfig tmp = parse_run_config(json{{"baseline", fs::absolute(baseline_path).string()}}, fs::current_path());
    baseline = tmp.baseline;
  }
  std::vector<EvalResult> results;
  for (const auto& f : files) {
    auto part = read_results(f);
    results.insert(results.end(), part.begin(), part.end());
  }
  ctx.out << report_table(results, baseline);
  if (!csv_path.empty()) write_file(csv_path, report_csv(results, baseline));
  return 0;
}

// Dotted flags ("--train.batch_size 8" or "--train.batch_size=8") become
// config overrides; everything else is left for the option parser.
std::vector<std::pair<std::string, std::string>> take_overrides(std::vector<std::string>& args) {
  std::vector<std::pair<std::string, std::string>> overrides;
  std::vector<std::string> rest;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a.rfind("--", 0) != 0) {
      rest.push_back(a);
      continue;
    }
    std::string key = a.substr(2);
    std::optional<std::string> value;
    if (auto eq = key.find('='); eq != std::string::npos) {
      value = key.substr(eq + 1);
      key = key.substr(0, eq);
    }
    if (key.find('.') == std::string::npos) {
      rest.push_back(a);
      continue;
    }
    if (!value) {
      if (i + 1 >= args.size()) throw Error(ErrorCode::kInvalidConfig, "override --" + key + " needs a value");
      value = args[++i];
    }
    overrides.emplace_back(key, *value);
  }
  args = std::move(rest);
  return overrides;
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args = raw_args;
  std::vector<std::pair<std::string, std::string>> overrides;
  try {
    overrides = take_overrides(args);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  CLI::App app{"Semantic relatedness training and evaluation toolkit", "semrel"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Seed for every random draw");
  app.add_option("--out", out_dir, "Output directory");
  std::string model;
  app.add_option("--model", model, "transem or finesem");

  auto* augment = app.add_subcommand("augment", "Translate training data with every backend");
  auto* train_cmd = app.add_subcommand("train", "Train the configured model");

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "Score a dataset with a checkpoint");
  eval->add_option("--checkpoint", eval_args.checkpoint, "Checkpoint directory")->required();
  eval->add_option("--lang", eval_args.lang, "Language code");
  eval->add_option("--split", eval_args.split, "train, dev or test");
  eval->add_option("--data", eval_args.data, "Dataset file instead of the configured one");
  eval->add_option("--format", eval_args.format, "Format of --data");
  eval->add_option("--name", eval_args.name, "Row label in the report");

  std::string axis;
  auto* sweep = app.add_subcommand("sweep", "One training run per axis value");
  sweep->add_option("--axis", axis, "batch_size or pooling")->required();

  std::string registry_dir;
  std::optional<std::string> langs;
  std::string cross_name = "FineSem";
  auto* cross = app.add_subcommand("crosslingual", "Evaluate languages through the routed models");
  cross->add_option("--registry", registry_dir, "Model registry directory")->required();
  cross->add_option("--langs", langs, "Comma-separated language codes");
  cross->add_option("--name", cross_name, "Row label in the report");

  bool wrong_sign = false;
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient check");
  gradcheck->add_flag("--inject-wrong-sign", wrong_sign, "Negate one analytic gradient (must fail)");

  std::vector<std::string> result_files;
  std::string csv_path;
  std::string baseline_path;
  auto* report = app.add_subcommand("report", "Combine result files into a table");
  report->add_option("--results", result_files, "results.jsonl files")->required();
  report->add_option("--csv", csv_path, "Also write the CSV form here");
  report->add_option("--baseline", baseline_path, "Baseline JSON ({lang: score})");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    json doc = json::object();
    fs::path base = fs::current_path();
    if (!config_path.empty()) {
      try {
        doc = json::parse(read_file(config_path));
      } catch (const json::exception& e) {
        throw Error(ErrorCode::kInvalidConfig, config_path + ": " + e.what());
      }
      base = fs::absolute(config_path).parent_path();
    }
    for (const auto& [key, value] : overrides) apply_override(doc, key, value);
    if (seed) doc["seed"] = *seed;
    if (!out_dir.empty()) doc["out"] = out_dir;
    if (!model.empty()) doc["model"] = model;
    Context ctx{parse_run_config(doc, base), out, err};
    if (const char* dir = std::getenv("SEMREL_CACHE_DIR"); dir && *dir) {
      ctx.rc.cache_path = fs::path(dir) / "translation_cache.json";
    }

    if (augment->parsed()) return cmd_augment(ctx);
    if (train_cmd->parsed()) return cmd_train(ctx);
    if (eval->parsed()) return cmd_eval(ctx, eval_args);
    if (sweep->parsed()) return cmd_sweep(ctx, axis);
    if (cross->parsed()) return cmd_crosslingual(ctx, registry_dir, langs, cross_name);
    if (gradcheck->parsed()) return cmd_gradcheck(ctx, wrong_sign);
    if (report->parsed()) return cmd_report(ctx, result_files, csv_path, baseline_path);
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace semrel::cli
