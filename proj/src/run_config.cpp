#include <algorithm>
#include <set>

#include "semrel/cli.hpp"
#include "semrel/error.hpp"

namespace semrel::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& msg) { throw Error(ErrorCode::kInvalidConfig, msg); }

void check_keys(const json& obj, const std::string& where, std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) bad(where + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      bad("unknown key '" + (where.empty() ? key : where + "." + key) + "'");
    }
  }
}

template <typename T>
T get(const json& obj, const std::string& where, const char* key, T fallback) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    bad(where + "." + key + " has the wrong type");
  }
}

std::size_t get_count(const json& obj, const std::string& where, const char* key, std::size_t fallback) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return fallback;
  if (!it->is_number_integer() || it->get<long long>() < 1) bad(where + "." + key + " must be a positive integer");
  return it->get<std::size_t>();
}

std::optional<std::size_t> get_optional_count(const json& obj, const std::string& where, const char* key) {
  if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
  return get_count(obj, where, key, 1);
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

fs::path existing(const fs::path& base, const json& value, const std::string& where) {
  if (!value.is_string()) bad(where + " must be a path string");
  fs::path p = resolve(base, value.get<std::string>());
  if (!fs::is_regular_file(p)) throw Error(ErrorCode::kIo, where + ": no such file " + p.string());
  return p;
}

TokenizerConfig parse_tokenizer(const json& j) {
  check_keys(j, "tokenizer", {"vocab_size", "hash_seed", "lowercase"});
  TokenizerConfig t;
  t.vocab_size = get_count(j, "tokenizer", "vocab_size", t.vocab_size);
  t.hash_seed = get<std::uint64_t>(j, "tokenizer", "hash_seed", t.hash_seed);
  t.lowercase = get<bool>(j, "tokenizer", "lowercase", t.lowercase);
  t.validate();
  return t;
}

TranslationBackend parse_backend(const json& j, const fs::path& base) {
  check_keys(j, "backends[]", {"name", "kind", "lexicon", "lexicon_file", "endpoint", "primary", "unsupported", "retry"});
  TranslationBackend b;
  b.name = get<std::string>(j, "backend", "name", "");
  b.kind = parse_backend_kind(get<std::string>(j, "backend", "kind", "identity"));
  b.is_primary = get<bool>(j, "backend", "primary", false);
  b.endpoint = get<std::string>(j, "backend", "endpoint", "");
  json lexicon = j.value("lexicon", json::object());
  if (j.contains("lexicon_file")) {
    try {
      lexicon = json::parse(read_file(existing(base, j.at("lexicon_file"), "backend " + b.name + " lexicon_file")));
    } catch (const json::exception& e) {
      bad("backend " + b.name + " lexicon_file: " + e.what());
    }
  }
  if (!lexicon.is_object()) bad("backend " + b.name + " lexicon must be an object");
  for (const auto& [from, to] : lexicon.items()) {
    if (!to.is_string()) bad("backend " + b.name + " lexicon values must be strings");
    b.lexicon[from] = to.get<std::string>();
  }
  for (const auto& code : j.value("unsupported", json::array())) {
    if (!code.is_string()) bad("backend " + b.name + " unsupported entries must be strings");
    b.unsupported.insert(LanguageCode(code.get<std::string>()));
  }
  if (j.contains("retry")) {
    const json& r = j.at("retry");
    check_keys(r, "retry", {"attempts", "initial_backoff_ms", "timeout_ms"});
    b.retry.attempts = static_cast<int>(get_count(r, "retry", "attempts", static_cast<std::size_t>(b.retry.attempts)));
    b.retry.initial_backoff = std::chrono::milliseconds(
        get<long long>(r, "retry", "initial_backoff_ms", b.retry.initial_backoff.count()));
    b.retry.timeout = std::chrono::milliseconds(get_count(r, "retry", "timeout_ms", b.retry.timeout.count()));
  }
  b.validate();
  return b;
}

Baseline parse_baseline(const json& value, const fs::path& base) {
  json j = value;
  if (value.is_string()) {
    try {
      j = json::parse(read_file(existing(base, value, "baseline")));
    } catch (const json::exception& e) {
      bad(std::string("baseline: ") + e.what());
    }
  }
  if (!j.is_object()) bad("baseline must be an object or a path");
  Baseline out;
  for (const auto& [lang, score] : j.items()) {
    if (!score.is_number()) bad("baseline." + lang + " must be a number");
    out[LanguageCode(lang)] = score.get<double>();
  }
  return out;
}

}  // namespace

const std::optional<fs::path>& DataPaths::get(Split split) const {
  switch (split) {
    case Split::kTrain: return train;
    case Split::kDev: return dev;
    case Split::kTest: return test;
  }
  return test;
}

std::map<LanguageCode, Dataset> RunConfig::load_split(Split split) const {
  std::map<LanguageCode, Dataset> out;
  for (const auto& [lang, paths] : data) {
    if (const auto& p = paths.get(split)) out.emplace(lang, read_dataset(*p, paths.format, lang, split));
  }
  return out;
}

void apply_override(json& doc, const std::string& dotted_key, const std::string& value) {
  if (dotted_key.empty() || dotted_key.front() == '.' || dotted_key.back() == '.') {
    bad("malformed override key '" + dotted_key + "'");
  }
  json parsed;
  try {
    parsed = json::parse(value);
  } catch (const json::exception&) {
    parsed = value;
  }
  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = dotted_key.find('.', start);
    const std::string part = dotted_key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) bad("malformed override key '" + dotted_key + "'");
    if (!node->is_object()) {
      if (!node->is_null()) bad("override '" + dotted_key + "' descends into a non-object");
      *node = json::object();
    }
    if (dot == std::string::npos) {
      (*node)[part] = parsed;
      return;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

RunConfig parse_run_config(const json& doc, const fs::path& base_dir) {
  check_keys(doc, "", {"seed", "out", "model", "format", "data", "backends", "translation", "tokenizer", "encoder",
                       "train", "finesem", "eval", "sweep", "baseline"});
  RunConfig rc;
  rc.seed = get<std::uint64_t>(doc, "config", "seed", 0);
  rc.out = get<std::string>(doc, "config", "out", "out");

  const std::string model = get<std::string>(doc, "config", "model", "transem");
  if (model == "transem") {
    rc.model = ModelChoice::kTranSem;
  } else if (model == "finesem") {
    rc.model = ModelChoice::kFineSem;
  } else {
    bad("model must be \"transem\" or \"finesem\"");
  }
  const DataFormat default_format = parse_format(get<std::string>(doc, "config", "format", "columnar"));

  if (doc.contains("data")) {
    const json& data = doc.at("data");
    if (!data.is_object()) bad("data must be an object keyed by language");
    for (const auto& [lang, entry] : data.items()) {
      const std::string where = "data." + lang;
      check_keys(entry, where, {"train", "dev", "test", "format"});
      DataPaths paths;
      paths.format = entry.contains("format") ? parse_format(entry.at("format").get<std::string>()) : default_format;
      for (Split split : {Split::kTrain, Split::kDev, Split::kTest}) {
        const std::string key(to_string(split));
        if (entry.contains(key)) {
          (split == Split::kTrain  ? paths.train
           : split == Split::kDev ? paths.dev
                                  : paths.test) = existing(base_dir, entry.at(key), where + "." + key);
        }
      }
      rc.data.emplace(LanguageCode(lang), std::move(paths));
    }
  }

  for (const auto& b : doc.value("backends", json::array())) rc.backends.push_back(parse_backend(b, base_dir));
  validate_backends(rc.backends);

  if (doc.contains("translation")) {
    const json& t = doc.at("translation");
    check_keys(t, "translation", {"max_in_flight", "texts_per_request", "cache"});
    rc.translation.max_in_flight = get_count(t, "translation", "max_in_flight", rc.translation.max_in_flight);
    rc.translation.texts_per_request =
        get_count(t, "translation", "texts_per_request", rc.translation.texts_per_request);
    if (t.contains("cache")) rc.cache_path = resolve(base_dir, t.at("cache").get<std::string>());
  }
  if (rc.cache_path.empty()) rc.cache_path = rc.out / "translation_cache.json";

  TokenizerConfig tokenizer;
  if (doc.contains("tokenizer")) {
    tokenizer = parse_tokenizer(doc.at("tokenizer"));
    rc.tokenizer_explicit = true;
  }
  std::size_t dim = 64;
  if (doc.contains("encoder")) {
    check_keys(doc.at("encoder"), "encoder", {"dim"});
    dim = get_count(doc.at("encoder"), "encoder", "dim", dim);
    rc.encoder_explicit = true;
  }

  TrainConfig& tc = rc.train;
  tc.seed = rc.seed;
  tc.tokenizer = tokenizer;
  tc.dim = dim;
  if (doc.contains("train")) {
    const json& t = doc.at("train");
    check_keys(t, "train", {"learning_rate", "weight_decay", "batch_size", "grad_accum_steps", "patience",
                            "max_epochs", "pooling", "data"});
    tc.learning_rate = get<double>(t, "train", "learning_rate", tc.learning_rate);
    tc.weight_decay = get<double>(t, "train", "weight_decay", tc.weight_decay);
    tc.batch_size = get_count(t, "train", "batch_size", tc.batch_size);
    tc.grad_accum_steps = get_count(t, "train", "grad_accum_steps", tc.grad_accum_steps);
    tc.patience = get_count(t, "train", "patience", tc.patience);
    tc.max_epochs = get_optional_count(t, "train", "max_epochs");
    tc.pooling = parse_pooling(get<std::string>(t, "train", "pooling", "mean"));
    const std::string source = get<std::string>(t, "train", "data", "original");
    if (source != "original" && source != "translated") bad("train.data must be \"original\" or \"translated\"");
    rc.train_translated = source == "translated";
  }
  tc.validate();

  CrossConfig& cc = rc.finesem;
  cc.seed = rc.seed;
  cc.tokenizer = tokenizer;
  cc.dim = dim;
  if (doc.contains("finesem")) {
    const json& f = doc.at("finesem");
    check_keys(f, "finesem", {"regime", "epochs", "batch_size", "learning_rate", "weight_decay", "pooling",
                              "fixed_epoch"});
    rc.regime = parse_regime(get<std::string>(f, "finesem", "regime", "individual"));
    cc.epochs = get_optional_count(f, "finesem", "epochs");
    cc.batch_size = get_count(f, "finesem", "batch_size", cc.batch_size);
    cc.learning_rate = get<double>(f, "finesem", "learning_rate", cc.learning_rate);
    cc.weight_decay = get<double>(f, "finesem", "weight_decay", cc.weight_decay);
    cc.pooling = parse_pooling(get<std::string>(f, "finesem", "pooling", "mean"));
    rc.fixed_epoch = get_optional_count(f, "finesem", "fixed_epoch");
  }
  cc.validate();
  if (rc.fixed_epoch && *rc.fixed_epoch > cc.epochs_for(rc.regime)) {
    bad("finesem.fixed_epoch exceeds the number of training epochs");
  }

  if (doc.contains("eval")) {
    check_keys(doc.at("eval"), "eval", {"split"});
    rc.eval_split = parse_split(get<std::string>(doc.at("eval"), "eval", "split", "test"));
  }
  if (doc.contains("sweep")) {
    const json& s = doc.at("sweep");
    check_keys(s, "sweep", {"batch_sizes"});
    if (s.contains("batch_sizes")) {
      rc.sweep_batch_sizes.clear();
      for (const auto& v : s.at("batch_sizes")) {
        if (!v.is_number_integer() || v.get<long long>() < 1) bad("sweep.batch_sizes must hold positive integers");
        rc.sweep_batch_sizes.push_back(v.get<std::size_t>());
      }
      if (rc.sweep_batch_sizes.empty()) bad("sweep.batch_sizes is empty");
    }
  }
  if (doc.contains("baseline")) rc.baseline = parse_baseline(doc.at("baseline"), base_dir);
  return rc;
}

}  // namespace semrel::cli
