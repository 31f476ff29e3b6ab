#include "semrel/finesem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "semrel/error.hpp"
#include "semrel/metrics.hpp"

namespace semrel {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

bool valid_model_name(const std::string& name) {
  if (name.empty() || name == "." || name == "..") return false;
  return std::all_of(name.begin(), name.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
  });
}

}  // namespace

std::string_view to_string(Regime regime) {
  switch (regime) {
    case Regime::kIndividual: return "individual";
    case Regime::kUnified: return "unified";
    case Regime::kTranslated: return "translated";
  }
  return "individual";
}

Regime parse_regime(std::string_view name) {
  if (name == "individual") return Regime::kIndividual;
  if (name == "unified") return Regime::kUnified;
  if (name == "translated") return Regime::kTranslated;
  throw Error(ErrorCode::kInvalidConfig, "unknown regime '" + std::string(name) + "'");
}

std::size_t CrossConfig::epochs_for(Regime regime) const {
  if (epochs) return *epochs;
  return regime == Regime::kTranslated ? 2 : 10;
}

AdamWConfig CrossConfig::optimizer() const {
  AdamWConfig a;
  a.learning_rate = learning_rate;
  a.weight_decay = weight_decay;
  return a;
}

void CrossConfig::validate() const {
  if (!(learning_rate > 0.0)) throw Error(ErrorCode::kInvalidConfig, "learning_rate must be > 0");
  if (weight_decay < 0.0) throw Error(ErrorCode::kInvalidConfig, "weight_decay must be >= 0");
  if (batch_size == 0) throw Error(ErrorCode::kInvalidConfig, "batch_size must be positive");
  if (epochs && *epochs == 0) throw Error(ErrorCode::kInvalidConfig, "epochs must be >= 1");
  if (dim == 0) throw Error(ErrorCode::kInvalidConfig, "dim must be positive");
  tokenizer.validate();
}

nlohmann::json to_json(const CrossConfig& cfg) {
  return {{"epochs", cfg.epochs ? nlohmann::json(*cfg.epochs) : nlohmann::json(nullptr)},
          {"batch_size", cfg.batch_size},
          {"learning_rate", cfg.learning_rate},
          {"weight_decay", cfg.weight_decay},
          {"seed", cfg.seed},
          {"pooling", std::string(to_string(cfg.pooling))}};
}

CrossModel CrossModel::random(std::size_t vocab_size, std::size_t dim, Rng& rng) {
  CrossModel m;
  m.encoder = EncoderParams::random(vocab_size, dim, rng);
  m.head.weight.resize(dim);
  for (auto& w : m.head.weight) w = rng.uniform(-0.1, 0.1);
  m.head.bias = 0.5;
  return m;
}

std::vector<TokenId> joint_tokens(const TokenizerConfig& cfg, std::string_view sentence1,
                                  std::string_view sentence2) {
  auto ids = tokenize(cfg, sentence1);
  const auto second = tokenize(cfg, sentence2);
  ids.push_back(kSepToken);
  ids.insert(ids.end(), second.begin() + 1, second.end());
  return ids;
}

double cross_forward(const EncoderParams& params, const RegressionHead& head, const TokenizerConfig& cfg,
                     const LabeledPair& pair, Pooling pooling) {
  if (head.weight.size() != params.dim()) throw Error(ErrorCode::kShapeMismatch, "head width differs from d");
  const auto s = encode_tokens(params, joint_tokens(cfg, pair.sentence1, pair.sentence2), pooling);
  return dot(head.weight, s) + head.bias;
}

CrossAccumulator::CrossAccumulator(std::size_t vocab_size, std::size_t dim) {
  sum_.encoder = EncoderParams::zeros(vocab_size, dim);
  sum_.head_weight.assign(dim, 0.0);
}

double CrossAccumulator::add(const CrossModel& model, std::span<const TokenId> joint, double gold,
                             Pooling pooling) {
  const auto s = encode_tokens(model.encoder, joint, pooling);
  const double diff = dot(model.head.weight, s) + model.head.bias - gold;
  const double g = 2.0 * diff;
  for (std::size_t i = 0; i < s.size(); ++i) sum_.head_weight[i] += g * s[i];
  sum_.head_bias += g;
  accumulate_backward(model.encoder, joint, pooling, model.head.weight, g, sum_.encoder);
  loss_sum_ += diff * diff;
  ++count_;
  return diff * diff;
}

CrossBatchGradients CrossAccumulator::mean() const {
  if (count_ == 0) throw Error(ErrorCode::kEmptyBatch, "no pairs accumulated");
  const double inv = 1.0 / static_cast<double>(count_);
  CrossBatchGradients out{loss_sum_ * inv, sum_};
  out.grads.encoder.scale(inv);
  for (auto& w : out.grads.head_weight) w *= inv;
  out.grads.head_bias *= inv;
  return out;
}

void CrossAccumulator::reset() {
  sum_.encoder.scale(0.0);
  std::fill(sum_.head_weight.begin(), sum_.head_weight.end(), 0.0);
  sum_.head_bias = 0.0;
  loss_sum_ = 0.0;
  count_ = 0;
}

CrossBatchGradients cross_batch_gradients(const CrossModel& model, const TokenizerConfig& cfg,
                                          std::span<const LabeledPair> pairs, Pooling pooling) {
  if (pairs.empty()) throw Error(ErrorCode::kEmptyBatch, "empty batch");
  CrossAccumulator acc(model.encoder.vocab_size(), model.encoder.dim());
  for (const auto& p : pairs) {
    if (!p.score) throw Error(ErrorCode::kMissingScore, "pair " + p.id + " has no score");
    acc.add(model, joint_tokens(cfg, p.sentence1, p.sentence2), *p.score, pooling);
  }
  return acc.mean();
}

void adamw_step(CrossModel& model, const CrossGradients& grads, AdamWState& state, const AdamWConfig& cfg) {
  auto params = trainable_segments(model.encoder);
  params.push_back({model.head.weight, true});
  params.push_back({std::span<double>(&model.head.bias, 1), false});
  auto g = gradient_segments(grads.encoder);
  g.push_back(grads.head_weight);
  g.push_back(std::span<const double>(&grads.head_bias, 1));
  adamw_step(params, g, state, cfg);
}

CrossTrainResult train_cross(const Dataset& train_ds, const CrossConfig& cfg, std::size_t epochs) {
  cfg.validate();
  if (epochs == 0) throw Error(ErrorCode::kInvalidConfig, "epochs must be >= 1");
  if (train_ds.empty()) throw Error(ErrorCode::kEmptyInput, "empty training set");
  struct Item {
    std::vector<TokenId> joint;
    double gold;
  };
  std::vector<Item> items;
  items.reserve(train_ds.size());
  for (const auto& p : train_ds.pairs) {
    if (!p.score) throw Error(ErrorCode::kMissingScore, "pair " + p.id + " has no score");
    items.push_back({joint_tokens(cfg.tokenizer, p.sentence1, p.sentence2), *p.score});
  }

  Rng rng(cfg.seed);
  CrossModel model = CrossModel::random(cfg.tokenizer.vocab_size, cfg.dim, rng);
  AdamWState state;
  const auto opt = cfg.optimizer();
  CrossAccumulator acc(cfg.tokenizer.vocab_size, cfg.dim);

  Manifest base;
  base.model_kind = ModelKind::kCrossEncoder;
  base.tokenizer = cfg.tokenizer;
  base.pooling = cfg.pooling;
  base.config = to_json(cfg);

  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), 0);
  CrossTrainResult result;
  for (std::size_t epoch = 1; epoch <= epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double loss = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      for (std::size_t k = start; k < stop; ++k) {
        loss += acc.add(model, items[order[k]].joint, items[order[k]].gold, cfg.pooling);
        ++seen;
      }
      adamw_step(model, acc.mean().grads, state, opt);
      acc.reset();
    }
    Manifest m = base;
    m.epoch = epoch;
    m.train_loss = loss / static_cast<double>(seen);
    result.checkpoints.push_back(make_checkpoint(m, model.encoder, &model.head));
    result.epochs.push_back({epoch, *m.train_loss, seen});
  }
  return result;
}

Predictions predict_cross(const Checkpoint& checkpoint, const Dataset& dataset) {
  if (checkpoint.manifest.model_kind != ModelKind::kCrossEncoder || !checkpoint.head) {
    throw Error(ErrorCode::kInvalidCheckpoint, "cross-encoder prediction needs a crossenc checkpoint");
  }
  Predictions out;
  out.scores.reserve(dataset.size());
  for (const auto& p : dataset.pairs) {
    out.scores.push_back(cross_forward(checkpoint.encoder, *checkpoint.head, checkpoint.manifest.tokenizer, p,
                                       checkpoint.manifest.pooling));
  }
  return out;
}

Predictions predict_any(const Checkpoint& checkpoint, const Dataset& dataset) {
  return checkpoint.manifest.model_kind == ModelKind::kCrossEncoder ? predict_cross(checkpoint, dataset)
                                                                    : predict(checkpoint, dataset);
}

RegimeResult train_regime(const std::map<LanguageCode, LanguageData>& data, Regime regime,
                          const TranslationLayer* translation, const CrossConfig& cfg) {
  if (data.empty()) throw Error(ErrorCode::kEmptyInput, "no training languages");
  const std::size_t epochs = cfg.epochs_for(regime);
  RegimeResult result;
  switch (regime) {
    case Regime::kIndividual:
      for (const auto& [lang, ld] : data) {
        result.models.emplace(lang.str(), train_cross(ld.train, cfg, epochs));
        result.model_for_lang[lang] = lang.str();
        if (ld.dev) result.dev_sets[lang] = *ld.dev;
      }
      break;
    case Regime::kUnified: {
      std::vector<Dataset> trains;
      for (const auto& [lang, ld] : data) {
        trains.push_back(ld.train);
        result.model_for_lang[lang] = "unified";
        if (ld.dev) result.dev_sets[lang] = *ld.dev;
      }
      result.models.emplace("unified", train_cross(merge_datasets(trains), cfg, epochs));
      break;
    }
    case Regime::kTranslated: {
      if (!translation || translation->backends.empty() || !translation->cache) {
        throw Error(ErrorCode::kEmptyInput, "translated regime needs at least one backend");
      }
      std::vector<Dataset> trains;
      for (const auto& [lang, ld] : data) {
        auto aug = augment_training(ld.train, translation->backends, *translation->cache, translation->options);
        trains.push_back(with_id_prefix(aug.dataset, lang.str()));
        result.model_for_lang[lang] = "translated";
        if (ld.dev) {
          result.dev_sets[lang] =
              translate_eval(*ld.dev, translation->backends, *translation->cache, translation->options).dataset;
        }
      }
      result.models.emplace("translated", train_cross(merge_datasets(trains), cfg, epochs));
      break;
    }
  }
  return result;
}

std::size_t select_best_index(std::span<const double> dev_scores) {
  if (dev_scores.empty()) throw Error(ErrorCode::kEmptyInput, "no checkpoints to select from");
  std::size_t best = 0;
  for (std::size_t i = 1; i < dev_scores.size(); ++i) {
    if (dev_scores[i] > dev_scores[best]) best = i;
  }
  return best;
}

Selection select_checkpoint(std::span<const Checkpoint> checkpoints, const Dataset& dev_ds) {
  if (checkpoints.empty()) throw Error(ErrorCode::kEmptyInput, "no checkpoints to select from");
  const auto gold = dev_ds.gold_scores();
  std::vector<double> scores;
  scores.reserve(checkpoints.size());
  for (const auto& ck : checkpoints) scores.push_back(spearman_or_lowest(predict_any(ck, dev_ds).scores, gold));
  const auto best = select_best_index(scores);
  Selection sel{checkpoints[best], checkpoints[best].manifest.epoch, scores[best]};
  if (std::isfinite(sel.dev_spearman)) {
    sel.checkpoint.manifest.dev_spearman = sel.dev_spearman;
  } else {
    sel.checkpoint.manifest.dev_spearman.reset();
  }
  return sel;
}

Selection select_fixed_epoch(std::span<const Checkpoint> checkpoints, std::size_t epoch, const Dataset* dev_ds) {
  auto it = std::find_if(checkpoints.begin(), checkpoints.end(),
                         [&](const Checkpoint& ck) { return ck.manifest.epoch == epoch; });
  if (it == checkpoints.end()) {
    throw Error(ErrorCode::kInvalidConfig, "no checkpoint for epoch " + std::to_string(epoch));
  }
  Selection sel{*it, epoch, -std::numeric_limits<double>::infinity()};
  if (dev_ds) sel.dev_spearman = spearman_or_lowest(predict_any(*it, *dev_ds).scores, dev_ds->gold_scores());
  if (std::isfinite(sel.dev_spearman)) sel.checkpoint.manifest.dev_spearman = sel.dev_spearman;
  return sel;
}

std::string route_model_name(const LanguageCode& lang) { return lang.str() == "eng" ? "esp" : "eng"; }

std::string crosslingual_route(const LanguageCode& lang, const ModelRegistry& registry) {
  auto name = route_model_name(lang);
  if (!registry.contains(name)) {
    throw Error(ErrorCode::kMissingModel, "language " + lang.str() + " needs model '" + name + "'");
  }
  return name;
}

void save_registry(const ModelRegistry& registry, const std::filesystem::path& dir) {
  nlohmann::json names = nlohmann::json::array();
  for (const auto& [name, ck] : registry) {
    if (!valid_model_name(name)) throw Error(ErrorCode::kInvalidConfig, "bad model name '" + name + "'");
    save_checkpoint(ck, dir / name);
    names.push_back(name);
  }
  write_file(dir / "index.json", nlohmann::json{{"models", names}}.dump(2) + "\n");
}

ModelRegistry load_registry(const std::filesystem::path& dir) {
  nlohmann::json index;
  try {
    index = nlohmann::json::parse(read_file(dir / "index.json"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidCheckpoint, (dir / "index.json").string() + ": " + e.what());
  }
  ModelRegistry registry;
  for (const auto& name : index.at("models")) {
    const auto n = name.get<std::string>();
    if (!valid_model_name(n)) throw Error(ErrorCode::kInvalidCheckpoint, "bad model name '" + n + "'");
    registry.emplace(n, load_checkpoint(dir / n));
  }
  return registry;
}

}  // namespace semrel
