#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "semrel/adamw.hpp"
#include "semrel/checkpoint.hpp"
#include "semrel/corpus.hpp"
#include "semrel/encoder.hpp"
#include "semrel/transem.hpp"
#include "semrel/translate.hpp"

namespace semrel {

enum class Regime { kIndividual, kUnified, kTranslated };

std::string_view to_string(Regime regime);
Regime parse_regime(std::string_view name);

struct CrossConfig {
  std::optional<std::size_t> epochs;  // unset: 10, or 2 for kTranslated
  std::size_t batch_size = 16;
  double learning_rate = 1e-5;
  double weight_decay = 0.01;
  std::uint64_t seed = 0;
  Pooling pooling = Pooling::kMean;
  TokenizerConfig tokenizer;
  std::size_t dim = 64;

  std::size_t epochs_for(Regime regime) const;
  AdamWConfig optimizer() const;
  void validate() const;
};

nlohmann::json to_json(const CrossConfig& cfg);

struct CrossModel {
  EncoderParams encoder;
  RegressionHead head;

  // Encoder as in the bi-encoder, head w uniform in [-0.1, 0.1], c = 0.5.
  static CrossModel random(std::size_t vocab_size, std::size_t dim, Rng& rng);
};

// tokenize(s1) ++ [SEP] ++ tokenize(s2) without its leading CLS.
std::vector<TokenId> joint_tokens(const TokenizerConfig& cfg, std::string_view sentence1,
                                  std::string_view sentence2);

// w . encode(joint) + c, unclamped.
double cross_forward(const EncoderParams& params, const RegressionHead& head, const TokenizerConfig& cfg,
                     const LabeledPair& pair, Pooling pooling);

struct CrossGradients {
  EncoderParams encoder;
  std::vector<double> head_weight;
  double head_bias = 0.0;
};

struct CrossBatchGradients {
  double loss = 0.0;
  CrossGradients grads;
};

class CrossAccumulator {
 public:
  CrossAccumulator(std::size_t vocab_size, std::size_t dim);

  double add(const CrossModel& model, std::span<const TokenId> joint, double gold, Pooling pooling);
  std::size_t count() const noexcept { return count_; }
  CrossBatchGradients mean() const;
  void reset();

 private:
  CrossGradients sum_;
  double loss_sum_ = 0.0;
  std::size_t count_ = 0;
};

// Mean of (y_hat - y)^2 and its exact gradient.
CrossBatchGradients cross_batch_gradients(const CrossModel& model, const TokenizerConfig& cfg,
                                          std::span<const LabeledPair> pairs, Pooling pooling);

// E, W, head.w decay; b and head.c do not.
void adamw_step(CrossModel& model, const CrossGradients& grads, AdamWState& state, const AdamWConfig& cfg);

struct CrossEpoch {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  std::size_t pairs_seen = 0;
};

struct CrossTrainResult {
  std::vector<Checkpoint> checkpoints;  // one per epoch, manifest.epoch = 1..epochs
  std::vector<CrossEpoch> epochs;
};

CrossTrainResult train_cross(const Dataset& train_ds, const CrossConfig& cfg, std::size_t epochs);

Predictions predict_cross(const Checkpoint& checkpoint, const Dataset& dataset);

// Dispatches on manifest.model_kind.
Predictions predict_any(const Checkpoint& checkpoint, const Dataset& dataset);

struct LanguageData {
  Dataset train;
  std::optional<Dataset> dev;
};

struct TranslationLayer {
  std::span<const TranslationBackend> backends;
  TranslationCache* cache = nullptr;
  TranslateOptions options;
};

struct RegimeResult {
  std::map<std::string, CrossTrainResult> models;
  std::map<LanguageCode, std::string> model_for_lang;  // which model each language's dev set selects from
  std::map<LanguageCode, Dataset> dev_sets;            // as used for selection (translated under kTranslated)
};

// Individual: one model per language (named by its code). Unified: one model
// "unified" over the merged untranslated data. Translated: one model
// "translated" over the merged augmentation of every language.
RegimeResult train_regime(const std::map<LanguageCode, LanguageData>& data, Regime regime,
                          const TranslationLayer* translation, const CrossConfig& cfg);

struct Selection {
  Checkpoint checkpoint;
  std::size_t epoch = 0;
  double dev_spearman = 0.0;  // -infinity when undefined
};

// Index of the maximum; ties resolve to the earliest position.
std::size_t select_best_index(std::span<const double> dev_scores);

Selection select_checkpoint(std::span<const Checkpoint> checkpoints, const Dataset& dev_ds);

// Uses the checkpoint of a fixed epoch (1-based) instead of the dev argmax.
Selection select_fixed_epoch(std::span<const Checkpoint> checkpoints, std::size_t epoch,
                             const Dataset* dev_ds = nullptr);

using ModelRegistry = std::map<std::string, Checkpoint>;

// "eng" -> "esp"; every other language -> "eng".
std::string route_model_name(const LanguageCode& lang);

// route_model_name, checked against the registry (kMissingModel).
std::string crosslingual_route(const LanguageCode& lang, const ModelRegistry& registry);

// <dir>/<name>/{manifest.json,params.bin} plus <dir>/index.json.
void save_registry(const ModelRegistry& registry, const std::filesystem::path& dir);
ModelRegistry load_registry(const std::filesystem::path& dir);

}  // namespace semrel
