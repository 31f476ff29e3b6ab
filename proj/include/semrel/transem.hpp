#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "semrel/adamw.hpp"
#include "semrel/checkpoint.hpp"
#include "semrel/corpus.hpp"
#include "semrel/encoder.hpp"

namespace semrel {

struct TrainConfig {
  double learning_rate = 1e-5;
  double weight_decay = 0.01;
  std::size_t batch_size = 16;
  std::size_t grad_accum_steps = 2;
  std::size_t patience = 10;
  std::optional<std::size_t> max_epochs;  // unset: run until patience runs out
  std::uint64_t seed = 0;
  Pooling pooling = Pooling::kMean;
  TokenizerConfig tokenizer;
  std::size_t dim = 64;

  std::size_t effective_batch() const noexcept { return batch_size * grad_accum_steps; }
  AdamWConfig optimizer() const;
  void validate() const;
};

nlohmann::json to_json(const TrainConfig& cfg);

// u.v / (|u| |v|); throws kZeroNorm if either vector is zero.
double cosine(std::span<const double> u, std::span<const double> v);

// (cos(s1, s2) - y)^2 with both sentences through the same encoder.
double pair_loss(const EncoderParams& params, const TokenizerConfig& cfg, const LabeledPair& pair,
                 Pooling pooling);

struct BatchGradients {
  double loss = 0.0;     // mean over the pairs
  EncoderParams grads;   // dense, same shape as the parameters
};

// Sums per-pair losses and gradients; mean() divides by the number of pairs
// added since the last reset. Accumulating k micro-batches therefore
// reproduces one batch of their union.
class GradientAccumulator {
 public:
  GradientAccumulator(std::size_t vocab_size, std::size_t dim);

  // Returns the pair's squared error.
  double add(const EncoderParams& params, std::span<const TokenId> first,
             std::span<const TokenId> second, double gold, Pooling pooling);

  std::size_t count() const noexcept { return count_; }
  BatchGradients mean() const;
  void reset();

 private:
  EncoderParams sum_;
  double loss_sum_ = 0.0;
  std::size_t count_ = 0;
};

BatchGradients batch_gradients(const EncoderParams& params, const TokenizerConfig& cfg,
                               std::span<const LabeledPair> pairs, Pooling pooling);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double dev_spearman = 0.0;  // -infinity when undefined
};

struct TrainHooks {
  // Replaces the dev-set Spearman computation (tests inject score sequences).
  std::function<double(const Checkpoint&, std::size_t epoch)> dev_scorer;
  std::function<void(const EpochRecord&)> on_epoch;
};

struct TrainResult {
  Checkpoint best;
  std::size_t best_epoch = 0;
  std::vector<EpochRecord> history;
};

// Seeded shuffle per epoch, micro-batches of batch_size, one AdamW step per
// grad_accum_steps micro-batches (gradients averaged over the effective
// batch). After every epoch the float32 snapshot is scored on dev; training
// stops once `patience` consecutive epochs fail to strictly improve the best
// score, or at max_epochs.
TrainResult train(const Dataset& train_ds, const Dataset& dev_ds, const TrainConfig& cfg,
                  const TrainHooks& hooks = {});

struct Predictions {
  std::vector<double> scores;
  std::size_t degenerate = 0;  // zero-norm embeddings scored as 0
};

Predictions predict(const Checkpoint& checkpoint, const Dataset& dataset);

std::string history_jsonl(std::span<const EpochRecord> history);

TokenizerConfig tokenizer_of(const Checkpoint& checkpoint);

}  // namespace semrel
