#include "semrel/transem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "semrel/error.hpp"
#include "semrel/metrics.hpp"

namespace semrel {

namespace {

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

struct TokenizedPair {
  std::vector<TokenId> first;
  std::vector<TokenId> second;
  double gold = 0.0;
};

std::vector<TokenizedPair> tokenize_all(const Dataset& ds, const TokenizerConfig& cfg) {
  std::vector<TokenizedPair> out;
  out.reserve(ds.size());
  for (const auto& p : ds.pairs) {
    if (!p.score) throw Error(ErrorCode::kMissingScore, "pair " + p.id + " has no score");
    out.push_back({tokenize(cfg, p.sentence1), tokenize(cfg, p.sentence2), *p.score});
  }
  return out;
}

}  // namespace

AdamWConfig TrainConfig::optimizer() const {
  AdamWConfig a;
  a.learning_rate = learning_rate;
  a.weight_decay = weight_decay;
  return a;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw Error(ErrorCode::kInvalidConfig, "learning_rate must be > 0");
  if (weight_decay < 0.0) throw Error(ErrorCode::kInvalidConfig, "weight_decay must be >= 0");
  if (batch_size == 0 || grad_accum_steps == 0 || patience == 0) {
    throw Error(ErrorCode::kInvalidConfig, "batch_size, grad_accum_steps and patience must be positive");
  }
  if (max_epochs && *max_epochs == 0) throw Error(ErrorCode::kInvalidConfig, "max_epochs must be positive");
  if (dim == 0) throw Error(ErrorCode::kInvalidConfig, "dim must be positive");
  tokenizer.validate();
}

nlohmann::json to_json(const TrainConfig& cfg) {
  return {{"learning_rate", cfg.learning_rate},
          {"weight_decay", cfg.weight_decay},
          {"batch_size", cfg.batch_size},
          {"grad_accum_steps", cfg.grad_accum_steps},
          {"patience", cfg.patience},
          {"max_epochs", cfg.max_epochs ? nlohmann::json(*cfg.max_epochs) : nlohmann::json(nullptr)},
          {"seed", cfg.seed},
          {"pooling", std::string(to_string(cfg.pooling))}};
}

double cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw Error(ErrorCode::kShapeMismatch, "cosine of vectors with different sizes");
  const double nu = norm(u);
  const double nv = norm(v);
  if (nu == 0.0 || nv == 0.0) throw Error(ErrorCode::kZeroNorm, "cosine of a zero vector");
  double dot = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) dot += u[i] * v[i];
  return std::clamp(dot / (nu * nv), -1.0, 1.0);
}

double pair_loss(const EncoderParams& params, const TokenizerConfig& cfg, const LabeledPair& pair,
                 Pooling pooling) {
  if (!pair.score) throw Error(ErrorCode::kMissingScore, "pair " + pair.id + " has no score");
  const auto s1 = encode_sentence(params, cfg, pair.sentence1, pooling);
  const auto s2 = encode_sentence(params, cfg, pair.sentence2, pooling);
  const double diff = cosine(s1, s2) - *pair.score;
  return diff * diff;
}

GradientAccumulator::GradientAccumulator(std::size_t vocab_size, std::size_t dim)
    : sum_(EncoderParams::zeros(vocab_size, dim)) {}

double GradientAccumulator::add(const EncoderParams& params, std::span<const TokenId> first,
                                std::span<const TokenId> second, double gold, Pooling pooling) {
  const auto u = encode_tokens(params, first, pooling);
  const auto v = encode_tokens(params, second, pooling);
  const double nu = norm(u);
  const double nv = norm(v);
  if (nu == 0.0 || nv == 0.0) {
    throw Error(ErrorCode::kZeroNorm, "zero-norm sentence embedding during training");
  }
  double dot = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) dot += u[i] * v[i];
  const double c = dot / (nu * nv);
  const double diff = c - gold;

  // dc/du = v/(|u||v|) - c u/|u|^2, and symmetrically for v.
  const std::size_t d = u.size();
  std::vector<double> dc_du(d), dc_dv(d);
  for (std::size_t i = 0; i < d; ++i) {
    dc_du[i] = v[i] / (nu * nv) - c * u[i] / (nu * nu);
    dc_dv[i] = u[i] / (nu * nv) - c * v[i] / (nv * nv);
  }
  const double dloss_dc = 2.0 * diff;
  accumulate_backward(params, first, pooling, dc_du, dloss_dc, sum_);
  accumulate_backward(params, second, pooling, dc_dv, dloss_dc, sum_);
  loss_sum_ += diff * diff;
  ++count_;
  return diff * diff;
}

BatchGradients GradientAccumulator::mean() const {
  if (count_ == 0) throw Error(ErrorCode::kEmptyBatch, "no pairs accumulated");
  BatchGradients out{loss_sum_ / static_cast<double>(count_), sum_};
  out.grads.scale(1.0 / static_cast<double>(count_));
  return out;
}

void GradientAccumulator::reset() {
  std::fill(sum_.embeddings.data.begin(), sum_.embeddings.data.end(), 0.0);
  std::fill(sum_.projection.data.begin(), sum_.projection.data.end(), 0.0);
  std::fill(sum_.bias.begin(), sum_.bias.end(), 0.0);
  loss_sum_ = 0.0;
  count_ = 0;
}

BatchGradients batch_gradients(const EncoderParams& params, const TokenizerConfig& cfg,
                               std::span<const LabeledPair> pairs, Pooling pooling) {
  if (pairs.empty()) throw Error(ErrorCode::kEmptyBatch, "empty batch");
  GradientAccumulator acc(params.vocab_size(), params.dim());
  for (const auto& p : pairs) {
    if (!p.score) throw Error(ErrorCode::kMissingScore, "pair " + p.id + " has no score");
    acc.add(params, tokenize(cfg, p.sentence1), tokenize(cfg, p.sentence2), *p.score, pooling);
  }
  return acc.mean();
}

TokenizerConfig tokenizer_of(const Checkpoint& checkpoint) { return checkpoint.manifest.tokenizer; }

TrainResult train(const Dataset& train_ds, const Dataset& dev_ds, const TrainConfig& cfg,
                  const TrainHooks& hooks) {
  cfg.validate();
  if (train_ds.empty()) throw Error(ErrorCode::kEmptyInput, "empty training set");
  const auto train_pairs = tokenize_all(train_ds, cfg.tokenizer);
  std::vector<double> dev_gold;
  if (!hooks.dev_scorer) {
    if (dev_ds.size() < 2) throw Error(ErrorCode::kEmptyInput, "dev set needs at least 2 scored pairs");
    dev_gold = dev_ds.gold_scores();
  }

  Rng rng(cfg.seed);
  EncoderParams params = EncoderParams::random(cfg.tokenizer.vocab_size, cfg.dim, rng);
  AdamWState state;
  const AdamWConfig opt = cfg.optimizer();
  GradientAccumulator acc(cfg.tokenizer.vocab_size, cfg.dim);

  Manifest base;
  base.model_kind = ModelKind::kBiEncoder;
  base.tokenizer = cfg.tokenizer;
  base.pooling = cfg.pooling;
  base.config = to_json(cfg);

  std::vector<std::size_t> order(train_pairs.size());
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  double best_score = -std::numeric_limits<double>::infinity();
  bool have_best = false;
  std::size_t since_improvement = 0;

  for (std::size_t epoch = 1;; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double epoch_loss = 0.0;
    std::size_t micro = 0;
    auto apply = [&] {
      const auto g = acc.mean();
      adamw_step(params, g.grads, state, opt);
      acc.reset();
      micro = 0;
    };
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      for (std::size_t k = start; k < stop; ++k) {
        const auto& p = train_pairs[order[k]];
        epoch_loss += acc.add(params, p.first, p.second, p.gold, cfg.pooling);
      }
      if (++micro == cfg.grad_accum_steps) apply();
    }
    if (acc.count() > 0) apply();

    Manifest m = base;
    m.epoch = epoch;
    m.train_loss = epoch_loss / static_cast<double>(train_pairs.size());
    Checkpoint snapshot = make_checkpoint(m, params);
    const double dev = hooks.dev_scorer
                           ? hooks.dev_scorer(snapshot, epoch)
                           : spearman_or_lowest(predict(snapshot, dev_ds).scores, dev_gold);
    if (std::isfinite(dev)) snapshot.manifest.dev_spearman = dev;

    EpochRecord rec{epoch, *m.train_loss, dev};
    result.history.push_back(rec);
    if (hooks.on_epoch) hooks.on_epoch(rec);

    if (!have_best || dev > best_score) {
      have_best = true;
      best_score = dev;
      result.best = std::move(snapshot);
      result.best_epoch = epoch;
      since_improvement = 0;
    } else {
      ++since_improvement;
    }
    if (since_improvement >= cfg.patience) break;
    if (cfg.max_epochs && epoch >= *cfg.max_epochs) break;
  }
  return result;
}

Predictions predict(const Checkpoint& checkpoint, const Dataset& dataset) {
  if (checkpoint.manifest.model_kind != ModelKind::kBiEncoder) {
    throw Error(ErrorCode::kInvalidCheckpoint, "bi-encoder prediction needs a biencoder checkpoint");
  }
  const auto& params = checkpoint.encoder;
  const auto cfg = tokenizer_of(checkpoint);
  const auto pooling = checkpoint.manifest.pooling;
  Predictions out;
  out.scores.reserve(dataset.size());
  for (const auto& p : dataset.pairs) {
    const auto s1 = encode_sentence(params, cfg, p.sentence1, pooling);
    const auto s2 = encode_sentence(params, cfg, p.sentence2, pooling);
    if (norm(s1) == 0.0 || norm(s2) == 0.0) {
      out.scores.push_back(0.0);
      ++out.degenerate;
      continue;
    }
    out.scores.push_back(cosine(s1, s2));
  }
  return out;
}

std::string history_jsonl(std::span<const EpochRecord> history) {
  std::string out;
  for (const auto& r : history) {
    nlohmann::json j;
    j["epoch"] = r.epoch;
    j["train_loss"] = r.train_loss;
    j["dev_spearman"] = std::isfinite(r.dev_spearman) ? nlohmann::json(r.dev_spearman) : nlohmann::json(nullptr);
    out += j.dump() + "\n";
  }
  return out;
}

}  // namespace semrel
