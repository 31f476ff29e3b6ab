#include <cmath>
#include <cstring>
#include <limits>

#include "doctest.h"
#include "oracles.hpp"
#include "realizable.hpp"
#include "semrel/checkpoint.hpp"
#include "semrel/error.hpp"
#include "semrel/metrics.hpp"
#include "semrel/transem.hpp"
#include "test_util.hpp"

using namespace semrel;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::kIo;
}

TrainConfig tiny_config(std::size_t vocab = 64, std::size_t dim = 8) {
  TrainConfig cfg;
  cfg.tokenizer.vocab_size = vocab;
  cfg.dim = dim;
  cfg.learning_rate = 1e-2;
  return cfg;
}

std::vector<oracle::TokPair> tokenized(const TokenizerConfig& tok, std::span<const LabeledPair> pairs) {
  std::vector<oracle::TokPair> out;
  for (const auto& p : pairs) out.push_back({tokenize(tok, p.sentence1), tokenize(tok, p.sentence2), *p.score});
  return out;
}

double max_rel(std::span<const double> a, std::span<const double> b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double scale = std::max(std::abs(a[i]), std::abs(b[i]));
    if (scale > 0) worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
  }
  return worst;
}

// Params with W = I, b = 0 and chosen embedding rows.
EncoderParams identity_params(std::size_t vocab, std::size_t dim) {
  auto p = EncoderParams::zeros(vocab, dim);
  for (std::size_t i = 0; i < dim; ++i) p.projection(i, i) = 1.0;
  return p;
}

}  // namespace

TEST_CASE("cosine") {
  const std::vector<double> v{0.3, -2.0, 1.5};
  CHECK(cosine(v, v) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(cosine(std::vector<double>{1, 0}, std::vector<double>{0, 1}) == 0.0);
  CHECK(cosine(std::vector<double>{1, 0}, std::vector<double>{1, 1}) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
  CHECK(cosine(std::vector<double>{1, 0}, std::vector<double>{1, 1}) == doctest::Approx(0.7071067811865476));
  CHECK(code_of([] { cosine(std::vector<double>{0, 0}, std::vector<double>{1, 1}); }) == ErrorCode::kZeroNorm);
  CHECK(code_of([] { cosine(std::vector<double>{1}, std::vector<double>{1, 1}); }) == ErrorCode::kShapeMismatch);
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> a(5), b(5);
    for (auto& x : a) x = rng.uniform(-1, 1);
    for (auto& x : b) x = rng.uniform(-1, 1);
    const double c = cosine(a, b);
    CHECK(c >= -1.0);
    CHECK(c <= 1.0);
    CHECK(c == doctest::Approx(oracle::cosine(a, b)).epsilon(1e-14));
  }
}

TEST_CASE("pair_loss examples") {
  TokenizerConfig tok;
  tok.vocab_size = 1 << 16;
  const auto x = tokenize(tok, "x")[1];
  const auto y = tokenize(tok, "y")[1];
  REQUIRE(x != y);
  auto p = identity_params(tok.vocab_size, 2);
  // mean over [CLS, t] with E[CLS] = 0 halves the token row
  p.embeddings(x, 0) = 2.0;
  p.embeddings(y, 0) = 1.0;
  p.embeddings(y, 1) = std::sqrt(3.0);
  const LabeledPair half{"p", LanguageCode("eng"), "x", "y", 1.0};
  CHECK(pair_loss(p, tok, half, Pooling::kMean) == doctest::Approx(0.25).epsilon(1e-14));
  const LabeledPair same{"q", LanguageCode("eng"), "x", "x", 1.0};
  CHECK(pair_loss(p, tok, same, Pooling::kMean) == doctest::Approx(0.0));
  CHECK(pair_loss(p, tok, same, Pooling::kMean) < 1e-30);
  const LabeledPair unscored{"r", LanguageCode("eng"), "x", "y", std::nullopt};
  CHECK(code_of([&] { pair_loss(p, tok, unscored, Pooling::kMean); }) == ErrorCode::kMissingScore);
  // the zero vector cannot be compared
  const auto zero = EncoderParams::zeros(tok.vocab_size, 2);
  CHECK(code_of([&] { pair_loss(zero, tok, half, Pooling::kMean); }) == ErrorCode::kZeroNorm);
}

TEST_CASE("pair_loss matches a straight-line evaluation and is symmetric") {
  const auto cfg = tiny_config(16, 4);
  Rng rng(2);
  const auto ds = testutil::synthetic("eng", Split::kTrain, 30, 3);
  for (int trial = 0; trial < 10; ++trial) {
    const auto p = EncoderParams::random(16, 4, rng);
    for (const auto& pair : ds.pairs) {
      for (Pooling mode : {Pooling::kMean, Pooling::kMax}) {
        const double l = pair_loss(p, cfg.tokenizer, pair, mode);
        const auto tp = tokenized(cfg.tokenizer, std::span<const LabeledPair>(&pair, 1));
        CHECK(l == doctest::Approx(oracle::biencoder_loss(p, tp, mode)).epsilon(1e-12));
        CHECK(l >= 0.0);
        LabeledPair swapped = pair;
        std::swap(swapped.sentence1, swapped.sentence2);
        CHECK(pair_loss(p, cfg.tokenizer, swapped, mode) == doctest::Approx(l).epsilon(1e-14));
      }
    }
  }
}

TEST_CASE("batch_gradients loss is the mean of pair losses") {
  const auto cfg = tiny_config(32, 4);
  Rng rng(3);
  const auto p = EncoderParams::random(32, 4, rng);
  const auto ds = testutil::synthetic("eng", Split::kTrain, 2, 9);
  const auto one = batch_gradients(p, cfg.tokenizer, std::span(ds.pairs.data(), 1), Pooling::kMean);
  const std::vector<LabeledPair> twice{ds.pairs[0], ds.pairs[0]};
  const auto dup = batch_gradients(p, cfg.tokenizer, twice, Pooling::kMean);
  CHECK(dup.loss == doctest::Approx(one.loss).epsilon(1e-15));
  CHECK(max_rel(dup.grads.projection.data, one.grads.projection.data) < 1e-14);
  const auto both = batch_gradients(p, cfg.tokenizer, ds.pairs, Pooling::kMean);
  const double expect = (pair_loss(p, cfg.tokenizer, ds.pairs[0], Pooling::kMean) +
                         pair_loss(p, cfg.tokenizer, ds.pairs[1], Pooling::kMean)) / 2;
  CHECK(both.loss == doctest::Approx(expect).epsilon(1e-14));
  CHECK(code_of([&] { batch_gradients(p, cfg.tokenizer, std::vector<LabeledPair>{}, Pooling::kMean); }) ==
        ErrorCode::kEmptyBatch);
}

TEST_CASE("batch gradients match central differences of the reference loss") {
  TokenizerConfig tok;
  tok.vocab_size = 16;
  const double h = 1e-5;
  Rng rng(4);
  std::size_t checked = 0;
  for (int trial = 0; trial < 6; ++trial) {
    auto p = EncoderParams::random(16, 4, rng);
    for (auto& b : p.bias) b = rng.uniform(-0.1, 0.1);
    auto ds = testutil::synthetic("eng", Split::kTrain, 4, 100 + trial);
    for (auto& q : ds.pairs) q.score = rng.unit();
    const auto tp = tokenized(tok, ds.pairs);
    for (Pooling mode : {Pooling::kMean, Pooling::kMax}) {
      const auto g = batch_gradients(p, tok, ds.pairs, mode);
      auto loss = [&] { return oracle::biencoder_loss(p, tp, mode); };
      for (std::size_t k = 0; k < p.embeddings.data.size(); ++k, ++checked) {
        CHECK(oracle::agrees(g.grads.embeddings.data[k], oracle::central_difference(p.embeddings.data, k, h, loss)));
      }
      for (std::size_t k = 0; k < p.projection.data.size(); ++k, ++checked) {
        CHECK(oracle::agrees(g.grads.projection.data[k], oracle::central_difference(p.projection.data, k, h, loss)));
      }
      for (std::size_t k = 0; k < p.bias.size(); ++k, ++checked) {
        CHECK(oracle::agrees(g.grads.bias[k], oracle::central_difference(p.bias, k, h, loss)));
      }
    }
  }
  CHECK(checked > 0);
}

TEST_CASE("accumulating 2 x 16 equals one batch of 32") {
  const auto cfg = tiny_config(128, 8);
  Rng rng(5);
  const auto p = EncoderParams::random(128, 8, rng);
  const auto ds = testutil::synthetic("eng", Split::kTrain, 32, 6);
  const auto full = batch_gradients(p, cfg.tokenizer, ds.pairs, cfg.pooling);
  GradientAccumulator acc(128, 8);
  for (std::size_t i = 0; i < 32; ++i) {
    acc.add(p, tokenize(cfg.tokenizer, ds.pairs[i].sentence1), tokenize(cfg.tokenizer, ds.pairs[i].sentence2),
            *ds.pairs[i].score, cfg.pooling);
  }
  CHECK(acc.count() == 32);
  const auto accumulated = acc.mean();
  CHECK(std::abs(accumulated.loss - full.loss) <= 1e-10 * full.loss);
  CHECK(max_rel(accumulated.grads.embeddings.data, full.grads.embeddings.data) <= 1e-10);
  CHECK(max_rel(accumulated.grads.projection.data, full.grads.projection.data) <= 1e-10);
  CHECK(max_rel(accumulated.grads.bias, full.grads.bias) <= 1e-10);
  acc.reset();
  CHECK(acc.count() == 0);
  CHECK(code_of([&] { acc.mean(); }) == ErrorCode::kEmptyBatch);
}

TEST_CASE("trainer: 16 x 2 accumulation takes the same steps as 32 x 1") {
  auto a = tiny_config(64, 8);
  a.max_epochs = 3;
  auto b = a;
  b.batch_size = 32;
  b.grad_accum_steps = 1;
  const auto train_ds = testutil::synthetic("eng", Split::kTrain, 64, 7);
  const auto dev_ds = testutil::synthetic("eng", Split::kDev, 16, 8);
  const auto ra = train(train_ds, dev_ds, a);
  const auto rb = train(train_ds, dev_ds, b);
  REQUIRE(ra.history.size() == rb.history.size());
  for (std::size_t i = 0; i < ra.history.size(); ++i) {
    CHECK(ra.history[i].train_loss == doctest::Approx(rb.history[i].train_loss).epsilon(1e-10));
  }
  CHECK(max_rel(ra.best.encoder.embeddings.data, rb.best.encoder.embeddings.data) < 1e-6);
}

TEST_CASE("max_epochs bounds training") {
  auto cfg = tiny_config();
  cfg.max_epochs = 3;
  const auto r = train(testutil::synthetic("eng", Split::kTrain, 20, 1), testutil::synthetic("eng", Split::kDev, 8, 2), cfg);
  CHECK(r.history.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(r.history[i].epoch == i + 1);
}

TEST_CASE("early stopping with an injected dev sequence") {
  auto cfg = tiny_config();
  const auto train_ds = testutil::synthetic("eng", Split::kTrain, 10, 1);
  TrainHooks hooks;
  std::vector<std::size_t> calls;
  hooks.dev_scorer = [&](const Checkpoint& ck, std::size_t epoch) {
    calls.push_back(epoch);
    CHECK(ck.manifest.epoch == epoch);
    return epoch == 1 ? 0.5 : (epoch % 2 ? 0.5 : 0.25);  // ties do not count as improvement
  };
  const auto r = train(train_ds, Dataset{}, cfg, hooks);
  CHECK(r.history.size() == 11);
  CHECK(calls.size() == 11);
  CHECK(r.best_epoch == 1);
  CHECK(r.best.manifest.epoch == 1);
  CHECK(r.best.manifest.dev_spearman == 0.5);
}

TEST_CASE("undefined dev Spearman compares as -infinity") {
  auto cfg = tiny_config();
  cfg.max_epochs = 4;
  TrainHooks hooks;
  hooks.dev_scorer = [](const Checkpoint&, std::size_t epoch) {
    return epoch == 3 ? 0.1 : -std::numeric_limits<double>::infinity();
  };
  const auto r = train(testutil::synthetic("eng", Split::kTrain, 10, 1), Dataset{}, cfg, hooks);
  CHECK(r.history.size() == 4);
  CHECK(r.best_epoch == 3);
  const auto jl = history_jsonl(r.history);
  CHECK(jl.find("\"dev_spearman\":null") != std::string::npos);
}

TEST_CASE("early stopping never returns a worse checkpoint than an earlier epoch") {
  Rng rng(77);
  for (int trial = 0; trial < 30; ++trial) {
    auto cfg = tiny_config(32, 4);
    cfg.patience = 1 + rng.below(4);
    cfg.max_epochs = 12;
    std::vector<double> seq(12);
    for (auto& x : seq) x = std::round(rng.unit() * 5) / 5;  // coarse values force ties
    TrainHooks hooks;
    hooks.dev_scorer = [&](const Checkpoint&, std::size_t epoch) { return seq[epoch - 1]; };
    const auto r = train(testutil::synthetic("eng", Split::kTrain, 6, trial), Dataset{}, cfg, hooks);
    // reference patience counter
    std::size_t ref_best = 1, since = 0, ran = 0;
    for (std::size_t e = 1; e <= 12; ++e) {
      ran = e;
      if (e > 1 && seq[e - 1] > seq[ref_best - 1]) {
        ref_best = e;
        since = 0;
      } else if (e > 1) {
        ++since;
      }
      if (since >= cfg.patience) break;
    }
    CHECK(r.history.size() == ran);
    CHECK(r.best_epoch == ref_best);
    for (std::size_t e = 0; e < r.best_epoch; ++e) CHECK(seq[r.best_epoch - 1] >= seq[e]);
  }
}

TEST_CASE("training is deterministic for a seed") {
  auto cfg = tiny_config();
  cfg.max_epochs = 4;
  cfg.seed = 42;
  const auto tr = testutil::synthetic("eng", Split::kTrain, 40, 1);
  const auto dv = testutil::synthetic("eng", Split::kDev, 10, 2);
  const auto a = train(tr, dv, cfg);
  const auto b = train(tr, dv, cfg);
  CHECK(a.best.encoder.embeddings.data == b.best.encoder.embeddings.data);
  CHECK(a.best.encoder.projection.data == b.best.encoder.projection.data);
  CHECK(history_jsonl(a.history) == history_jsonl(b.history));
  cfg.seed = 43;
  const auto c = train(tr, dv, cfg);
  CHECK(c.best.encoder.embeddings.data != a.best.encoder.embeddings.data);
}

TEST_CASE("stored dev Spearman equals a fresh prediction on the best checkpoint") {
  auto cfg = tiny_config();
  cfg.max_epochs = 6;
  const auto tr = testutil::synthetic("eng", Split::kTrain, 40, 11);
  const auto dv = testutil::synthetic("eng", Split::kDev, 12, 12);
  const auto r = train(tr, dv, cfg);
  const double again = spearman(predict(r.best, dv).scores, dv.gold_scores());
  CHECK(again == r.history[r.best_epoch - 1].dev_spearman);
  testutil::TempDir dir;
  save_checkpoint(r.best, dir.path());
  const auto loaded = load_checkpoint(dir.path());
  CHECK(spearman(predict(loaded, dv).scores, dv.gold_scores()) == r.history[r.best_epoch - 1].dev_spearman);
}

TEST_CASE("predict") {
  auto cfg = tiny_config();
  cfg.max_epochs = 2;
  const auto tr = testutil::synthetic("eng", Split::kTrain, 20, 1);
  const auto r = train(tr, testutil::synthetic("eng", Split::kDev, 8, 2), cfg);
  Dataset same;
  same.pairs.push_back(LabeledPair{"a", LanguageCode("eng"), "green hill", "green hill", std::nullopt});
  CHECK(predict(r.best, same).scores[0] == doctest::Approx(1.0).epsilon(1e-12));
  const auto preds = predict(r.best, tr);
  REQUIRE(preds.scores.size() == tr.size());
  for (std::size_t i = 0; i < tr.size(); ++i) {
    CHECK(preds.scores[i] >= -1.0);
    CHECK(preds.scores[i] <= 1.0);
    const auto s1 = encode_sentence(r.best.encoder, r.best.manifest.tokenizer, tr.pairs[i].sentence1, r.best.manifest.pooling);
    const auto s2 = encode_sentence(r.best.encoder, r.best.manifest.tokenizer, tr.pairs[i].sentence2, r.best.manifest.pooling);
    CHECK(preds.scores[i] == doctest::Approx(oracle::cosine(s1, s2)).epsilon(1e-12));
  }
  // zero-norm embeddings score 0 and are counted
  Checkpoint zero = r.best;
  zero.encoder = EncoderParams::zeros(zero.encoder.vocab_size(), zero.encoder.dim());
  const auto z = predict(zero, tr);
  CHECK(z.degenerate == tr.size());
  CHECK(z.scores[0] == 0.0);
}

TEST_CASE("train preconditions") {
  auto cfg = tiny_config();
  const auto dv = testutil::synthetic("eng", Split::kDev, 8, 2);
  CHECK(code_of([&] { train(Dataset{}, dv, cfg); }) == ErrorCode::kEmptyInput);
  CHECK(code_of([&] { train(testutil::synthetic("eng", Split::kTrain, 4, 1), Dataset{}, cfg); }) == ErrorCode::kEmptyInput);
  auto bad = cfg;
  bad.learning_rate = 0.0;
  CHECK(code_of([&] { bad.validate(); }) == ErrorCode::kInvalidConfig);
  bad = cfg;
  bad.grad_accum_steps = 0;
  CHECK(code_of([&] { bad.validate(); }) == ErrorCode::kInvalidConfig);
  CHECK(TrainConfig{}.effective_batch() == 32);
}

TEST_CASE("overfits a realizable 32-pair task") {
  const auto task = realizable::biencoder(32, 16, 0, 3);
  TrainConfig cfg;
  cfg.learning_rate = 1e-2;
  cfg.tokenizer = task.tokenizer;
  cfg.dim = task.dim;
  cfg.max_epochs = 500;
  cfg.patience = 500;
  double lowest = 1.0;
  TrainHooks hooks;
  hooks.on_epoch = [&](const EpochRecord& r) { lowest = std::min(lowest, r.train_loss); };
  train(task.train, task.dev, cfg, hooks);
  CHECK(lowest < 1e-2);
}

TEST_CASE("checkpoint files") {
  testutil::TempDir dir;
  Rng rng(3);
  Manifest m;
  m.tokenizer.vocab_size = 16;
  m.tokenizer.hash_seed = 5;
  m.pooling = Pooling::kMax;
  m.epoch = 7;
  m.dev_spearman = 0.25;
  m.config = {{"note", "x"}};
  const auto params = EncoderParams::random(16, 4, rng);
  const auto ck = make_checkpoint(m, params);
  CHECK(ck.manifest.dim == 4);
  // values are float32-representable after make_checkpoint
  for (double x : ck.encoder.embeddings.data) CHECK(static_cast<double>(static_cast<float>(x)) == x);
  save_checkpoint(ck, dir.path());
  CHECK(std::filesystem::file_size(dir / "params.bin") == (16 * 4 + 16 + 4) * 4);
  const auto bytes = read_file(dir / "params.bin");
  float first = 0.0f;
  std::memcpy(&first, bytes.data(), 4);  // little-endian host
  CHECK(static_cast<double>(first) == ck.encoder.embeddings.data[0]);

  const auto back = load_checkpoint(dir.path());
  CHECK(back.encoder.embeddings.data == ck.encoder.embeddings.data);
  CHECK(back.encoder.projection.data == ck.encoder.projection.data);
  CHECK(back.encoder.bias == ck.encoder.bias);
  CHECK(back.manifest.tokenizer == m.tokenizer);
  CHECK(back.manifest.pooling == Pooling::kMax);
  CHECK(back.manifest.epoch == 7);
  CHECK(back.manifest.dev_spearman == 0.25);
  CHECK(back.manifest.config == m.config);
  CHECK_FALSE(back.head.has_value());

  const auto j = nlohmann::json::parse(read_file(dir / "manifest.json"));
  CHECK(j.at("schema_version") == 1);
  CHECK(j.at("model_kind") == "biencoder");
  CHECK(j.at("d") == 4);
  CHECK(j.at("V") == 16);
  CHECK(j.at("hash_seed") == 5);

  write_file(dir / "params.bin", bytes.substr(0, bytes.size() - 4));
  CHECK(code_of([&] { load_checkpoint(dir.path()); }) == ErrorCode::kInvalidCheckpoint);
  CHECK(code_of([&] { load_checkpoint(dir / "missing"); }) == ErrorCode::kIo);
}
