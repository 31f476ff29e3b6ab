#include "semrel/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>

#include "semrel/finesem.hpp"
#include "semrel/text.hpp"
#include "semrel/transem.hpp"

namespace semrel {

namespace {

constexpr const char* kWords[] = {"the", "cat", "sat", "on", "a", "mat", "dog", "ran",
                                  "far", "away", "birds", "sing", "at", "dawn"};

// Pairs whose two sentences tokenize to different multisets, so no cosine
// sits at its stationary point 1.
std::vector<LabeledPair> make_pairs(Rng& rng, const TokenizerConfig& tok, std::size_t count) {
  auto sentence = [&] {
    std::string s;
    const auto len = 2 + rng.below(4);
    for (std::uint64_t i = 0; i < len; ++i) {
      if (!s.empty()) s += ' ';
      s += kWords[rng.below(std::size(kWords))];
    }
    return s;
  };
  std::vector<LabeledPair> pairs;
  auto bag = [&](const std::string& s) {
    auto ids = tokenize(tok, s);
    std::sort(ids.begin(), ids.end());
    return ids;
  };
  while (pairs.size() < count) {
    auto a = sentence();
    auto b = sentence();
    if (bag(a) == bag(b)) continue;
    pairs.push_back({"g" + std::to_string(pairs.size()), LanguageCode::english(), a, b, rng.uniform(0.0, 1.0)});
  }
  return pairs;
}

void fill(std::span<double> values, Rng& rng) {
  for (auto& x : values) x = rng.uniform(-1.0, 1.0);
}

double rel_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / (std::max(std::abs(analytic), std::abs(numeric)) + 1e-8);
}

// Nonzero central differences below this magnitude are dominated by round-off
// at h = 1e-5, so instances containing one are redrawn.
constexpr double kConditioningFloor = 1e-4;
constexpr int kMaxDraws = 64;

struct Probe {
  std::string group;
  std::span<double> values;
  std::vector<double> numeric;
};

std::vector<double> central_differences(std::span<double> values, const std::function<double()>& loss,
                                        double h) {
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double saved = values[i];
    values[i] = saved + h;
    const double up = loss();
    values[i] = saved - h;
    const double down = loss();
    values[i] = saved;
    out[i] = (up - down) / (2.0 * h);
  }
  return out;
}

bool well_conditioned(const std::vector<Probe>& probes) {
  for (const auto& p : probes) {
    for (double n : p.numeric) {
      if (n != 0.0 && std::abs(n) < kConditioningFloor) return false;
    }
  }
  return true;
}

GroupError compare(const std::string& suite, const Probe& probe, std::span<const double> analytic) {
  GroupError out{suite, probe.group, 0.0, probe.values.size()};
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    out.max_rel_error = std::max(out.max_rel_error, rel_error(analytic[i], probe.numeric[i]));
  }
  return out;
}

}  // namespace

std::vector<GroupError> GradcheckReport::summary() const {
  std::vector<GroupError> out;
  for (const char* name : {"E", "W", "b", "head"}) {
    GroupError agg{"all", name, 0.0, 0};
    bool any = false;
    for (const auto& g : groups) {
      if (g.group != name) continue;
      any = true;
      agg.max_rel_error = std::max(agg.max_rel_error, g.max_rel_error);
      agg.entries += g.entries;
    }
    if (any) out.push_back(agg);
  }
  return out;
}

bool GradcheckReport::passed() const {
  return std::all_of(groups.begin(), groups.end(),
                     [&](const GroupError& g) { return g.max_rel_error < tolerance; });
}

std::string GradcheckReport::to_text() const {
  std::string out;
  for (const auto& g : groups) {
    out += g.suite + "  " + g.group + "  entries=" + std::to_string(g.entries) +
           "  max_rel_err=" + text::format_shortest(g.max_rel_error) + "\n";
  }
  for (const auto& g : summary()) {
    out += "group " + g.group + "  max_rel_err=" + text::format_shortest(g.max_rel_error) +
           (g.max_rel_error < tolerance ? "  PASS" : "  FAIL") + "\n";
  }
  out += passed() ? "gradcheck PASS\n" : "gradcheck FAIL\n";
  return out;
}

GradcheckReport run_gradcheck(const GradcheckOptions& options) {
  GradcheckReport report;
  report.tolerance = options.tolerance;
  TokenizerConfig tok;
  tok.vocab_size = options.vocab_size;
  tok.hash_seed = options.seed;
  const double h = options.step;

  for (Pooling pooling : {Pooling::kCls, Pooling::kMean, Pooling::kMax}) {
    Rng rng(options.seed * 31 + static_cast<std::uint64_t>(pooling));
    const std::string mode(to_string(pooling));

    // The bi-encoder embeds every sentence as W E[CLS] + b under CLS pooling,
    // so its loss is constant and there is nothing to check.
    if (pooling != Pooling::kCls) {
      std::vector<LabeledPair> pairs;
      EncoderParams params;
      std::vector<Probe> probes;
      for (int draw = 0; draw < kMaxDraws; ++draw) {
        pairs = make_pairs(rng, tok, 3);
        params = EncoderParams::zeros(options.vocab_size, options.dim);
        fill(params.embeddings.data, rng);
        fill(params.projection.data, rng);
        fill(params.bias, rng);
        const auto loss = [&] { return batch_gradients(params, tok, pairs, pooling).loss; };
        probes = {{"E", params.embeddings.data, central_differences(params.embeddings.data, loss, h)},
                  {"W", params.projection.data, central_differences(params.projection.data, loss, h)},
                  {"b", params.bias, central_differences(params.bias, loss, h)}};
        if (well_conditioned(probes)) break;
      }
      auto analytic = batch_gradients(params, tok, pairs, pooling).grads;
      if (options.flip_sign) {
        for (auto& x : analytic.projection.data) x = -x;
      }
      const std::string suite = "biencoder/" + mode;
      report.groups.push_back(compare(suite, probes[0], analytic.embeddings.data));
      report.groups.push_back(compare(suite, probes[1], analytic.projection.data));
      report.groups.push_back(compare(suite, probes[2], analytic.bias));
    }

    std::vector<LabeledPair> pairs;
    CrossModel model;
    std::vector<double> head_values;
    std::vector<Probe> probes;
    for (int draw = 0; draw < kMaxDraws; ++draw) {
      pairs = make_pairs(rng, tok, 3);
      model.encoder = EncoderParams::zeros(options.vocab_size, options.dim);
      fill(model.encoder.embeddings.data, rng);
      fill(model.encoder.projection.data, rng);
      fill(model.encoder.bias, rng);
      model.head.weight.resize(options.dim);
      fill(model.head.weight, rng);
      model.head.bias = rng.uniform(-1.0, 1.0);
      head_values = model.head.weight;
      head_values.push_back(model.head.bias);
      const auto loss = [&] {
        std::copy(head_values.begin(), head_values.end() - 1, model.head.weight.begin());
        model.head.bias = head_values.back();
        return cross_batch_gradients(model, tok, pairs, pooling).loss;
      };
      probes = {{"E", model.encoder.embeddings.data, central_differences(model.encoder.embeddings.data, loss, h)},
                {"W", model.encoder.projection.data, central_differences(model.encoder.projection.data, loss, h)},
                {"b", model.encoder.bias, central_differences(model.encoder.bias, loss, h)},
                {"head", head_values, central_differences(head_values, loss, h)}};
      if (well_conditioned(probes)) break;
    }
    std::copy(head_values.begin(), head_values.end() - 1, model.head.weight.begin());
    model.head.bias = head_values.back();
    auto analytic = cross_batch_gradients(model, tok, pairs, pooling).grads;
    if (options.flip_sign) {
      for (auto& x : analytic.encoder.projection.data) x = -x;
    }
    std::vector<double> head_grad = analytic.head_weight;
    head_grad.push_back(analytic.head_bias);
    const std::string suite = "crossenc/" + mode;
    report.groups.push_back(compare(suite, probes[0], analytic.encoder.embeddings.data));
    report.groups.push_back(compare(suite, probes[1], analytic.encoder.projection.data));
    report.groups.push_back(compare(suite, probes[2], analytic.encoder.bias));
    report.groups.push_back(compare(suite, probes[3], head_grad));
  }
  return report;
}

}  // namespace semrel
