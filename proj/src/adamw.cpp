#include "semrel/adamw.hpp"

#include <cmath>

#include "semrel/error.hpp"

namespace semrel {

void adamw_step(std::span<const ParamSegment> params, std::span<const std::span<const double>> grads,
                AdamWState& state, const AdamWConfig& cfg) {
  if (params.size() != grads.size()) {
    throw Error(ErrorCode::kShapeMismatch, "parameter and gradient segment counts differ");
  }
  std::size_t total = 0;
  for (std::size_t s = 0; s < params.size(); ++s) {
    if (params[s].values.size() != grads[s].size()) {
      throw Error(ErrorCode::kShapeMismatch, "gradient segment " + std::to_string(s) +
                                                 " has the wrong length");
    }
    for (double g : grads[s]) {
      if (!std::isfinite(g)) {
        throw Error(ErrorCode::kNonFiniteGradient, "gradient segment " + std::to_string(s) +
                                                       " contains a non-finite entry");
      }
    }
    total += params[s].values.size();
  }
  if (state.m.empty() && state.v.empty() && state.step == 0) {
    state.m.assign(total, 0.0);
    state.v.assign(total, 0.0);
  }
  if (state.m.size() != total || state.v.size() != total) {
    throw Error(ErrorCode::kShapeMismatch, "optimizer state does not match parameter count");
  }

  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  const double lr = cfg.learning_rate;

  std::size_t offset = 0;
  for (std::size_t s = 0; s < params.size(); ++s) {
    auto p = params[s].values;
    const auto g = grads[s];
    const double wd = params[s].decay ? cfg.weight_decay : 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      double& m = state.m[offset + i];
      double& v = state.v[offset + i];
      m = cfg.beta1 * m + (1.0 - cfg.beta1) * g[i];
      v = cfg.beta2 * v + (1.0 - cfg.beta2) * g[i] * g[i];
      const double m_hat = m / bc1;
      const double v_hat = v / bc2;
      p[i] = p[i] - lr * (m_hat / (std::sqrt(v_hat) + cfg.epsilon)) - lr * wd * p[i];
    }
    offset += p.size();
  }
}

std::vector<ParamSegment> trainable_segments(EncoderParams& params) {
  return {{params.embeddings.data, true}, {params.projection.data, true}, {params.bias, false}};
}

std::vector<std::span<const double>> gradient_segments(const EncoderParams& grads) {
  return {grads.embeddings.data, grads.projection.data, grads.bias};
}

void adamw_step(EncoderParams& params, const EncoderParams& grads, AdamWState& state,
                const AdamWConfig& cfg) {
  const auto p = trainable_segments(params);
  const auto g = gradient_segments(grads);
  adamw_step(p, g, state, cfg);
}

}  // namespace semrel
