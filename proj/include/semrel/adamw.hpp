#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "semrel/encoder.hpp"

namespace semrel {

struct AdamWConfig {
  double learning_rate = 1e-5;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// First/second moments laid out over the concatenation of all segments in
// the order they are passed to adamw_step.
struct AdamWState {
  std::uint64_t step = 0;
  std::vector<double> m;
  std::vector<double> v;
};

struct ParamSegment {
  std::span<double> values;
  bool decay = true;
};

// One decoupled-weight-decay step:
//   m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2
//   p <- p - lr * m_hat / (sqrt(v_hat) + eps) - lr * wd * p   (wd only where decay)
// Throws before touching any state if a gradient entry is not finite.
void adamw_step(std::span<const ParamSegment> params, std::span<const std::span<const double>> grads,
                AdamWState& state, const AdamWConfig& cfg);

// E and W decay, b does not.
std::vector<ParamSegment> trainable_segments(EncoderParams& params);
std::vector<std::span<const double>> gradient_segments(const EncoderParams& grads);

void adamw_step(EncoderParams& params, const EncoderParams& grads, AdamWState& state,
                const AdamWConfig& cfg);

}  // namespace semrel
