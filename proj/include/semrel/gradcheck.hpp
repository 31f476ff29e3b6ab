#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace semrel {

struct GradcheckOptions {
  std::uint64_t seed = 0;
  std::size_t vocab_size = 16;
  std::size_t dim = 4;
  double step = 1e-5;
  double tolerance = 1e-6;
  // Test hook: negates the analytic projection gradient so the check must fail.
  bool flip_sign = false;
};

struct GroupError {
  std::string suite;  // e.g. "biencoder/mean"
  std::string group;  // "E" | "W" | "b" | "head"
  double max_rel_error = 0.0;
  std::size_t entries = 0;
};

struct GradcheckReport {
  std::vector<GroupError> groups;
  double tolerance = 1e-6;

  // Worst error per parameter group across all suites, in E, W, b, head order.
  std::vector<GroupError> summary() const;
  bool passed() const;
  std::string to_text() const;
};

// Central finite differences on every parameter entry of seeded tiny
// bi-encoder (cosine MSE) and cross-encoder (regression MSE) instances, for
// each pooling mode (the bi-encoder skips CLS, where its loss is constant).
// Instances with a nonzero central difference below 1e-4 are redrawn: at
// h = 1e-5 such entries are dominated by round-off. Relative error is |a - n| / (max(|a|, |n|) + 1e-8).
GradcheckReport run_gradcheck(const GradcheckOptions& options = {});

}  // namespace semrel
