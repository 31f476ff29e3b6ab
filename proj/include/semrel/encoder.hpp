#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string_view>
#include <vector>

#include "semrel/random.hpp"

namespace semrel {

using TokenId = std::uint32_t;

inline constexpr TokenId kClsToken = 0;
inline constexpr TokenId kSepToken = 1;
inline constexpr TokenId kUnkToken = 2;
inline constexpr TokenId kFirstHashedToken = 3;

struct TokenizerConfig {
  std::size_t vocab_size = 32768;
  std::uint64_t hash_seed = 0;
  bool lowercase = true;

  void validate() const;
  friend bool operator==(const TokenizerConfig&, const TokenizerConfig&) = default;
};

// 64-bit FNV-1a over the token's UTF-8 bytes, starting from the FNV offset
// basis XOR a splitmix64 scramble of the seed.
std::uint64_t hash_token(std::string_view token, std::uint64_t seed);

// Lowercases ASCII and Latin-1 letters (when configured), splits on Unicode
// whitespace, strips leading/trailing punctuation (ASCII plus common
// Latin, Devanagari, Arabic, Ethiopic and CJK marks) from each piece and maps
// each surviving piece to 3 + hash % (V - 3). The result always starts with the
// CLS id; text without any surviving piece yields [CLS, UNK].
std::vector<TokenId> tokenize(const TokenizerConfig& cfg, std::string_view text);

enum class Pooling { kCls, kMean, kMax };

std::string_view to_string(Pooling mode);  // "cls" | "mean" | "max"
std::string_view display_name(Pooling mode);  // "CLS" | "Mean" | "Max"
Pooling parse_pooling(std::string_view name);

// Dense row-major matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
};

// Shared encoder: token embeddings E (V x d), projection W (d x d), bias b.
// Rows 0..2 of E belong to CLS, SEP and UNK.
struct EncoderParams {
  Matrix embeddings;
  Matrix projection;
  std::vector<double> bias;

  static EncoderParams zeros(std::size_t vocab_size, std::size_t dim);
  // E and W uniform in [-0.1, 0.1], b = 0.
  static EncoderParams random(std::size_t vocab_size, std::size_t dim, Rng& rng);

  std::size_t vocab_size() const noexcept { return embeddings.rows; }
  std::size_t dim() const noexcept { return bias.size(); }
  std::size_t parameter_count() const noexcept;
  bool all_finite() const noexcept;

  // Adds scale * other entry-wise; shapes must agree.
  void add_scaled(const EncoderParams& other, double scale);
  void scale(double factor);
};

using Embedding = std::vector<double>;

Embedding pool(const Matrix& token_vectors, Pooling mode);

// Gathers E rows for the token sequence into a T x d matrix.
Matrix gather_rows(const EncoderParams& params, std::span<const TokenId> tokens);

// s = W * pool(E[tokens]) + b
Embedding encode_tokens(const EncoderParams& params, std::span<const TokenId> tokens, Pooling mode);
Embedding encode_sentence(const EncoderParams& params, const TokenizerConfig& cfg,
                          std::string_view text, Pooling mode);

// Exact differentials of encode_sentence for upstream = dL/ds, with the
// embedding gradient kept sparse (only rows that took part in the pooling).
struct EncoderGradients {
  std::map<TokenId, std::vector<double>> embedding_rows;
  Matrix projection;
  std::vector<double> bias;
};

EncoderGradients encode_backward(const EncoderParams& params, const TokenizerConfig& cfg,
                                 std::string_view text, Pooling mode,
                                 std::span<const double> upstream);

// Accumulates scale * d(upstream . s)/d(params) into a dense gradient buffer
// shaped like params. Used by the trainers.
void accumulate_backward(const EncoderParams& params, std::span<const TokenId> tokens, Pooling mode,
                         std::span<const double> upstream, double scale, EncoderParams& grads);

}  // namespace semrel
