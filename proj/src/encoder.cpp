#include "semrel/encoder.hpp"

#include <algorithm>
#include <cmath>

#include "semrel/error.hpp"
#include "semrel/text.hpp"

namespace semrel {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

bool is_punctuation(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= 0x21 && cp <= 0x2F) || (cp >= 0x3A && cp <= 0x40) ||
           (cp >= 0x5B && cp <= 0x60) || (cp >= 0x7B && cp <= 0x7E);
  }
  switch (cp) {
    case 0x00A1: case 0x00AB: case 0x00BB: case 0x00BF:  // ¡ « » ¿
    case 0x2026:                                         // …
    case 0x0964: case 0x0965:                            // danda
    case 0x060C: case 0x061B: case 0x061F: case 0x06D4:  // Arabic
    case 0x3001: case 0x3002:
      return true;
    default:
      return (cp >= 0x2010 && cp <= 0x201F) || (cp >= 0x1361 && cp <= 0x1368);
  }
}

char32_t lower(char32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 0x20;
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 0x20;
  return cp;
}

void check_upstream(const EncoderParams& params, std::span<const double> upstream) {
  if (upstream.size() != params.dim()) {
    throw Error(ErrorCode::kShapeMismatch, "upstream gradient has dimension " +
                                               std::to_string(upstream.size()) + ", expected " +
                                               std::to_string(params.dim()));
  }
}

// Index of the row holding the per-column maximum; ties go to the lowest row.
std::vector<std::size_t> argmax_rows(const Matrix& rows) {
  std::vector<std::size_t> arg(rows.cols, 0);
  for (std::size_t r = 1; r < rows.rows; ++r) {
    for (std::size_t c = 0; c < rows.cols; ++c) {
      if (rows(r, c) > rows(arg[c], c)) arg[c] = r;
    }
  }
  return arg;
}

// Routes dL/dpooled back to the individual token rows. sink(row, col, value).
template <typename Sink>
void route_pooling_gradient(const EncoderParams& params, std::span<const TokenId> tokens,
                            Pooling mode, std::span<const double> dpooled, Sink&& sink) {
  const std::size_t d = params.dim();
  switch (mode) {
    case Pooling::kCls:
      for (std::size_t c = 0; c < d; ++c) sink(tokens[0], c, dpooled[c]);
      break;
    case Pooling::kMean: {
      const double inv = 1.0 / static_cast<double>(tokens.size());
      for (TokenId t : tokens) {
        for (std::size_t c = 0; c < d; ++c) sink(t, c, dpooled[c] * inv);
      }
      break;
    }
    case Pooling::kMax: {
      const auto arg = argmax_rows(gather_rows(params, tokens));
      for (std::size_t c = 0; c < d; ++c) sink(tokens[arg[c]], c, dpooled[c]);
      break;
    }
  }
}

}  // namespace

void TokenizerConfig::validate() const {
  if (vocab_size < 4) {
    throw Error(ErrorCode::kInvalidConfig,
                "vocab_size must be at least 4, got " + std::to_string(vocab_size));
  }
}

std::uint64_t hash_token(std::string_view token, std::uint64_t seed) {
  return text::fnv1a64(token, 0xcbf29ce484222325ULL ^ splitmix64(seed));
}

std::vector<TokenId> tokenize(const TokenizerConfig& cfg, std::string_view input) {
  cfg.validate();
  std::vector<TokenId> ids{kClsToken};
  const std::uint64_t buckets = cfg.vocab_size - kFirstHashedToken;
  for (const auto& piece : text::split_whitespace(input)) {
    auto cps = text::decode_utf8(piece);
    std::size_t begin = 0, end = cps.size();
    while (begin < end && is_punctuation(cps[begin])) ++begin;
    while (end > begin && is_punctuation(cps[end - 1])) --end;
    if (begin == end) continue;
    std::string token;
    for (std::size_t i = begin; i < end; ++i) {
      text::append_utf8(token, cfg.lowercase ? lower(cps[i]) : cps[i]);
    }
    ids.push_back(static_cast<TokenId>(kFirstHashedToken + hash_token(token, cfg.hash_seed) % buckets));
  }
  if (ids.size() == 1) ids.push_back(kUnkToken);
  return ids;
}

std::string_view to_string(Pooling mode) {
  switch (mode) {
    case Pooling::kCls: return "cls";
    case Pooling::kMean: return "mean";
    case Pooling::kMax: return "max";
  }
  return "mean";
}

std::string_view display_name(Pooling mode) {
  switch (mode) {
    case Pooling::kCls: return "CLS";
    case Pooling::kMean: return "Mean";
    case Pooling::kMax: return "Max";
  }
  return "Mean";
}

Pooling parse_pooling(std::string_view name) {
  if (name == "cls" || name == "CLS") return Pooling::kCls;
  if (name == "mean" || name == "Mean") return Pooling::kMean;
  if (name == "max" || name == "Max") return Pooling::kMax;
  throw Error(ErrorCode::kInvalidConfig, "unknown pooling mode '" + std::string(name) + "'");
}

EncoderParams EncoderParams::zeros(std::size_t vocab_size, std::size_t dim) {
  EncoderParams p;
  p.embeddings = Matrix(vocab_size, dim);
  p.projection = Matrix(dim, dim);
  p.bias.assign(dim, 0.0);
  return p;
}

EncoderParams EncoderParams::random(std::size_t vocab_size, std::size_t dim, Rng& rng) {
  auto p = zeros(vocab_size, dim);
  for (auto& x : p.embeddings.data) x = rng.uniform(-0.1, 0.1);
  for (auto& x : p.projection.data) x = rng.uniform(-0.1, 0.1);
  return p;
}

std::size_t EncoderParams::parameter_count() const noexcept {
  return embeddings.data.size() + projection.data.size() + bias.size();
}

bool EncoderParams::all_finite() const noexcept {
  auto finite = [](const std::vector<double>& v) {
    for (double x : v) {
      if (!std::isfinite(x)) return false;
    }
    return true;
  };
  return finite(embeddings.data) && finite(projection.data) && finite(bias);
}

void EncoderParams::add_scaled(const EncoderParams& other, double s) {
  if (other.vocab_size() != vocab_size() || other.dim() != dim()) {
    throw Error(ErrorCode::kShapeMismatch, "encoder parameter shapes differ");
  }
  for (std::size_t i = 0; i < embeddings.data.size(); ++i) embeddings.data[i] += s * other.embeddings.data[i];
  for (std::size_t i = 0; i < projection.data.size(); ++i) projection.data[i] += s * other.projection.data[i];
  for (std::size_t i = 0; i < bias.size(); ++i) bias[i] += s * other.bias[i];
}

void EncoderParams::scale(double factor) {
  for (auto& x : embeddings.data) x *= factor;
  for (auto& x : projection.data) x *= factor;
  for (auto& x : bias) x *= factor;
}

Embedding pool(const Matrix& token_vectors, Pooling mode) {
  if (token_vectors.rows == 0) throw Error(ErrorCode::kEmptyInput, "cannot pool zero token vectors");
  const std::size_t d = token_vectors.cols;
  Embedding out(d, 0.0);
  switch (mode) {
    case Pooling::kCls:
      for (std::size_t c = 0; c < d; ++c) out[c] = token_vectors(0, c);
      break;
    case Pooling::kMean:
      for (std::size_t r = 0; r < token_vectors.rows; ++r) {
        for (std::size_t c = 0; c < d; ++c) out[c] += token_vectors(r, c);
      }
      for (auto& x : out) x /= static_cast<double>(token_vectors.rows);
      break;
    case Pooling::kMax: {
      const auto arg = argmax_rows(token_vectors);
      for (std::size_t c = 0; c < d; ++c) out[c] = token_vectors(arg[c], c);
      break;
    }
  }
  return out;
}

Matrix gather_rows(const EncoderParams& params, std::span<const TokenId> tokens) {
  const std::size_t d = params.dim();
  Matrix rows(tokens.size(), d);
  for (std::size_t r = 0; r < tokens.size(); ++r) {
    if (tokens[r] >= params.vocab_size()) {
      throw Error(ErrorCode::kShapeMismatch, "token id " + std::to_string(tokens[r]) +
                                                 " outside vocabulary of " +
                                                 std::to_string(params.vocab_size()));
    }
    const auto src = params.embeddings.row(tokens[r]);
    std::copy(src.begin(), src.end(), rows.row(r).begin());
  }
  return rows;
}

Embedding encode_tokens(const EncoderParams& params, std::span<const TokenId> tokens, Pooling mode) {
  const auto pooled = pool(gather_rows(params, tokens), mode);
  const std::size_t d = params.dim();
  Embedding s(params.bias);
  for (std::size_t i = 0; i < d; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < d; ++j) acc += params.projection(i, j) * pooled[j];
    s[i] += acc;
  }
  return s;
}

Embedding encode_sentence(const EncoderParams& params, const TokenizerConfig& cfg,
                          std::string_view text, Pooling mode) {
  return encode_tokens(params, tokenize(cfg, text), mode);
}

void accumulate_backward(const EncoderParams& params, std::span<const TokenId> tokens, Pooling mode,
                         std::span<const double> upstream, double scale, EncoderParams& grads) {
  check_upstream(params, upstream);
  const std::size_t d = params.dim();
  const auto pooled = pool(gather_rows(params, tokens), mode);
  std::vector<double> dpooled(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    const double g = scale * upstream[i];
    grads.bias[i] += g;
    for (std::size_t j = 0; j < d; ++j) {
      grads.projection(i, j) += g * pooled[j];
      dpooled[j] += params.projection(i, j) * g;
    }
  }
  route_pooling_gradient(params, tokens, mode, dpooled, [&](TokenId t, std::size_t c, double v) {
    grads.embeddings(t, c) += v;
  });
}

EncoderGradients encode_backward(const EncoderParams& params, const TokenizerConfig& cfg,
                                 std::string_view text, Pooling mode,
                                 std::span<const double> upstream) {
  check_upstream(params, upstream);
  const auto tokens = tokenize(cfg, text);
  const std::size_t d = params.dim();
  const auto pooled = pool(gather_rows(params, tokens), mode);
  EncoderGradients g;
  g.projection = Matrix(d, d);
  g.bias.assign(upstream.begin(), upstream.end());
  std::vector<double> dpooled(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      g.projection(i, j) = upstream[i] * pooled[j];
      dpooled[j] += params.projection(i, j) * upstream[i];
    }
  }
  route_pooling_gradient(params, tokens, mode, dpooled, [&](TokenId t, std::size_t c, double v) {
    auto& row = g.embedding_rows[t];
    if (row.empty()) row.assign(d, 0.0);
    row[c] += v;
  });
  return g;
}

}  // namespace semrel
