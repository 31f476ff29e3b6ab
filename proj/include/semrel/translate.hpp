#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "semrel/corpus.hpp"

namespace semrel {

enum class BackendKind { kIdentity, kLexicon, kRemote };

std::string_view to_string(BackendKind kind);
BackendKind parse_backend_kind(std::string_view name);

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{250};  // doubles after each failure
  std::chrono::milliseconds timeout{30000};        // per request
};

struct TranslationBackend {
  std::string name;
  BackendKind kind = BackendKind::kIdentity;
  std::map<std::string, std::string> lexicon;  // token -> token, bijective
  std::string endpoint;                        // http://host:port/path
  bool is_primary = false;
  std::set<LanguageCode> unsupported;  // source languages this backend refuses
  RetryPolicy retry;

  static TranslationBackend identity(std::string name, bool primary = false);
  static TranslationBackend from_lexicon(std::string name, std::map<std::string, std::string> lexicon,
                                         bool primary = false);
  static TranslationBackend remote(std::string name, std::string endpoint, bool primary = false);

  bool supports(const LanguageCode& lang) const { return !unsupported.contains(lang); }
  void validate() const;
};

// Unique names, valid members, at most one primary.
void validate_backends(std::span<const TranslationBackend> backends);
const TranslationBackend* primary_backend(std::span<const TranslationBackend> backends);

// Keyed by (backend name, source language, FNV-1a 64 digest of the source
// UTF-8 bytes as 16 hex digits). Safe for concurrent use.
class TranslationCache {
 public:
  TranslationCache() = default;
  TranslationCache(const TranslationCache& other);
  TranslationCache& operator=(const TranslationCache& other);

  static std::string digest(std::string_view text);

  std::optional<std::string> lookup(const std::string& backend, const LanguageCode& lang,
                                    std::string_view source) const;
  void store(const std::string& backend, const LanguageCode& lang, std::string_view source,
             std::string translation);
  std::size_t size() const;

  // {"<backend>": {"<lang>": {"<digest>": "<translation>"}}}
  nlohmann::json to_json() const;
  static TranslationCache from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  // Missing file yields an empty cache.
  static TranslationCache load(const std::filesystem::path& path);

 private:
  using Key = std::tuple<std::string, std::string, std::string>;
  mutable std::shared_mutex mutex_;
  std::map<Key, std::string> entries_;
};

struct TranslateOptions {
  std::size_t max_in_flight = 4;       // concurrent remote requests
  std::size_t texts_per_request = 32;  // remote batch size
};

// Translates texts from `source` into English in input order. Cached texts
// are not re-sent; remote misses are batched and issued with bounded
// parallelism. Throws kUnsupportedLanguage or kBackendFailure.
std::vector<std::string> translate_texts(const TranslationBackend& backend, const LanguageCode& source,
                                         std::span<const std::string> texts, TranslationCache& cache,
                                         const TranslateOptions& options = {});

// Both sentences translated, lang "eng", id suffixed ".<backend>", score kept.
LabeledPair translate_pair(const TranslationBackend& backend, const LabeledPair& pair,
                           TranslationCache& cache, const TranslateOptions& options = {});

struct TranslationResult {
  Dataset dataset;
  bool passthrough = false;  // some pairs were left untranslated (unsupported)
  std::vector<std::string> backends_used;
};

// Backend-major concatenation of every backend's translation of the train
// split. Pairs whose language no backend supports are kept untranslated
// (appended after the translated blocks) and flag passthrough.
TranslationResult augment_training(const Dataset& dataset, std::span<const TranslationBackend> backends,
                                   TranslationCache& cache, const TranslateOptions& options = {});

// Dev/test translation through the primary backend only; size and order kept.
TranslationResult translate_eval(const Dataset& dataset, std::span<const TranslationBackend> backends,
                                 TranslationCache& cache, const TranslateOptions& options = {});

}  // namespace semrel
