#include "semrel/translate.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <unordered_map>

#include "httplib.h"
#include "semrel/error.hpp"
#include "semrel/text.hpp"

namespace semrel {

namespace {

using nlohmann::json;

struct Endpoint {
  std::string base;  // scheme://host[:port]
  std::string path;
};

Endpoint split_endpoint(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos || url.substr(0, scheme) != "http") {
    throw Error(ErrorCode::kInvalidBackend, "remote endpoint must be an http:// URL: " + url);
  }
  const auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

std::string lexicon_translate(const TranslationBackend& backend, const std::string& source) {
  std::string out;
  for (const auto& token : text::split_whitespace(source)) {
    if (!out.empty()) out.push_back(' ');
    auto it = backend.lexicon.find(token);
    out += it == backend.lexicon.end() ? token : it->second;
  }
  return out;
}

// One POST carrying `texts`; retried per the backend's policy.
std::vector<std::string> remote_request(const TranslationBackend& backend, const LanguageCode& source,
                                        std::span<const std::string> texts) {
  const auto ep = split_endpoint(backend.endpoint);
  const json body = {{"src_lang", source.str()}, {"tgt_lang", "eng"},
                     {"texts", std::vector<std::string>(texts.begin(), texts.end())}};
  const std::string payload = body.dump();
  std::string last_error = "no attempt made";
  auto backoff = backend.retry.initial_backoff;
  for (int attempt = 1; attempt <= backend.retry.attempts; ++attempt) {
    httplib::Client client(ep.base);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(backend.retry.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(backend.retry.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    auto res = client.Post(ep.path, payload, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
    } else if (res->status != 200) {
      last_error = "HTTP status " + std::to_string(res->status);
    } else {
      try {
        const auto reply = json::parse(res->body);
        auto translations = reply.at("translations").get<std::vector<std::string>>();
        if (translations.size() == texts.size()) return translations;
        last_error = "expected " + std::to_string(texts.size()) + " translations, got " +
                     std::to_string(translations.size());
      } catch (const json::exception& e) {
        last_error = std::string("bad response body: ") + e.what();
      }
    }
    if (attempt < backend.retry.attempts) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }
  throw Error(ErrorCode::kBackendFailure, "backend " + backend.name + " failed after " +
                                              std::to_string(backend.retry.attempts) +
                                              " attempts: " + last_error);
}

std::vector<std::vector<std::string>> run_remote_batches(
    const TranslationBackend& backend, const LanguageCode& source,
    const std::vector<std::vector<std::string>>& batches, std::size_t max_in_flight) {
  std::vector<std::vector<std::string>> results(batches.size());
  std::vector<std::exception_ptr> errors(batches.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < batches.size(); i = next++) {
      try {
        results[i] = remote_request(backend, source, batches[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t n_threads = std::clamp<std::size_t>(max_in_flight, 1, batches.size());
  std::vector<std::thread> threads;
  for (std::size_t t = 0; t + 1 < n_threads; ++t) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

LabeledPair assemble(const TranslationBackend& backend, const LabeledPair& pair, std::string s1,
                     std::string s2) {
  LabeledPair out = pair;
  out.id = pair.id + "." + backend.name;
  out.lang = LanguageCode::english();
  out.sentence1 = std::move(s1);
  out.sentence2 = std::move(s2);
  return out;
}

// Translates the listed pairs with one backend, grouping by source language
// so each language goes through translate_texts once.
std::vector<LabeledPair> translate_pairs(const TranslationBackend& backend,
                                         const std::vector<const LabeledPair*>& pairs,
                                         TranslationCache& cache, const TranslateOptions& options) {
  std::map<LanguageCode, std::vector<std::size_t>> by_lang;
  for (std::size_t i = 0; i < pairs.size(); ++i) by_lang[pairs[i]->lang].push_back(i);
  std::vector<std::string> first(pairs.size()), second(pairs.size());
  for (const auto& [lang, idx] : by_lang) {
    std::vector<std::string> texts;
    texts.reserve(idx.size() * 2);
    for (auto i : idx) {
      texts.push_back(pairs[i]->sentence1);
      texts.push_back(pairs[i]->sentence2);
    }
    auto translated = translate_texts(backend, lang, texts, cache, options);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      first[idx[k]] = std::move(translated[2 * k]);
      second[idx[k]] = std::move(translated[2 * k + 1]);
    }
  }
  std::vector<LabeledPair> out;
  out.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    out.push_back(assemble(backend, *pairs[i], std::move(first[i]), std::move(second[i])));
  }
  return out;
}

}  // namespace

std::string_view to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::kIdentity: return "identity";
    case BackendKind::kLexicon: return "lexicon";
    case BackendKind::kRemote: return "remote";
  }
  return "identity";
}

BackendKind parse_backend_kind(std::string_view name) {
  if (name == "identity") return BackendKind::kIdentity;
  if (name == "lexicon") return BackendKind::kLexicon;
  if (name == "remote") return BackendKind::kRemote;
  throw Error(ErrorCode::kInvalidBackend, "unknown backend kind '" + std::string(name) + "'");
}

TranslationBackend TranslationBackend::identity(std::string name, bool primary) {
  TranslationBackend b;
  b.name = std::move(name);
  b.kind = BackendKind::kIdentity;
  b.is_primary = primary;
  return b;
}

TranslationBackend TranslationBackend::from_lexicon(std::string name,
                                                    std::map<std::string, std::string> lexicon,
                                                    bool primary) {
  TranslationBackend b;
  b.name = std::move(name);
  b.kind = BackendKind::kLexicon;
  b.lexicon = std::move(lexicon);
  b.is_primary = primary;
  return b;
}

TranslationBackend TranslationBackend::remote(std::string name, std::string endpoint, bool primary) {
  TranslationBackend b;
  b.name = std::move(name);
  b.kind = BackendKind::kRemote;
  b.endpoint = std::move(endpoint);
  b.is_primary = primary;
  return b;
}

void TranslationBackend::validate() const {
  if (name.empty()) throw Error(ErrorCode::kInvalidBackend, "backend name is empty");
  if (kind == BackendKind::kLexicon) {
    if (lexicon.empty()) throw Error(ErrorCode::kInvalidBackend, "lexicon backend " + name + " has no lexicon");
    std::set<std::string> targets;
    for (const auto& [src, dst] : lexicon) {
      if (!targets.insert(dst).second) {
        throw Error(ErrorCode::kInvalidBackend, "lexicon of " + name + " maps two tokens to '" + dst + "'");
      }
    }
  }
  if (kind == BackendKind::kRemote) {
    if (endpoint.empty()) throw Error(ErrorCode::kInvalidBackend, "remote backend " + name + " has no endpoint");
    split_endpoint(endpoint);
  }
  if (retry.attempts < 1) throw Error(ErrorCode::kInvalidBackend, "backend " + name + " needs >= 1 attempt");
}

void validate_backends(std::span<const TranslationBackend> backends) {
  std::set<std::string> names;
  std::size_t primaries = 0;
  for (const auto& b : backends) {
    b.validate();
    if (!names.insert(b.name).second) throw Error(ErrorCode::kInvalidBackend, "duplicate backend " + b.name);
    primaries += b.is_primary ? 1 : 0;
  }
  if (primaries > 1) throw Error(ErrorCode::kInvalidBackend, "more than one primary backend");
}

const TranslationBackend* primary_backend(std::span<const TranslationBackend> backends) {
  for (const auto& b : backends) {
    if (b.is_primary) return &b;
  }
  return nullptr;
}

TranslationCache::TranslationCache(const TranslationCache& other) {
  std::shared_lock lock(other.mutex_);
  entries_ = other.entries_;
}

TranslationCache& TranslationCache::operator=(const TranslationCache& other) {
  if (this != &other) {
    std::scoped_lock lock(mutex_);
    std::shared_lock other_lock(other.mutex_);
    entries_ = other.entries_;
  }
  return *this;
}

std::string TranslationCache::digest(std::string_view text) { return text::to_hex(text::fnv1a64(text)); }

std::optional<std::string> TranslationCache::lookup(const std::string& backend, const LanguageCode& lang,
                                                    std::string_view source) const {
  std::shared_lock lock(mutex_);
  auto it = entries_.find(Key{backend, lang.str(), digest(source)});
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void TranslationCache::store(const std::string& backend, const LanguageCode& lang, std::string_view source,
                             std::string translation) {
  std::unique_lock lock(mutex_);
  entries_[Key{backend, lang.str(), digest(source)}] = std::move(translation);
}

std::size_t TranslationCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

json TranslationCache::to_json() const {
  std::shared_lock lock(mutex_);
  json j = json::object();
  for (const auto& [key, value] : entries_) {
    const auto& [backend, lang, dig] = key;
    j[backend][lang][dig] = value;
  }
  return j;
}

TranslationCache TranslationCache::from_json(const json& j) {
  TranslationCache cache;
  try {
    for (const auto& [backend, langs] : j.items()) {
      for (const auto& [lang, entries] : langs.items()) {
        for (const auto& [dig, value] : entries.items()) {
          cache.entries_[Key{backend, lang, dig}] = value.get<std::string>();
        }
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kIo, std::string("malformed translation cache: ") + e.what());
  }
  return cache;
}

void TranslationCache::save(const std::filesystem::path& path) const {
  write_file(path, to_json().dump(2) + "\n");
}

TranslationCache TranslationCache::load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) return {};
  try {
    return from_json(json::parse(read_file(path)));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kIo, path.string() + ": " + e.what());
  }
}

std::vector<std::string> translate_texts(const TranslationBackend& backend, const LanguageCode& source,
                                         std::span<const std::string> texts, TranslationCache& cache,
                                         const TranslateOptions& options) {
  if (!backend.supports(source)) {
    throw Error(ErrorCode::kUnsupportedLanguage, "backend " + backend.name + " cannot translate " + source.str());
  }
  std::vector<std::optional<std::string>> out(texts.size());
  // Unique cache misses, in first-seen order.
  std::vector<std::string> misses;
  std::unordered_map<std::string, std::size_t> miss_index;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    out[i] = cache.lookup(backend.name, source, texts[i]);
    if (!out[i] && !miss_index.contains(texts[i])) {
      miss_index.emplace(texts[i], misses.size());
      misses.push_back(texts[i]);
    }
  }
  if (!misses.empty()) {
    std::vector<std::string> fresh;
    switch (backend.kind) {
      case BackendKind::kIdentity:
        fresh = misses;
        break;
      case BackendKind::kLexicon:
        for (const auto& m : misses) fresh.push_back(lexicon_translate(backend, m));
        break;
      case BackendKind::kRemote: {
        const std::size_t per = std::max<std::size_t>(1, options.texts_per_request);
        std::vector<std::vector<std::string>> batches;
        for (std::size_t i = 0; i < misses.size(); i += per) {
          batches.emplace_back(misses.begin() + static_cast<std::ptrdiff_t>(i),
                               misses.begin() + static_cast<std::ptrdiff_t>(std::min(misses.size(), i + per)));
        }
        for (auto& batch : run_remote_batches(backend, source, batches, options.max_in_flight)) {
          for (auto& t : batch) fresh.push_back(std::move(t));
        }
        break;
      }
    }
    for (std::size_t k = 0; k < misses.size(); ++k) cache.store(backend.name, source, misses[k], fresh[k]);
    for (std::size_t i = 0; i < texts.size(); ++i) {
      if (!out[i]) out[i] = fresh[miss_index.at(texts[i])];
    }
  }
  std::vector<std::string> result;
  result.reserve(texts.size());
  for (auto& t : out) result.push_back(std::move(*t));
  return result;
}

LabeledPair translate_pair(const TranslationBackend& backend, const LabeledPair& pair, TranslationCache& cache,
                           const TranslateOptions& options) {
  if (text::trim(pair.sentence1).empty() || text::trim(pair.sentence2).empty()) {
    throw Error(ErrorCode::kEmptySentence, "pair " + pair.id + " has an empty sentence");
  }
  const std::vector<std::string> texts{pair.sentence1, pair.sentence2};
  auto translated = translate_texts(backend, pair.lang, texts, cache, options);
  return assemble(backend, pair, std::move(translated[0]), std::move(translated[1]));
}

TranslationResult augment_training(const Dataset& dataset, std::span<const TranslationBackend> backends,
                                   TranslationCache& cache, const TranslateOptions& options) {
  if (dataset.split != Split::kTrain) {
    throw Error(ErrorCode::kWrongSplit, "augmentation applies to the train split only");
  }
  if (backends.empty()) throw Error(ErrorCode::kEmptyInput, "no translation backends configured");
  validate_backends(backends);

  TranslationResult result;
  result.dataset.split = Split::kTrain;
  std::vector<const LabeledPair*> leftover;
  for (const auto& p : dataset.pairs) {
    const bool any = std::any_of(backends.begin(), backends.end(),
                                 [&](const TranslationBackend& b) { return b.supports(p.lang); });
    if (!any) leftover.push_back(&p);
  }
  for (const auto& b : backends) {
    std::vector<const LabeledPair*> todo;
    for (const auto& p : dataset.pairs) {
      if (b.supports(p.lang)) todo.push_back(&p);
    }
    if (todo.empty()) continue;
    result.backends_used.push_back(b.name);
    for (auto& p : translate_pairs(b, todo, cache, options)) result.dataset.pairs.push_back(std::move(p));
  }
  for (const auto* p : leftover) result.dataset.pairs.push_back(*p);
  result.passthrough = !leftover.empty();
  if (!result.passthrough) {
    result.dataset.lang = LanguageCode::english();
  } else if (result.backends_used.empty()) {
    result.dataset.lang = dataset.lang;
  } else {
    result.dataset.lang = LanguageCode::multilingual();
  }
  return result;
}

TranslationResult translate_eval(const Dataset& dataset, std::span<const TranslationBackend> backends,
                                 TranslationCache& cache, const TranslateOptions& options) {
  if (dataset.split == Split::kTrain) {
    throw Error(ErrorCode::kWrongSplit, "evaluation translation applies to dev/test splits");
  }
  validate_backends(backends);
  const TranslationBackend* primary = primary_backend(backends);
  if (!primary) throw Error(ErrorCode::kNoPrimaryBackend, "no backend is marked primary");

  std::vector<const LabeledPair*> todo;
  for (const auto& p : dataset.pairs) {
    if (primary->supports(p.lang)) todo.push_back(&p);
  }
  auto translated = translate_pairs(*primary, todo, cache, options);
  TranslationResult result;
  result.dataset.split = dataset.split;
  std::size_t k = 0;
  for (const auto& p : dataset.pairs) {
    if (primary->supports(p.lang)) {
      result.dataset.pairs.push_back(std::move(translated[k++]));
    } else {
      result.dataset.pairs.push_back(p);
      result.passthrough = true;
    }
  }
  if (!todo.empty()) result.backends_used.push_back(primary->name);
  if (!result.passthrough) {
    result.dataset.lang = LanguageCode::english();
  } else {
    result.dataset.lang = todo.empty() ? dataset.lang : LanguageCode::multilingual();
  }
  return result;
}

}  // namespace semrel
