#pragma once

#include <atomic>
#include <filesystem>
#include <string>
#include <vector>

#include <unistd.h>

#include "semrel/corpus.hpp"
#include "semrel/random.hpp"

namespace testutil {

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("semrel_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline const std::vector<std::string>& words() {
  static const std::vector<std::string> w{"sun",   "moon",  "river", "stone", "tree",  "bird",
                                          "fire",  "water", "cloud", "rain",  "wind",  "sea",
                                          "hill",  "road",  "house", "bread", "green", "quiet"};
  return w;
}

inline std::string random_sentence(semrel::Rng& rng, std::size_t min_len = 2, std::size_t max_len = 5) {
  const std::size_t len = min_len + rng.below(max_len - min_len + 1);
  std::string s;
  for (std::size_t i = 0; i < len; ++i) {
    if (i) s += ' ';
    s += words()[rng.below(words().size())];
  }
  return s;
}

// Pairs share a random prefix; the score is the shared fraction, so the data
// carries a learnable signal.
inline semrel::Dataset synthetic(const std::string& lang, semrel::Split split, std::size_t n, std::uint64_t seed,
                                 bool scored = true) {
  semrel::Rng rng(seed);
  semrel::Dataset ds;
  ds.lang = semrel::LanguageCode(lang);
  ds.split = split;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::string> a, b;
    for (int k = 0; k < 4; ++k) a.push_back(words()[rng.below(words().size())]);
    const std::size_t keep = rng.below(5);
    for (std::size_t k = 0; k < 4; ++k) b.push_back(k < keep ? a[k] : words()[rng.below(words().size())]);
    auto join = [](const std::vector<std::string>& v) {
      std::string s;
      for (const auto& x : v) s += (s.empty() ? "" : " ") + x;
      return s;
    };
    semrel::LabeledPair p;
    p.id = lang + "-" + std::to_string(i);
    p.lang = ds.lang;
    p.sentence1 = join(a);
    p.sentence2 = join(b);
    if (scored) p.score = static_cast<double>(keep) / 4.0;
    ds.pairs.push_back(std::move(p));
  }
  return ds;
}

}  // namespace testutil
