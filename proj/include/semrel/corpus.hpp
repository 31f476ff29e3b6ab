#pragma once

#include <compare>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace semrel {

// Lowercase three-letter language tag ("eng", "esp", "amh"). "mul" marks a
// merged multilingual dataset.
class LanguageCode {
 public:
  LanguageCode() : code_("und") {}
  explicit LanguageCode(std::string_view code);

  static LanguageCode multilingual() { return LanguageCode("mul"); }
  static LanguageCode english() { return LanguageCode("eng"); }

  const std::string& str() const noexcept { return code_; }

  friend auto operator<=>(const LanguageCode&, const LanguageCode&) = default;
  friend bool operator==(const LanguageCode&, const LanguageCode&) = default;

 private:
  std::string code_;
};

enum class Split { kTrain, kDev, kTest };

std::string_view to_string(Split split);
Split parse_split(std::string_view name);

struct LabeledPair {
  std::string id;
  LanguageCode lang;
  std::string sentence1;
  std::string sentence2;
  std::optional<double> score;  // gold relatedness in [0, 1]
};

struct Dataset {
  LanguageCode lang;
  Split split = Split::kTrain;
  std::vector<LabeledPair> pairs;

  std::size_t size() const noexcept { return pairs.size(); }
  bool empty() const noexcept { return pairs.empty(); }
  // True when every pair carries a gold score (and there is at least one pair).
  bool fully_scored() const noexcept;
  std::vector<double> gold_scores() const;
};

enum class DataFormat {
  kColumnar,      // TSV: id, sentence1, sentence2[, score]
  kSemrelCompat,  // CSV: PairID, Text ("s1\ns2"), [Score]
};

std::string_view to_string(DataFormat format);
DataFormat parse_format(std::string_view name);

Dataset parse_dataset(std::string_view bytes, DataFormat format, const LanguageCode& lang,
                      Split split);
Dataset read_dataset(const std::filesystem::path& path, DataFormat format,
                     const LanguageCode& lang, Split split);

// Concatenates same-split datasets in input order. When the input languages
// differ the result is "mul" and every id is prefixed with "<lang>:".
Dataset merge_datasets(std::span<const Dataset> datasets);

// Returns a copy with every id rewritten to "<prefix>:<id>".
Dataset with_id_prefix(const Dataset& dataset, std::string_view prefix);

// "PairID,Pred_Score" CSV with six decimals per score.
std::string write_predictions(const Dataset& dataset, std::span<const double> scores);

// Native TSV form; scores use the shortest round-trip representation.
std::string write_columnar(const Dataset& dataset);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace semrel
