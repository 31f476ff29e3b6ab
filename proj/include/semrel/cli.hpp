#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "semrel/corpus.hpp"
#include "semrel/finesem.hpp"
#include "semrel/metrics.hpp"
#include "semrel/transem.hpp"
#include "semrel/translate.hpp"

namespace semrel::cli {

struct DataPaths {
  std::optional<std::filesystem::path> train;
  std::optional<std::filesystem::path> dev;
  std::optional<std::filesystem::path> test;
  DataFormat format = DataFormat::kColumnar;

  const std::optional<std::filesystem::path>& get(Split split) const;
};

enum class ModelChoice { kTranSem, kFineSem };

struct RunConfig {
  std::uint64_t seed = 0;
  std::filesystem::path out = "out";
  ModelChoice model = ModelChoice::kTranSem;
  std::map<LanguageCode, DataPaths> data;
  std::vector<TranslationBackend> backends;
  TranslateOptions translation;
  bool tokenizer_explicit = false;  // "tokenizer" present in the document
  bool encoder_explicit = false;    // "encoder" present in the document
  TrainConfig train;
  bool train_translated = false;    // train.data == "translated"
  CrossConfig finesem;
  Regime regime = Regime::kIndividual;
  std::optional<std::size_t> fixed_epoch;
  Split eval_split = Split::kTest;
  std::vector<std::size_t> sweep_batch_sizes{2, 4, 8, 16, 64, 128, 256};
  Baseline baseline;
  std::filesystem::path cache_path;

  // Datasets of one split, keyed and sorted by language.
  std::map<LanguageCode, Dataset> load_split(Split split) const;
};

// Sets a dotted key ("train.batch_size") inside the document. The value is
// parsed as a JSON literal when possible and kept as a string otherwise.
void apply_override(nlohmann::json& doc, const std::string& dotted_key, const std::string& value);

// Relative data, baseline and lexicon paths resolve against base_dir. Checks
// that every referenced file exists.
RunConfig parse_run_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);

// Full command line without the program name. Returns the exit status.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace semrel::cli
