#include "semrel/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>
#include <unordered_set>

#include "semrel/csv.hpp"
#include "semrel/error.hpp"
#include "semrel/text.hpp"

namespace semrel {

namespace {

std::string at_line(std::size_t line) { return " (line " + std::to_string(line) + ")"; }

double parse_score(std::string_view field, std::size_t line) {
  const auto trimmed = text::trim(field);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(trimmed.data(), trimmed.data() + trimmed.size(), value);
  if (ec != std::errc() || ptr != trimmed.data() + trimmed.size()) {
    throw Error(ErrorCode::kMalformedRow,
                "score '" + std::string(field) + "' is not a number" + at_line(line));
  }
  if (!std::isfinite(value) || value < 0.0 || value > 1.0) {
    throw Error(ErrorCode::kScoreOutOfRange,
                "score " + std::string(trimmed) + " outside [0, 1]" + at_line(line));
  }
  return value;
}

class DatasetBuilder {
 public:
  DatasetBuilder(const LanguageCode& lang, Split split) {
    dataset_.lang = lang;
    dataset_.split = split;
  }

  void add(std::string id, std::string_view s1, std::string_view s2,
           std::optional<std::string_view> score_field, std::size_t line) {
    if (id.empty()) throw Error(ErrorCode::kMalformedRow, "empty id" + at_line(line));
    if (text::trim(s1).empty() || text::trim(s2).empty()) {
      throw Error(ErrorCode::kEmptySentence, "pair " + id + " has an empty sentence" + at_line(line));
    }
    std::optional<double> score;
    if (score_field && !text::trim(*score_field).empty()) score = parse_score(*score_field, line);
    if (!score && dataset_.split != Split::kTest) {
      throw Error(ErrorCode::kMissingScore,
                  "pair " + id + " in a " + std::string(to_string(dataset_.split)) +
                      " split has no score" + at_line(line));
    }
    if (!seen_.insert(id).second) {
      throw Error(ErrorCode::kDuplicateId, "duplicate id " + id + at_line(line));
    }
    dataset_.pairs.push_back(
        LabeledPair{std::move(id), dataset_.lang, std::string(s1), std::string(s2), score});
  }

  Dataset finish() && { return std::move(dataset_); }

 private:
  Dataset dataset_;
  std::unordered_set<std::string> seen_;
};

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

Dataset parse_columnar(std::string_view bytes, const LanguageCode& lang, Split split) {
  DatasetBuilder builder(lang, split);
  std::size_t line_no = 0;
  std::size_t columns = 0;
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    auto nl = bytes.find('\n', pos);
    if (nl == std::string_view::npos) nl = bytes.size();
    std::string_view line = bytes.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    if (columns == 0) {
      const bool ok = (fields.size() == 3 || fields.size() == 4) && fields[0] == "id" &&
                      fields[1] == "sentence1" && fields[2] == "sentence2" &&
                      (fields.size() == 3 || fields[3] == "score");
      if (!ok) {
        throw Error(ErrorCode::kMalformedRow,
                    "expected header 'id<TAB>sentence1<TAB>sentence2[<TAB>score]'" + at_line(line_no));
      }
      columns = fields.size();
      continue;
    }
    if (fields.size() != columns) {
      throw Error(ErrorCode::kMalformedRow, "expected " + std::to_string(columns) + " columns, got " +
                                                std::to_string(fields.size()) + at_line(line_no));
    }
    std::optional<std::string_view> score;
    if (columns == 4) score = fields[3];
    builder.add(std::string(fields[0]), fields[1], fields[2], score, line_no);
  }
  if (columns == 0) throw Error(ErrorCode::kMalformedRow, "missing header row");
  return std::move(builder).finish();
}

Dataset parse_semrel(std::string_view bytes, const LanguageCode& lang, Split split) {
  const auto records = csv::parse(bytes, ',');
  if (records.empty()) throw Error(ErrorCode::kMalformedRow, "missing header row");
  const auto& header = records.front().fields;
  std::optional<std::size_t> id_col, text_col, score_col;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "PairID") id_col = i;
    if (header[i] == "Text") text_col = i;
    if (header[i] == "Score") score_col = i;
  }
  if (!id_col || !text_col) {
    throw Error(ErrorCode::kMalformedRow, "header must contain PairID and Text columns");
  }
  DatasetBuilder builder(lang, split);
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.fields.size() != header.size()) {
      throw Error(ErrorCode::kMalformedRow, "expected " + std::to_string(header.size()) +
                                                " columns, got " + std::to_string(rec.fields.size()) +
                                                at_line(rec.line));
    }
    std::string_view joined = rec.fields[*text_col];
    std::size_t cut = joined.find('\n');
    std::size_t sep_len = 1;
    if (cut == std::string_view::npos) {
      cut = joined.find("\\n");
      sep_len = 2;
    }
    if (cut == std::string_view::npos) {
      throw Error(ErrorCode::kMalformedRow, "Text field does not hold two sentences" + at_line(rec.line));
    }
    std::string_view s1 = joined.substr(0, cut);
    if (!s1.empty() && s1.back() == '\r') s1.remove_suffix(1);
    std::optional<std::string_view> score;
    if (score_col) score = rec.fields[*score_col];
    builder.add(rec.fields[*id_col], s1, joined.substr(cut + sep_len), score, rec.line);
  }
  return std::move(builder).finish();
}

}  // namespace

LanguageCode::LanguageCode(std::string_view code) : code_(code) {
  bool ok = code.size() == 3;
  for (char c : code) ok = ok && c >= 'a' && c <= 'z';
  if (!ok) throw Error(ErrorCode::kInvalidLanguage, "'" + std::string(code) + "' is not a [a-z]{3} code");
}

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kDev: return "dev";
    case Split::kTest: return "test";
  }
  return "train";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "dev") return Split::kDev;
  if (name == "test") return Split::kTest;
  throw Error(ErrorCode::kInvalidConfig, "unknown split '" + std::string(name) + "'");
}

std::string_view to_string(DataFormat format) {
  return format == DataFormat::kColumnar ? "columnar" : "semrel-compat";
}

DataFormat parse_format(std::string_view name) {
  if (name == "columnar") return DataFormat::kColumnar;
  if (name == "semrel-compat") return DataFormat::kSemrelCompat;
  throw Error(ErrorCode::kInvalidConfig, "unknown data format '" + std::string(name) + "'");
}

bool Dataset::fully_scored() const noexcept {
  if (pairs.empty()) return false;
  for (const auto& p : pairs) {
    if (!p.score) return false;
  }
  return true;
}

std::vector<double> Dataset::gold_scores() const {
  std::vector<double> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    if (!p.score) throw Error(ErrorCode::kMissingScore, "pair " + p.id + " has no score");
    out.push_back(*p.score);
  }
  return out;
}

Dataset parse_dataset(std::string_view bytes, DataFormat format, const LanguageCode& lang,
                      Split split) {
  if (!text::is_valid_utf8(bytes)) throw Error(ErrorCode::kInvalidUtf8, "input is not valid UTF-8");
  if (format == DataFormat::kColumnar) return parse_columnar(bytes, lang, split);
  return parse_semrel(bytes, lang, split);
}

Dataset read_dataset(const std::filesystem::path& path, DataFormat format,
                     const LanguageCode& lang, Split split) {
  try {
    return parse_dataset(read_file(path), format, lang, split);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

Dataset merge_datasets(std::span<const Dataset> datasets) {
  if (datasets.empty()) throw Error(ErrorCode::kEmptyInput, "no datasets to merge");
  const Split split = datasets.front().split;
  bool same_lang = true;
  for (const auto& d : datasets) {
    if (d.split != split) {
      throw Error(ErrorCode::kMixedSplits, "cannot merge " + std::string(to_string(split)) +
                                               " with " + std::string(to_string(d.split)));
    }
    same_lang = same_lang && d.lang == datasets.front().lang;
  }
  Dataset merged;
  merged.split = split;
  merged.lang = same_lang ? datasets.front().lang : LanguageCode::multilingual();
  std::unordered_set<std::string> seen;
  for (const auto& d : datasets) {
    for (const auto& p : d.pairs) {
      LabeledPair copy = p;
      if (!same_lang) copy.id = d.lang.str() + ":" + p.id;
      if (!seen.insert(copy.id).second) {
        throw Error(ErrorCode::kDuplicateId, "duplicate id " + copy.id + " while merging");
      }
      merged.pairs.push_back(std::move(copy));
    }
  }
  return merged;
}

Dataset with_id_prefix(const Dataset& dataset, std::string_view prefix) {
  Dataset out = dataset;
  for (auto& p : out.pairs) p.id = std::string(prefix) + ":" + p.id;
  return out;
}

std::string write_predictions(const Dataset& dataset, std::span<const double> scores) {
  if (scores.size() != dataset.pairs.size()) {
    throw Error(ErrorCode::kLengthMismatch, std::to_string(scores.size()) + " scores for " +
                                                std::to_string(dataset.pairs.size()) + " pairs");
  }
  std::string out = "PairID,Pred_Score\n";
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i])) {
      throw Error(ErrorCode::kNonFiniteScore, "prediction for " + dataset.pairs[i].id + " is not finite");
    }
    out += csv::escape(dataset.pairs[i].id);
    out += ',';
    out += text::format_fixed(scores[i], 6);
    out += '\n';
  }
  return out;
}

std::string write_columnar(const Dataset& dataset) {
  const bool scored = std::any_of(dataset.pairs.begin(), dataset.pairs.end(),
                                  [](const LabeledPair& p) { return p.score.has_value(); });
  std::string out = scored ? "id\tsentence1\tsentence2\tscore\n" : "id\tsentence1\tsentence2\n";
  for (const auto& p : dataset.pairs) {
    out += p.id + '\t' + p.sentence1 + '\t' + p.sentence2;
    if (scored) {
      out += '\t';
      if (p.score) out += text::format_shortest(*p.score);
    }
    out += '\n';
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw Error(ErrorCode::kIo, "short write to " + path.string());
}

}  // namespace semrel
