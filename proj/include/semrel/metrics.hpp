#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "semrel/corpus.hpp"

namespace semrel {

// Fractional ranks in 1..n; tied values share the mean of the ranks they span.
std::vector<double> average_ranks(std::span<const double> values);

// Pearson correlation of the average ranks. Throws kUndefinedSpearman when
// either side is constant and kLengthMismatch when lengths differ or n < 2.
double spearman(std::span<const double> pred, std::span<const double> gold);

// Training-loop variant: undefined correlations compare as -infinity.
double spearman_or_lowest(std::span<const double> pred, std::span<const double> gold);

struct EvalResult {
  std::string model;
  LanguageCode lang;
  Split split = Split::kTest;
  double spearman = 0.0;  // NaN when undefined; shown as a missing cell
  std::size_t n = 0;
};

using Baseline = std::map<LanguageCode, double>;

// Table cell in the ".8125" / "-.0500" style, four decimals.
std::string format_table_score(double value);

// One row per model (first-appearance order, preceded by a "baseline" row
// when the baseline covers any column), one column per language (sorted)
// and a trailing "avg" over the languages present in the row. Cells above
// the baseline for their language get a trailing '*'.
std::string report_table(std::span<const EvalResult> results, const Baseline& baseline);

// lang,model,score,baseline,beats_baseline
std::string report_csv(std::span<const EvalResult> results, const Baseline& baseline);

}  // namespace semrel
