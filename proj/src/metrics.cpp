#include "semrel/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "semrel/csv.hpp"
#include "semrel/error.hpp"
#include "semrel/text.hpp"

namespace semrel {

std::vector<double> average_ranks(std::span<const double> values) {
  for (double v : values) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kNonFiniteScore, "cannot rank a non-finite value");
  }
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
    // positions i..j-1 hold ranks i+1..j
    const double rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

double spearman(std::span<const double> pred, std::span<const double> gold) {
  if (pred.size() != gold.size()) {
    throw Error(ErrorCode::kLengthMismatch, std::to_string(pred.size()) + " predictions vs " +
                                                std::to_string(gold.size()) + " gold scores");
  }
  if (pred.size() < 2) throw Error(ErrorCode::kLengthMismatch, "spearman needs at least 2 items");
  const auto rp = average_ranks(pred);
  const auto rg = average_ranks(gold);
  const double n = static_cast<double>(rp.size());
  const double mean = (n + 1.0) / 2.0;  // ranks always sum to n(n+1)/2
  double cov = 0.0, vp = 0.0, vg = 0.0;
  for (std::size_t i = 0; i < rp.size(); ++i) {
    const double a = rp[i] - mean;
    const double b = rg[i] - mean;
    cov += a * b;
    vp += a * a;
    vg += b * b;
  }
  if (vp == 0.0 || vg == 0.0) {
    throw Error(ErrorCode::kUndefinedSpearman, "constant input has no rank variance");
  }
  return std::clamp(cov / std::sqrt(vp * vg), -1.0, 1.0);
}

double spearman_or_lowest(std::span<const double> pred, std::span<const double> gold) {
  try {
    return spearman(pred, gold);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kUndefinedSpearman) throw;
    return -std::numeric_limits<double>::infinity();
  }
}

std::string format_table_score(double value) {
  std::string s = text::format_fixed(value, 4);
  if (s == "-0.0000") s = "0.0000";
  if (s.rfind("0.", 0) == 0) return s.substr(1);
  if (s.rfind("-0.", 0) == 0) return "-" + s.substr(2);
  return s;
}

namespace {

struct Row {
  std::string label;
  std::map<LanguageCode, double> cells;
  bool is_baseline = false;
};

std::string pad(const std::string& s, std::size_t width, bool left_align) {
  if (s.size() >= width) return s;
  const std::string fill(width - s.size(), ' ');
  return left_align ? s + fill : fill + s;
}

}  // namespace

std::string report_table(std::span<const EvalResult> results, const Baseline& baseline) {
  std::set<LanguageCode> langs;
  std::vector<Row> rows;
  for (const auto& r : results) {
    langs.insert(r.lang);
    auto it = std::find_if(rows.begin(), rows.end(), [&](const Row& row) { return row.label == r.model; });
    if (it == rows.end()) {
      rows.push_back(Row{r.model, {}, false});
      it = std::prev(rows.end());
    }
    if (std::isfinite(r.spearman)) it->cells[r.lang] = r.spearman;
  }
  Row base{"baseline", {}, true};
  for (const auto& lang : langs) {
    if (auto it = baseline.find(lang); it != baseline.end()) base.cells[lang] = it->second;
  }
  if (!base.cells.empty()) rows.insert(rows.begin(), base);

  std::vector<std::vector<std::string>> grid;
  std::vector<std::string> header{"model"};
  for (const auto& lang : langs) header.push_back(lang.str());
  header.push_back("avg");
  grid.push_back(header);
  for (const auto& row : rows) {
    std::vector<std::string> line{row.label};
    double sum = 0.0;
    for (const auto& lang : langs) {
      auto it = row.cells.find(lang);
      if (it == row.cells.end()) {
        line.push_back("-");
        continue;
      }
      sum += it->second;
      std::string cell = format_table_score(it->second);
      if (!row.is_baseline) {
        auto b = baseline.find(lang);
        if (b != baseline.end() && it->second > b->second) cell += '*';
      }
      line.push_back(cell);
    }
    line.push_back(row.cells.empty() ? "-" : format_table_score(sum / static_cast<double>(row.cells.size())));
    grid.push_back(line);
  }

  std::vector<std::size_t> widths(header.size(), 0);
  for (const auto& line : grid) {
    for (std::size_t c = 0; c < line.size(); ++c) widths[c] = std::max(widths[c], line[c].size());
  }
  std::string out;
  for (const auto& line : grid) {
    for (std::size_t c = 0; c < line.size(); ++c) {
      if (c > 0) out += "  ";
      // numeric cells are left-aligned so the '*' marker hangs off the end
      out += c + 1 == line.size() ? line[c] : pad(line[c], widths[c], true);
    }
    out += '\n';
  }
  return out;
}

std::string report_csv(std::span<const EvalResult> results, const Baseline& baseline) {
  std::string out = "lang,model,score,baseline,beats_baseline\n";
  for (const auto& r : results) {
    auto b = baseline.find(r.lang);
    const bool scored = std::isfinite(r.spearman);
    out += r.lang.str() + ',' + csv::escape(r.model) + ',';
    if (scored) out += text::format_fixed(r.spearman, 6);
    out += ',';
    if (b != baseline.end()) out += text::format_fixed(b->second, 6);
    out += ',';
    out += (scored && b != baseline.end() && r.spearman > b->second) ? "true" : "false";
    out += '\n';
  }
  return out;
}

}  // namespace semrel
