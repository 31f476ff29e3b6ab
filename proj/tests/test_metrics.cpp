#include <cmath>
#include <limits>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "semrel/error.hpp"
#include "semrel/metrics.hpp"
#include "semrel/random.hpp"
#include "semrel/text.hpp"

using namespace semrel;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::kIo;
}

using Vec = std::vector<double>;

Vec random_with_ties(Rng& rng, std::size_t n) {
  Vec v(n);
  const auto levels = 1 + rng.below(6);
  for (auto& x : v) x = static_cast<double>(rng.below(levels)) * 0.25 - 0.5;
  return v;
}

std::vector<std::vector<std::string>> cells(const std::string& table) {
  std::vector<std::vector<std::string>> out;
  std::istringstream in(table);
  std::string line;
  while (std::getline(in, line)) out.push_back(text::split_whitespace(line));
  return out;
}

EvalResult result(const std::string& model, const char* lang, double score) {
  return EvalResult{model, LanguageCode(lang), Split::kTest, score, 10};
}

}  // namespace

TEST_CASE("average ranks") {
  CHECK(average_ranks(Vec{10, 30, 20}) == Vec{1, 3, 2});
  CHECK(average_ranks(Vec{1, 2, 2, 3}) == Vec{1, 2.5, 2.5, 4});
  CHECK(average_ranks(Vec{5, 5, 5}) == Vec{2, 2, 2});
  CHECK(average_ranks(Vec{}).empty());
  CHECK(code_of([] { average_ranks(Vec{1, NAN}); }) == ErrorCode::kNonFiniteScore);
  Rng rng(1);
  for (int t = 0; t < 200; ++t) {
    const auto v = random_with_ties(rng, 1 + rng.below(12));
    const auto r = average_ranks(v);
    CHECK(r == oracle::ranks(v));
    double sum = 0;
    for (double x : r) sum += x;
    CHECK(sum == doctest::Approx(v.size() * (v.size() + 1) / 2.0));
  }
}

TEST_CASE("spearman examples") {
  CHECK(spearman(Vec{1, 2, 3}, Vec{10, 20, 30}) == 1.0);
  CHECK(spearman(Vec{1, 2, 3}, Vec{3, 2, 1}) == -1.0);
  CHECK(spearman(Vec{1, 2, 2, 3}, Vec{1, 2, 3, 4}) == doctest::Approx(4.5 / std::sqrt(22.5)).epsilon(1e-15));
  CHECK(std::abs(spearman(Vec{1, 2, 2, 3}, Vec{1, 2, 3, 4}) - 0.948683) < 1e-6);
  CHECK(code_of([] { spearman(Vec{1, 1, 1}, Vec{1, 2, 3}); }) == ErrorCode::kUndefinedSpearman);
  CHECK(code_of([] { spearman(Vec{1, 2, 3}, Vec{4, 4, 4}); }) == ErrorCode::kUndefinedSpearman);
  CHECK(code_of([] { spearman(Vec{1, 2}, Vec{1, 2, 3}); }) == ErrorCode::kLengthMismatch);
  CHECK(code_of([] { spearman(Vec{1}, Vec{1}); }) == ErrorCode::kLengthMismatch);
  CHECK(spearman_or_lowest(Vec{1, 1}, Vec{1, 2}) == -std::numeric_limits<double>::infinity());
  CHECK(code_of([] { spearman_or_lowest(Vec{1}, Vec{1, 2}); }) == ErrorCode::kLengthMismatch);
}

TEST_CASE("spearman agrees with rank-then-Pearson by enumeration") {
  Rng rng(2);
  int compared = 0;
  double worst = 0.0;
  while (compared < 1000) {
    const std::size_t n = 2 + rng.below(11);
    const auto a = random_with_ties(rng, n);
    const auto b = random_with_ties(rng, n);
    const auto ra = oracle::ranks(a), rb = oracle::ranks(b);
    if (std::adjacent_find(ra.begin(), ra.end(), std::not_equal_to<>()) == ra.end()) continue;
    if (std::adjacent_find(rb.begin(), rb.end(), std::not_equal_to<>()) == rb.end()) continue;
    worst = std::max(worst, std::abs(spearman(a, b) - oracle::spearman(a, b)));
    ++compared;
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("spearman properties") {
  Rng rng(3);
  for (int t = 0; t < 300; ++t) {
    const std::size_t n = 3 + rng.below(20);
    Vec x(n), y(n);
    for (auto& v : x) v = rng.uniform(-1, 1);
    for (auto& v : y) v = rng.uniform(-1, 1);
    const double rho = spearman(x, y);
    CHECK(rho >= -1.0);
    CHECK(rho <= 1.0);
    CHECK(spearman(y, x) == doctest::Approx(rho).epsilon(1e-14));
    Vec affine(n), cubic(n), neg(n);
    for (std::size_t i = 0; i < n; ++i) {
      affine[i] = 3.0 * x[i] + 7.0;
      cubic[i] = x[i] * x[i] * x[i];
      neg[i] = -x[i];
    }
    CHECK(spearman(affine, y) == doctest::Approx(rho).epsilon(1e-14));
    CHECK(spearman(cubic, y) == doctest::Approx(rho).epsilon(1e-14));
    CHECK(spearman(x, neg) == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(spearman(x, x) == doctest::Approx(1.0).epsilon(1e-14));
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(std::span(perm));
    Vec px(n), py(n);
    for (std::size_t i = 0; i < n; ++i) {
      px[i] = x[perm[i]];
      py[i] = y[perm[i]];
    }
    CHECK(spearman(px, py) == doctest::Approx(rho).epsilon(1e-14));
  }
}

TEST_CASE("table score formatting") {
  CHECK(format_table_score(0.8125) == ".8125");
  CHECK(format_table_score(-0.05) == "-.0500");
  CHECK(format_table_score(1.0) == "1.0000");
  CHECK(format_table_score(-0.00001) == ".0000");
}

TEST_CASE("report table") {
  const Baseline base{{LanguageCode("eng"), 0.83}, {LanguageCode("esp"), 0.70}};
  const std::vector<EvalResult> rs{result("TranSem", "eng", 0.8125), result("TranSem", "esp", 0.75)};
  const auto t = cells(report_table(rs, base));
  REQUIRE(t.size() == 3);
  CHECK(t[0] == std::vector<std::string>{"model", "eng", "esp", "avg"});
  CHECK(t[1] == std::vector<std::string>{"baseline", ".8300", ".7000", ".7650"});
  // .8125 is below .8300 and carries no marker; .7500 beats .7000
  CHECK(t[2] == std::vector<std::string>{"TranSem", ".8125", ".7500*", ".7812"});

  CHECK(cells(report_table({}, base)) == std::vector<std::vector<std::string>>{{"model", "avg"}});

  const std::vector<EvalResult> one{result("M", "kin", 0.6)};
  const auto single = cells(report_table(one, {}));
  REQUIRE(single.size() == 2);
  CHECK(single[1] == std::vector<std::string>{"M", ".6000", ".6000"});

  // undefined scores are missing cells and leave the average alone
  const std::vector<EvalResult> gap{result("M", "eng", 0.5), result("M", "hau", NAN), result("N", "hau", 0.1)};
  const auto g = cells(report_table(gap, {}));
  CHECK(g[1] == std::vector<std::string>{"M", ".5000", "-", ".5000"});
  CHECK(g[2] == std::vector<std::string>{"N", "-", ".1000", ".1000"});

  // rows keep first-appearance order; columns are sorted
  const std::vector<EvalResult> order{result("Z", "tel", 0.1), result("A", "amh", 0.2)};
  const auto o = cells(report_table(order, {}));
  CHECK(o[0] == std::vector<std::string>{"model", "amh", "tel", "avg"});
  CHECK(o[1][0] == "Z");
  CHECK(o[2][0] == "A");
}

TEST_CASE("report csv") {
  const Baseline base{{LanguageCode("eng"), 0.83}};
  const std::vector<EvalResult> rs{result("TranSem", "eng", 0.9), result("TranSem", "esp", 0.5),
                                   result("X", "eng", NAN)};
  CHECK(report_csv(rs, base) ==
        "lang,model,score,baseline,beats_baseline\n"
        "eng,TranSem,0.900000,0.830000,true\n"
        "esp,TranSem,0.500000,,false\n"
        "eng,X,,0.830000,false\n");
}
