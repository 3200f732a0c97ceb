#include <doctest.h>

#include <cmath>

#include "bsel/correlation.hpp"
#include "bsel/errors.hpp"
#include "bsel/rng.hpp"
#include "test_util.hpp"

using namespace bsel;
using bsel_test::make_table;

namespace {

// Independent oracle: Pearson computed directly on the rank vectors with a
// separate accumulation path.
double rank_pearson_oracle(const std::vector<double>& x, const std::vector<double>& y) {
  auto rx = average_ranks(x);
  auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += rx[i];
    sy += ry[i];
    sxx += rx[i] * rx[i];
    syy += ry[i] * ry[i];
    sxy += rx[i] * ry[i];
  }
  double num = n * sxy - sx * sy;
  double den = std::sqrt(n * sxx - sx * sx) * std::sqrt(n * syy - sy * sy);
  return num / den;
}

std::vector<double> random_vector_with_ties(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = std::floor(rng.uniform01() * 8);  // coarse grid forces ties
  return v;
}

}  // namespace

TEST_CASE("average_ranks handles ties with the mean of spanned ranks") {
  CHECK(average_ranks({10, 20, 30}) == std::vector<double>{1, 2, 3});
  CHECK(average_ranks({5, 5}) == std::vector<double>{1.5, 1.5});
  CHECK(average_ranks({1, 2, 2, 4}) == std::vector<double>{1, 2.5, 2.5, 4});
  CHECK_THROWS_AS(average_ranks({}), Error);
  // Rank sum is always n(n+1)/2.
  Rng rng(7);
  for (int t = 0; t < 20; ++t) {
    auto v = random_vector_with_ties(rng, 30);
    auto r = average_ranks(v);
    double sum = 0;
    for (double x : r) sum += x;
    CHECK(sum == doctest::Approx(30.0 * 31.0 / 2.0));
  }
}

TEST_CASE("spearman worked examples") {
  CHECK(spearman({1, 2, 3, 4}, {1, 2, 3, 4}) == doctest::Approx(1.0));
  CHECK(spearman({1, 2, 3}, {6, 4, 2}) == doctest::Approx(-1.0));
  CHECK(spearman({1, 2, 2, 4}, {1, 3, 2, 4}) == doctest::Approx(4.5 / std::sqrt(22.5)).epsilon(1e-4));
  CHECK_THROWS_AS(spearman({1, 2}, {1, 2, 3}), Error);
}

TEST_CASE("spearman demotes constant inputs to 0 with a warning") {
  bool warned = false;
  CHECK(spearman({3, 3, 3}, {1, 2, 3}, &warned) == 0.0);
  CHECK(warned);
  warned = false;
  CHECK(spearman({3, 3, 3}, {5, 5, 5}, &warned) == 0.0);
  CHECK(warned);
  warned = true;
  spearman({1, 2, 3}, {2, 1, 3}, &warned);
  CHECK_FALSE(warned);
}

TEST_CASE("spearman is symmetric and invariant under strictly increasing transforms") {
  Rng rng(11);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> x = random_vector_with_ties(rng, 40);
    std::vector<double> y = random_vector_with_ties(rng, 40);
    double base = spearman(x, y);
    CHECK(spearman(y, x) == doctest::Approx(base).epsilon(1e-12));
    std::vector<double> ex(x.size()), lx(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      ex[i] = std::exp(x[i]);
      lx[i] = 2.0 * x[i] + 7.0;
    }
    CHECK(spearman(ex, y) == doctest::Approx(base).epsilon(1e-12));
    CHECK(spearman(lx, y) == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("spearman matches the rank-Pearson oracle on 100 tied random vectors") {
  Rng rng(23);
  for (int t = 0; t < 100; ++t) {
    auto x = random_vector_with_ties(rng, 25);
    auto y = random_vector_with_ties(rng, 25);
    bool warned = false;
    double got = spearman(x, y, &warned);
    if (warned) continue;
    CHECK(got == doctest::Approx(rank_pearson_oracle(x, y)).epsilon(1e-12));
  }
}

TEST_CASE("block_correlation max-pools absolute correlations") {
  SUBCASE("negated column gives 1.0") {
    auto t = make_table({"f1", "f2"}, {{1, -1}, {2, -2}, {3, -3}, {4, -4}}, {0, 1, 0, 1},
                        {"a", "b", "c", "d"});
    PreliminaryBlocks blocks{{{"A", {"f1"}}, {"B", {"f2"}}}};
    auto S = block_correlation(t, blocks);
    CHECK(S.S[0][1] == doctest::Approx(1.0));
    CHECK(S.S[0][0] == 1.0);
    CHECK(S.S[1][1] == 1.0);
  }
  SUBCASE("max over cross-block pairs") {
    // f2 tracks f3 closely, f1 does not.
    Rng rng(3);
    std::size_t n = 200;
    std::vector<std::vector<double>> rows(n, std::vector<double>(3));
    std::vector<int> labels(n);
    std::vector<std::string> gids(n);
    for (std::size_t i = 0; i < n; ++i) {
      double z = rng.normal();
      rows[i][0] = rng.normal();
      rows[i][1] = z + 0.3 * rng.normal();
      rows[i][2] = z;
      labels[i] = i % 2;
      gids[i] = "g" + std::to_string(i);
    }
    auto t = make_table({"f1", "f2", "f3"}, rows, labels, gids);
    PreliminaryBlocks blocks{{{"A", {"f1", "f2"}}, {"B", {"f3"}}}};
    auto S = block_correlation(t, blocks);
    double r13 = std::abs(spearman(t.values.column(0), t.values.column(2)));
    double r23 = std::abs(spearman(t.values.column(1), t.values.column(2)));
    CHECK(S.S[0][1] == doctest::Approx(std::max(r13, r23)));
    CHECK(r23 > r13);
  }
  SUBCASE("independent noise stays low at 1000 rows") {
    Rng rng(17);
    std::size_t n = 1000;
    std::vector<std::vector<double>> rows(n, std::vector<double>(2));
    std::vector<int> labels(n);
    std::vector<std::string> gids(n);
    for (std::size_t i = 0; i < n; ++i) {
      rows[i][0] = rng.uniform01();
      rows[i][1] = rng.uniform01();
      labels[i] = i % 2;
      gids[i] = "g" + std::to_string(i);
    }
    auto t = make_table({"f1", "f2"}, rows, labels, gids);
    PreliminaryBlocks blocks{{{"A", {"f1"}}, {"B", {"f2"}}}};
    auto S = block_correlation(t, blocks);
    CHECK(S.S[0][1] < 0.15);
  }
}

TEST_CASE("block_correlation is permutation-equivariant") {
  Rng rng(5);
  std::size_t n = 60;
  std::vector<std::vector<double>> rows(n, std::vector<double>(3));
  std::vector<int> labels(n);
  std::vector<std::string> gids(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& v : rows[i]) v = rng.normal();
    labels[i] = i % 2;
    gids[i] = "g" + std::to_string(i);
  }
  auto t = make_table({"f1", "f2", "f3"}, rows, labels, gids);
  PreliminaryBlocks abc{{{"A", {"f1"}}, {"B", {"f2"}}, {"C", {"f3"}}}};
  PreliminaryBlocks cab{{{"C", {"f3"}}, {"A", {"f1"}}, {"B", {"f2"}}}};
  auto S1 = block_correlation(t, abc);
  auto S2 = block_correlation(t, cab);
  // S2 rows/cols are S1's permuted by (C,A,B).
  CHECK(S2.S[1][2] == doctest::Approx(S1.S[0][1]));
  CHECK(S2.S[0][1] == doctest::Approx(S1.S[2][0]));
  CHECK(S2.S[0][2] == doctest::Approx(S1.S[2][1]));
}
