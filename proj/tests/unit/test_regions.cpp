#include <random>

#include "doctest.h"
#include "l2sm/density.hpp"
#include "l2sm/regions.hpp"
#include "support/oracles.hpp"

using namespace l2sm;

namespace {

RegionPartition from_densities(const std::vector<double>& d) {
  RegionPartition p;
  p.K = 1;
  for (std::size_t i = 0; i < d.size(); ++i) {
    Region r;
    r.col = static_cast<int>(i);
    r.rect = {static_cast<int>(i), 0, 1, 1};
    r.area = 1;
    r.mean_density = d[i];
    p.regions.push_back(r);
  }
  return p;
}

std::vector<int> group_sizes(const std::vector<int>& labels, int G) {
  std::vector<int> n(G, 0);
  for (int l : labels) ++n[l];
  return n;
}

}  // namespace

TEST_SUITE("regions") {

TEST_CASE("uniform grid splits into equal regions") {
  const DensityGrid g(4, 4, std::vector<double>(16, 1.0));
  const auto p = divide(g, 2);
  REQUIRE(p.regions.size() == 4);
  for (const auto& r : p.regions) {
    CHECK(r.mean_density == 1.0);
    CHECK(r.area == 4);
  }
  CHECK(p.at(1, 0).rect == CellRect{0, 2, 2, 2});
}

TEST_CASE("K = 1 covers the grid") {
  const DensityGrid g(3, 2, {1, 2, 3, 4, 5, 6});
  const auto p = divide(g, 1);
  REQUIRE(p.regions.size() == 1);
  CHECK(p.regions[0].mean_density == doctest::Approx(21.0 / 6));
}

TEST_CASE("odd extents tile exactly") {
  const auto rects = region_rects(5, 5, 2);
  REQUIRE(rects.size() == 4);
  CHECK(rects[0].width == 2);
  CHECK(rects[1].width == 3);
  CHECK(rects[2].height == 3);
  int area = 0;
  for (const auto& r : rects) area += r.area();
  CHECK(area == 25);
  CHECK_THROWS_AS(region_rects(3, 10, 4), std::invalid_argument);
}

TEST_CASE("regions sum to the grid integral") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  std::vector<double> v(37 * 23);
  for (auto& x : v) x = u(rng);
  const DensityGrid g(37, 23, v);
  for (int K : {1, 2, 3, 5, 7}) {
    double sum = 0.0;
    for (const auto& r : divide(g, K).regions) sum += integrate_rect(g, r.rect);
    CHECK(std::abs(sum - integrate(g)) < 1e-12);
  }
}

TEST_CASE("ten densities give groups of two") {
  std::vector<double> d{7, 3, 10, 1, 9, 2, 8, 5, 4, 6};
  const auto m = fit_groups(d, 5);
  CHECK(m.boundaries == std::vector<double>{2, 4, 6, 8});
  std::vector<int> labels;
  for (double x : d) labels.push_back(assign_group(x, m));
  CHECK(group_sizes(labels, 5) == std::vector<int>{2, 2, 2, 2, 2});
  CHECK(labels == oracle::sort_and_split(d, 5));
}

TEST_CASE("all-equal densities split by index") {
  const std::vector<double> d(10, 0.25);
  const auto m = fit_groups(d, 5);
  CHECK(m.boundaries == std::vector<double>{0.25, 0.25, 0.25, 0.25});
  const auto labels = split_groups(d, 5);
  CHECK(labels == std::vector<int>{0, 0, 1, 1, 2, 2, 3, 3, 4, 4});
}

TEST_CASE("one group has no boundaries") {
  const auto m = fit_groups(std::vector<double>{3, 1, 2}, 1, 1);
  CHECK(m.boundaries.empty());
  CHECK(assign_group(100.0, m) == 0);
}

TEST_CASE("assign_group edges") {
  const GroupModel m{5, 3, {2, 4, 6, 8}};
  CHECK(assign_group(-1.0, m) == 0);
  CHECK(assign_group(100.0, m) == 4);
  CHECK(assign_group(4.0, m) == 1);
  CHECK(assign_group(4.0000001, m) == 2);
  int last = 0;
  for (double x = 0; x < 10; x += 0.125) {
    const int g = assign_group(x, m);
    CHECK(g >= last);
    last = g;
  }
}

TEST_CASE("boundary ties fall to the lower group like the oracle") {
  // Sorted: 1 1 2 2 3 3 3 3 4 4. The 3s straddle two groups, so only the
  // values below them can agree with a positional split.
  const std::vector<double> d{2, 1, 3, 3, 4, 1, 3, 2, 4, 3};
  const auto m = fit_groups(d, 5);
  const auto ref = oracle::sort_and_split(d, 5);
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d[i] == 1 || d[i] == 2) CHECK(assign_group(d[i], m) == ref[i]);
  }
  CHECK(split_groups(d, 5) == ref);
}

TEST_CASE("select_dense on ten ranked regions") {
  const std::vector<double> d{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  const auto m = fit_groups(d, 5, 3);
  const auto sel = select_dense(from_densities(d), m);
  CHECK(sel.count() == 6);
  std::vector<int> centers;
  for (std::size_t i = 0; i < d.size(); ++i) {
    CHECK(sel.selected[i] == (d[i] >= 5));
    if (sel.center[i]) centers.push_back(*sel.center[i]);
  }
  CHECK(centers == std::vector<int>{0, 0, 1, 1, 2, 2});
}

TEST_CASE("select_dense extremes") {
  const GroupModel m{5, 3, {0.1, 0.2, 0.3, 0.4}};
  CHECK(select_dense(from_densities({0, 0, 0}), m).count() == 0);
  const GroupModel all{5, 5, {0.1, 0.2, 0.3, 0.4}};
  const auto sel = select_dense(from_densities({0, 0.15, 9}), all);
  CHECK(sel.count() == 3);
  CHECK(*sel.center[0] == 0);
  CHECK(*sel.center[2] == 4);
}

TEST_CASE("group model validation") {
  CHECK_THROWS_AS(fit_groups(std::vector<double>{1, 2}, 5, 6), std::invalid_argument);
  CHECK_THROWS_AS(fit_groups(std::vector<double>{}, 5), std::invalid_argument);
  GroupModel bad{3, 1, {2, 1}};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

}  // TEST_SUITE
