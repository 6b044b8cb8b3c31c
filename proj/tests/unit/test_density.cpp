#include <cmath>
#include <random>

#include "doctest.h"
#include "l2sm/density.hpp"
#include "support/oracles.hpp"

using namespace l2sm;

TEST_SUITE("density") {

TEST_CASE("adaptive sigma from nearest neighbours") {
  const KernelSpec spec;
  AnnotatedImage one{100, 100, {{50, 50}}};
  CHECK(adaptive_sigmas(one, spec) == std::vector<double>{15.0});

  AnnotatedImage square{100, 100, {{10, 10}, {20, 10}, {10, 20}, {20, 20}}};
  const double expected = 0.3 * (10 + 10 + 10 * std::sqrt(2.0)) / 3;
  for (double s : adaptive_sigmas(square, spec)) CHECK(s == doctest::Approx(expected).epsilon(1e-12));

  AnnotatedImage pair{100, 100, {{10, 10}, {30, 10}}};
  for (double s : adaptive_sigmas(pair, spec)) CHECK(s == doctest::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("bucketed neighbour search agrees with brute force") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 200.0);
  AnnotatedImage img{200, 200, {}};
  for (int i = 0; i < 400; ++i) img.heads.push_back({u(rng), u(rng)});
  const KernelSpec spec;
  const auto sig = adaptive_sigmas(img, spec);
  for (std::size_t i = 0; i < img.heads.size(); ++i) {
    std::vector<double> d;
    for (std::size_t j = 0; j < img.heads.size(); ++j) {
      if (j != i) d.push_back(std::hypot(img.heads[j].x - img.heads[i].x, img.heads[j].y - img.heads[i].y));
    }
    std::sort(d.begin(), d.end());
    CHECK(sig[i] == doctest::Approx(0.3 * (d[0] + d[1] + d[2]) / 3).epsilon(1e-12));
  }
}

TEST_CASE("empty scene renders to zeros") {
  AnnotatedImage img{12, 9, {}};
  const auto g = render_density(img, {}, KernelSpec{});
  CHECK(g.width() == 12);
  CHECK(integrate(g) == 0.0);
}

TEST_CASE("single head has unit mass") {
  AnnotatedImage img{61, 61, {{30.5, 30.5}}};
  const std::vector<double> sig{2.0};
  CHECK(std::abs(integrate(render_density(img, sig, KernelSpec{})) - 1.0) < 1e-9);
}

TEST_CASE("kernel matches full-grid oracle") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> pos(0.0, 30.0), sd(0.3, 6.0);
  for (int t = 0; t < 200; ++t) {
    const double x = pos(rng), y = pos(rng), s = sd(rng);
    DensityGrid g(30, 30);
    deposit_kernel(g, x, y, s, 1.0, 4.0);
    const auto ref = oracle::kernel(30, 30, x, y, s, 4.0);
    for (std::size_t i = 0; i < ref.size(); ++i) REQUIRE(std::abs(g.values()[i] - ref[i]) < 1e-12);
  }
}

TEST_CASE("peak matches the windowed untruncated kernel") {
  AnnotatedImage img{11, 11, {{5.0, 5.0}}};
  const std::vector<double> sig{1.0};
  const auto g = render_density(img, sig, KernelSpec{});
  const auto ref = oracle::window_kernel(11, 11, 5.0, 5.0, 1.0);
  const double ref_peak = *std::max_element(ref.begin(), ref.end());
  // The 4 sigma disc drops only far-tail mass relative to the 10 sigma window.
  CHECK(g.max_value() == doctest::Approx(ref_peak).epsilon(1e-3));
  CHECK(g.at(4, 4) == g.max_value());
  CHECK(g.at(5, 5) == doctest::Approx(g.at(4, 4)).epsilon(1e-14));
}

TEST_CASE("border heads keep unit mass") {
  AnnotatedImage img{20, 20, {{0.1, 0.2}, {19.9, 19.95}, {10, 0.01}}};
  const std::vector<double> sig{3.0, 5.0, 15.0};
  CHECK(std::abs(integrate(render_density(img, sig, KernelSpec{})) - 3.0) < 1e-12);
}

TEST_CASE("tiny sigma falls back to the nearest cell") {
  const auto cells = kernel_footprint(10, 10, 3.2, 7.9, 1e-3, 4.0);
  REQUIRE(cells.size() == 1);
  CHECK(cells[0].x == 3);
  CHECK(cells[0].y == 7);
  CHECK(cells[0].weight == 1.0);
}

TEST_CASE("integer shift moves the grid exactly") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> pos(20.0, 40.0);
  AnnotatedImage a{80, 80, {}}, b{80, 80, {}};
  // Dyadic coordinates so that adding the offset is exact.
  const auto snap = [](double v) { return std::round(v * 1024) / 1024; };
  for (int i = 0; i < 15; ++i) {
    const double x = snap(pos(rng)), y = snap(pos(rng));
    a.heads.push_back({x, y});
    b.heads.push_back({x + 7, y + 11});
  }
  const std::vector<double> sig(15, 2.5);
  const auto ga = render_density(a, sig, KernelSpec{});
  const auto gb = render_density(b, sig, KernelSpec{});
  for (int y = 0; y + 11 < 80; ++y) {
    for (int x = 0; x + 7 < 80; ++x) REQUIRE(ga.at(x, y) == gb.at(x + 7, y + 11));
  }
}

TEST_CASE("wider kernels lower the peak") {
  AnnotatedImage img{101, 101, {{50.3, 49.8}}};
  double last = 2.0;
  for (double s : {0.5, 1.0, 2.0, 4.0, 8.0}) {
    const std::vector<double> sig{s};
    const auto g = render_density(img, sig, KernelSpec{});
    CHECK(g.max_value() < last);
    CHECK(std::abs(integrate(g) - 1.0) < 1e-12);
    last = g.max_value();
  }
}

TEST_CASE("integrate and integrate_rect") {
  const DensityGrid g(2, 2, {1, 2, 3, 4});
  CHECK(integrate(g) == 10);
  CHECK(integrate(DensityGrid(3, 3)) == 0);
  CHECK(integrate_rect(g, {0, 0, 1, 1}) == 1);
  CHECK(integrate_rect(g, {0, 0, 2, 2}) == integrate(g));
  CHECK_THROWS_AS(integrate_rect(g, {2, 2, 1, 1}), std::out_of_range);
  CHECK_THROWS_AS(integrate_rect(g, {0, 0, 0, 1}), std::out_of_range);
}

TEST_CASE("kernel spec validation") {
  KernelSpec s;
  s.beta = 0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = {};
  s.k_neighbors = 0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  AnnotatedImage img{5, 5, {{1, 1}}};
  CHECK_THROWS_AS(render_density(img, std::vector<double>{}, KernelSpec{}), std::invalid_argument);
}

}  // TEST_SUITE
