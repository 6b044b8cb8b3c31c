#include <cmath>
#include <limits>

#include "doctest.h"
#include "l2sm/scene.hpp"
#include "support/oracles.hpp"

using namespace l2sm;

TEST_SUITE("scene") {

TEST_CASE("zero intensity yields no heads") {
  SyntheticSceneSpec spec;
  spec.width = 50;
  spec.height = 40;
  spec.intensity = Intensity::constant(0.0);
  spec.seed = 7;
  const auto img = generate_scene(spec);
  CHECK(img.heads.empty());
  CHECK(img.width == 50);
  CHECK(img.height == 40);
}

TEST_CASE("same spec and seed gives identical heads") {
  SyntheticSceneSpec spec;
  spec.width = 80;
  spec.height = 60;
  spec.intensity = Intensity::tiles(2, 2, {0.01, 0.05, 0.1, 0.2});
  spec.seed = 42;
  const auto a = generate_scene(spec);
  const auto b = generate_scene(spec);
  REQUIRE(a.heads.size() == b.heads.size());
  for (std::size_t i = 0; i < a.heads.size(); ++i) {
    CHECK(a.heads[i].x == b.heads[i].x);
    CHECK(a.heads[i].y == b.heads[i].y);
  }
  spec.seed = 43;
  CHECK_FALSE(generate_scene(spec) == a);
}

TEST_CASE("mean count over many seeds approaches the intensity integral") {
  SyntheticSceneSpec spec;
  spec.width = 100;
  spec.height = 100;
  spec.intensity = Intensity::constant(0.01);
  CHECK(expected_count(spec) == doctest::Approx(100.0));
  std::vector<double> counts;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    spec.seed = seed;
    counts.push_back(static_cast<double>(generate_scene(spec).count()));
  }
  CHECK(std::abs(oracle::mean(counts) - 100.0) < 5.0);
}

TEST_CASE("gradient intensity integrates to its mean level") {
  SyntheticSceneSpec spec;
  spec.width = 64;
  spec.height = 32;
  spec.intensity = Intensity::linear(0.0, 0.2, Intensity::Axis::x);
  CHECK(expected_count(spec) == doctest::Approx(0.1 * 64 * 32).epsilon(1e-12));
  spec.intensity = Intensity::linear(0.3, 0.1, Intensity::Axis::y);
  CHECK(expected_count(spec) == doctest::Approx(0.2 * 64 * 32).epsilon(1e-12));
}

TEST_CASE("generated heads are valid") {
  SyntheticSceneSpec spec;
  spec.width = 33;
  spec.height = 17;
  spec.intensity = Intensity::tiles(3, 2, {0.5, 1.0, 2.0, 0.1, 0.0, 3.0});
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    spec.seed = seed;
    CHECK(validate_scene(generate_scene(spec)).empty());
  }
}

TEST_CASE("validate_scene reports each violation") {
  AnnotatedImage img{10, 10, {{1.0, 1.0}, {9.5, 0.0}}};
  CHECK(validate_scene(img).empty());

  img.heads.push_back({10.0, 3.0});
  auto v = validate_scene(img);
  REQUIRE(v.size() == 1);
  CHECK(v[0].kind == SceneViolation::Kind::out_of_bounds);
  CHECK(v[0].head == 2);

  img.heads.back() = {std::numeric_limits<double>::quiet_NaN(), 3.0};
  v = validate_scene(img);
  REQUIRE(v.size() == 1);
  CHECK(v[0].kind == SceneViolation::Kind::non_finite);

  AnnotatedImage empty{0, 5, {}};
  v = validate_scene(empty);
  REQUIRE(v.size() == 1);
  CHECK(v[0].kind == SceneViolation::Kind::bad_extent);
}

TEST_CASE("split_extent spreads the remainder over trailing spans") {
  CHECK(split_extent(10, 3) == std::vector<int>{0, 3, 6, 10});
  CHECK(split_extent(5, 2) == std::vector<int>{0, 2, 5});
  CHECK(split_extent(8, 4) == std::vector<int>{0, 2, 4, 6, 8});
  CHECK_THROWS(split_extent(3, 4));
}

TEST_CASE("density grid rejects bad values") {
  CHECK_THROWS(DensityGrid(2, 1, {1.0, -1.0}));
  CHECK_THROWS(DensityGrid(2, 1, {1.0, std::numeric_limits<double>::infinity()}));
  CHECK_THROWS(DensityGrid(2, 2, {1.0}));
  const DensityGrid g(2, 2, {1, 2, 3, 4});
  CHECK(g.at(1, 0) == 2);
  CHECK(g.at(0, 1) == 3);
  CHECK(g.max_value() == 4);
}

}  // TEST_SUITE
