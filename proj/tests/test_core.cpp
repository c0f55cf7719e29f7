#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "scenefill/core.hpp"

using namespace scenefill;

namespace {

Frame frame_2x2(std::initializer_list<double> vals) {
  Frame f = Frame::zeros(2, 2, 1);
  auto it = vals.begin();
  f.ch[0](0, 0) = *it++;
  f.ch[0](0, 1) = *it++;
  f.ch[0](1, 0) = *it++;
  f.ch[0](1, 1) = *it;
  return f;
}

Frame random_frame(int w, int h, int k, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(0, 1);
  Frame f = Frame::zeros(w, h, k);
  for (auto& c : f.ch)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) c(y, x) = u(rng);
  return f;
}

}  // namespace

TEST_CASE("bilinear midpoint of 0 and 1") {
  const Frame f = frame_2x2({0, 1, 0, 1});
  CHECK(sample_bilinear(f, {0.5, 0.0})[0] == doctest::Approx(0.5));
}

TEST_CASE("bilinear at pixel centers is exact") {
  const Frame f = random_frame(7, 5, 3, 42);
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 7; ++x) {
      const auto v = sample_bilinear(f, {double(x), double(y)});
      for (int c = 0; c < 3; ++c) CHECK(v[c] == f.ch[c](y, x));
    }
}

TEST_CASE("bilinear hand-computed interior point") {
  // row-major values [[0,1],[2,3]], p=(0.25,0.75)
  const Frame f = frame_2x2({0, 1, 2, 3});
  CHECK(sample_bilinear(f, {0.25, 0.75})[0] == doctest::Approx(1.75));
}

TEST_CASE("bilinear border clamp and out-of-domain error") {
  const Frame f = frame_2x2({0, 1, 2, 3});
  CHECK_NOTHROW(sample_bilinear(f, {-0.5, -0.5}));
  CHECK_THROWS_AS(sample_bilinear(f, {-0.6, 0.0}), SamplingError);
  CHECK_THROWS_AS(sample_bilinear(f, {0.0, 1.6}), SamplingError);
}

TEST_CASE("nearest preserves the value set and ties round down") {
  Frame f = Frame::zeros(2, 1, 1);
  f.ch[0](0, 1) = 1.0;
  CHECK(sample_nearest(f, {0.49, 0.0})[0] == 0.0);
  CHECK(sample_nearest(f, {0.5, 0.0})[0] == 0.0);  // tie toward smaller index
  CHECK(sample_nearest(f, {0.51, 0.0})[0] == 1.0);

  const Frame g = random_frame(6, 6, 1, 7);
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-0.5, 5.5);
  for (int i = 0; i < 200; ++i) {
    const double v = sample_nearest(g, {u(rng), u(rng)})[0];
    bool found = false;
    for (int y = 0; y < 6 && !found; ++y)
      for (int x = 0; x < 6 && !found; ++x) found = g.ch[0](y, x) == v;
    CHECK(found);
  }
}

TEST_CASE("nearest at pixel centers is exact") {
  const Frame f = random_frame(4, 4, 1, 9);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x)
      CHECK(sample_nearest(f, {double(x), double(y)})[0] == f.ch[0](y, x));
}

TEST_CASE("bilinear is Lipschitz in the sample point") {
  const Frame f = random_frame(16, 16, 1, 11);
  double lip = 0;
  for (int y = 0; y < 15; ++y)
    for (int x = 0; x < 15; ++x) {
      lip = std::max(lip, std::abs(f.ch[0](y, x + 1) - f.ch[0](y, x)));
      lip = std::max(lip, std::abs(f.ch[0](y + 1, x) - f.ch[0](y, x)));
    }
  std::mt19937 rng(13);
  std::uniform_real_distribution<double> u(0, 14.9);
  std::uniform_real_distribution<double> d(-0.05, 0.05);
  for (int i = 0; i < 500; ++i) {
    const double x = u(rng), y = u(rng), dx = d(rng), dy = d(rng);
    const double a = sample_bilinear(f.ch[0], x, y);
    const double b = sample_bilinear(f.ch[0], x + dx, y + dy);
    CHECK(std::abs(a - b) <= 2 * lip * (std::abs(dx) + std::abs(dy)) + 1e-12);
  }
}

TEST_CASE("rect_union basics") {
  DomainRect a{{0, 0}, 10, 10};
  DomainRect b{{5, 5}, 10, 10};
  std::vector<DomainRect> one{a};
  CHECK(rect_union(one) == a);

  std::vector<DomainRect> two{a, b};
  const DomainRect u = rect_union(two);
  CHECK(u.origin == Vec2i(0, 0));
  CHECK(u.width == 15);
  CHECK(u.height == 15);

  DomainRect c{{-3, 2}, 4, 4};
  DomainRect d{{0, 0}, 2, 2};
  std::vector<DomainRect> cd{c, d};
  const DomainRect u2 = rect_union(cd);
  CHECK(u2.origin == Vec2i(-3, 0));
  CHECK(u2.width == 5);  // x spans [-3, 2)
  CHECK(u2.height == 6);

  std::vector<DomainRect> none;
  CHECK_THROWS_AS(rect_union(none), std::invalid_argument);
}

TEST_CASE("rect_union is associative and commutative") {
  std::mt19937 rng(5);
  std::uniform_int_distribution<int> o(-20, 20), s(1, 15);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<DomainRect> rects;
    for (int i = 0; i < 4; ++i)
      rects.push_back({{o(rng), o(rng)}, s(rng), s(rng)});
    const DomainRect direct = rect_union(rects);

    std::vector<DomainRect> shuffled = rects;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK(rect_union(shuffled) == direct);

    // left fold
    DomainRect acc = rects[0];
    for (size_t i = 1; i < rects.size(); ++i) {
      std::vector<DomainRect> pair{acc, rects[i]};
      acc = rect_union(pair);
    }
    CHECK(acc == direct);
  }
}

TEST_CASE("identity warp maps pixel centers to themselves") {
  const WarpField w = WarpField::identity(5, 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 5; ++x) {
      CHECK(w.map_x(y, x) == double(x));
      CHECK(w.map_y(y, x) == double(y));
      CHECK(w.valid(y, x));
    }
}
