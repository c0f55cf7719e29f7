#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "scenefill/metrics.hpp"
#include "scenefill/synth.hpp"

using namespace scenefill;

namespace {

Frame noisy(const Frame& f, double sigma, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> g(0, sigma);
  Frame out = f;
  for (auto& c : out.ch)
    for (int y = 0; y < f.height; ++y)
      for (int x = 0; x < f.width; ++x) c(y, x) += g(rng);
  return out;
}

}  // namespace

TEST_CASE("psnr of identical frames is infinite") {
  const Frame f = make_texture(32, 32, 1, 70);
  CHECK(std::isinf(psnr(f, f)));
}

TEST_CASE("psnr of a constant 0.1 offset is 20 dB") {
  const Frame a = Frame::constant(32, 32, 1, 0.4);
  const Frame b = Frame::constant(32, 32, 1, 0.5);
  CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-9));
}

TEST_CASE("psnr matches a hand-computed MSE") {
  // Half the pixels differ by 0.1, half by 0: MSE = 0.005 -> 23.0103 dB.
  Frame a = Frame::constant(16, 16, 1, 0.2);
  Frame b = a;
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 8; ++x) b.ch[0](y, x) += 0.1;
  CHECK(psnr(a, b) == doctest::Approx(10 * std::log10(1.0 / 0.005)));

  // MSE 0.0025 -> 26.02 dB via a uniform 0.05 offset.
  Frame c = a;
  for (auto& ch : c.ch) ch += 0.05;
  CHECK(psnr(a, c) == doctest::Approx(26.0206).epsilon(1e-4));
}

TEST_CASE("psnr is symmetric and respects the region argument") {
  const Frame a = make_texture(32, 32, 2, 71);
  const Frame b = noisy(a, 0.05, 7);
  CHECK(psnr(a, b) == psnr(b, a));

  Mask region = Mask::empty(32, 32);
  for (int y = 4; y < 12; ++y)
    for (int x = 4; x < 12; ++x) region.data(y, x) = true;
  Frame c = a;
  c.ch[0](5, 5) += 0.3;       // inside region
  c.ch[0](30, 30) += 0.9;     // outside region: must not count
  double mse = 0.3 * 0.3 / (64.0 * 2);
  CHECK(psnr(a, c, region) == doctest::Approx(10 * std::log10(1.0 / mse)));

  Mask none = Mask::empty(32, 32);
  CHECK_THROWS_AS(psnr(a, c, none), std::invalid_argument);
}

TEST_CASE("ssim of identical frames is 1") {
  const Frame f = make_texture(48, 48, 1, 72);
  CHECK(ssim(f, f) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ssim of far-apart constants is near zero") {
  const Frame a = Frame::constant(48, 48, 1, 0.0);
  const Frame b = Frame::constant(48, 48, 1, 1.0);
  CHECK(ssim(a, b) < 0.01);
  CHECK(ssim(a, b) >= 0.0);
}

TEST_CASE("ssim of independent noise is near zero") {
  std::mt19937 rng(73);
  std::uniform_real_distribution<double> u(0, 1);
  double worst = 0;
  for (int trial = 0; trial < 20; ++trial) {
    Frame a = Frame::zeros(64, 64, 1), b = a;
    for (int y = 0; y < 64; ++y)
      for (int x = 0; x < 64; ++x) {
        a.ch[0](y, x) = u(rng);
        b.ch[0](y, x) = u(rng);
      }
    worst = std::max(worst, std::abs(ssim(a, b)));
  }
  CHECK(worst < 0.1);
}

TEST_CASE("ssim is symmetric") {
  const Frame a = make_texture(48, 48, 1, 74);
  const Frame b = noisy(a, 0.1, 9);
  CHECK(std::abs(ssim(a, b) - ssim(b, a)) < 1e-9);
}

TEST_CASE("temporal consistency on a perfectly static result") {
  const Frame f = make_texture(48, 48, 1, 75);
  std::vector<Frame> frames(3, f);
  std::vector<Mask> masks;
  for (int i = 0; i < 3; ++i) {
    Mask m = Mask::empty(48, 48);
    for (int y = 10; y < 30; ++y)
      for (int x = 10; x < 30; ++x) m.data(y, x) = true;
    masks.push_back(m);
  }
  std::vector<WarpField> flows(2, WarpField::identity(48, 48));
  const auto t = temporal_consistency(frames, masks, flows);
  REQUIRE(t.has_value());
  CHECK(t->tpsnr == doctest::Approx(kPsnrCap));
  CHECK(t->tssim == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("temporal consistency matches the additive-noise prediction") {
  // Independent per-frame noise sigma: difference variance 2 sigma^2.
  const double sigma = 0.03;
  const Frame base = make_texture(96, 96, 1, 76);
  std::vector<Frame> frames;
  for (int i = 0; i < 6; ++i) frames.push_back(noisy(base, sigma, 100 + i));
  std::vector<Mask> masks;
  for (int i = 0; i < 6; ++i) {
    Mask m = Mask::empty(96, 96);
    for (int y = 16; y < 80; ++y)
      for (int x = 16; x < 80; ++x) m.data(y, x) = true;
    masks.push_back(m);
  }
  std::vector<WarpField> flows(5, WarpField::identity(96, 96));
  const auto t = temporal_consistency(frames, masks, flows);
  REQUIRE(t.has_value());
  const double expected = 10 * std::log10(1.0 / (2 * sigma * sigma));
  CHECK(t->tpsnr == doctest::Approx(expected).epsilon(0.04));
}

TEST_CASE("temporal consistency absent without pairs or masks") {
  const Frame f = make_texture(32, 32, 1, 77);
  std::vector<Frame> one{f};
  std::vector<Mask> none_mask{Mask::empty(32, 32)};
  std::vector<WarpField> no_flow;
  CHECK(!temporal_consistency(one, none_mask, no_flow).has_value());

  std::vector<Frame> two(2, f);
  std::vector<Mask> empty2(2, Mask::empty(32, 32));
  std::vector<WarpField> flows(1, WarpField::identity(32, 32));
  CHECK(!temporal_consistency(two, empty2, flows).has_value());
}

TEST_CASE("temporal consistency ignores appended empty-mask frames") {
  const Frame base = make_texture(64, 64, 1, 78);
  std::vector<Frame> frames;
  for (int i = 0; i < 4; ++i) frames.push_back(noisy(base, 0.02, 200 + i));
  std::vector<Mask> masks;
  for (int i = 0; i < 4; ++i) {
    Mask m = Mask::empty(64, 64);
    for (int y = 16; y < 48; ++y)
      for (int x = 16; x < 48; ++x) m.data(y, x) = true;
    masks.push_back(m);
  }
  std::vector<WarpField> flows(3, WarpField::identity(64, 64));
  const auto t1 = temporal_consistency(frames, masks, flows);

  frames.push_back(base);
  masks.push_back(Mask::empty(64, 64));
  flows.push_back(WarpField::identity(64, 64));
  const auto t2 = temporal_consistency(frames, masks, flows);
  REQUIRE(t1.has_value());
  REQUIRE(t2.has_value());
  CHECK(t1->tpsnr == doctest::Approx(t2->tpsnr).epsilon(1e-12));
  CHECK(t1->tssim == doctest::Approx(t2->tssim).epsilon(1e-12));
}

TEST_CASE("evaluate_sequence emits a coherent JSON report") {
  const Frame base = make_texture(48, 48, 1, 79);
  std::vector<Frame> result(3, base), gt(3, base);
  result[1] = noisy(base, 0.02, 301);
  std::vector<Mask> masks;
  for (int i = 0; i < 3; ++i) {
    Mask m = Mask::empty(48, 48);
    for (int y = 12; y < 36; ++y)
      for (int x = 12; x < 36; ++x) m.data(y, x) = true;
    masks.push_back(m);
  }
  std::vector<WarpField> flows(2, WarpField::identity(48, 48));
  const MetricReport rep = evaluate_sequence(result, gt, masks, flows);
  REQUIRE(rep.per_frame.size() == 3);
  CHECK(std::isinf(rep.per_frame[0].psnr));
  CHECK(rep.per_frame[1].psnr < 60.0);
  CHECK(rep.mean_psnr <= kPsnrCap);
  const std::string j = rep.to_json();
  CHECK(j.find("\"per_frame\"") != std::string::npos);
  CHECK(j.find("\"inf\"") != std::string::npos);
  CHECK(j.find("\"temporal\"") != std::string::npos);
}
