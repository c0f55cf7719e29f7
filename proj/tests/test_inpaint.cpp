#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "scenefill/inpaint.hpp"
#include "scenefill/synth.hpp"

using namespace scenefill;

namespace {

// Per-pixel energy whose closed-form minimizer the median computes:
// (p - f)^2 + beta * sum |p - s_i|.
double pixel_energy(double p, const std::vector<double>& samples, double f,
                    double beta) {
  double e = (p - f) * (p - f);
  for (double s : samples) e += beta * std::abs(p - s);
  return e;
}

double brute_force_minimizer(const std::vector<double>& samples, double f,
                             double beta, double step = 1e-4) {
  double lo = f, hi = f;
  for (double s : samples) {
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  lo -= samples.size() * beta + 1.0;
  hi += samples.size() * beta + 1.0;
  double best = lo, best_e = pixel_energy(lo, samples, f, beta);
  for (double p = lo; p <= hi; p += step) {
    const double e = pixel_energy(p, samples, f, beta);
    if (e < best_e) {
      best_e = e;
      best = p;
    }
  }
  return best;
}

InferenceState static_state(const Frame& f, std::vector<Mask> masks) {
  InferenceState st;
  const WarpField id = WarpField::identity(f.width, f.height);
  for (size_t i = 0; i < masks.size(); ++i) {
    st.frames.push_back(f);
    st.masks.push_back(masks[i]);
    st.warps.push_back(id);
    st.inv_warps.push_back(id);
  }
  st.key_frame = 0;
  st.tpl = accumulate_template(st.frames, st.masks, st.warps);
  return st;
}

}  // namespace

TEST_CASE("median pixel hand example") {
  // samples {0.1, 0.5}, f 0.3, beta 0.1: auxiliaries {0.2, 0.3, 0.4},
  // median of {0.1, 0.5, 0.2, 0.3, 0.4} = 0.3.
  const auto v = median_inpaint_pixel({0.1, 0.5}, 0.3, 0.1);
  REQUIRE(v.has_value());
  CHECK(*v == doctest::Approx(0.3));
}

TEST_CASE("median pixel beta zero returns the template value") {
  for (auto samples : std::vector<std::vector<double>>{
           {0.9}, {0.9, 0.8}, {0.0, 1.0, 0.99}}) {
    const auto v = median_inpaint_pixel(samples, 0.4, 0.0);
    REQUIRE(v.has_value());
    CHECK(*v == doctest::Approx(0.4));
  }
}

TEST_CASE("median pixel with large beta is the plain sample median") {
  const std::vector<double> samples{0.2, 0.7, 0.4};  // median 0.4
  const auto v = median_inpaint_pixel(samples, 0.9, 2.0);
  REQUIRE(v.has_value());
  CHECK(*v == doctest::Approx(0.4));
}

TEST_CASE("median pixel degenerate inputs") {
  CHECK(*median_inpaint_pixel({}, 0.7, 0.05) == doctest::Approx(0.7));
  CHECK(*median_inpaint_pixel({0.2, 0.6, 0.3}, std::nullopt, 0.05) ==
        doctest::Approx(0.3));
  CHECK(*median_inpaint_pixel({0.2, 0.6}, std::nullopt, 0.05) ==
        doctest::Approx(0.2));  // lower-middle for even cardinality
  CHECK(!median_inpaint_pixel({}, std::nullopt, 0.05).has_value());
}

TEST_CASE("median pixel matches the brute-force energy minimizer") {
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> u(0, 1);
  std::uniform_int_distribution<int> mc(0, 9);
  const double betas[4] = {0.0, 0.05, 0.2, 1.0};
  for (int trial = 0; trial < 300; ++trial) {
    const int m = mc(rng);
    std::vector<double> samples(m);
    for (double& s : samples) s = u(rng);
    const double f = u(rng);
    const double beta = betas[trial % 4];
    const auto v = median_inpaint_pixel(samples, f, beta);
    REQUIRE(v.has_value());
    if (beta == 0.0) {
      CHECK(*v == doctest::Approx(f));
      continue;
    }
    const double bf = brute_force_minimizer(samples, f, beta);
    // Compare energies: flat L1 segments can hold several exact minimizers.
    CHECK(pixel_energy(*v, samples, f, beta) <=
          pixel_energy(bf, samples, f, beta) + 1e-6);
    CHECK(std::abs(*v - bf) < 2e-4 + 1e-9);
  }
}

TEST_CASE("median pixel is monotone in the template value") {
  std::mt19937 rng(101);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> samples(4);
    for (double& s : samples) s = u(rng);
    double prev = -1e9;
    for (double f = 0.0; f <= 1.0; f += 0.02) {
      const double v = *median_inpaint_pixel(samples, f, 0.05);
      CHECK(v >= prev - 1e-12);
      prev = v;
    }
  }
}

TEST_CASE("gather_samples on a static scene returns the background value") {
  const Frame f = make_texture(32, 32, 1, 50);
  Mask m0 = Mask::empty(32, 32);
  m0.data(10, 12) = true;
  const InferenceState st =
      static_state(f, {m0, Mask::empty(32, 32), Mask::empty(32, 32)});
  const auto samples = gather_samples(st, 0, 12, 10, 20);
  REQUIRE(samples.size() == 2);
  for (const auto& s : samples)
    CHECK(s[0] == doctest::Approx(f.ch[0](10, 12)));
}

TEST_CASE("gather_samples is empty when masked everywhere") {
  const Frame f = make_texture(32, 32, 1, 51);
  std::vector<Mask> masks(3, Mask::empty(32, 32));
  for (auto& m : masks) m.data(5, 5) = true;
  const InferenceState st = static_state(f, masks);
  CHECK(gather_samples(st, 0, 5, 5, 20).empty());
}

TEST_CASE("gather_samples visibility count matches the mask schedule") {
  // Pixel (8, 8) masked in frames 0 (query), 2 and 4; visible in 1, 3, 5, 6.
  const Frame f = make_texture(32, 32, 1, 52);
  std::vector<Mask> masks(7, Mask::empty(32, 32));
  masks[0].data(8, 8) = true;
  masks[2].data(8, 8) = true;
  masks[4].data(8, 8) = true;
  const InferenceState st = static_state(f, masks);
  CHECK(gather_samples(st, 0, 8, 8, 20).size() == 4);
  CHECK(gather_samples(st, 0, 8, 8, 2).size() == 2);  // cap respected
}

TEST_CASE("inpaint_frame with an empty mask is bit-exact") {
  const Frame f = make_texture(24, 24, 2, 53);
  const InferenceState st =
      static_state(f, {Mask::empty(24, 24), Mask::empty(24, 24)});
  const InpaintResult r = inpaint_frame(st, 0, {});
  for (int c = 0; c < 2; ++c)
    CHECK((r.frame.ch[c] == f.ch[c]).all());
  CHECK(r.unfilled.count() == 0);
}

TEST_CASE("inpaint_frame on a static scene recovers the background exactly") {
  const Frame f = make_texture(32, 32, 1, 54);
  Mask m0 = Mask::empty(32, 32);
  for (int y = 8; y < 20; ++y)
    for (int x = 10; x < 22; ++x) m0.data(y, x) = true;
  const InferenceState st =
      static_state(f, {m0, Mask::empty(32, 32), Mask::empty(32, 32)});
  const InpaintResult r = inpaint_frame(st, 0, {});
  CHECK(r.unfilled.count() == 0);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x)
      CHECK(r.frame.ch[0](y, x) == doctest::Approx(f.ch[0](y, x)));
}

TEST_CASE("inpaint_frame is bit-identical outside the mask") {
  const Frame tpl_img = make_texture(180, 160, 1, 55);
  WarpSpec ws;
  ws.velocity = {1.0, 0.5};
  MaskSpec ms;
  ms.center0 = {32, 32};
  ms.velocity = {2, 0};
  ms.size = 12;
  const SynthSequence seq = generate(tpl_img, ws, ms, 5, 0.02, 55, 64, 64);
  JointParams jp;
  const InferenceState st =
      run_joint_optimization(seq.frames, seq.masks, 2, jp);
  const InpaintResult r = inpaint_frame(st, 1, {});
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x)
      if (!seq.masks[1].data(y, x))
        CHECK(r.frame.ch[0](y, x) == seq.frames[1].ch[0](y, x));
}

TEST_CASE("inpainted values stay within the contributing range") {
  // Median property: outputs bounded by min/max of samples and the template
  // auxiliaries f +- (m/2) beta.
  const Frame tpl_img = make_texture(180, 160, 1, 56);
  WarpSpec ws;
  ws.velocity = {1.5, 0.0};
  MaskSpec ms;
  ms.center0 = {32, 32};
  ms.velocity = {3, 0};
  ms.size = 14;
  const SynthSequence seq = generate(tpl_img, ws, ms, 5, 0.01, 56, 64, 64);
  JointParams jp;
  const InferenceState st =
      run_joint_optimization(seq.frames, seq.masks, 2, jp);
  InpaintParams ip;
  const InpaintResult r = inpaint_frame(st, 0, ip);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) {
      if (!seq.masks[0].data(y, x) || r.unfilled(y, x)) continue;
      const auto samples = gather_samples(st, 0, x, y, ip.max_sample_frames);
      double lo = 1e30, hi = -1e30;
      for (const auto& s : samples) {
        lo = std::min(lo, s[0]);
        hi = std::max(hi, s[0]);
      }
      const int m = static_cast<int>(samples.size());
      const WarpField& winv = st.inv_warps[0];
      if (winv.valid(y, x)) {
        const double px = winv.map_x(y, x), py = winv.map_y(y, x);
        if (in_sample_rect(st.tpl.domain.width, st.tpl.domain.height, px,
                           py)) {
          const int nx = nearest_index(px, st.tpl.domain.width);
          const int ny = nearest_index(py, st.tpl.domain.height);
          if (st.tpl.defined(ny, nx)) {
            const double f = st.tpl.radiance[0](ny, nx);
            lo = std::min(lo, f - m * ip.beta / 2);
            hi = std::max(hi, f + m * ip.beta / 2);
          }
        }
      }
      CHECK(r.frame.ch[0](y, x) >= lo - 1e-12);
      CHECK(r.frame.ch[0](y, x) <= hi + 1e-12);
    }
}

TEST_CASE("diffusion_fill basics") {
  Mask hole = Mask::empty(16, 16);
  for (int y = 5; y < 11; ++y)
    for (int x = 5; x < 11; ++x) hole.data(y, x) = true;

  Frame con = Frame::constant(16, 16, 1, 0.42);
  Frame con_junk = con;
  for (int y = 5; y < 11; ++y)
    for (int x = 5; x < 11; ++x) con_junk.ch[0](y, x) = 0.9;
  const Frame fc = diffusion_fill(con_junk, hole);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x)
      CHECK(fc.ch[0](y, x) == doctest::Approx(0.42).epsilon(1e-3));

  Frame grad = Frame::zeros(16, 16, 1);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) grad.ch[0](y, x) = (2.0 * x + y) / 48.0;
  Frame grad_junk = grad;
  for (int y = 5; y < 11; ++y)
    for (int x = 5; x < 11; ++x) grad_junk.ch[0](y, x) = 0.0;
  const Frame fg = diffusion_fill(grad_junk, hole);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x)
      CHECK(std::abs(fg.ch[0](y, x) - grad.ch[0](y, x)) < 1e-2);
}

TEST_CASE("diffusion_fill 1D strip gives a linear ramp") {
  Frame f = Frame::zeros(7, 1, 1);
  f.ch[0](0, 6) = 1.0;
  Mask hole = Mask::empty(7, 1);
  for (int x = 1; x < 6; ++x) hole.data(0, x) = true;
  const Frame out = diffusion_fill(f, hole);
  for (int x = 0; x < 7; ++x)
    CHECK(out.ch[0](0, x) == doctest::Approx(x / 6.0).epsilon(1e-3));
}

TEST_CASE("diffusion_fill rejects a full-frame hole") {
  Mask all = Mask::empty(4, 4);
  all.data.setConstant(true);
  CHECK_THROWS(diffusion_fill(Frame::zeros(4, 4, 1), all));
}

TEST_CASE("estimate_mask is empty on a residual-free frame") {
  const Frame f = make_texture(48, 48, 1, 60);
  const InferenceState st = static_state(f, {Mask::empty(48, 48)});
  const Mask est = estimate_mask(f, st.tpl, st.inv_warps[0], 0.1);
  CHECK(est.count() == 0);
}

TEST_CASE("estimate_mask recovers a pasted foreground with IoU >= 0.8") {
  const Frame bg = make_texture(64, 64, 1, 61);
  Frame f = bg;
  Mask gt = Mask::empty(64, 64);
  for (int y = 20; y < 44; ++y)
    for (int x = 16; x < 40; ++x) {
      f.ch[0](y, x) = std::min(1.0, bg.ch[0](y, x) + 0.5);
      gt.data(y, x) = true;
    }
  const InferenceState st = static_state(bg, {Mask::empty(64, 64)});
  const Mask est = estimate_mask(f, st.tpl, st.inv_warps[0], 0.1);
  long inter = 0, uni = 0;
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) {
      const bool a = est.data(y, x), b = gt.data(y, x);
      inter += a && b;
      uni += a || b;
    }
  CHECK(double(inter) / uni >= 0.8);
}

TEST_CASE("estimate_mask threshold is strict") {
  // Residual exactly alpha stays unmasked; slightly above becomes masked.
  const Frame bg = Frame::constant(32, 32, 1, 0.25);
  auto run = [&](double offset) {
    Frame f = bg;
    for (int y = 8; y < 20; ++y)
      for (int x = 8; x < 20; ++x) f.ch[0](y, x) = 0.25 + offset;
    const InferenceState st = static_state(bg, {Mask::empty(32, 32)});
    return estimate_mask(f, st.tpl, st.inv_warps[0], 0.25);
  };
  CHECK(run(0.5).count() == 0);    // 0.5^2 == alpha exactly, not >
  CHECK(run(0.52).count() == 144); // 0.52^2 > alpha
}
