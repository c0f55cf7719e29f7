#pragma once

#include <cstdint>
#include <limits>
#include <random>

#include <Eigen/Geometry>

#include "scenefill/core.hpp"

namespace scenefill {

/// Analytic camera path: frame i's view transform maps frame pixels into
/// template coordinates.
struct WarpSpec {
  enum class Kind { Translation, Rotation, Affine, Zoom };
  Kind kind = Kind::Translation;
  Vec2 velocity{0, 0};      // px/frame (translation)
  double angular_rate = 0;  // rad/frame (rotation, about template center)
  double zoom_rate = 1.0;   // scale factor/frame (zoom, about center)
  Eigen::Matrix2d affine_step = Eigen::Matrix2d::Identity();  // per frame
};

struct MaskSpec {
  enum class Shape { Box, Disk };
  Shape shape = Shape::Box;
  Vec2 center0{0, 0};
  Vec2 velocity{0, 0};
  double size = 0;  // box side / disk diameter, px
  int active_begin = 0;
  int active_end = std::numeric_limits<int>::max();  // exclusive
};

struct SynthSequence {
  int width = 0, height = 0;
  std::vector<Frame> frames;     // observed (noise + distractor in mask)
  std::vector<Frame> gt_frames;  // clean renders
  std::vector<Mask> masks;
  std::vector<Eigen::Affine2d> view_to_template;  // per frame
};

/// Renders T frames of template_img under the analytic warp path, with
/// Gaussian noise (clipped to [0,1]) and a high-contrast distractor pasted
/// into the masked region.
SynthSequence generate(const Frame& template_img, const WarpSpec& warp_spec,
                       const MaskSpec& mask_spec, int T, double noise_sigma,
                       uint64_t seed, int out_w, int out_h);

/// Exact WarpField from frame i's domain to frame j's domain.
WarpField analytic_warp(const SynthSequence& seq, int i, int j);

/// Exact WarpField from frame i to a template-coordinate rect.
WarpField analytic_warp_to_rect(const SynthSequence& seq, int i,
                                const DomainRect& tpl_rect);

/// WarpField over `rect` applying the affine map p -> A p.
WarpField affine_warp_field(const Eigen::Affine2d& a, const DomainRect& src,
                            const DomainRect& dst);

/// Smooth pseudo-random texture (Gaussian-filtered noise mapped to
/// [0.1, 0.9]); deterministic in seed.
Frame make_texture(int w, int h, int k, uint64_t seed, double smooth_sigma = 2.0);

Frame make_checkerboard(int w, int h, int k, int cell);

/// Platform-independent deterministic RNG helpers.
struct Rng {
  std::mt19937_64 gen;
  explicit Rng(uint64_t seed) : gen(seed) {}
  double uniform() { return (gen() >> 11) * 0x1.0p-53; }
  double gaussian();  // Box-Muller

 private:
  bool has_spare_ = false;
  double spare_ = 0;
};

}  // namespace scenefill
