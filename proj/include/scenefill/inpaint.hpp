#pragma once

#include <optional>

#include "scenefill/scene_template.hpp"

namespace scenefill {

struct InpaintParams {
  double beta = 0.05;        // L1 fidelity weight
  double alpha = 0.1;        // residual threshold for mask estimation
  int max_sample_frames = 20;
};

/// Cross-frame samples for masked pixel x of frame t: each other frame is
/// probed through the template (w_i composed with w_t^-1) and contributes a
/// nearest-neighbor sample iff the point lands in its unmasked region.
/// Nearest frames first, capped at max_frames.
std::vector<Eigen::VectorXd> gather_samples(const InferenceState& state, int t,
                                            int x, int y, int max_frames);

/// Closed-form minimizer of the per-pixel L2-L1 energy: the median of the
/// samples together with m_x + 1 auxiliary values f_val + (2j - m_x) beta / 2.
/// Without a template value the plain sample median is returned; with
/// neither, nullopt (caller defers to diffusion fill). Even-cardinality
/// medians take the lower-middle element.
std::optional<double> median_inpaint_pixel(std::vector<double> samples,
                                           std::optional<double> f_val,
                                           double beta);

struct InpaintResult {
  Frame frame;
  Eigen::ArrayXXi sample_count;  // m_x per pixel (+1 when template defined)
  BoolArray unfilled;            // neither template nor samples
};

/// Fills M_t from the template and cross-frame samples; pixels outside M_t
/// are copied bit-exactly. Template and samples are read by nearest lookup.
InpaintResult inpaint_frame(const InferenceState& state, int t,
                            const InpaintParams& params);

/// Harmonic fill of holes, per channel (stand-in for a learned single-image
/// fallback on never-revealed pixels).
Frame diffusion_fill(const Frame& frame, const Mask& holes);

/// Thresholds the squared residual between the frame and the warped template
/// (strictly > alpha), then drops connected components under 16 px and
/// closes with a 3x3 structuring element.
Mask estimate_mask(const Frame& frame, const SceneTemplate& tpl,
                   const WarpField& inv_warp, double alpha);

// Mask morphology helpers.
Mask remove_small_components(const Mask& m, int min_px);
Mask close3x3(const Mask& m);

}  // namespace scenefill
