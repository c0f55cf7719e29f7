#pragma once

#include <filesystem>
#include <optional>

#include "scenefill/flow.hpp"

namespace scenefill {

/// Radiance over the extended domain, accumulated as a Jacobian-weighted
/// average of the observations that map onto each point.
struct SceneTemplate {
  static constexpr double kWeightEps = 1e-6;

  DomainRect domain;
  std::vector<Array2d> numerator;
  Array2d weight;
  std::vector<Array2d> radiance;
  BoolArray defined;  // weight > kWeightEps

  int channels() const { return static_cast<int>(numerator.size()); }
  void finalize();
  Frame radiance_frame() const;  // undefined pixels left at 0
};

/// det of the 2x2 gradient of w.map at pixel (x, y) by central differences
/// (one-sided at borders), clamped below at 0 so fold-overs carry no weight.
double jacobian_det(const WarpField& w, int x, int y);

/// Weighted-average template update: for each template pixel p, sums
/// I_i(w_i(p)) * J_i(p) over frames whose warp lands in the unmasked part
/// of the frame. Images are sampled bilinearly, masks by nearest lookup.
SceneTemplate accumulate_template(std::span<const Frame> frames,
                                  std::span<const Mask> masks,
                                  std::span<const WarpField> warps);

/// Refines a warp pair against the current template: renders the template
/// prediction into the frame domain, computes masked residual flow in both
/// directions, and composes it into (w, w_inv). Undefined-template pixels act
/// as masked on the template side. If the defined prediction covers < 5% of
/// the frame, the inits are returned unchanged.
std::pair<WarpField, WarpField> refine_warp(const SceneTemplate& tpl,
                                            const Frame& frame,
                                            const Mask& mask,
                                            const WarpField& w_init,
                                            const WarpField& w_inv_init,
                                            const FlowParams& params);

struct InferenceState {
  std::vector<Frame> frames;
  std::vector<Mask> masks;
  std::vector<WarpField> warps;      // template domain -> frame
  std::vector<WarpField> inv_warps;  // frame -> template domain
  SceneTemplate tpl;
  int key_frame = 0;
};

struct JointParams {
  FlowParams flow;           // adjacent-frame flow
  FlowParams refine;         // residual refinement flow (lighter)
  int max_outer = 2;
  double template_rel_tol = 1e-3;
  int threads = 1;
  std::optional<std::filesystem::path> flow_cache_dir;
  bool refine_enabled = true;

  JointParams() {
    refine.pyramid_levels = 2;
    refine.iterations_per_level = 100;
  }
};

/// Adjacent-frame flow pairs: fwd[i] maps frame i -> i+1, bwd[i] the reverse.
struct AdjacentFlows {
  std::vector<WarpField> fwd;
  std::vector<WarpField> bwd;
};

AdjacentFlows compute_adjacent_flows(std::span<const Frame> frames,
                                     std::span<const Mask> masks,
                                     const JointParams& params);

/// Chains adjacent flows into key-frame warps w_{ki} (key -> i) and their
/// inverses w_{ik}.
std::pair<std::vector<WarpField>, std::vector<WarpField>>
chain_from_key(const AdjacentFlows& adj, int key_frame);

/// Full joint optimization: initializes warps by recursive composition from
/// the key frame, then alternates template accumulation and warp refinement.
InferenceState run_joint_optimization(
    std::vector<Frame> frames, std::vector<Mask> masks, int key_frame,
    const JointParams& params,
    const std::optional<AdjacentFlows>& precomputed_adjacent = std::nullopt);

struct InpaintParams;

struct SlidingResult {
  std::vector<Frame> frames;
  std::vector<long> unfilled_counts;  // after diffusion fill: always 0 unless
                                      // a whole frame was masked
};

/// Sliding-window scheme: keeps the template aligned to the newest frame,
/// re-aligning stored warps by composition and cropping the domain to D.
/// Runs a forward sweep then a backward sweep; per pixel, the sweep with more
/// contributing samples wins (ties go to the forward sweep).
SlidingResult sliding_window_run(std::span<const Frame> frames,
                                 std::span<const Mask> masks, int window,
                                 const JointParams& jparams,
                                 const InpaintParams& iparams);

}  // namespace scenefill
