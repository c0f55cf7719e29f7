#pragma once

#include <filesystem>

#include "scenefill/core.hpp"

namespace scenefill {

struct FlowParams {
  int pyramid_levels = 4;
  double smoothness_weight = 0.05;
  int iterations_per_level = 200;
  double convergence_tol = 1e-5;  // mean flow-update magnitude, px
  int warp_updates_per_level = 3;
};

/// Coarse-to-fine variational flow from src to dst. The brightness-constancy
/// data term is active only where neither endpoint is masked; elsewhere the
/// flow is governed by the smoothness term alone, with a final harmonic
/// extension pass over src_mask.
WarpField compute_flow(const Frame& src, const Frame& dst,
                       const Mask& src_mask, const Mask& dst_mask,
                       const FlowParams& params);

/// Replaces the map inside hole by the harmonic extension of the surrounding
/// displacement (Laplace equation per channel, Dirichlet boundary from the
/// one-pixel ring of unmasked neighbors).
WarpField harmonic_extend(const WarpField& w, const Mask& hole);

/// Harmonic fill of a scalar plane inside hole, in place.
void harmonic_fill_plane(Array2d& plane, const BoolArray& hole,
                         double residual_tol = 1e-4, int max_iters = 20000);

/// Result maps p to w_bc(w_ab(p)). The intermediate lookup interpolates
/// w_bc.map bilinearly; validity requires every touched w_bc pixel valid.
WarpField compose(const WarpField& w_ab, const WarpField& w_bc);

/// Bilinear lookup of a warp's map at a real point in src-local coordinates.
/// Returns false (invalid) if the point leaves src or touches an invalid
/// pixel; out_x/out_y are still written from clamped interpolation.
bool warp_lookup(const WarpField& w, double qx, double qy, double& out_x,
                 double& out_y);

/// Pixels where |w_bwd(w_fwd(p)) - p| > tol_px (occlusion / inconsistency).
Mask check_fb_consistency(const WarpField& w_fwd, const WarpField& w_bwd,
                          double tol_px);

/// Extends a warp to a larger src rect; displacements outside the original
/// support are filled harmonically, valid=false there.
WarpField extend_to_rect(const WarpField& w, const DomainRect& new_src);

// Middlebury .flo cache format: magic 202021.25f, int32 width/height,
// interleaved float32 (u,v) displacements, row-major.
void write_flo(const std::filesystem::path& path, const WarpField& w);
WarpField read_flo(const std::filesystem::path& path);

}  // namespace scenefill
