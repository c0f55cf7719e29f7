#pragma once

#include <optional>
#include <string>

#include "scenefill/flow.hpp"

namespace scenefill {

constexpr double kPsnrCap = 99.0;  // sentinel cap used in aggregates

struct FramePair {
  double psnr = 0;
  double ssim = 0;
};

struct TemporalScores {
  double tpsnr = 0;
  double tssim = 0;
};

struct MetricReport {
  std::vector<FramePair> per_frame;
  std::optional<TemporalScores> temporal;
  double mean_psnr = 0;
  double mean_ssim = 0;

  std::string to_json() const;
};

/// 10 log10(1 / MSE) over the region ([0,1] intensities). Identical inputs
/// give +infinity; aggregates cap at kPsnrCap.
double psnr(const Frame& a, const Frame& b,
            const std::optional<Mask>& region = std::nullopt);

/// Standard SSIM, 11x11 Gaussian window sigma 1.5, C1=0.01^2, C2=0.03^2,
/// averaged over window centers inside the region (windows must fit in the
/// frame).
double ssim(const Frame& a, const Frame& b,
            const std::optional<Mask>& region = std::nullopt);

/// Warps each frame t+1 back to t through the adjacent flow and scores the
/// agreement over the pixels masked in both endpoints (M_t whose flow target
/// lies in M_{t+1}). Absent when no pair has such pixels.
std::optional<TemporalScores> temporal_consistency(
    std::span<const Frame> inpainted, std::span<const Mask> masks,
    std::span<const WarpField> adjacent_flows);

MetricReport evaluate_sequence(std::span<const Frame> result,
                               std::span<const Frame> ground_truth,
                               std::span<const Mask> masks,
                               std::span<const WarpField> adjacent_flows);

}  // namespace scenefill
