#include "scenefill/metrics.hpp"

#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

namespace scenefill {

namespace {

void check_pair(const Frame& a, const Frame& b) {
  if (a.width != b.width || a.height != b.height ||
      a.channels() != b.channels())
    throw std::invalid_argument("metrics: frame geometry mismatch");
}

double cap(double psnr_db) { return std::min(psnr_db, kPsnrCap); }

}  // namespace

double psnr(const Frame& a, const Frame& b,
            const std::optional<Mask>& region) {
  check_pair(a, b);
  double se = 0;
  long n = 0;
  for (int y = 0; y < a.height; ++y)
    for (int x = 0; x < a.width; ++x) {
      if (region && !region->data(y, x)) continue;
      for (int c = 0; c < a.channels(); ++c) {
        const double d = a.ch[c](y, x) - b.ch[c](y, x);
        se += d * d;
      }
      ++n;
    }
  if (n == 0) throw std::invalid_argument("psnr: empty region");
  const double mse = se / (n * a.channels());
  if (mse == 0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

namespace {

constexpr int kWin = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

const Eigen::Matrix<double, kWin, kWin>& gaussian_window() {
  static const auto win = [] {
    Eigen::Matrix<double, kWin, kWin> w;
    const int r = kWin / 2;
    double sum = 0;
    for (int y = 0; y < kWin; ++y)
      for (int x = 0; x < kWin; ++x) {
        const double dx = x - r, dy = y - r;
        w(y, x) = std::exp(-(dx * dx + dy * dy) / (2 * kSigma * kSigma));
        sum += w(y, x);
      }
    w /= sum;
    return w;
  }();
  return win;
}

}  // namespace

double ssim(const Frame& a, const Frame& b,
            const std::optional<Mask>& region) {
  check_pair(a, b);
  const int r = kWin / 2;
  if (a.width < kWin || a.height < kWin)
    throw std::invalid_argument("ssim: frame smaller than window");
  const auto& win = gaussian_window();
  double total = 0;
  long n = 0;
  for (int y = r; y < a.height - r; ++y)
    for (int x = r; x < a.width - r; ++x) {
      if (region && !region->data(y, x)) continue;
      for (int c = 0; c < a.channels(); ++c) {
        double mx = 0, my = 0;
        for (int wy = 0; wy < kWin; ++wy)
          for (int wx = 0; wx < kWin; ++wx) {
            mx += win(wy, wx) * a.ch[c](y + wy - r, x + wx - r);
            my += win(wy, wx) * b.ch[c](y + wy - r, x + wx - r);
          }
        double vx = 0, vy = 0, cov = 0;
        for (int wy = 0; wy < kWin; ++wy)
          for (int wx = 0; wx < kWin; ++wx) {
            const double da = a.ch[c](y + wy - r, x + wx - r) - mx;
            const double db = b.ch[c](y + wy - r, x + wx - r) - my;
            vx += win(wy, wx) * da * da;
            vy += win(wy, wx) * db * db;
            cov += win(wy, wx) * da * db;
          }
        total += ((2 * mx * my + kC1) * (2 * cov + kC2)) /
                 ((mx * mx + my * my + kC1) * (vx + vy + kC2));
        ++n;
      }
    }
  if (n == 0) throw std::invalid_argument("ssim: region has no window centers");
  return total / n;
}

std::optional<TemporalScores> temporal_consistency(
    std::span<const Frame> inpainted, std::span<const Mask> masks,
    std::span<const WarpField> adjacent_flows) {
  const int T = static_cast<int>(inpainted.size());
  if (T < 2 || adjacent_flows.size() + 1 < inpainted.size())
    return std::nullopt;
  double psnr_sum = 0, ssim_sum = 0;
  int pairs = 0;
  for (int t = 0; t + 1 < T; ++t) {
    const Frame& pt = inpainted[t];
    const Frame& pn = inpainted[t + 1];
    const WarpField& w = adjacent_flows[t];  // t -> t+1
    // Score the agreement of the two inpainted regions: a pixel enters the
    // region only when it is masked in frame t AND its flow target falls in
    // frame t+1's mask. Outside the region the warped frame copies P_t so
    // SSIM windows near the region boundary read consistent content.
    Frame warped = pt;
    Mask region = Mask::empty(pt.width, pt.height);
    for (int y = 0; y < pt.height; ++y)
      for (int x = 0; x < pt.width; ++x) {
        if (!masks[t].data(y, x) || !w.valid(y, x)) continue;
        const double qx = w.map_x(y, x), qy = w.map_y(y, x);
        if (!in_sample_rect(pn.width, pn.height, qx, qy)) continue;
        if (!masks[t + 1].data(nearest_index(qy, pn.height),
                               nearest_index(qx, pn.width)))
          continue;
        region.data(y, x) = true;
        for (int c = 0; c < pt.channels(); ++c)
          warped.ch[c](y, x) = sample_bilinear(pn.ch[c], qx, qy);
      }
    if (region.count() == 0) continue;
    // SSIM needs window centers away from the border; skip the pair when the
    // region is border-only.
    double s;
    try {
      s = ssim(pt, warped, region);
    } catch (const std::invalid_argument&) {
      continue;
    }
    psnr_sum += cap(psnr(pt, warped, region));
    ssim_sum += s;
    ++pairs;
  }
  if (pairs == 0) return std::nullopt;
  return TemporalScores{psnr_sum / pairs, ssim_sum / pairs};
}

MetricReport evaluate_sequence(std::span<const Frame> result,
                               std::span<const Frame> ground_truth,
                               std::span<const Mask> masks,
                               std::span<const WarpField> adjacent_flows) {
  if (result.size() != ground_truth.size())
    throw std::invalid_argument("evaluate_sequence: length mismatch");
  MetricReport rep;
  double psum = 0, ssum = 0;
  for (size_t t = 0; t < result.size(); ++t) {
    FramePair fp;
    fp.psnr = psnr(result[t], ground_truth[t]);
    fp.ssim = ssim(result[t], ground_truth[t]);
    psum += cap(fp.psnr);
    ssum += fp.ssim;
    rep.per_frame.push_back(fp);
  }
  rep.mean_psnr = psum / result.size();
  rep.mean_ssim = ssum / result.size();
  rep.temporal = temporal_consistency(result, masks, adjacent_flows);
  return rep;
}

std::string MetricReport::to_json() const {
  nlohmann::json j;
  auto num = [](double v) -> nlohmann::json {
    if (std::isinf(v)) return "inf";
    return v;
  };
  j["per_frame"] = nlohmann::json::array();
  for (const auto& fp : per_frame)
    j["per_frame"].push_back({{"psnr", num(fp.psnr)}, {"ssim", fp.ssim}});
  if (temporal)
    j["temporal"] = {{"tpsnr", num(temporal->tpsnr)},
                     {"tssim", temporal->tssim}};
  else
    j["temporal"] = nullptr;
  j["aggregate"] = {{"psnr", num(mean_psnr)}, {"ssim", mean_ssim}};
  return j.dump(2);
}

}  // namespace scenefill
