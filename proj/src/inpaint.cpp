#include "scenefill/inpaint.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace scenefill {

std::vector<Eigen::VectorXd> gather_samples(const InferenceState& state, int t,
                                            int x, int y, int max_frames) {
  const int T = static_cast<int>(state.frames.size());
  std::vector<Eigen::VectorXd> samples;
  const WarpField& winv = state.inv_warps[t];
  if (!winv.valid(y, x)) return samples;
  const double px = winv.map_x(y, x), py = winv.map_y(y, x);

  // Nearest frames first; ties toward the earlier frame.
  std::vector<int> order;
  for (int d = 1; d < T; ++d) {
    if (t - d >= 0) order.push_back(t - d);
    if (t + d < T) order.push_back(t + d);
  }
  for (int i : order) {
    if (static_cast<int>(samples.size()) >= max_frames) break;
    const WarpField& wi = state.warps[i];
    double qx, qy;
    if (!warp_lookup(wi, px, py, qx, qy)) continue;
    const Frame& I = state.frames[i];
    if (!in_sample_rect(I.width, I.height, qx, qy)) continue;
    const int nx = nearest_index(qx, I.width);
    const int ny = nearest_index(qy, I.height);
    if (state.masks[i].data(ny, nx)) continue;
    Eigen::VectorXd s(I.channels());
    for (int c = 0; c < I.channels(); ++c) s[c] = I.ch[c](ny, nx);
    samples.push_back(std::move(s));
  }
  return samples;
}

std::optional<double> median_inpaint_pixel(std::vector<double> samples,
                                           std::optional<double> f_val,
                                           double beta) {
  const int m = static_cast<int>(samples.size());
  if (!f_val) {
    if (m == 0) return std::nullopt;
    std::sort(samples.begin(), samples.end());
    return samples[(m - 1) / 2];
  }
  if (m == 0) return *f_val;
  samples.reserve(samples.size() + m + 1);
  for (int j = 0; j <= m; ++j)
    samples.push_back(*f_val + (2.0 * j - m) * beta / 2.0);
  std::sort(samples.begin(), samples.end());
  return samples[(samples.size() - 1) / 2];
}

InpaintResult inpaint_frame(const InferenceState& state, int t,
                            const InpaintParams& params) {
  if (t < 0 || t >= static_cast<int>(state.frames.size()))
    throw std::invalid_argument("inpaint_frame: frame index out of range");
  const Frame& I = state.frames[t];
  const Mask& M = state.masks[t];
  const SceneTemplate& tpl = state.tpl;
  const WarpField& winv = state.inv_warps[t];
  const int k = I.channels();

  InpaintResult res;
  res.frame = I;
  res.sample_count = Eigen::ArrayXXi::Zero(I.height, I.width);
  res.unfilled = BoolArray::Constant(I.height, I.width, false);

  for (int y = 0; y < I.height; ++y)
    for (int x = 0; x < I.width; ++x) {
      if (!M.data(y, x)) continue;
      const auto samples =
          gather_samples(state, t, x, y, params.max_sample_frames);

      // Template readout f*(w_t^-1(x)), nearest-neighbor per the combined
      // interpolation strategy.
      std::optional<Eigen::VectorXd> f_val;
      if (winv.valid(y, x)) {
        const double px = winv.map_x(y, x), py = winv.map_y(y, x);
        if (in_sample_rect(tpl.domain.width, tpl.domain.height, px, py)) {
          const int nx = nearest_index(px, tpl.domain.width);
          const int ny = nearest_index(py, tpl.domain.height);
          if (tpl.defined(ny, nx)) {
            Eigen::VectorXd f(k);
            for (int c = 0; c < k; ++c) f[c] = tpl.radiance[c](ny, nx);
            f_val = std::move(f);
          }
        }
      }

      res.sample_count(y, x) =
          static_cast<int>(samples.size()) + (f_val ? 1 : 0);
      if (samples.empty() && !f_val) {
        res.unfilled(y, x) = true;
        continue;
      }
      for (int c = 0; c < k; ++c) {
        std::vector<double> sc(samples.size());
        for (size_t i = 0; i < samples.size(); ++i) sc[i] = samples[i][c];
        const auto v = median_inpaint_pixel(
            std::move(sc),
            f_val ? std::optional<double>((*f_val)[c]) : std::nullopt,
            params.beta);
        res.frame.ch[c](y, x) = *v;
      }
    }
  return res;
}

Frame diffusion_fill(const Frame& frame, const Mask& holes) {
  if (holes.width != frame.width || holes.height != frame.height)
    throw std::invalid_argument("diffusion_fill: geometry mismatch");
  Frame out = frame;
  for (auto& c : out.ch) harmonic_fill_plane(c, holes.data);
  return out;
}

Mask remove_small_components(const Mask& m, int min_px) {
  const int w = m.width, h = m.height;
  Mask out = m;
  Eigen::ArrayXXi label = Eigen::ArrayXXi::Constant(h, w, -1);
  std::vector<std::pair<int, int>> stack, comp;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!m.data(y, x) || label(y, x) >= 0) continue;
      stack.clear();
      comp.clear();
      stack.emplace_back(x, y);
      label(y, x) = 1;
      while (!stack.empty()) {
        auto [cx, cy] = stack.back();
        stack.pop_back();
        comp.emplace_back(cx, cy);
        const int nx4[4] = {cx - 1, cx + 1, cx, cx};
        const int ny4[4] = {cy, cy, cy - 1, cy + 1};
        for (int i = 0; i < 4; ++i) {
          const int nx = nx4[i], ny = ny4[i];
          if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          if (!m.data(ny, nx) || label(ny, nx) >= 0) continue;
          label(ny, nx) = 1;
          stack.emplace_back(nx, ny);
        }
      }
      if (static_cast<int>(comp.size()) < min_px)
        for (auto [cx, cy] : comp) out.data(cy, cx) = false;
    }
  return out;
}

namespace {

Mask dilate3x3(const Mask& m) {
  Mask out = Mask::empty(m.width, m.height);
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x) {
      bool v = false;
      for (int dy = -1; dy <= 1 && !v; ++dy)
        for (int dx = -1; dx <= 1 && !v; ++dx) {
          const int nx = x + dx, ny = y + dy;
          if (nx >= 0 && ny >= 0 && nx < m.width && ny < m.height)
            v = m.data(ny, nx);
        }
      out.data(y, x) = v;
    }
  return out;
}

Mask erode3x3(const Mask& m) {
  Mask out = Mask::empty(m.width, m.height);
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x) {
      bool v = true;
      for (int dy = -1; dy <= 1 && v; ++dy)
        for (int dx = -1; dx <= 1 && v; ++dx) {
          const int nx = x + dx, ny = y + dy;
          if (nx >= 0 && ny >= 0 && nx < m.width && ny < m.height)
            v = m.data(ny, nx);
        }
      out.data(y, x) = v;
    }
  return out;
}

}  // namespace

Mask close3x3(const Mask& m) { return erode3x3(dilate3x3(m)); }

Mask estimate_mask(const Frame& frame, const SceneTemplate& tpl,
                   const WarpField& inv_warp, double alpha) {
  Mask raw = Mask::empty(frame.width, frame.height);
  for (int y = 0; y < frame.height; ++y)
    for (int x = 0; x < frame.width; ++x) {
      if (!inv_warp.valid(y, x)) continue;
      const double px = inv_warp.map_x(y, x), py = inv_warp.map_y(y, x);
      if (!in_sample_rect(tpl.domain.width, tpl.domain.height, px, py))
        continue;
      const int nx = nearest_index(px, tpl.domain.width);
      const int ny = nearest_index(py, tpl.domain.height);
      if (!tpl.defined(ny, nx)) continue;
      double r = 0;
      for (int c = 0; c < frame.channels(); ++c) {
        const double d = frame.ch[c](y, x) - tpl.radiance[c](ny, nx);
        r += d * d;
      }
      raw.data(y, x) = r > alpha;
    }
  return close3x3(remove_small_components(raw, 16));
}

}  // namespace scenefill
