#include "scenefill/scene_template.hpp"

#include <cmath>
#include <deque>
#include <map>

#include "scenefill/inpaint.hpp"
#include "scenefill/parallel.hpp"

namespace scenefill {

void SceneTemplate::finalize() {
  const int h = domain.height, w = domain.width;
  const int k = channels();
  radiance.assign(k, Array2d::Zero(h, w));
  defined = BoolArray::Constant(h, w, false);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (weight(y, x) > kWeightEps) {
        defined(y, x) = true;
        for (int c = 0; c < k; ++c)
          radiance[c](y, x) = numerator[c](y, x) / weight(y, x);
      }
    }
}

Frame SceneTemplate::radiance_frame() const {
  Frame f = Frame::zeros(domain.width, domain.height, channels());
  f.ch = radiance;
  return f;
}

double jacobian_det(const WarpField& w, int x, int y) {
  const int W = w.src.width, H = w.src.height;
  const int xm = std::max(x - 1, 0), xp = std::min(x + 1, W - 1);
  const int ym = std::max(y - 1, 0), yp = std::min(y + 1, H - 1);
  const double dx = xp - xm > 0 ? xp - xm : 1;
  const double dy = yp - ym > 0 ? yp - ym : 1;
  const double axx = (w.map_x(y, xp) - w.map_x(y, xm)) / dx;
  const double axy = (w.map_x(yp, x) - w.map_x(ym, x)) / dy;
  const double ayx = (w.map_y(y, xp) - w.map_y(y, xm)) / dx;
  const double ayy = (w.map_y(yp, x) - w.map_y(ym, x)) / dy;
  return std::max(axx * ayy - axy * ayx, 0.0);
}

SceneTemplate accumulate_template(std::span<const Frame> frames,
                                  std::span<const Mask> masks,
                                  std::span<const WarpField> warps) {
  if (frames.empty() || frames.size() != masks.size() ||
      frames.size() != warps.size())
    throw std::invalid_argument("accumulate_template: list size mismatch");
  const DomainRect dom = warps[0].src;
  const int k = frames[0].channels();
  SceneTemplate tpl;
  tpl.domain = dom;
  tpl.numerator.assign(k, Array2d::Zero(dom.height, dom.width));
  tpl.weight = Array2d::Zero(dom.height, dom.width);
  for (size_t i = 0; i < frames.size(); ++i) {
    const WarpField& w = warps[i];
    if (!(w.src == dom))
      throw std::invalid_argument("accumulate_template: warp domain mismatch");
    const Frame& I = frames[i];
    const Mask& M = masks[i];
    for (int y = 0; y < dom.height; ++y)
      for (int x = 0; x < dom.width; ++x) {
        if (!w.valid(y, x)) continue;
        const double qx = w.map_x(y, x), qy = w.map_y(y, x);
        if (!in_sample_rect(I.width, I.height, qx, qy)) continue;
        if (M.data(nearest_index(qy, I.height), nearest_index(qx, I.width)))
          continue;
        const double J = jacobian_det(w, x, y);
        if (J <= 0) continue;
        for (int c = 0; c < k; ++c)
          tpl.numerator[c](y, x) += J * sample_bilinear(I.ch[c], qx, qy);
        tpl.weight(y, x) += J;
      }
  }
  tpl.finalize();
  return tpl;
}

namespace {

// Renders the template through w_inv into the frame's domain. Pixels whose
// lookup is invalid or hits undefined radiance come back masked.
std::pair<Frame, Mask> render_prediction(const SceneTemplate& tpl,
                                         const WarpField& w_inv, int width,
                                         int height) {
  const int k = tpl.channels();
  Frame pred = Frame::zeros(width, height, k);
  Mask pmask = Mask::empty(width, height);
  const int TW = tpl.domain.width, TH = tpl.domain.height;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      bool ok = w_inv.valid(y, x);
      const double qx = w_inv.map_x(y, x), qy = w_inv.map_y(y, x);
      ok = ok && in_sample_rect(TW, TH, qx, qy);
      if (ok) {
        const int nx = nearest_index(qx, TW), ny = nearest_index(qy, TH);
        ok = tpl.defined(ny, nx);
        if (ok) {
          // Bilinear when the whole stencil is defined, nearest otherwise.
          const double cx = std::clamp(qx, 0.0, double(TW - 1));
          const double cy = std::clamp(qy, 0.0, double(TH - 1));
          const int x0 = std::min(int(cx), std::max(TW - 2, 0));
          const int y0 = std::min(int(cy), std::max(TH - 2, 0));
          const int x1 = std::min(x0 + 1, TW - 1);
          const int y1 = std::min(y0 + 1, TH - 1);
          const bool full = tpl.defined(y0, x0) && tpl.defined(y0, x1) &&
                            tpl.defined(y1, x0) && tpl.defined(y1, x1);
          for (int c = 0; c < k; ++c)
            pred.ch[c](y, x) = full
                                   ? sample_bilinear(tpl.radiance[c], qx, qy)
                                   : tpl.radiance[c](ny, nx);
        }
      }
      pmask.data(y, x) = !ok;
    }
  return {std::move(pred), std::move(pmask)};
}

}  // namespace

std::pair<WarpField, WarpField> refine_warp(const SceneTemplate& tpl,
                                            const Frame& frame,
                                            const Mask& mask,
                                            const WarpField& w_init,
                                            const WarpField& w_inv_init,
                                            const FlowParams& params) {
  auto [pred, pmask] = render_prediction(tpl, w_inv_init, frame.width,
                                         frame.height);
  const long covered =
      static_cast<long>(frame.width) * frame.height - pmask.count();
  if (covered < 0.05 * frame.width * frame.height)
    return {w_init, w_inv_init};

  // pred(x) ~ frame(x + g(x)); composing g into w_init aligns the template
  // to the frame, and the reverse flow refines the inverse.
  const WarpField g = compute_flow(pred, frame, pmask, mask, params);
  const WarpField h = compute_flow(frame, pred, mask, pmask, params);
  return {compose(w_init, g), compose(h, w_inv_init)};
}

namespace {

WarpField retarget(const WarpField& w, const DomainRect& new_dst) {
  WarpField out = w;
  out.dst = new_dst;
  const double sx = w.dst.origin.x() - new_dst.origin.x();
  const double sy = w.dst.origin.y() - new_dst.origin.y();
  out.map_x += sx;
  out.map_y += sy;
  out.clip_valid_to_dst();
  return out;
}

WarpField cached_flow(const Frame& a, const Frame& b, const Mask& ma,
                      const Mask& mb, const JointParams& params, int ia,
                      int ib) {
  if (params.flow_cache_dir) {
    const auto path = *params.flow_cache_dir /
                      ("flow_" + std::to_string(ia) + "_" +
                       std::to_string(ib) + ".flo");
    if (std::filesystem::exists(path)) return read_flo(path);
    WarpField w = compute_flow(a, b, ma, mb, params.flow);
    write_flo(path, w);
    return w;
  }
  return compute_flow(a, b, ma, mb, params.flow);
}

}  // namespace

AdjacentFlows compute_adjacent_flows(std::span<const Frame> frames,
                                     std::span<const Mask> masks,
                                     const JointParams& params) {
  const int T = static_cast<int>(frames.size());
  AdjacentFlows adj;
  adj.fwd.resize(std::max(T - 1, 0));
  adj.bwd.resize(std::max(T - 1, 0));
  parallel_for(T - 1, params.threads, [&](int i) {
    adj.fwd[i] = cached_flow(frames[i], frames[i + 1], masks[i], masks[i + 1],
                             params, i, i + 1);
    adj.bwd[i] = cached_flow(frames[i + 1], frames[i], masks[i + 1], masks[i],
                             params, i + 1, i);
  });
  return adj;
}

std::pair<std::vector<WarpField>, std::vector<WarpField>>
chain_from_key(const AdjacentFlows& adj, int key_frame) {
  const int T = static_cast<int>(adj.fwd.size()) + 1;
  if (key_frame < 0 || key_frame >= T)
    throw std::invalid_argument("chain_from_key: key frame out of range");
  const DomainRect D = adj.fwd.empty() ? DomainRect{}
                                       : adj.fwd[0].src;
  std::vector<WarpField> wk(T), wik(T);
  wk[key_frame] = WarpField::identity(D, D);
  wik[key_frame] = wk[key_frame];
  for (int i = key_frame + 1; i < T; ++i) {
    wk[i] = compose(wk[i - 1], adj.fwd[i - 1]);
    wik[i] = compose(adj.bwd[i - 1], wik[i - 1]);
  }
  for (int i = key_frame - 1; i >= 0; --i) {
    wk[i] = compose(wk[i + 1], adj.bwd[i]);
    wik[i] = compose(adj.fwd[i], wik[i + 1]);
  }
  return {std::move(wk), std::move(wik)};
}

namespace {

// Extended-domain estimate from the key->frame warps: pads the base rect by
// the largest observed displacement, extends each warp onto the padded rect
// by harmonic extrapolation, and keeps the pixels whose extrapolated map
// still lands inside the frame.
DomainRect extended_domain(std::span<const Frame> frames,
                           std::span<const WarpField> warps,
                           const DomainRect& base) {
  int pad = 0;
  for (const WarpField& w : warps) {
    const Array2d dx = w.disp_x(), dy = w.disp_y();
    for (int y = 0; y < w.src.height; ++y)
      for (int x = 0; x < w.src.width; ++x)
        if (w.valid(y, x)) {
          const double d = std::max(std::abs(dx(y, x)), std::abs(dy(y, x)));
          pad = std::max(pad, static_cast<int>(std::ceil(d)));
        }
  }
  if (pad == 0) return base;
  DomainRect padded = base;
  padded.origin.x() -= pad;
  padded.origin.y() -= pad;
  padded.width += 2 * pad;
  padded.height += 2 * pad;
  std::vector<DomainRect> rects{base};
  for (size_t i = 0; i < warps.size(); ++i) {
    const WarpField we = extend_to_rect(warps[i], padded);
    int x0 = padded.width, y0 = padded.height, x1 = -1, y1 = -1;
    for (int y = 0; y < padded.height; ++y)
      for (int x = 0; x < padded.width; ++x)
        if (in_sample_rect(frames[i].width, frames[i].height, we.map_x(y, x),
                           we.map_y(y, x))) {
          x0 = std::min(x0, x);
          x1 = std::max(x1, x);
          y0 = std::min(y0, y);
          y1 = std::max(y1, y);
        }
    if (x1 >= x0)
      rects.push_back({{padded.origin.x() + x0, padded.origin.y() + y0},
                       x1 - x0 + 1, y1 - y0 + 1});
  }
  return rect_union(rects);
}

double template_rel_change(const SceneTemplate& a, const SceneTemplate& b) {
  // Compare over the overlap of the two domains where both are defined.
  const int x0 = std::max(a.domain.origin.x(), b.domain.origin.x());
  const int y0 = std::max(a.domain.origin.y(), b.domain.origin.y());
  const int x1 = std::min(a.domain.origin.x() + a.domain.width,
                          b.domain.origin.x() + b.domain.width);
  const int y1 = std::min(a.domain.origin.y() + a.domain.height,
                          b.domain.origin.y() + b.domain.height);
  double num = 0, den = 0;
  long n = 0;
  for (int gy = y0; gy < y1; ++gy)
    for (int gx = x0; gx < x1; ++gx) {
      const int ax = gx - a.domain.origin.x(), ay = gy - a.domain.origin.y();
      const int bx = gx - b.domain.origin.x(), by = gy - b.domain.origin.y();
      if (!a.defined(ay, ax) || !b.defined(by, bx)) continue;
      for (int c = 0; c < a.channels(); ++c) {
        num += std::abs(a.radiance[c](ay, ax) - b.radiance[c](by, bx));
        den += std::abs(a.radiance[c](ay, ax));
      }
      ++n;
    }
  if (n == 0) return 1.0;
  return num / (den + 1e-12);
}

}  // namespace

InferenceState run_joint_optimization(
    std::vector<Frame> frames, std::vector<Mask> masks, int key_frame,
    const JointParams& params,
    const std::optional<AdjacentFlows>& precomputed_adjacent) {
  const int T = static_cast<int>(frames.size());
  if (T == 0) throw std::invalid_argument("run_joint_optimization: no frames");
  if (static_cast<int>(masks.size()) != T)
    throw std::invalid_argument("run_joint_optimization: mask count mismatch");
  if (key_frame < 0 || key_frame >= T)
    throw std::invalid_argument("run_joint_optimization: bad key frame");

  InferenceState st;
  st.key_frame = key_frame;

  if (T == 1) {
    st.warps = {WarpField::identity(frames[0].width, frames[0].height)};
    st.inv_warps = st.warps;
    st.tpl = accumulate_template(frames, masks, st.warps);
    st.frames = std::move(frames);
    st.masks = std::move(masks);
    return st;
  }

  const AdjacentFlows adj = precomputed_adjacent
                                ? *precomputed_adjacent
                                : compute_adjacent_flows(frames, masks, params);
  auto [wk, wik] = chain_from_key(adj, key_frame);

  // Extended domain: union of the back-warped image domains, in key-frame
  // coordinates.
  const DomainRect D = wk[key_frame].src;
  DomainRect omega = extended_domain(frames, wk, D);

  st.warps.resize(T);
  st.inv_warps.resize(T);
  for (int i = 0; i < T; ++i) {
    st.warps[i] = extend_to_rect(wk[i], omega);
    st.inv_warps[i] = retarget(wik[i], omega);
  }

  SceneTemplate prev_tpl;
  bool have_prev = false;
  for (int outer = 0; outer < std::max(1, params.max_outer); ++outer) {
    // Grow omega if refined warps now reach further back.
    if (outer > 0) {
      const DomainRect grown = extended_domain(frames, st.warps, omega);
      if (!(grown == omega)) {
        for (int i = 0; i < T; ++i) {
          st.warps[i] = extend_to_rect(st.warps[i], grown);
          st.inv_warps[i] = retarget(st.inv_warps[i], grown);
        }
        omega = grown;
      }
    }
    st.tpl = accumulate_template(frames, masks, st.warps);
    if (have_prev &&
        template_rel_change(st.tpl, prev_tpl) < params.template_rel_tol)
      break;
    prev_tpl = st.tpl;
    have_prev = true;
    if (!params.refine_enabled) break;
    parallel_for(T, params.threads, [&](int i) {
      auto [w, winv] = refine_warp(st.tpl, frames[i], masks[i], st.warps[i],
                                   st.inv_warps[i], params.refine);
      st.warps[i] = std::move(w);
      st.inv_warps[i] = std::move(winv);
    });
  }
  st.tpl = accumulate_template(frames, masks, st.warps);

  st.frames = std::move(frames);
  st.masks = std::move(masks);
  return st;
}

namespace {

struct WindowEntry {
  int idx;
  WarpField w;     // current frame's D -> D_idx
  WarpField winv;  // D_idx -> current frame's D
};

struct SweepOutputs {
  std::vector<InpaintResult> results;
};

SweepOutputs run_sweep(std::span<const Frame> frames,
                       std::span<const Mask> masks,
                       std::span<const int> order, int window,
                       const JointParams& jparams,
                       const InpaintParams& iparams,
                       std::map<std::pair<int, int>, WarpField>& flow_cache) {
  const int T = static_cast<int>(frames.size());
  SweepOutputs out;
  out.results.resize(T);

  auto pair_flow = [&](int a, int b) -> const WarpField& {
    const auto key = std::make_pair(a, b);
    auto it = flow_cache.find(key);
    if (it == flow_cache.end())
      it = flow_cache
               .emplace(key, compute_flow(frames[a], frames[b], masks[a],
                                          masks[b], jparams.flow))
               .first;
    return it->second;
  };

  std::deque<WindowEntry> win;
  for (size_t step = 0; step < order.size(); ++step) {
    const int fi = order[step];
    const WarpField ident =
        WarpField::identity(frames[fi].width, frames[fi].height);
    if (step == 0) {
      win.clear();
      win.push_back({fi, ident, ident});
    } else {
      const int prev = order[step - 1];
      const WarpField& to_prev = pair_flow(fi, prev);
      const WarpField& from_prev = pair_flow(prev, fi);
      for (auto& e : win) {
        e.w = compose(to_prev, e.w);
        e.winv = compose(e.winv, from_prev);
      }
      win.push_back({fi, ident, ident});
      while (static_cast<int>(win.size()) > window) win.pop_front();
    }

    InferenceState st;
    for (const auto& e : win) {
      st.frames.push_back(frames[e.idx]);
      st.masks.push_back(masks[e.idx]);
      st.warps.push_back(e.w);
      st.inv_warps.push_back(e.winv);
    }
    st.key_frame = static_cast<int>(win.size()) - 1;
    st.tpl = accumulate_template(st.frames, st.masks, st.warps);
    if (jparams.refine_enabled && win.size() > 1) {
      parallel_for(static_cast<int>(win.size()) - 1, jparams.threads,
                   [&](int j) {
                     auto [w, winv] = refine_warp(
                         st.tpl, st.frames[j], st.masks[j], st.warps[j],
                         st.inv_warps[j], jparams.refine);
                     st.warps[j] = std::move(w);
                     st.inv_warps[j] = std::move(winv);
                     win[j].w = st.warps[j];
                     win[j].winv = st.inv_warps[j];
                   });
      st.tpl = accumulate_template(st.frames, st.masks, st.warps);
    }
    out.results[fi] = inpaint_frame(st, st.key_frame, iparams);
  }
  return out;
}

}  // namespace

SlidingResult sliding_window_run(std::span<const Frame> frames,
                                 std::span<const Mask> masks, int window,
                                 const JointParams& jparams,
                                 const InpaintParams& iparams) {
  const int T = static_cast<int>(frames.size());
  if (T == 0) throw std::invalid_argument("sliding_window_run: no frames");
  window = std::min(std::max(window, 1), T);

  std::vector<int> fwd_order(T), bwd_order(T);
  for (int i = 0; i < T; ++i) {
    fwd_order[i] = i;
    bwd_order[i] = T - 1 - i;
  }
  std::map<std::pair<int, int>, WarpField> flow_cache;
  SweepOutputs fs =
      run_sweep(frames, masks, fwd_order, window, jparams, iparams, flow_cache);
  SweepOutputs bs =
      run_sweep(frames, masks, bwd_order, window, jparams, iparams, flow_cache);

  SlidingResult out;
  out.frames.reserve(T);
  out.unfilled_counts.assign(T, 0);
  for (int t = 0; t < T; ++t) {
    InpaintResult& f = fs.results[t];
    const InpaintResult& b = bs.results[t];
    for (int y = 0; y < frames[t].height; ++y)
      for (int x = 0; x < frames[t].width; ++x) {
        if (!masks[t].data(y, x)) continue;
        if (b.sample_count(y, x) > f.sample_count(y, x)) {
          for (int c = 0; c < frames[t].channels(); ++c)
            f.frame.ch[c](y, x) = b.frame.ch[c](y, x);
          f.sample_count(y, x) = b.sample_count(y, x);
          f.unfilled(y, x) = b.unfilled(y, x);
        }
      }
    out.unfilled_counts[t] = f.unfilled.count();
    if (out.unfilled_counts[t] > 0 &&
        out.unfilled_counts[t] <
            static_cast<long>(frames[t].width) * frames[t].height) {
      Mask holes = Mask::empty(frames[t].width, frames[t].height);
      holes.data = f.unfilled;
      f.frame = diffusion_fill(f.frame, holes);
    }
    out.frames.push_back(std::move(f.frame));
  }
  return out;
}

}  // namespace scenefill
