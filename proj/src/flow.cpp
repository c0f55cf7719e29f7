#include "scenefill/flow.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace scenefill {

namespace {

Array2d downsample2(const Array2d& in) {
  const int h = static_cast<int>(in.rows());
  const int w = static_cast<int>(in.cols());
  const int hh = (h + 1) / 2;
  const int ww = (w + 1) / 2;
  Array2d out(hh, ww);
  for (int y = 0; y < hh; ++y)
    for (int x = 0; x < ww; ++x) {
      double s = 0;
      int n = 0;
      for (int dy = 0; dy < 2; ++dy)
        for (int dx = 0; dx < 2; ++dx) {
          const int yy = 2 * y + dy, xx = 2 * x + dx;
          if (yy < h && xx < w) {
            s += in(yy, xx);
            ++n;
          }
        }
      out(y, x) = s / n;
    }
  return out;
}

BoolArray downsample2_or(const BoolArray& in) {
  const int h = static_cast<int>(in.rows());
  const int w = static_cast<int>(in.cols());
  const int hh = (h + 1) / 2;
  const int ww = (w + 1) / 2;
  BoolArray out(hh, ww);
  for (int y = 0; y < hh; ++y)
    for (int x = 0; x < ww; ++x) {
      bool v = false;
      for (int dy = 0; dy < 2; ++dy)
        for (int dx = 0; dx < 2; ++dx) {
          const int yy = 2 * y + dy, xx = 2 * x + dx;
          if (yy < h && xx < w) v = v || in(yy, xx);
        }
      out(y, x) = v;
    }
  return out;
}

double sample_bilinear_clamped(const Array2d& plane, double x, double y) {
  const int w = static_cast<int>(plane.cols());
  const int h = static_cast<int>(plane.rows());
  x = std::clamp(x, -0.5, w - 0.5);
  y = std::clamp(y, -0.5, h - 0.5);
  return sample_bilinear(plane, x, y);
}

// Resize a displacement channel to (h, w), rescaling values by the axis ratio.
Array2d resize_flow_channel(const Array2d& in, int h, int w, double scale) {
  const int hc = static_cast<int>(in.rows());
  const int wc = static_cast<int>(in.cols());
  Array2d out(h, w);
  const double sx = static_cast<double>(wc) / w;
  const double sy = static_cast<double>(hc) / h;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double cx = (x + 0.5) * sx - 0.5;
      const double cy = (y + 0.5) * sy - 0.5;
      out(y, x) = scale * sample_bilinear_clamped(in, cx, cy);
    }
  return out;
}

struct LevelData {
  std::vector<Array2d> src, dst;
  BoolArray smask, dmask;
  int w, h;
};

// One pyramid level of incremental Horn-Schunck with a masked data term.
// u, v are updated in place (level-local pixel units).
void solve_level(const LevelData& L, Array2d& u, Array2d& v,
                 const FlowParams& p) {
  const int h = L.h, w = L.w;
  const int k = static_cast<int>(L.src.size());
  const double alpha = p.smoothness_weight;
  const int warp_updates = std::max(1, p.warp_updates_per_level);
  const int inner = std::max(1, p.iterations_per_level / warp_updates);

  Array2d A11(h, w), A12(h, w), A22(h, w), b1(h, w), b2(h, w);
  BoolArray active(h, w);
  Array2d un(h, w), vn(h, w);
  std::vector<Array2d> dstw(k, Array2d::Zero(h, w));

  for (int wi = 0; wi < warp_updates; ++wi) {
    // Warp dst by the current flow; disable data where the lookup leaves
    // the image or either endpoint is masked.
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const double px = x + u(y, x), py = y + v(y, x);
        bool ok = in_sample_rect(w, h, px, py) && !L.smask(y, x);
        if (ok) {
          // Reject if any pixel touched by the bilinear lookup is masked,
          // so high-contrast masked content cannot bleed into the data term.
          const int x0 = std::clamp(int(std::floor(px)), 0, w - 1);
          const int y0 = std::clamp(int(std::floor(py)), 0, h - 1);
          const int x1 = std::min(x0 + 1, w - 1);
          const int y1 = std::min(y0 + 1, h - 1);
          ok = !L.dmask(y0, x0) && !L.dmask(y0, x1) && !L.dmask(y1, x0) &&
               !L.dmask(y1, x1);
        }
        active(y, x) = ok;
        for (int c = 0; c < k; ++c)
          dstw[c](y, x) = ok ? sample_bilinear(L.dst[c], px, py) : 0.0;
      }
    // Linearize the data term around (u0, v0) = current flow.
    A11.setZero();
    A12.setZero();
    A22.setZero();
    b1.setZero();
    b2.setZero();
    const BoolArray lookup_ok = active;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        if (!active(y, x)) continue;
        const int xm = std::max(x - 1, 0), xp = std::min(x + 1, w - 1);
        const int ym = std::max(y - 1, 0), yp = std::min(y + 1, h - 1);
        for (int c = 0; c < k; ++c) {
          if (!lookup_ok(y, xm) || !lookup_ok(y, xp) || !lookup_ok(ym, x) ||
              !lookup_ok(yp, x)) {
            active(y, x) = false;
            break;
          }
          const double ix = (dstw[c](y, xp) - dstw[c](y, xm)) / (xp - xm);
          const double iy = (dstw[c](yp, x) - dstw[c](ym, x)) / (yp - ym);
          const double it = dstw[c](y, x) - L.src[c](y, x);
          A11(y, x) += ix * ix;
          A12(y, x) += ix * iy;
          A22(y, x) += iy * iy;
          b1(y, x) += ix * it;
          b2(y, x) += iy * it;
        }
      }
    const Array2d u0 = u, v0 = v;
    for (int it = 0; it < inner; ++it) {
      double delta = 0;
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          double ub = 0, vb = 0;
          int n = 0;
          if (x > 0) { ub += u(y, x - 1); vb += v(y, x - 1); ++n; }
          if (x < w - 1) { ub += u(y, x + 1); vb += v(y, x + 1); ++n; }
          if (y > 0) { ub += u(y - 1, x); vb += v(y - 1, x); ++n; }
          if (y < h - 1) { ub += u(y + 1, x); vb += v(y + 1, x); ++n; }
          ub /= n;
          vb /= n;
          double nu, nv;
          if (active(y, x)) {
            const double an = alpha * n;
            const double m11 = an + A11(y, x);
            const double m22 = an + A22(y, x);
            const double m12 = A12(y, x);
            const double r1 = an * ub + A11(y, x) * u0(y, x) +
                              m12 * v0(y, x) - b1(y, x);
            const double r2 = an * vb + m12 * u0(y, x) +
                              A22(y, x) * v0(y, x) - b2(y, x);
            const double det = m11 * m22 - m12 * m12;
            nu = (m22 * r1 - m12 * r2) / det;
            nv = (m11 * r2 - m12 * r1) / det;
          } else {
            nu = ub;
            nv = vb;
          }
          delta += std::abs(nu - u(y, x)) + std::abs(nv - v(y, x));
          un(y, x) = nu;
          vn(y, x) = nv;
        }
      u.swap(un);
      v.swap(vn);
      if (delta / (2.0 * h * w) < p.convergence_tol) break;
    }
  }
}

}  // namespace

void harmonic_fill_plane(Array2d& plane, const BoolArray& hole,
                         double residual_tol, int max_iters) {
  const int h = static_cast<int>(plane.rows());
  const int w = static_cast<int>(plane.cols());
  if (hole.count() == 0) return;
  if (hole.count() == static_cast<long>(h) * w)
    throw std::invalid_argument("harmonic fill: hole covers entire domain");
  const double omega = 1.9;  // SOR
  for (int it = 0; it < max_iters; ++it) {
    double max_res = 0;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        if (!hole(y, x)) continue;
        double s = 0;
        int n = 0;
        if (x > 0) { s += plane(y, x - 1); ++n; }
        if (x < w - 1) { s += plane(y, x + 1); ++n; }
        if (y > 0) { s += plane(y - 1, x); ++n; }
        if (y < h - 1) { s += plane(y + 1, x); ++n; }
        const double target = s / n;
        const double res = target - plane(y, x);
        plane(y, x) += omega * res;
        max_res = std::max(max_res, std::abs(res));
      }
    if (max_res < residual_tol) break;
  }
}

WarpField harmonic_extend(const WarpField& w, const Mask& hole) {
  if (hole.width != w.src.width || hole.height != w.src.height)
    throw std::invalid_argument("harmonic_extend: hole/src size mismatch");
  WarpField out = w;
  Array2d dx = out.disp_x();
  Array2d dy = out.disp_y();
  harmonic_fill_plane(dx, hole.data);
  harmonic_fill_plane(dy, hole.data);
  const double ox = w.src.origin.x() - w.dst.origin.x();
  const double oy = w.src.origin.y() - w.dst.origin.y();
  for (int y = 0; y < w.src.height; ++y)
    for (int x = 0; x < w.src.width; ++x) {
      out.map_x(y, x) = x + ox + dx(y, x);
      out.map_y(y, x) = y + oy + dy(y, x);
      if (hole.data(y, x)) out.valid(y, x) = true;
    }
  out.clip_valid_to_dst();
  return out;
}

WarpField compute_flow(const Frame& src, const Frame& dst,
                       const Mask& src_mask, const Mask& dst_mask,
                       const FlowParams& params) {
  if (src.width != dst.width || src.height != dst.height ||
      src.channels() != dst.channels())
    throw std::invalid_argument("compute_flow: frame geometry mismatch");
  if (src_mask.width != src.width || src_mask.height != src.height ||
      dst_mask.width != dst.width || dst_mask.height != dst.height)
    throw std::invalid_argument("compute_flow: mask geometry mismatch");

  // Build pyramids; stop early if a level would fall below 8 px.
  std::vector<LevelData> pyr;
  {
    LevelData L;
    L.src = src.ch;
    L.dst = dst.ch;
    L.smask = src_mask.data;
    L.dmask = dst_mask.data;
    L.w = src.width;
    L.h = src.height;
    pyr.push_back(std::move(L));
  }
  for (int l = 1; l < params.pyramid_levels; ++l) {
    const LevelData& prev = pyr.back();
    if (prev.w < 16 || prev.h < 16) break;
    LevelData L;
    for (const auto& c : prev.src) L.src.push_back(downsample2(c));
    for (const auto& c : prev.dst) L.dst.push_back(downsample2(c));
    L.smask = downsample2_or(prev.smask);
    L.dmask = downsample2_or(prev.dmask);
    L.w = static_cast<int>(L.src[0].cols());
    L.h = static_cast<int>(L.src[0].rows());
    pyr.push_back(std::move(L));
  }

  Array2d u = Array2d::Zero(pyr.back().h, pyr.back().w);
  Array2d v = u;
  for (int l = static_cast<int>(pyr.size()) - 1; l >= 0; --l) {
    const LevelData& L = pyr[l];
    if (static_cast<int>(u.rows()) != L.h ||
        static_cast<int>(u.cols()) != L.w) {
      const double sx = static_cast<double>(L.w) / u.cols();
      const double sy = static_cast<double>(L.h) / u.rows();
      u = resize_flow_channel(u, L.h, L.w, sx);
      v = resize_flow_channel(v, L.h, L.w, sy);
    }
    solve_level(L, u, v, params);
  }

  // Canonical masked-pixel path: harmonic extension of the surrounding flow.
  harmonic_fill_plane(u, src_mask.data);
  harmonic_fill_plane(v, src_mask.data);

  WarpField out = WarpField::identity(src.width, src.height);
  out.map_x += u;
  out.map_y += v;
  out.clip_valid_to_dst();
  return out;
}

bool warp_lookup(const WarpField& w, double qx, double qy, double& ox,
                 double& oy) {
  const int W = w.src.width, H = w.src.height;
  if (!in_sample_rect(W, H, qx, qy)) {
    ox = sample_bilinear_clamped(w.map_x, qx, qy);
    oy = sample_bilinear_clamped(w.map_y, qx, qy);
    return false;
  }
  const double cx = std::clamp(qx, 0.0, static_cast<double>(W - 1));
  const double cy = std::clamp(qy, 0.0, static_cast<double>(H - 1));
  const int x0 = std::min(static_cast<int>(cx), std::max(W - 2, 0));
  const int y0 = std::min(static_cast<int>(cy), std::max(H - 2, 0));
  const int x1 = std::min(x0 + 1, W - 1);
  const int y1 = std::min(y0 + 1, H - 1);
  const double fx = cx - x0, fy = cy - y0;
  ox = (1 - fy) * ((1 - fx) * w.map_x(y0, x0) + fx * w.map_x(y0, x1)) +
       fy * ((1 - fx) * w.map_x(y1, x0) + fx * w.map_x(y1, x1));
  oy = (1 - fy) * ((1 - fx) * w.map_y(y0, x0) + fx * w.map_y(y0, x1)) +
       fy * ((1 - fx) * w.map_y(y1, x0) + fx * w.map_y(y1, x1));
  bool ok = true;
  if (fx > 0 || x0 == x1) ok = ok && w.valid(y0, x1);
  if (fx < 1) ok = ok && w.valid(y0, x0);
  if (fy > 0) {
    if (fx > 0 || x0 == x1) ok = ok && w.valid(y1, x1);
    if (fx < 1) ok = ok && w.valid(y1, x0);
  }
  return ok;
}

WarpField compose(const WarpField& w_ab, const WarpField& w_bc) {
  if (!(w_ab.dst == w_bc.src))
    throw std::invalid_argument("compose: intermediate geometry mismatch");
  WarpField out;
  out.src = w_ab.src;
  out.dst = w_bc.dst;
  const int h = w_ab.src.height, w = w_ab.src.width;
  out.map_x.resize(h, w);
  out.map_y.resize(h, w);
  out.valid.resize(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double ox, oy;
      const bool mid_ok =
          warp_lookup(w_bc, w_ab.map_x(y, x), w_ab.map_y(y, x), ox, oy);
      out.map_x(y, x) = ox;
      out.map_y(y, x) = oy;
      out.valid(y, x) = w_ab.valid(y, x) && mid_ok;
    }
  out.clip_valid_to_dst();
  return out;
}

Mask check_fb_consistency(const WarpField& w_fwd, const WarpField& w_bwd,
                          double tol_px) {
  if (!(w_fwd.dst == w_bwd.src) || !(w_bwd.dst == w_fwd.src))
    throw std::invalid_argument("check_fb_consistency: geometry mismatch");
  const int h = w_fwd.src.height, w = w_fwd.src.width;
  Mask out = Mask::empty(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double qx = w_fwd.map_x(y, x), qy = w_fwd.map_y(y, x);
      double rx, ry;
      if (!w_fwd.valid(y, x) || !warp_lookup(w_bwd, qx, qy, rx, ry)) {
        out.data(y, x) = true;
        continue;
      }
      const double dx = rx - x, dy = ry - y;
      out.data(y, x) = std::hypot(dx, dy) > tol_px;
    }
  return out;
}

WarpField extend_to_rect(const WarpField& w, const DomainRect& new_src) {
  const int ox = w.src.origin.x() - new_src.origin.x();
  const int oy = w.src.origin.y() - new_src.origin.y();
  if (ox < 0 || oy < 0 || ox + w.src.width > new_src.width ||
      oy + w.src.height > new_src.height)
    throw std::invalid_argument("extend_to_rect: new rect must contain src");
  Array2d dx = Array2d::Zero(new_src.height, new_src.width);
  Array2d dy = dx;
  BoolArray hole = BoolArray::Constant(new_src.height, new_src.width, true);
  const Array2d odx = w.disp_x();
  const Array2d ody = w.disp_y();
  for (int y = 0; y < w.src.height; ++y)
    for (int x = 0; x < w.src.width; ++x) {
      dx(oy + y, ox + x) = odx(y, x);
      dy(oy + y, ox + x) = ody(y, x);
      hole(oy + y, ox + x) = false;
    }
  harmonic_fill_plane(dx, hole);
  harmonic_fill_plane(dy, hole);
  WarpField out = WarpField::identity(new_src, w.dst);
  out.map_x += dx;
  out.map_y += dy;
  for (int y = 0; y < w.src.height; ++y)
    for (int x = 0; x < w.src.width; ++x)
      out.valid(oy + y, ox + x) = w.valid(y, x);
  out.clip_valid_to_dst();
  return out;
}

void write_flo(const std::filesystem::path& path, const WarpField& w) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_flo: cannot open " + path.string());
  const float magic = 202021.25f;
  const int32_t width = w.src.width, height = w.src.height;
  f.write(reinterpret_cast<const char*>(&magic), 4);
  f.write(reinterpret_cast<const char*>(&width), 4);
  f.write(reinterpret_cast<const char*>(&height), 4);
  const Array2d dx = w.disp_x();
  const Array2d dy = w.disp_y();
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const float uv[2] = {static_cast<float>(dx(y, x)),
                           static_cast<float>(dy(y, x))};
      f.write(reinterpret_cast<const char*>(uv), 8);
    }
  if (!f) throw std::runtime_error("write_flo: write failed " + path.string());
}

WarpField read_flo(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("read_flo: cannot open " + path.string());
  float magic = 0;
  int32_t width = 0, height = 0;
  f.read(reinterpret_cast<char*>(&magic), 4);
  f.read(reinterpret_cast<char*>(&width), 4);
  f.read(reinterpret_cast<char*>(&height), 4);
  if (!f || magic != 202021.25f || width < 1 || height < 1)
    throw std::runtime_error("read_flo: bad header in " + path.string());
  WarpField w = WarpField::identity(width, height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      float uv[2];
      f.read(reinterpret_cast<char*>(uv), 8);
      w.map_x(y, x) += uv[0];
      w.map_y(y, x) += uv[1];
    }
  if (!f) throw std::runtime_error("read_flo: truncated " + path.string());
  w.clip_valid_to_dst();
  return w;
}

}  // namespace scenefill
