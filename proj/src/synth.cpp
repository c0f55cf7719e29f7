#include "scenefill/synth.hpp"

#include <cmath>

namespace scenefill {

double Rng::gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform(), u2 = uniform();
  while (u1 <= 1e-12) u1 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * M_PI * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

namespace {

Array2d gaussian_blur(const Array2d& in, double sigma) {
  const int r = std::max(1, static_cast<int>(std::ceil(3 * sigma)));
  Eigen::VectorXd k(2 * r + 1);
  for (int i = -r; i <= r; ++i)
    k[i + r] = std::exp(-0.5 * i * i / (sigma * sigma));
  k /= k.sum();
  const int h = static_cast<int>(in.rows());
  const int w = static_cast<int>(in.cols());
  Array2d tmp(h, w), out(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double s = 0;
      for (int i = -r; i <= r; ++i)
        s += k[i + r] * in(y, std::clamp(x + i, 0, w - 1));
      tmp(y, x) = s;
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double s = 0;
      for (int i = -r; i <= r; ++i)
        s += k[i + r] * tmp(std::clamp(y + i, 0, h - 1), x);
      out(y, x) = s;
    }
  return out;
}

Eigen::Affine2d view_transform(const WarpSpec& spec, int i, const Vec2& offset,
                               const Vec2& tpl_center) {
  Eigen::Affine2d a = Eigen::Affine2d::Identity();
  switch (spec.kind) {
    case WarpSpec::Kind::Translation:
      a.pretranslate(offset + spec.velocity * i);
      break;
    case WarpSpec::Kind::Rotation: {
      a.pretranslate(offset);
      Eigen::Affine2d rot = Eigen::Affine2d::Identity();
      rot.pretranslate(-tpl_center);
      rot = Eigen::Affine2d(Eigen::Rotation2Dd(spec.angular_rate * i)) * rot;
      rot.pretranslate(tpl_center);
      a = rot * a;
      break;
    }
    case WarpSpec::Kind::Zoom: {
      a.pretranslate(offset);
      const double s = std::pow(spec.zoom_rate, i);
      Eigen::Affine2d z = Eigen::Affine2d::Identity();
      z.pretranslate(-tpl_center);
      z.prescale(s);
      z.pretranslate(tpl_center);
      a = z * a;
      break;
    }
    case WarpSpec::Kind::Affine: {
      a.pretranslate(offset);
      Eigen::Matrix2d m = Eigen::Matrix2d::Identity();
      for (int n = 0; n < i; ++n) m = spec.affine_step * m;
      Eigen::Affine2d s = Eigen::Affine2d::Identity();
      s.pretranslate(-tpl_center);
      s = Eigen::Affine2d(m) * s;
      s.pretranslate(tpl_center);
      a = s * a;
      break;
    }
  }
  return a;
}

bool in_mask_shape(const MaskSpec& spec, int i, double x, double y) {
  if (spec.size <= 0) return false;
  if (i < spec.active_begin || i >= spec.active_end) return false;
  const Vec2 c = spec.center0 + spec.velocity * static_cast<double>(i);
  const double r = spec.size / 2.0;
  if (spec.shape == MaskSpec::Shape::Box)
    return std::abs(x - c.x()) <= r && std::abs(y - c.y()) <= r;
  const double dx = x - c.x(), dy = y - c.y();
  return dx * dx + dy * dy <= r * r;
}

}  // namespace

Frame make_texture(int w, int h, int k, uint64_t seed, double smooth_sigma) {
  Rng rng(seed);
  Frame f = Frame::zeros(w, h, k);
  for (int c = 0; c < k; ++c) {
    Array2d noise(h, w);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) noise(y, x) = rng.uniform();
    Array2d s = gaussian_blur(noise, smooth_sigma);
    const double lo = s.minCoeff(), hi = s.maxCoeff();
    f.ch[c] = 0.1 + 0.8 * (s - lo) / std::max(hi - lo, 1e-12);
  }
  return f;
}

Frame make_checkerboard(int w, int h, int k, int cell) {
  Frame f = Frame::zeros(w, h, k);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double v = ((x / cell + y / cell) % 2 == 0) ? 1.0 : 0.0;
      for (int c = 0; c < k; ++c) f.ch[c](y, x) = v;
    }
  return f;
}

SynthSequence generate(const Frame& template_img, const WarpSpec& warp_spec,
                       const MaskSpec& mask_spec, int T, double noise_sigma,
                       uint64_t seed, int out_w, int out_h) {
  if (T < 1) throw std::invalid_argument("generate: T must be >= 1");
  SynthSequence seq;
  seq.width = out_w;
  seq.height = out_h;
  const int k = template_img.channels();
  const Vec2 offset{(template_img.width - out_w) / 2.0,
                    (template_img.height - out_h) / 2.0};
  const Vec2 tpl_center{(template_img.width - 1) / 2.0,
                        (template_img.height - 1) / 2.0};
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);

  for (int i = 0; i < T; ++i) {
    const Eigen::Affine2d V = view_transform(warp_spec, i, offset, tpl_center);
    seq.view_to_template.push_back(V);
    Frame gt = Frame::zeros(out_w, out_h, k);
    for (int y = 0; y < out_h; ++y)
      for (int x = 0; x < out_w; ++x) {
        const Vec2 p = V * Vec2(x, y);
        if (!in_sample_rect(template_img.width, template_img.height, p.x(),
                            p.y()))
          throw std::invalid_argument(
              "generate: warp leaves the template support");
        for (int c = 0; c < k; ++c)
          gt.ch[c](y, x) = sample_bilinear(template_img.ch[c], p.x(), p.y());
      }

    Mask m = Mask::empty(out_w, out_h);
    Frame obs = gt;
    // Distractor moves opposite the background so leaked pixels would be
    // visibly wrong.
    const Vec2 bg_shift =
        V * Vec2((out_w - 1) / 2.0, (out_h - 1) / 2.0) -
        seq.view_to_template[0] * Vec2((out_w - 1) / 2.0, (out_h - 1) / 2.0);
    for (int y = 0; y < out_h; ++y)
      for (int x = 0; x < out_w; ++x) {
        if (noise_sigma > 0)
          for (int c = 0; c < k; ++c)
            obs.ch[c](y, x) = std::clamp(
                obs.ch[c](y, x) + noise_sigma * rng.gaussian(), 0.0, 1.0);
        if (in_mask_shape(mask_spec, i, x, y)) {
          m.data(y, x) = true;
          const int px = static_cast<int>(std::floor(x + bg_shift.x()));
          const int py = static_cast<int>(std::floor(y + bg_shift.y()));
          const double v = (((px / 4 + py / 4) % 2 + 2) % 2 == 0) ? 0.95 : 0.05;
          for (int c = 0; c < k; ++c) obs.ch[c](y, x) = v;
        }
      }
    seq.gt_frames.push_back(std::move(gt));
    seq.frames.push_back(std::move(obs));
    seq.masks.push_back(std::move(m));
  }
  return seq;
}

WarpField affine_warp_field(const Eigen::Affine2d& a, const DomainRect& src,
                            const DomainRect& dst) {
  WarpField w;
  w.src = src;
  w.dst = dst;
  w.map_x.resize(src.height, src.width);
  w.map_y.resize(src.height, src.width);
  w.valid = BoolArray::Constant(src.height, src.width, true);
  for (int y = 0; y < src.height; ++y)
    for (int x = 0; x < src.width; ++x) {
      const Vec2 g(x + src.origin.x(), y + src.origin.y());
      const Vec2 q = a * g;
      w.map_x(y, x) = q.x() - dst.origin.x();
      w.map_y(y, x) = q.y() - dst.origin.y();
    }
  w.clip_valid_to_dst();
  return w;
}

WarpField analytic_warp(const SynthSequence& seq, int i, int j) {
  const Eigen::Affine2d a =
      seq.view_to_template[j].inverse() * seq.view_to_template[i];
  DomainRect r;
  r.width = seq.width;
  r.height = seq.height;
  return affine_warp_field(a, r, r);
}

WarpField analytic_warp_to_rect(const SynthSequence& seq, int i,
                                const DomainRect& tpl_rect) {
  DomainRect r;
  r.width = seq.width;
  r.height = seq.height;
  return affine_warp_field(seq.view_to_template[i], r, tpl_rect);
}

}  // namespace scenefill
