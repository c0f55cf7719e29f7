#include "scenefill/core.hpp"

#include <algorithm>
#include <cmath>

namespace scenefill {

DomainRect rect_union(std::span<const DomainRect> rects) {
  if (rects.empty()) throw std::invalid_argument("rect_union: empty list");
  int x0 = rects[0].origin.x(), y0 = rects[0].origin.y();
  int x1 = x0 + rects[0].width, y1 = y0 + rects[0].height;
  for (const auto& r : rects.subspan(1)) {
    x0 = std::min(x0, r.origin.x());
    y0 = std::min(y0, r.origin.y());
    x1 = std::max(x1, r.origin.x() + r.width);
    y1 = std::max(y1, r.origin.y() + r.height);
  }
  DomainRect out;
  out.origin = {x0, y0};
  out.width = x1 - x0;
  out.height = y1 - y0;
  return out;
}

WarpField WarpField::identity(const DomainRect& src, const DomainRect& dst) {
  WarpField w;
  w.src = src;
  w.dst = dst;
  w.map_x.resize(src.height, src.width);
  w.map_y.resize(src.height, src.width);
  const double ox = src.origin.x() - dst.origin.x();
  const double oy = src.origin.y() - dst.origin.y();
  for (int y = 0; y < src.height; ++y)
    for (int x = 0; x < src.width; ++x) {
      w.map_x(y, x) = x + ox;
      w.map_y(y, x) = y + oy;
    }
  w.valid = BoolArray::Constant(src.height, src.width, true);
  w.clip_valid_to_dst();
  return w;
}

WarpField WarpField::identity(int w, int h) {
  DomainRect r;
  r.width = w;
  r.height = h;
  return identity(r, r);
}

Array2d WarpField::disp_x() const {
  Array2d d = map_x;
  const double ox = src.origin.x() - dst.origin.x();
  for (int y = 0; y < src.height; ++y)
    for (int x = 0; x < src.width; ++x) d(y, x) -= x + ox;
  return d;
}

Array2d WarpField::disp_y() const {
  Array2d d = map_y;
  const double oy = src.origin.y() - dst.origin.y();
  for (int y = 0; y < src.height; ++y)
    for (int x = 0; x < src.width; ++x) d(y, x) -= y + oy;
  return d;
}

void WarpField::clip_valid_to_dst() {
  for (int y = 0; y < src.height; ++y)
    for (int x = 0; x < src.width; ++x)
      if (!in_sample_rect(dst.width, dst.height, map_x(y, x), map_y(y, x)))
        valid(y, x) = false;
}

double sample_bilinear(const Array2d& plane, double x, double y) {
  const int w = static_cast<int>(plane.cols());
  const int h = static_cast<int>(plane.rows());
  if (!in_sample_rect(w, h, x, y))
    throw SamplingError("sample_bilinear: point outside domain");
  x = std::clamp(x, 0.0, static_cast<double>(w - 1));
  y = std::clamp(y, 0.0, static_cast<double>(h - 1));
  const int x0 = std::min(static_cast<int>(x), w - 2 >= 0 ? w - 2 : 0);
  const int y0 = std::min(static_cast<int>(y), h - 2 >= 0 ? h - 2 : 0);
  const int x1 = std::min(x0 + 1, w - 1);
  const int y1 = std::min(y0 + 1, h - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  return (1 - fy) * ((1 - fx) * plane(y0, x0) + fx * plane(y0, x1)) +
         fy * ((1 - fx) * plane(y1, x0) + fx * plane(y1, x1));
}

double sample_nearest(const Array2d& plane, double x, double y) {
  const int w = static_cast<int>(plane.cols());
  const int h = static_cast<int>(plane.rows());
  if (!in_sample_rect(w, h, x, y))
    throw SamplingError("sample_nearest: point outside domain");
  return plane(nearest_index(y, h), nearest_index(x, w));
}

bool sample_nearest(const BoolArray& plane, double x, double y) {
  const int w = static_cast<int>(plane.cols());
  const int h = static_cast<int>(plane.rows());
  if (!in_sample_rect(w, h, x, y))
    throw SamplingError("sample_nearest: point outside domain");
  return plane(nearest_index(y, h), nearest_index(x, w));
}

Eigen::VectorXd sample_bilinear(const Frame& f, const Vec2& p) {
  Eigen::VectorXd out(f.channels());
  for (int c = 0; c < f.channels(); ++c)
    out[c] = sample_bilinear(f.ch[c], p.x(), p.y());
  return out;
}

Eigen::VectorXd sample_nearest(const Frame& f, const Vec2& p) {
  Eigen::VectorXd out(f.channels());
  for (int c = 0; c < f.channels(); ++c)
    out[c] = sample_nearest(f.ch[c], p.x(), p.y());
  return out;
}

}  // namespace scenefill
