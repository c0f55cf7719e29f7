#pragma once

#include <Eigen/Dense>

#include <span>
#include <stdexcept>
#include <vector>

namespace scenefill {

using Array2d = Eigen::ArrayXXd;
using BoolArray = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;
using Vec2 = Eigen::Vector2d;
using Vec2i = Eigen::Vector2i;

/// Dense image with intensities in [0,1]. Channel planes are stored as
/// height x width arrays indexed (y, x).
struct Frame {
  int width = 0;
  int height = 0;
  std::vector<Array2d> ch;

  int channels() const { return static_cast<int>(ch.size()); }

  static Frame zeros(int w, int h, int k) {
    Frame f;
    f.width = w;
    f.height = h;
    f.ch.assign(k, Array2d::Zero(h, w));
    return f;
  }
  static Frame constant(int w, int h, int k, double v) {
    Frame f = zeros(w, h, k);
    for (auto& c : f.ch) c.setConstant(v);
    return f;
  }
};

/// Binary per-pixel region, true = masked (to inpaint).
struct Mask {
  int width = 0;
  int height = 0;
  BoolArray data;

  static Mask empty(int w, int h) {
    Mask m;
    m.width = w;
    m.height = h;
    m.data = BoolArray::Constant(h, w, false);
    return m;
  }
  bool at(int x, int y) const { return data(y, x); }
  void set(int x, int y, bool v) { data(y, x) = v; }
  long count() const { return data.count(); }
};

/// Axis-aligned pixel rectangle positioned in a global integer coordinate
/// system. origin is the global position of this domain's pixel (0,0).
struct DomainRect {
  Vec2i origin{0, 0};
  int width = 1;
  int height = 1;

  bool operator==(const DomainRect& o) const {
    return origin == o.origin && width == o.width && height == o.height;
  }
  bool same_size(const DomainRect& o) const {
    return width == o.width && height == o.height;
  }
};

DomainRect rect_union(std::span<const DomainRect> rects);

/// Dense map from src pixels to real coordinates in dst's local pixel grid.
/// valid is false where the map is an extrapolation or lands outside dst
/// (beyond the 0.5 px sampling margin).
struct WarpField {
  DomainRect src;
  DomainRect dst;
  Array2d map_x;  // height x width, dst-local x coordinate
  Array2d map_y;
  BoolArray valid;

  static WarpField identity(const DomainRect& src, const DomainRect& dst);
  static WarpField identity(int w, int h);

  Vec2 at(int x, int y) const { return {map_x(y, x), map_y(y, x)}; }

  /// Displacement relative to the identity map between the two rects.
  Array2d disp_x() const;
  Array2d disp_y() const;

  /// Marks valid=false wherever the map lands outside dst (0.5 px margin).
  void clip_valid_to_dst();
};

// Sampling convention: pixel (i,j) has its center at real coordinate (i,j);
// a w x h plane is sampleable on [-0.5, w-0.5] x [-0.5, h-0.5] with border
// clamping.

inline bool in_sample_rect(int w, int h, double x, double y) {
  return x >= -0.5 && x <= w - 0.5 && y >= -0.5 && y <= h - 0.5;
}

double sample_bilinear(const Array2d& plane, double x, double y);
double sample_nearest(const Array2d& plane, double x, double y);
bool sample_nearest(const BoolArray& plane, double x, double y);

Eigen::VectorXd sample_bilinear(const Frame& f, const Vec2& p);
Eigen::VectorXd sample_nearest(const Frame& f, const Vec2& p);

/// Nearest pixel index along one axis; ties round toward the smaller index.
inline int nearest_index(double v, int n) {
  int i = static_cast<int>(std::ceil(v - 0.5));
  return std::clamp(i, 0, n - 1);
}

struct SamplingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace scenefill
