#include "opennav/mask_pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace opennav::mask {

namespace {

struct Roi {
  int u0 = 0, v0 = 0, u1 = -1, v1 = -1;  // inclusive
  bool empty() const { return u1 < u0 || v1 < v0; }
};

Roi set_pixel_bounds(const Bitmap& b) {
  Roi roi{b.width(), b.height(), -1, -1};
  for (int v = 0; v < b.height(); ++v) {
    const std::uint8_t* row = b.row(v);
    for (int u = 0; u < b.width(); ++u) {
      if (row[u]) {
        roi.u0 = std::min(roi.u0, u);
        roi.u1 = std::max(roi.u1, u);
        roi.v0 = std::min(roi.v0, v);
        roi.v1 = std::max(roi.v1, v);
      }
    }
  }
  return roi;
}

// Full-rectangle kernels separate into a horizontal and a vertical run test.
// Everything outside the ROI is unset, which matches the out-of-bounds rule.
Bitmap erode_separable(const Bitmap& in, const Roi& roi, int rx, int ry) {
  const int w = roi.u1 - roi.u0 + 1;
  const int h = roi.v1 - roi.v0 + 1;
  Bitmap out(in.width(), in.height(), 0);
  if (w < 2 * rx + 1 || h < 2 * ry + 1) return out;

  // horiz(u, v) = 1 iff the 2rx+1 window centered at u in row v is fully set.
  std::vector<std::uint8_t> horiz(static_cast<std::size_t>(w) * h, 0);

#pragma omp parallel for schedule(static)
  for (int r = 0; r < h; ++r) {
    const std::uint8_t* src = in.row(roi.v0 + r) + roi.u0;
    std::uint8_t* dst = horiz.data() + static_cast<std::size_t>(r) * w;
    // run = length of the set run ending at column c
    int run = 0;
    for (int c = 0; c < w; ++c) {
      run = src[c] ? run + 1 : 0;
      if (run >= 2 * rx + 1) dst[c - rx] = 1;
    }
  }

#pragma omp parallel for schedule(static)
  for (int c = 0; c < w; ++c) {
    int run = 0;
    for (int r = 0; r < h; ++r) {
      run = horiz[static_cast<std::size_t>(r) * w + c] ? run + 1 : 0;
      if (run >= 2 * ry + 1) out(roi.u0 + c, roi.v0 + r - ry) = 1;
    }
  }
  return out;
}

Bitmap erode_general(const Bitmap& in, const Roi& roi, const StructuringElement& k) {
  Bitmap out(in.width(), in.height(), 0);
  std::vector<std::pair<int, int>> offsets;
  for (int dy = -k.radius_y(); dy <= k.radius_y(); ++dy)
    for (int dx = -k.radius_x(); dx <= k.radius_x(); ++dx)
      if (k.at(dx, dy)) offsets.emplace_back(dx, dy);

#pragma omp parallel for schedule(static)
  for (int v = roi.v0; v <= roi.v1; ++v) {
    for (int u = roi.u0; u <= roi.u1; ++u) {
      if (!in(u, v)) continue;
      bool keep = true;
      for (const auto& [dx, dy] : offsets) {
        const int uu = u + dx, vv = v + dy;
        if (!in.in_bounds(uu, vv) || !in(uu, vv)) {
          keep = false;
          break;
        }
      }
      if (keep) out(u, v) = 1;
    }
  }
  return out;
}

}  // namespace

StructuringElement::StructuringElement() : cells_(3, 3, 1), full_(true) {}

StructuringElement::StructuringElement(Bitmap cells) : cells_(std::move(cells)) {
  if (cells_.width() % 2 == 0 || cells_.height() % 2 == 0)
    throw std::invalid_argument("StructuringElement: dimensions must be odd");
  if (!cells_(radius_x(), radius_y()))
    throw std::invalid_argument("StructuringElement: center cell must be set");
  full_ = popcount(cells_) == cells_.size();
}

StructuringElement StructuringElement::square(int size) {
  return StructuringElement(Bitmap(size, size, 1));
}

Bitmap erode(const Bitmap& input, const StructuringElement& kernel) {
  const Roi roi = set_pixel_bounds(input);
  if (roi.empty()) return Bitmap(input.width(), input.height(), 0);
  if (kernel.is_full_rectangle()) return erode_separable(input, roi, kernel.radius_x(), kernel.radius_y());
  return erode_general(input, roi, kernel);
}

InstanceMask erode_mask(const InstanceMask& mask, const StructuringElement& kernel) {
  return InstanceMask{erode(mask.bitmap, kernel), mask.detection};
}

namespace reference {

Bitmap erode(const Bitmap& input, const StructuringElement& kernel) {
  Bitmap out(input.width(), input.height(), 0);
  for (int v = 0; v < input.height(); ++v) {
    for (int u = 0; u < input.width(); ++u) {
      bool fits = true;
      for (int dy = -kernel.radius_y(); dy <= kernel.radius_y() && fits; ++dy) {
        for (int dx = -kernel.radius_x(); dx <= kernel.radius_x(); ++dx) {
          if (!kernel.at(dx, dy)) continue;
          const int uu = u + dx, vv = v + dy;
          if (!input.in_bounds(uu, vv) || input(uu, vv) == 0) {
            fits = false;
            break;
          }
        }
      }
      out(u, v) = fits ? 1 : 0;
    }
  }
  return out;
}

}  // namespace reference

IsolatedDepth isolate_depth(const DepthFrame& frame, const InstanceMask& eroded) {
  if (eroded.bitmap.width() != frame.depth.width() || eroded.bitmap.height() != frame.depth.height())
    throw ValidationError("isolate_depth: mask and depth dimensions differ");
  IsolatedDepth out;
  out.source = eroded.detection;
  for (int v = 0; v < frame.depth.height(); ++v) {
    const std::uint8_t* m = eroded.bitmap.row(v);
    const double* d = frame.depth.row(v);
    for (int u = 0; u < frame.depth.width(); ++u) {
      if (m[u] && std::isfinite(d[u]) && d[u] > 0.0) out.values.push_back({u, v, d[u]});
    }
  }
  return out;
}

DepthStatistics depth_statistics(const IsolatedDepth& depths) {
  DepthStatistics s;
  s.count = depths.size();
  if (s.count == 0) return s;
  double sum = 0.0;
  for (const auto& p : depths.values) sum += p.depth;
  s.mean = sum / static_cast<double>(s.count);
  double sq = 0.0;
  for (const auto& p : depths.values) sq += (p.depth - s.mean) * (p.depth - s.mean);
  s.stddev = std::sqrt(sq / static_cast<double>(s.count));
  return s;
}

IsolatedDepth zscore_filter(const IsolatedDepth& depths, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("zscore_filter: tau must be positive");
  const DepthStatistics s = depth_statistics(depths);
  if (s.count < 3 || s.stddev == 0.0) return depths;
  IsolatedDepth out;
  out.source = depths.source;
  out.values.reserve(depths.size());
  for (const auto& p : depths.values) {
    if (std::abs(p.depth - s.mean) / s.stddev < tau) out.values.push_back(p);
  }
  return out;
}

}  // namespace opennav::mask
