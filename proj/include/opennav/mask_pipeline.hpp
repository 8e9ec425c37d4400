#pragma once

#include "opennav/types.hpp"

#include <limits>

namespace opennav::mask {

/// Binary structuring element with odd dimensions, centered on its middle cell.
class StructuringElement {
 public:
  /// 3x3, all ones.
  StructuringElement();
  explicit StructuringElement(Bitmap cells);

  static StructuringElement square(int size);

  int width() const { return cells_.width(); }
  int height() const { return cells_.height(); }
  int radius_x() const { return cells_.width() / 2; }
  int radius_y() const { return cells_.height() / 2; }
  bool at(int dx, int dy) const { return cells_(dx + radius_x(), dy + radius_y()) != 0; }
  bool is_full_rectangle() const { return full_; }
  const Bitmap& cells() const { return cells_; }

 private:
  Bitmap cells_;
  bool full_ = true;
};

/// Binary erosion. Out-of-bounds pixels count as unset, so a set region
/// touching the border loses its border pixels. Rows run in parallel.
Bitmap erode(const Bitmap& input, const StructuringElement& kernel = {});

InstanceMask erode_mask(const InstanceMask& mask, const StructuringElement& kernel = {});

namespace reference {
/// Serial per-pixel evaluation of the erosion definition.
Bitmap erode(const Bitmap& input, const StructuringElement& kernel = {});
}  // namespace reference

struct PixelDepth {
  int u = 0;
  int v = 0;
  double depth = 0.0;

  bool operator==(const PixelDepth&) const = default;
};

/// Valid depths under a mask, in row-major pixel order.
struct IsolatedDepth {
  std::vector<PixelDepth> values;
  Detection2D source;

  std::size_t size() const { return values.size(); }
  bool empty() const { return values.empty(); }
};

/// Depths of the set mask pixels; zero and non-finite depths are skipped.
IsolatedDepth isolate_depth(const DepthFrame& frame, const InstanceMask& eroded);

struct DepthStatistics {
  std::size_t count = 0;
  double mean = 0.0;
  double stddev = 0.0;  // population
};

DepthStatistics depth_statistics(const IsolatedDepth& depths);

constexpr double kDefaultZScoreThreshold = 2.0;

/// Keeps entries with |d - mean| / stddev < tau. With fewer than three
/// entries or zero spread the input is returned unchanged.
IsolatedDepth zscore_filter(const IsolatedDepth& depths, double tau = kDefaultZScoreThreshold);

}  // namespace opennav::mask
