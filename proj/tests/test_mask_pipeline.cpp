#include "opennav/mask_pipeline.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace opennav;
using opennav::test::Gen;

namespace {

// Direct reading of the erosion definition, written independently of the library.
Bitmap oracle_erode(const Bitmap& in, const Bitmap& kernel) {
  const int rx = kernel.width() / 2, ry = kernel.height() / 2;
  Bitmap out(in.width(), in.height());
  for (int v = 0; v < in.height(); ++v) {
    for (int u = 0; u < in.width(); ++u) {
      bool all = true;
      for (int j = 0; j < kernel.height(); ++j) {
        for (int i = 0; i < kernel.width(); ++i) {
          if (!kernel(i, j)) continue;
          const int x = u + i - rx, y = v + j - ry;
          if (x < 0 || y < 0 || x >= in.width() || y >= in.height() || !in(x, y)) all = false;
        }
      }
      out(u, v) = all ? 1 : 0;
    }
  }
  return out;
}

bool subset(const Bitmap& a, const Bitmap& b) {
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a.data()[i] && !b.data()[i]) return false;
  return true;
}

DepthFrame flat_frame(int w, int h, double depth) {
  DepthFrame f;
  f.frame_id = "f";
  f.intrinsics = {100.0, 100.0, w / 2.0, h / 2.0, w, h};
  f.depth = DepthImage(w, h, depth);
  return f;
}

InstanceMask mask_of(const Bitmap& b) {
  InstanceMask m;
  m.bitmap = b;
  m.detection = {0, 0, static_cast<double>(b.width()), static_cast<double>(b.height()), 1.0, "obj"};
  return m;
}

mask::IsolatedDepth depths_of(const std::vector<double>& d) {
  mask::IsolatedDepth out;
  for (std::size_t i = 0; i < d.size(); ++i) out.values.push_back({static_cast<int>(i), 0, d[i]});
  return out;
}

}  // namespace

TEST_SUITE("mask_pipeline") {
  TEST_CASE("structuring element rejects even sizes and unset centers") {
    CHECK_THROWS_AS(mask::StructuringElement(Bitmap(2, 3, 1)), std::invalid_argument);
    Bitmap hollow(3, 3, 1);
    hollow(1, 1) = 0;
    CHECK_THROWS_AS(mask::StructuringElement{hollow}, std::invalid_argument);
    const mask::StructuringElement k;
    CHECK(k.width() == 3);
    CHECK(k.is_full_rectangle());
  }

  TEST_CASE("5x5 all-ones mask keeps only its 3x3 interior") {
    const Bitmap out = mask::erode(Bitmap(5, 5, 1));
    for (int v = 0; v < 5; ++v)
      for (int u = 0; u < 5; ++u) CHECK(out(u, v) == ((u >= 1 && u <= 3 && v >= 1 && v <= 3) ? 1 : 0));
  }

  TEST_CASE("single pixel erodes to nothing") {
    Bitmap b(7, 7);
    b(3, 3) = 1;
    CHECK(popcount(mask::erode(b)) == 0);
  }

  TEST_CASE("random 16x16 masks equal the brute-force oracle") {
    Gen g(11);
    const Bitmap k = mask::StructuringElement().cells();
    for (int t = 0; t < 200; ++t) {
      const Bitmap in = g.blobby_bitmap(16, 16);
      CHECK(mask::erode(in) == oracle_erode(in, k));
      CHECK(mask::reference::erode(in) == oracle_erode(in, k));
    }
  }

  TEST_CASE("non-rectangular and larger kernels equal the oracle") {
    Gen g(12);
    Bitmap cross(3, 3);
    cross(1, 0) = cross(0, 1) = cross(1, 1) = cross(2, 1) = cross(1, 2) = 1;
    Bitmap bar(5, 1, 1);
    Bitmap odd(5, 3);
    for (auto& px : odd.data()) px = g.coin() ? 1 : 0;
    odd(2, 1) = 1;
    for (const Bitmap& cells : {cross, bar, odd, mask::StructuringElement::square(5).cells()}) {
      const mask::StructuringElement k(cells);
      for (int t = 0; t < 100; ++t) {
        const Bitmap in = g.blobby_bitmap(g.integer(1, 40), g.integer(1, 40));
        CHECK(mask::erode(in, k) == oracle_erode(in, cells));
      }
    }
  }

  TEST_CASE("erosion is anti-extensive and monotone") {
    Gen g(13);
    for (int t = 0; t < 300; ++t) {
      const int w = g.integer(8, 24), h = g.integer(8, 24);
      const Bitmap a = g.blobby_bitmap(w, h);
      Bitmap b = a;
      for (auto& px : b.data())
        if (g.coin(0.2)) px = 1;
      const Bitmap ea = mask::erode(a), eb = mask::erode(b);
      CHECK(subset(ea, a));
      CHECK(subset(ea, eb));
    }
  }

  TEST_CASE("erode_mask keeps the detection") {
    const InstanceMask m = mask_of(Bitmap(6, 6, 1));
    const InstanceMask e = mask::erode_mask(m);
    CHECK(e.detection == m.detection);
    CHECK(popcount(e.bitmap) == 16);
  }

  TEST_CASE("isolate_depth: 4 pixels at 2 m give four entries of 2.0") {
    DepthFrame f = flat_frame(8, 8, 2.0);
    Bitmap b(8, 8);
    b(2, 2) = b(3, 2) = b(2, 3) = b(3, 3) = 1;
    const auto d = mask::isolate_depth(f, mask_of(b));
    REQUIRE(d.size() == 4);
    for (const auto& p : d.values) CHECK(p.depth == 2.0);
  }

  TEST_CASE("isolate_depth skips zero and non-finite depths") {
    DepthFrame f = flat_frame(8, 8, 2.0);
    f.depth(2, 2) = 0.0;
    f.depth(3, 3) = std::numeric_limits<double>::quiet_NaN();
    Bitmap b(8, 8);
    b(2, 2) = b(3, 2) = b(3, 3) = 1;
    const auto d = mask::isolate_depth(f, mask_of(b));
    REQUIRE(d.size() == 1);
    CHECK(d.values[0] == mask::PixelDepth{3, 2, 2.0});
  }

  TEST_CASE("isolate_depth of a mask over invalid depth is empty") {
    DepthFrame f = flat_frame(8, 8, 0.0);
    CHECK(mask::isolate_depth(f, mask_of(Bitmap(8, 8, 1))).empty());
  }

  TEST_CASE("isolate_depth rejects mismatched dimensions") {
    CHECK_THROWS_AS(mask::isolate_depth(flat_frame(8, 8, 1.0), mask_of(Bitmap(7, 8, 1))), ValidationError);
  }

  TEST_CASE("isolate_depth output never exceeds mask popcount") {
    Gen g(14);
    for (int t = 0; t < 100; ++t) {
      DepthFrame f = flat_frame(12, 10, 1.0);
      for (auto& d : f.depth.data()) d = g.coin(0.3) ? 0.0 : g.uniform(0.5, 4.0);
      const Bitmap b = g.bitmap(12, 10, 0.5);
      CHECK(mask::isolate_depth(f, mask_of(b)).size() <= popcount(b));
    }
  }

  TEST_CASE("zscore: constant depths are left unchanged") {
    const auto in = depths_of(std::vector<double>(10, 1.0));
    CHECK(mask::zscore_filter(in).values == in.values);
  }

  TEST_CASE("zscore: the 9.0 outlier among twenty 1.0 values is removed") {
    std::vector<double> d(20, 1.0);
    d.push_back(9.0);
    // oracle statistics: mean 29/21, population variance from the definition
    const double mu = 29.0 / 21.0;
    double var = 0.0;
    for (double x : d) var += (x - mu) * (x - mu);
    const double sigma = std::sqrt(var / 21.0);
    REQUIRE(std::abs(9.0 - mu) / sigma >= 2.0);
    REQUIRE(std::abs(1.0 - mu) / sigma < 2.0);
    const auto out = mask::zscore_filter(depths_of(d));
    CHECK(out.size() == 20);
    for (const auto& p : out.values) CHECK(p.depth == 1.0);
  }

  TEST_CASE("zscore: infinite tau keeps everything and tiny inputs pass through") {
    Gen g(15);
    const auto in = depths_of({1.0, 2.0, 50.0, 3.0});
    CHECK(mask::zscore_filter(in, std::numeric_limits<double>::infinity()).values == in.values);
    const auto two = depths_of({1.0, 100.0});
    CHECK(mask::zscore_filter(two, 0.01).values == two.values);
    CHECK_THROWS_AS(mask::zscore_filter(in, 0.0), std::invalid_argument);
  }

  TEST_CASE("zscore: retained values satisfy the predicate on the original statistics") {
    Gen g(16);
    for (int t = 0; t < 300; ++t) {
      std::vector<double> d(static_cast<std::size_t>(g.integer(0, 60)));
      for (auto& x : d) x = g.coin(0.1) ? g.uniform(5.0, 20.0) : g.normal(2.0, 0.1);
      const auto in = depths_of(d);
      const auto st = mask::depth_statistics(in);
      const double tau = g.uniform(0.5, 3.0);
      const auto out = mask::zscore_filter(in, tau);
      CHECK(out.size() <= in.size());
      for (const auto& p : out.values) {
        if (st.count >= 3 && st.stddev > 0) CHECK(std::abs(p.depth - st.mean) / st.stddev < tau);
      }
      CHECK(mask::zscore_filter(out, tau).size() <= out.size());
    }
  }
}
