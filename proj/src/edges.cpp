#include "mouldmark/edges.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "mouldmark/error.hpp"

namespace mouldmark {

namespace {

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(4.0 * sigma)));
  std::vector<double> k(2 * radius + 1);
  double total = 0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    total += k[i + radius];
  }
  for (double& v : k) v /= total;
  return k;
}

}  // namespace

Field gaussian_blur(const Field& f, double sigma) {
  if (sigma <= 0) return f;
  const auto k = gaussian_kernel(sigma);
  const int r = static_cast<int>(k.size() / 2);
  const int w = f.width(), h = f.height();
  Field tmp(w, h), out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0;
      for (int i = -r; i <= r; ++i) acc += k[i + r] * f(std::clamp(x + i, 0, w - 1), y);
      tmp(x, y) = acc;
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0;
      for (int i = -r; i <= r; ++i) acc += k[i + r] * tmp(x, std::clamp(y + i, 0, h - 1));
      out(x, y) = acc;
    }
  }
  return out;
}

EdgeMask canny_edges(const GrayImage& img, const CannyConfig& cfg) {
  if (!(cfg.sigma > 0)) throw Error(ErrorCode::InvalidArgument, "canny sigma must be positive");
  if (!(cfg.low >= 0 && cfg.low <= cfg.high)) {
    throw Error(ErrorCode::InvalidThreshold, "canny thresholds require 0 <= low <= high");
  }
  const int w = img.width(), h = img.height();
  EdgeMask edges(w, h, 0);
  if (w == 0 || h == 0) return edges;

  const Field s = gaussian_blur(img.pixels(), cfg.sigma);
  auto at = [&](int x, int y) { return s(std::clamp(x, 0, w - 1), std::clamp(y, 0, h - 1)); };

  Field gx(w, h), gy(w, h), mag(w, h);
  double max_mag = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double dx = (at(x + 1, y - 1) + 2 * at(x + 1, y) + at(x + 1, y + 1)) -
                        (at(x - 1, y - 1) + 2 * at(x - 1, y) + at(x - 1, y + 1));
      const double dy = (at(x - 1, y + 1) + 2 * at(x, y + 1) + at(x + 1, y + 1)) -
                        (at(x - 1, y - 1) + 2 * at(x, y - 1) + at(x + 1, y - 1));
      gx(x, y) = dx / 8.0;
      gy(x, y) = dy / 8.0;
      mag(x, y) = std::hypot(dx, dy) / 8.0;
      max_mag = std::max(max_mag, mag(x, y));
    }
  }
  // Rounding noise on a flat image must not produce edges.
  if (max_mag < 1e-12) return edges;

  auto mag_at = [&](int x, int y) {
    if (x < 0 || y < 0 || x >= w || y >= h) return 0.0;
    return mag(x, y);
  };

  // Non-maximum suppression along the quantized gradient direction. A pixel
  // must be >= its "before" neighbour and > its "after" neighbour, so a
  // symmetric ridge keeps exactly one pixel (the one on the positive side).
  const double tie = 1e-9 * max_mag;
  Field nms(w, h, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double m = mag(x, y);
      if (m <= 0) continue;
      double angle = std::atan2(gy(x, y), gx(x, y)) * 180.0 / std::numbers::pi;
      if (angle < 0) angle += 180.0;
      int dx = 1, dy = 0;
      if (angle >= 22.5 && angle < 67.5) {
        dx = 1; dy = 1;
      } else if (angle >= 67.5 && angle < 112.5) {
        dx = 0; dy = 1;
      } else if (angle >= 112.5 && angle < 157.5) {
        dx = -1; dy = 1;
      }
      const double before = mag_at(x - dx, y - dy);
      const double after = mag_at(x + dx, y + dy);
      if (m >= before - tie && m > after + tie) nms(x, y) = m;
    }
  }

  const double hi = cfg.high * max_mag;
  const double lo = cfg.low * max_mag;
  std::vector<std::pair<int, int>> stack;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (nms(x, y) >= hi && nms(x, y) > 0 && !edges(x, y)) {
        edges(x, y) = 1;
        stack.emplace_back(x, y);
        while (!stack.empty()) {
          const auto [cx, cy] = stack.back();
          stack.pop_back();
          for (int oy = -1; oy <= 1; ++oy) {
            for (int ox = -1; ox <= 1; ++ox) {
              const int nx = cx + ox, ny = cy + oy;
              if (nx < 0 || ny < 0 || nx >= w || ny >= h || edges(nx, ny)) continue;
              if (nms(nx, ny) >= lo && nms(nx, ny) > 0) {
                edges(nx, ny) = 1;
                stack.emplace_back(nx, ny);
              }
            }
          }
        }
      }
    }
  }
  return edges;
}

}  // namespace mouldmark
