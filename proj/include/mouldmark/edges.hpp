#pragma once

#include "mouldmark/grid.hpp"
#include "mouldmark/image.hpp"

namespace mouldmark {

/// Canny parameters. Thresholds are fractions of the maximum smoothed
/// gradient magnitude, so the detector ignores a uniform intensity scaling.
struct CannyConfig {
  double sigma = 2.0;
  double low = 0.1;
  double high = 0.2;
};

/// Gaussian smoothing, Sobel gradient, non-maximum suppression and
/// hysteresis. Throws Error(InvalidThreshold) unless 0 <= low <= high and
/// Error(InvalidArgument) unless sigma > 0.
EdgeMask canny_edges(const GrayImage& img, const CannyConfig& cfg = {});

/// Separable Gaussian blur with replicate borders, kernel truncated at 4 sigma.
Field gaussian_blur(const Field& f, double sigma);

}  // namespace mouldmark
