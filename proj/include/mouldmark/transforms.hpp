#pragma once

#include <complex>
#include <string>
#include <vector>

#include "mouldmark/grid.hpp"

namespace mouldmark {

/// Orientation of the lines themselves (not of their frequency axis).
enum class Orientation { Vertical, Horizontal };

std::string orientation_name(Orientation o);
Orientation parse_orientation(const std::string& name);

/// Rectangular pass region in the centred 2D spectrum. For vertical lines the
/// rectangle lies along the horizontal frequency axis: width_px rows thick and
/// height_fraction of the half-axis long on each side of DC.
struct RectFilterSpec {
  int width_px = 1;
  double height_fraction = 2.0 / 3.0;
  Orientation orientation = Orientation::Vertical;

  /// Throws Error(InvalidArgument) unless width_px is odd and >= 1 and
  /// 0 < height_fraction <= 1.
  void validate() const;

  /// Wider, shorter mask (3 px, 1/3 of the axis).
  static RectFilterSpec johnson(Orientation orientation = Orientation::Vertical) {
    return {3, 1.0 / 3.0, orientation};
  }

  friend bool operator==(const RectFilterSpec&, const RectFilterSpec&) = default;
};

/// Unnormalized forward 2D DFT (FFTW), row-major, same shape as the input.
std::vector<std::complex<double>> fft2(const Field& f);

/// Keeps the rectangle and the DC term, zeroes the rest, returns the real
/// part of the inverse transform.
Field rect_fourier_filter(const Field& img, const RectFilterSpec& spec);

/// Column sums for vertical lines, row sums for horizontal lines.
std::vector<double> project(const Field& img, Orientation orientation);

/// Radon-domain image. data(a, k) is the line integral at angles[a] and
/// offsets[k]; each angle is one column of the data grid.
///
/// Angle convention: the angle is the rotation that maps the integrated lines
/// onto the vertical, so vertical image lines respond at 0 degrees and
/// horizontal lines at 90. The offset s of a ray is measured along the
/// normal (cos a, sin a) from the image centre, in x-right / y-down pixel
/// coordinates.
struct Sinogram {
  std::vector<double> angles_deg;
  std::vector<double> offsets_px;
  Field data;
  /// In-image length of each ray, same layout as data.
  Field ray_length;

  std::vector<double> column(std::size_t angle_index) const;
  std::size_t nearest_angle_index(double angle_deg) const;
};

/// Uniform angle grid over [0, 180).
std::vector<double> angle_grid(double step_deg = 0.5);

/// Each pixel is treated as a unit square; its projection onto the ray normal
/// (a trapezoid) is integrated exactly over the offset bins, so every column
/// keeps the total mass. Non-square inputs are zero padded to a square about
/// the centre.
Sinogram radon(const Field& img, const std::vector<double>& angles_deg);

struct AngleEstimate {
  double angle_deg = 0.0;
  /// Best angle score over the mean score across all angles.
  double peak_to_mean = 1.0;
  bool low_confidence = true;
};

/// Picks the angle whose projection of mean-per-ray intensity has the largest
/// variance (the sharpest line response). Only rays at least half as long as
/// the shorter image side contribute, which removes the bias toward the
/// diagonals of square patches. Ties go to the angle closest to 0 or 90.
AngleEstimate dominant_angle(const Sinogram& sino, double low_confidence_ratio = 1.5);

/// Picks the angle whose column carries the strongest periodic component with
/// a period in [min_period_px, max_period_px] (largest DFT power in that
/// range of the column minus mean intensity times ray length). Broad single
/// features such as folds put little power there. Ties go to the angle
/// closest to 0 or 90.
AngleEstimate periodic_angle(const Sinogram& sino, double min_period_px, double max_period_px,
                             double low_confidence_ratio = 1.5);

/// Power per angle used by periodic_angle.
std::vector<double> periodic_scores(const Sinogram& sino, double min_period_px, double max_period_px);

}  // namespace mouldmark
