#pragma once

#include <array>
#include <optional>
#include <string>

#include "mouldmark/grid.hpp"

namespace mouldmark {

/// Axis-aligned pixel rectangle, origin at the top-left corner.
struct PixelRect {
  int x0 = 0;
  int y0 = 0;
  int width = 0;
  int height = 0;

  friend bool operator==(const PixelRect&, const PixelRect&) = default;
};

/// Single-channel intensity image with values in [0, 1] and an optional
/// physical scale in pixels per millimetre.
class GrayImage {
 public:
  GrayImage() = default;
  /// Throws Error(InvalidArgument) if any value leaves [0, 1] or the scale is
  /// not strictly positive and finite.
  explicit GrayImage(Field pixels, std::optional<double> scale = std::nullopt);
  GrayImage(int width, int height, double fill, std::optional<double> scale = std::nullopt);

  /// Clamps every value to [0, 1] before constructing.
  static GrayImage clamped(Field pixels, std::optional<double> scale = std::nullopt);

  int width() const noexcept { return pixels_.width(); }
  int height() const noexcept { return pixels_.height(); }
  double operator()(int x, int y) const { return pixels_(x, y); }
  const Field& pixels() const noexcept { return pixels_; }
  std::optional<double> scale() const noexcept { return scale_; }
  GrayImage with_scale(std::optional<double> scale) const;

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  Field pixels_;
  std::optional<double> scale_;
};

/// Three-channel image, row-major interleaved RGB triples in [0, 1].
class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(int width, int height, std::array<double, 3> fill = {0.0, 0.0, 0.0},
           std::optional<double> scale = std::nullopt);
  RgbImage(int width, int height, std::vector<double> interleaved,
           std::optional<double> scale = std::nullopt);

  /// Replicates the gray channel into all three channels.
  static RgbImage from_gray(const GrayImage& gray);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::optional<double> scale() const noexcept { return scale_; }

  std::array<double, 3> pixel(int x, int y) const;
  void set_pixel(int x, int y, std::array<double, 3> rgb);
  const std::vector<double>& data() const noexcept { return data_; }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
  std::optional<double> scale_;
};

enum class CalibrationMethod { Ruler, PaperSize, Explicit };

std::string calibration_method_name(CalibrationMethod method);
CalibrationMethod parse_calibration_method(const std::string& name);

struct Calibration {
  double pixels_per_mm = 0.0;
  CalibrationMethod method = CalibrationMethod::Explicit;
  std::string confidence_note;

  /// Throws Error(InvalidArgument) unless pixels_per_mm is positive and finite.
  static Calibration make(double pixels_per_mm, CalibrationMethod method,
                          std::string note = {});

  friend bool operator==(const Calibration&, const Calibration&) = default;
};

/// Luma conversion with Rec. 709 weights (0.2126, 0.7152, 0.0722).
GrayImage to_grayscale(const RgbImage& img);

/// Throws Error(OutOfBounds) when the rectangle is not fully inside the image.
GrayImage crop_patch(const GrayImage& img, const PixelRect& rect);
Field crop_field(const Field& field, const PixelRect& rect);

}  // namespace mouldmark
