#include "mouldmark/image.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mouldmark/error.hpp"

namespace mouldmark {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::OutOfBounds: return "out_of_bounds";
    case ErrorCode::InvalidThreshold: return "invalid_threshold";
    case ErrorCode::InsufficientTicks: return "insufficient_ticks";
    case ErrorCode::EdgesNotFound: return "edges_not_found";
    case ErrorCode::InvalidInterval: return "invalid_interval";
    case ErrorCode::TooFewFrames: return "too_few_frames";
    case ErrorCode::NoLinesFound: return "no_lines_found";
    case ErrorCode::MissingCalibration: return "missing_calibration";
    case ErrorCode::PatchTooSmall: return "patch_too_small";
    case ErrorCode::PositionOutOfBounds: return "position_out_of_bounds";
    case ErrorCode::InvalidSpec: return "invalid_spec";
    case ErrorCode::UnsupportedFormat: return "unsupported_format";
    case ErrorCode::Io: return "io";
  }
  return "unknown";
}

double mean(const Field& f) {
  if (f.empty()) return 0.0;
  return sum(f) / static_cast<double>(f.size());
}

double sum(const Field& f) {
  const auto v = f.values();
  return std::accumulate(v.begin(), v.end(), 0.0);
}

double max_abs_diff(const Field& a, const Field& b) {
  if (!a.same_shape(b)) {
    throw Error(ErrorCode::InvalidArgument, "max_abs_diff: shape mismatch");
  }
  double m = 0.0;
  const auto va = a.values();
  const auto vb = b.values();
  for (std::size_t i = 0; i < va.size(); ++i) m = std::max(m, std::abs(va[i] - vb[i]));
  return m;
}

namespace {

void check_scale(std::optional<double> scale) {
  if (scale && !(std::isfinite(*scale) && *scale > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "image scale must be positive and finite");
  }
}

}  // namespace

GrayImage::GrayImage(Field pixels, std::optional<double> scale)
    : pixels_(std::move(pixels)), scale_(scale) {
  check_scale(scale_);
  for (double v : pixels_.values()) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw Error(ErrorCode::InvalidArgument, "gray intensities must lie in [0, 1]");
    }
  }
}

GrayImage::GrayImage(int width, int height, double fill, std::optional<double> scale)
    : GrayImage(Field(width, height, fill), scale) {}

GrayImage GrayImage::clamped(Field pixels, std::optional<double> scale) {
  for (double& v : pixels.values()) v = std::isnan(v) ? 0.0 : std::clamp(v, 0.0, 1.0);
  return GrayImage(std::move(pixels), scale);
}

GrayImage GrayImage::with_scale(std::optional<double> scale) const {
  GrayImage out = *this;
  check_scale(scale);
  out.scale_ = scale;
  return out;
}

RgbImage::RgbImage(int width, int height, std::array<double, 3> fill,
                   std::optional<double> scale)
    : width_(width), height_(height),
      data_(static_cast<std::size_t>(width) * height * 3), scale_(scale) {
  check_scale(scale_);
  for (std::size_t i = 0; i < data_.size(); i += 3) {
    data_[i] = fill[0];
    data_[i + 1] = fill[1];
    data_[i + 2] = fill[2];
  }
}

RgbImage::RgbImage(int width, int height, std::vector<double> interleaved,
                   std::optional<double> scale)
    : width_(width), height_(height), data_(std::move(interleaved)), scale_(scale) {
  check_scale(scale_);
  if (data_.size() != static_cast<std::size_t>(width) * height * 3) {
    throw Error(ErrorCode::InvalidArgument, "RGB data length must be 3 * width * height");
  }
}

RgbImage RgbImage::from_gray(const GrayImage& gray) {
  RgbImage out(gray.width(), gray.height(), std::array<double, 3>{0, 0, 0}, gray.scale());
  for (int y = 0; y < gray.height(); ++y) {
    for (int x = 0; x < gray.width(); ++x) {
      const double v = gray(x, y);
      out.set_pixel(x, y, {v, v, v});
    }
  }
  return out;
}

std::array<double, 3> RgbImage::pixel(int x, int y) const {
  const std::size_t i = (static_cast<std::size_t>(y) * width_ + x) * 3;
  return {data_[i], data_[i + 1], data_[i + 2]};
}

void RgbImage::set_pixel(int x, int y, std::array<double, 3> rgb) {
  const std::size_t i = (static_cast<std::size_t>(y) * width_ + x) * 3;
  data_[i] = rgb[0];
  data_[i + 1] = rgb[1];
  data_[i + 2] = rgb[2];
}

std::string calibration_method_name(CalibrationMethod method) {
  switch (method) {
    case CalibrationMethod::Ruler: return "ruler";
    case CalibrationMethod::PaperSize: return "paper_size";
    case CalibrationMethod::Explicit: return "explicit";
  }
  return "explicit";
}

CalibrationMethod parse_calibration_method(const std::string& name) {
  if (name == "ruler") return CalibrationMethod::Ruler;
  if (name == "paper_size") return CalibrationMethod::PaperSize;
  if (name == "explicit") return CalibrationMethod::Explicit;
  throw Error(ErrorCode::InvalidArgument, "unknown calibration method: " + name);
}

Calibration Calibration::make(double pixels_per_mm, CalibrationMethod method,
                              std::string note) {
  if (!(std::isfinite(pixels_per_mm) && pixels_per_mm > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "pixels_per_mm must be positive and finite");
  }
  return Calibration{pixels_per_mm, method, std::move(note)};
}

GrayImage to_grayscale(const RgbImage& img) {
  constexpr double kR = 0.2126, kG = 0.7152, kB = 0.0722;
  Field out(img.width(), img.height());
  const auto& d = img.data();
  auto values = out.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double r = d[3 * i], g = d[3 * i + 1], b = d[3 * i + 2];
    // Equal channels map to themselves exactly.
    values[i] = (r == g && g == b) ? r : kR * r + kG * g + kB * b;
  }
  return GrayImage::clamped(std::move(out), img.scale());
}

Field crop_field(const Field& field, const PixelRect& rect) {
  if (rect.x0 < 0 || rect.y0 < 0 || rect.width <= 0 || rect.height <= 0 ||
      rect.x0 + rect.width > field.width() || rect.y0 + rect.height > field.height()) {
    throw Error(ErrorCode::OutOfBounds, "patch rectangle exceeds image bounds");
  }
  Field out(rect.width, rect.height);
  for (int y = 0; y < rect.height; ++y) {
    for (int x = 0; x < rect.width; ++x) out(x, y) = field(rect.x0 + x, rect.y0 + y);
  }
  return out;
}

GrayImage crop_patch(const GrayImage& img, const PixelRect& rect) {
  return GrayImage(crop_field(img.pixels(), rect), img.scale());
}

}  // namespace mouldmark
