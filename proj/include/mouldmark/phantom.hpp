#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mouldmark/calibration.hpp"
#include "mouldmark/image.hpp"
#include "mouldmark/transforms.hpp"

namespace mouldmark {

/// Filled disk; edge pixels carry their area coverage.
struct DiskElement {
  double cx = 0, cy = 0, r = 1, contrast = 0;
};

/// Axis-aligned rectangle covering columns [x0, x0 + w) and rows [y0, y0 + h).
struct RectElement {
  int x0 = 0, y0 = 0, w = 1, h = 1;
  double contrast = 0;
};

/// Parallel straight lines with soft edges.
///
/// Vertical lines sit at columns, horizontal lines at rows. With angle_deg set
/// the lines follow the Radon convention (0 = vertical, 90 = horizontal) and
/// positions are signed offsets from the canvas centre along the normal
/// (cos a, sin a). Either positions or period must be given; a period places
/// lines at phase + k * period across the whole canvas.
struct LineSetElement {
  Orientation orientation = Orientation::Vertical;
  std::optional<double> angle_deg;
  std::vector<double> positions;
  std::optional<double> period;
  double phase = 0.0;
  double line_width_px = 3.0;
  double contrast = 0.0;
};

/// Smooth random star-shaped polygon.
struct InkBlobElement {
  double cx = 0, cy = 0, radius = 10, contrast = -0.5;
  int vertices = 24;
  /// Relative radial variation of the outline, in [0, 1).
  double roughness = 0.35;
  /// Per-blob seed; unset derives one from the spec seed and element index.
  std::optional<std::uint64_t> seed;
};

/// Long straight crease through the canvas, Radon angle convention, offset
/// from the canvas centre along the normal.
struct FoldElement {
  double angle_deg = 0, offset_px = 0, width_px = 6, contrast = 0.3;
};

/// Ruler tick lines. A horizontal ruler runs along x with vertical ticks at
/// columns start_px + k * spacing_px; each tick covers
/// [column, column + tick_width_px) and rows [band_start_px, band_start_px + tick_length_px).
struct RulerTicksElement {
  RulerAxis axis = RulerAxis::Horizontal;
  int spacing_px = 20;
  int start_px = 10;
  int count = 0;  ///< 0 fills the canvas
  int tick_width_px = 2;
  int band_start_px = 10;
  int tick_length_px = 40;
  double contrast = -0.7;
};

using PhantomElement = std::variant<DiskElement, RectElement, LineSetElement, InkBlobElement,
                                    FoldElement, RulerTicksElement>;

struct PhantomSpec {
  int width = 64;
  int height = 64;
  std::optional<double> scale;  ///< pixels per mm
  double background = 0.0;
  std::vector<PhantomElement> elements;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;

  /// Throws Error(InvalidSpec) for malformed values or elements off the canvas.
  void validate() const;
};

struct GroundTruth {
  std::vector<double> line_positions_px;
  std::optional<double> line_angle_deg;
  std::optional<double> density_per_cm;
  std::vector<double> disk_scales;
  std::vector<double> tick_columns;
  std::optional<double> pixels_per_mm;

  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

struct Phantom {
  GrayImage image;
  GroundTruth truth;
};

/// Composites the elements in order (additive, clamped to [0, 1] after each),
/// then adds seeded Gaussian noise and clamps again.
Phantom generate(const PhantomSpec& spec);

/// Truth recorded from the spec alone.
GroundTruth ground_truth(const PhantomSpec& spec);

std::vector<std::string> phantom_preset_names();
/// Throws Error(InvalidArgument) for an unknown name.
PhantomSpec phantom_preset(const std::string& name, std::uint64_t seed = 0);

std::string phantom_spec_to_json(const PhantomSpec& spec);
/// Throws Error(InvalidSpec) for malformed JSON, unknown keys or bad values.
PhantomSpec phantom_spec_from_json(const std::string& text);
std::string ground_truth_to_json(const GroundTruth& truth);

}  // namespace mouldmark
