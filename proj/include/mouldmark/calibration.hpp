#pragma once

#include <string>
#include <vector>

#include "mouldmark/grid.hpp"
#include "mouldmark/image.hpp"

namespace mouldmark {

/// Direction along which ruler ticks repeat. Horizontal means tick lines are
/// vertical and spaced along x.
enum class RulerAxis { Horizontal, Vertical };

std::string ruler_axis_name(RulerAxis axis);
RulerAxis parse_ruler_axis(const std::string& name);

struct RulerConfig {
  /// Minimum fraction of the strongest tick's edge count for a column (row)
  /// to be considered part of a tick line.
  double min_line_fraction = 0.5;
  /// Edge clusters closer than this are merged into one tick (the two flanks
  /// of a thin ruler line).
  double merge_distance_px = 6.0;
  /// A column (row) counts as part of a tick line only if it holds a straight
  /// run of at least this many consecutive edge pixels.
  int min_line_pixels = 16;
  /// At least half of the tick gaps must lie within this relative distance of
  /// the median gap.
  double gap_tolerance = 0.2;
};

/// Tick line centres found in the mask, ascending.
std::vector<double> find_tick_lines(const EdgeMask& edges, RulerAxis axis,
                                    const RulerConfig& cfg = {});

/// pixels_per_mm = median consecutive tick gap / tick_spacing_mm. Throws
/// Error(InsufficientTicks) when fewer than two tick lines are present or
/// their spacing is irregular.
Calibration calibrate_from_ruler(const EdgeMask& edges, double tick_spacing_mm,
                                 RulerAxis axis, const RulerConfig& cfg = {});

struct PaperEdgeConfig {
  /// An edge run counts as a paper edge only if it spans at least this
  /// fraction of the image width.
  double min_width_fraction = 0.25;
  /// Maximum vertical extent of a run relative to its horizontal extent.
  double max_slope = 0.1;
};

struct PaperEdges {
  double top_row = 0;
  double bottom_row = 0;
};

/// The two longest near-horizontal 8-connected edge runs, top first. Throws
/// Error(EdgesNotFound) if fewer than two qualify.
PaperEdges find_paper_edges(const EdgeMask& edges, const PaperEdgeConfig& cfg = {});

/// pixels_per_mm = (bottom_row - top_row) / paper_height_mm.
Calibration calibrate_from_paper_size(const EdgeMask& edges, double paper_height_mm,
                                      const PaperEdgeConfig& cfg = {});

}  // namespace mouldmark
