#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mouldmark/image.hpp"
#include "mouldmark/peaks.hpp"
#include "mouldmark/spectral_tv.hpp"
#include "mouldmark/transforms.hpp"

namespace mouldmark {

/// Whether the mould lines are brighter or darker than the paper.
enum class Polarity { Bright, Dark };

std::string polarity_name(Polarity p);
Polarity parse_polarity(const std::string& name);

struct ScaleBand {
  double t_lo = 0.026;
  double t_hi = 1.0;

  friend bool operator==(const ScaleBand&, const ScaleBand&) = default;
};

struct ChainDetectConfig {
  ScaleBand band;
  TvFlowConfig flow;
  RectFilterSpec filter;
  PeakConfig peaks{2.0, std::nullopt, 5};
  Polarity polarity = Polarity::Bright;
};

struct LaidDetectConfig {
  ScaleBand band;
  TvFlowConfig flow;
  PeakConfig peaks{2.0, std::nullopt, 2};
  Polarity polarity = Polarity::Bright;
  double angle_step_deg = 0.5;
  double low_confidence_ratio = 1.5;
  /// Line densities (per cm) searched when choosing the angle.
  double min_search_density = 3.0;
  double max_search_density = 25.0;
  /// Width of the cosine taper applied at each patch border before the
  /// Radon transform, as a fraction of the side.
  double edge_taper = 0.1;
  /// Start of the 1 cm window on the cross-section (offset from the patch
  /// centre, px). Unset centres the window and then shifts it to the nearest
  /// midpoint between two lines.
  std::optional<double> window_anchor_px;
};

/// Where a measurement came from.
struct Provenance {
  std::string source;
  PixelRect patch;
  int image_width = 0;
  int image_height = 0;
};

struct ChainLineReport {
  Orientation orientation = Orientation::Vertical;
  /// Every detected line, ascending, in source image coordinates.
  std::vector<double> positions_px;
  std::vector<int> omitted_indices;
  /// Gaps between consecutive kept lines.
  std::vector<double> distances_px;
  std::optional<std::vector<double>> distances_mm;
  std::optional<double> mean_distance_mm;
  bool implausible = false;
  std::vector<std::string> warnings;

  /// Smoothed projection and the threshold applied to it.
  std::vector<double> signal;
  double threshold = 0.0;

  ChainDetectConfig params;
  std::optional<Calibration> calibration;
  Provenance provenance;

  std::vector<double> kept_positions() const;
};

struct LaidLineReport {
  double angle_deg = 0.0;
  double peak_to_mean = 1.0;
  bool low_confidence = false;
  /// Peak offsets along the cross-section, relative to the patch centre.
  std::vector<double> positions_px;
  int density_per_cm = 0;
  bool implausible = false;
  double window_anchor_px = 0.0;
  double window_length_px = 0.0;
  /// Gaps between consecutive lines, approximate (peak centres only).
  std::vector<double> distances_px;
  std::vector<std::string> warnings;

  /// Offsets of the signal samples and the smoothed cross-section.
  std::vector<double> signal_offsets_px;
  std::vector<double> signal;
  double threshold = 0.0;

  LaidDetectConfig params;
  Calibration calibration;
  Provenance provenance;
};

/// Plausible chain-line gaps (mm) and laid densities (lines/cm).
inline constexpr double kChainGapMinMm = 15.0;
inline constexpr double kChainGapMaxMm = 50.0;
inline constexpr int kLaidDensityMin = 5;
inline constexpr int kLaidDensityMax = 15;

/// Returns a copy with the given indices (into positions_px) omitted and the
/// distances recomputed over the remaining lines. Throws
/// Error(InvalidArgument) for an index out of range.
ChainLineReport with_omissions(const ChainLineReport& report, std::vector<int> omitted);

/// Band-pass, rectangular Fourier filter, projection and peak detection on a
/// precomputed flow stack of the patch. An empty peak set yields an empty
/// report; mm fields are absent without calibration.
ChainLineReport analyse_chain_lines(const ScaleSpaceStack& stack, const ChainDetectConfig& cfg,
                                    const std::optional<Calibration>& cal,
                                    const Provenance& provenance = {});

/// Runs the flow on the patch first. Throws Error(NoLinesFound) when no peak
/// survives.
ChainLineReport detect_chain_lines(const GrayImage& patch, const ChainDetectConfig& cfg,
                                   const std::optional<Calibration>& cal,
                                   const Provenance& provenance = {});

/// Band-pass, Radon transform, dominant angle, cross-section peaks and the
/// 1 cm density window. Throws Error(PatchTooSmall) when the patch is shorter
/// than 1 cm on either side.
LaidLineReport analyse_laid_lines(const ScaleSpaceStack& stack, const LaidDetectConfig& cfg,
                                  const Calibration& cal, const Provenance& provenance = {});

/// Throws Error(MissingCalibration) without calibration, Error(PatchTooSmall)
/// before running the flow on a small patch, Error(NoLinesFound) on an empty
/// cross-section.
LaidLineReport detect_laid_lines(const GrayImage& patch, const LaidDetectConfig& cfg,
                                 const std::optional<Calibration>& cal,
                                 const Provenance& provenance = {});

/// Throws Error(PatchTooSmall) unless both sides span 1 cm.
void require_centimetre(int width, int height, const Calibration& cal);

/// Flow settings that reach the band's upper edge.
TvFlowConfig flow_for_band(TvFlowConfig flow, const ScaleBand& band);

RgbImage render_overlay(const GrayImage& img, const ChainLineReport& report);
RgbImage render_overlay(const RgbImage& img, const ChainLineReport& report);
RgbImage render_overlay(const GrayImage& img, const LaidLineReport& report);
RgbImage render_overlay(const RgbImage& img, const LaidLineReport& report);

/// Endpoints (x0, y0, x1, y1) of the density window marker in image coordinates.
std::array<double, 4> window_segment(const LaidLineReport& report);

/// Overlay colours.
inline constexpr std::array<double, 3> kLineColour{1.0, 0.0, 0.0};
inline constexpr std::array<double, 3> kOmittedColour{1.0, 0.6, 0.0};
inline constexpr std::array<double, 3> kWindowColour{0.0, 0.4, 1.0};

}  // namespace mouldmark
