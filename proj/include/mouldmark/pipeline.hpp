#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mouldmark/calibration.hpp"
#include "mouldmark/edges.hpp"
#include "mouldmark/line_detect.hpp"
#include "mouldmark/serialize.hpp"

namespace mouldmark {

/// How to obtain the pixel size of an image.
struct CalibrationRequest {
  CalibrationMethod method = CalibrationMethod::Explicit;
  std::optional<double> pixels_per_mm;
  double tick_spacing_mm = 1.0;
  RulerAxis axis = RulerAxis::Horizontal;
  std::optional<double> paper_height_mm;
  CannyConfig canny;
};

/// Keys: method, pixels_per_mm, tick_spacing_mm, axis, paper_height_mm,
/// canny {sigma, low, high}. A nested "params" object is merged as well.
void apply_json(const Json& j, CalibrationRequest& req);
Json to_json(const CalibrationRequest& req);

/// Explicit requests need pixels_per_mm, paper-size requests
/// paper_height_mm (Error(InvalidArgument) otherwise). Edge-based methods
/// run canny on the whole image and propagate InsufficientTicks or
/// EdgesNotFound.
Calibration run_calibration(const GrayImage& image, const CalibrationRequest& req);

/// The full image when unset. Throws Error(OutOfBounds) for a rectangle not
/// inside the image or with an empty side.
PixelRect resolve_patch(const GrayImage& image, const std::optional<PixelRect>& patch);

Provenance make_provenance(const std::string& source, const PixelRect& patch, const GrayImage& image);

/// Flow settings used for a detection run.
TvFlowConfig detection_flow(const ChainDetectConfig& cfg);
TvFlowConfig detection_flow(const LaidDetectConfig& cfg);

/// Band intervals [lo, hi): consecutive edges starting at 0 when edges are
/// given, otherwise the single band. Throws Error(InvalidInterval) unless
/// every interval satisfies 0 <= lo < hi.
std::vector<std::pair<double, double>> band_intervals(const std::vector<double>& edges,
                                                      const std::optional<ScaleBand>& band);

/// Raises t_max to reach the last interval.
TvFlowConfig flow_for_intervals(TvFlowConfig flow, const std::vector<std::pair<double, double>>& intervals);

struct DecompositionOutput {
  DecompositionManifest manifest;
  std::vector<Field> bands;
  Field residual;
};

/// Bands over the intervals and the residual beyond the last one. Files are
/// named band_NN<ext> and residual<ext>. With verify, the manifest records
/// the max-norm error of bands + residual + the part below the first edge
/// against the input.
DecompositionOutput decompose_intervals(const ScaleSpaceStack& stack, const TvFlowConfig& flow,
                                        const std::vector<std::pair<double, double>>& intervals,
                                        const std::string& ext, bool verify);

}  // namespace mouldmark
