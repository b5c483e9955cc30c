#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mouldmark/image.hpp"
#include "mouldmark/line_detect.hpp"
#include "mouldmark/spectral_tv.hpp"

namespace mouldmark {

/// Key order is insertion order, so output is stable.
using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

/// Two-space indent, trailing newline.
std::string dump_json(const Json& j);
/// Throws Error(InvalidArgument) on malformed text.
Json parse_json(const std::string& text);

Json to_json(const PixelRect& rect);
Json to_json(const Calibration& cal);
Json to_json(const ScaleBand& band);
Json to_json(const TvFlowConfig& flow);
Json to_json(const RectFilterSpec& filter);
Json to_json(const PeakConfig& peaks);
Json to_json(const ChainDetectConfig& cfg);
Json to_json(const LaidDetectConfig& cfg);
Json to_json(const Provenance& provenance, const std::optional<Calibration>& cal);

// The apply_json overloads overwrite only the keys present in j and throw
// Error(InvalidArgument) for unknown keys or values of the wrong type.
void apply_json(const Json& j, PixelRect& rect);
void apply_json(const Json& j, ScaleBand& band);
void apply_json(const Json& j, TvFlowConfig& flow);
void apply_json(const Json& j, RectFilterSpec& filter);
void apply_json(const Json& j, PeakConfig& peaks);
void apply_json(const Json& j, ChainDetectConfig& cfg);
void apply_json(const Json& j, LaidDetectConfig& cfg);

Calibration calibration_from_json(const Json& j);

/// Calibration document printed by the calibrate command.
Json calibration_document(const Calibration& cal);

Json to_json(const ChainLineReport& report);
Json to_json(const LaidLineReport& report);
ChainLineReport chain_report_from_json(const Json& j);
LaidLineReport laid_report_from_json(const Json& j);

/// One band of a written decomposition.
struct BandEntry {
  double t_lo = 0.0;
  double t_hi = 0.0;
  std::string file;
  /// Sum of squared band values.
  double energy = 0.0;
};

struct DecompositionManifest {
  std::string source;
  PixelRect patch;
  int image_width = 0;
  int image_height = 0;
  TvFlowConfig flow;
  std::vector<BandEntry> bands;
  std::string residual_file;
  double mean = 0.0;
  std::vector<double> spectrum_times;
  std::vector<double> spectrum;
  int steps = 0;
  int nonconverged_steps = 0;
  int max_iterations = 0;
  double max_residual = 0.0;
  std::vector<std::string> warnings;
  /// Max-norm error of bands + residual + low remainder against the input.
  std::optional<double> reconstruction_error;
};

/// Fills the scale-independent parts (flow echo, S(t), solver summary,
/// non-convergence warning) from a stack.
DecompositionManifest manifest_from_stack(const ScaleSpaceStack& stack, const TvFlowConfig& flow);

Json to_json(const DecompositionManifest& manifest);
DecompositionManifest manifest_from_json(const Json& j);

}  // namespace mouldmark
