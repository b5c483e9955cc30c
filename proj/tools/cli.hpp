#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mouldmark/error.hpp"
#include "mouldmark/pipeline.hpp"

namespace mouldmark::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kCalibrationFailed = 3,
  kNonConvergence = 4,
  kNoLines = 5,
  kPatchTooSmall = 6,
};

int exit_code_for(ErrorCode code);

/// Settings shared by the analysis commands. Built from defaults, then a
/// JSON config file, then command-line flags.
struct RunConfig {
  std::optional<std::string> input;
  std::optional<PixelRect> patch;
  ChainDetectConfig chain;
  LaidDetectConfig laid;
  /// Flow and bands for decompose.
  TvFlowConfig flow;
  std::vector<double> edges;
  std::optional<ScaleBand> band;
  std::optional<CalibrationRequest> calibration;
  std::string output_dir = ".";
  std::string image_format = "png";
  bool strict = false;
};

/// Keys: input, patch, band, flow, filter, peaks, polarity, laid, edges,
/// calibration, output_dir, image_format, strict. band, flow, peaks and
/// polarity apply to every command. Unknown keys throw Error(InvalidArgument).
void apply_json(const Json& j, RunConfig& cfg);

/// Entry point; args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mouldmark::cli
