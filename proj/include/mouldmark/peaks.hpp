#pragma once

#include <optional>
#include <vector>

namespace mouldmark {

struct PeakConfig {
  /// Gaussian smoothing applied before the scan, in samples; 0 disables it.
  double smooth_sigma = 0.0;
  /// Absolute level on the smoothed signal. Unset means half of the smoothed
  /// signal's maximum.
  std::optional<double> threshold;
  int min_separation = 1;

  void validate() const;

  friend bool operator==(const PeakConfig&, const PeakConfig&) = default;
};

/// Convolution with a Gaussian truncated at 4 sigma and renormalized;
/// replicate boundary. sigma == 0 returns the input.
std::vector<double> smooth_1d(const std::vector<double>& signal, double sigma);

/// Threshold actually used for a smoothed signal under cfg.
double resolve_threshold(const std::vector<double>& smoothed, const PeakConfig& cfg);

/// Strict local maxima of the smoothed signal (rising on the left, not rising
/// on the right) at or above the threshold. Among peaks closer than
/// min_separation the higher survives; equal heights keep the leftmost.
/// Returns ascending indices; an empty result is valid.
std::vector<int> detect_peaks(const std::vector<double>& signal, const PeakConfig& cfg);

/// Same scan on an already smoothed signal with an explicit threshold.
std::vector<int> find_peaks(const std::vector<double>& smoothed, double threshold,
                            int min_separation);

}  // namespace mouldmark
