#include "mouldmark/peaks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mouldmark/error.hpp"

namespace mouldmark {

void PeakConfig::validate() const {
  if (!(smooth_sigma >= 0 && std::isfinite(smooth_sigma))) {
    throw Error(ErrorCode::InvalidArgument, "smoothing sigma must be >= 0");
  }
  if (threshold && !std::isfinite(*threshold)) {
    throw Error(ErrorCode::InvalidArgument, "peak threshold must be finite");
  }
  if (min_separation < 1) throw Error(ErrorCode::InvalidArgument, "min_separation must be >= 1");
}

std::vector<double> smooth_1d(const std::vector<double>& signal, double sigma) {
  if (sigma < 0) throw Error(ErrorCode::InvalidArgument, "smoothing sigma must be >= 0");
  if (sigma == 0 || signal.empty()) return signal;
  const int radius = std::max(1, static_cast<int>(std::ceil(4.0 * sigma)));
  std::vector<double> kernel(2 * radius + 1);
  for (int i = -radius; i <= radius; ++i) kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
  const double total = std::accumulate(kernel.begin(), kernel.end(), 0.0);
  for (double& k : kernel) k /= total;

  const int n = static_cast<int>(signal.size());
  std::vector<double> out(signal.size());
  for (int i = 0; i < n; ++i) {
    double acc = 0;
    for (int j = -radius; j <= radius; ++j) acc += kernel[j + radius] * signal[std::clamp(i + j, 0, n - 1)];
    out[i] = acc;
  }
  return out;
}

double resolve_threshold(const std::vector<double>& smoothed, const PeakConfig& cfg) {
  if (cfg.threshold) return *cfg.threshold;
  if (smoothed.empty()) return 0.0;
  return 0.5 * *std::max_element(smoothed.begin(), smoothed.end());
}

std::vector<int> find_peaks(const std::vector<double>& s, double threshold, int min_separation) {
  std::vector<int> candidates;
  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    if (s[i] > s[i - 1] && s[i] >= s[i + 1] && s[i] >= threshold) {
      candidates.push_back(static_cast<int>(i));
    }
  }
  if (min_separation <= 1) return candidates;

  // Greedy by height (leftmost first on ties); a candidate survives when no
  // already accepted peak lies closer than min_separation.
  std::vector<int> order = candidates;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return s[a] > s[b]; });
  std::vector<char> taken(s.size(), 0);
  std::vector<int> kept;
  for (int idx : order) {
    const int lo = std::max(0, idx - min_separation + 1);
    const int hi = std::min(static_cast<int>(s.size()) - 1, idx + min_separation - 1);
    bool blocked = false;
    for (int j = lo; j <= hi && !blocked; ++j) blocked = taken[j] != 0;
    if (blocked) continue;
    taken[idx] = 1;
    kept.push_back(idx);
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

std::vector<int> detect_peaks(const std::vector<double>& signal, const PeakConfig& cfg) {
  cfg.validate();
  if (signal.size() < 3) return {};
  const auto smoothed = smooth_1d(signal, cfg.smooth_sigma);
  return find_peaks(smoothed, resolve_threshold(smoothed, cfg), cfg.min_separation);
}

}  // namespace mouldmark
