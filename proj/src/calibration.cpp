#include "mouldmark/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mouldmark/error.hpp"

namespace mouldmark {

std::string ruler_axis_name(RulerAxis axis) {
  return axis == RulerAxis::Horizontal ? "horizontal" : "vertical";
}

RulerAxis parse_ruler_axis(const std::string& name) {
  if (name == "horizontal") return RulerAxis::Horizontal;
  if (name == "vertical") return RulerAxis::Vertical;
  throw Error(ErrorCode::InvalidArgument, "unknown ruler axis: " + name);
}

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct Chain {
  std::vector<std::pair<int, int>> pixels;  // (x, y), x ascending
  double mean_row = 0;
  int min_row = 0;
  int max_row = 0;
};

// Longest x-monotone 8-connected path through edge pixels (each step moves one
// column right and at most one row up or down).
Chain longest_horizontal_chain(const EdgeMask& mask) {
  const int w = mask.width(), h = mask.height();
  Grid<int> length(w, h, 0);
  Grid<int> prev_row(w, h, -1);
  int best_len = 0, best_x = -1, best_y = -1;
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) {
      if (!mask(x, y)) continue;
      int len = 1, from = -1;
      if (x > 0) {
        // Prefer the same row on ties so straight edges stay straight.
        for (int dy : {0, -1, 1}) {
          const int py = y + dy;
          if (py < 0 || py >= h) continue;
          if (length(x - 1, py) + 1 > len) {
            len = length(x - 1, py) + 1;
            from = py;
          }
        }
      }
      length(x, y) = len;
      prev_row(x, y) = from;
      if (len > best_len) {
        best_len = len;
        best_x = x;
        best_y = y;
      }
    }
  }
  Chain chain;
  if (best_len == 0) return chain;
  int x = best_x, y = best_y;
  while (true) {
    chain.pixels.emplace_back(x, y);
    const int py = prev_row(x, y);
    if (py < 0) break;
    --x;
    y = py;
  }
  std::reverse(chain.pixels.begin(), chain.pixels.end());
  double rows = 0;
  chain.min_row = h;
  chain.max_row = -1;
  for (const auto& [px, py] : chain.pixels) {
    rows += py;
    chain.min_row = std::min(chain.min_row, py);
    chain.max_row = std::max(chain.max_row, py);
  }
  chain.mean_row = rows / static_cast<double>(chain.pixels.size());
  return chain;
}

}  // namespace

std::vector<double> find_tick_lines(const EdgeMask& edges, RulerAxis axis,
                                    const RulerConfig& cfg) {
  const bool along_x = axis == RulerAxis::Horizontal;
  const int n = along_x ? edges.width() : edges.height();
  const int m = along_x ? edges.height() : edges.width();
  std::vector<int> counts(n, 0);
  for (int i = 0; i < n; ++i) {
    int run = 0, longest = 0;
    for (int j = 0; j < m; ++j) {
      const bool on = along_x ? edges(i, j) : edges(j, i);
      counts[i] += on ? 1 : 0;
      run = on ? run + 1 : 0;
      longest = std::max(longest, run);
    }
    if (longest < cfg.min_line_pixels) counts[i] = 0;
  }
  const int max_count = n > 0 ? *std::max_element(counts.begin(), counts.end()) : 0;
  std::vector<double> centres;
  if (max_count < 2) return centres;
  const double cut = std::max(2.0, cfg.min_line_fraction * max_count);

  std::vector<std::pair<double, double>> clusters;  // (centre, weight)
  for (int i = 0; i < n;) {
    if (counts[i] < cut) {
      ++i;
      continue;
    }
    double acc = 0, weight = 0;
    while (i < n && counts[i] >= cut) {
      acc += i * static_cast<double>(counts[i]);
      weight += counts[i];
      ++i;
    }
    clusters.emplace_back(acc / weight, weight);
  }

  for (std::size_t i = 0; i < clusters.size();) {
    double acc = clusters[i].first;
    std::size_t members = 1;
    std::size_t j = i + 1;
    while (j < clusters.size() && clusters[j].first - clusters[j - 1].first < cfg.merge_distance_px) {
      acc += clusters[j].first;
      ++members;
      ++j;
    }
    centres.push_back(acc / static_cast<double>(members));
    i = j;
  }
  return centres;
}

Calibration calibrate_from_ruler(const EdgeMask& edges, double tick_spacing_mm, RulerAxis axis,
                                 const RulerConfig& cfg) {
  if (!(tick_spacing_mm > 0 && std::isfinite(tick_spacing_mm))) {
    throw Error(ErrorCode::InvalidArgument, "tick spacing must be positive");
  }
  const auto ticks = find_tick_lines(edges, axis, cfg);
  if (ticks.size() < 2) {
    throw Error(ErrorCode::InsufficientTicks,
                "ruler calibration needs at least two tick lines, found " +
                    std::to_string(ticks.size()));
  }
  std::vector<double> gaps;
  for (std::size_t i = 1; i < ticks.size(); ++i) gaps.push_back(ticks[i] - ticks[i - 1]);
  const double gap = median(gaps);
  const auto regular = std::count_if(gaps.begin(), gaps.end(),
                                     [&](double g) { return std::abs(g - gap) <= cfg.gap_tolerance * gap; });
  if (2 * regular < static_cast<std::ptrdiff_t>(gaps.size())) {
    throw Error(ErrorCode::InsufficientTicks,
                "tick lines found but their spacing is irregular (" + std::to_string(regular) + " of " +
                    std::to_string(gaps.size()) + " gaps near the median)");
  }
  return Calibration::make(gap / tick_spacing_mm, CalibrationMethod::Ruler,
                           std::to_string(ticks.size()) + " tick lines, median gap " +
                               std::to_string(gap) + " px");
}

PaperEdges find_paper_edges(const EdgeMask& edges, const PaperEdgeConfig& cfg) {
  EdgeMask work = edges;
  const double min_len = cfg.min_width_fraction * edges.width();
  std::vector<Chain> found;
  // Bounded number of attempts: each discarded chain is erased from the mask.
  for (int attempt = 0; attempt < 64 && found.size() < 2; ++attempt) {
    Chain chain = longest_horizontal_chain(work);
    const double len = static_cast<double>(chain.pixels.size());
    if (len < std::max(2.0, min_len)) break;
    for (const auto& [x, y] : chain.pixels) {
      for (int dy = -1; dy <= 1; ++dy) {
        if (y + dy >= 0 && y + dy < work.height()) work(x, y + dy) = 0;
      }
    }
    const bool straight = (chain.max_row - chain.min_row) <= cfg.max_slope * len;
    const bool distinct = found.empty() || std::abs(found.front().mean_row - chain.mean_row) > 2.0;
    if (straight && distinct) found.push_back(std::move(chain));
  }
  if (found.size() < 2) {
    throw Error(ErrorCode::EdgesNotFound, "could not find top and bottom paper edges");
  }
  PaperEdges result{found[0].mean_row, found[1].mean_row};
  if (result.top_row > result.bottom_row) std::swap(result.top_row, result.bottom_row);
  return result;
}

Calibration calibrate_from_paper_size(const EdgeMask& edges, double paper_height_mm,
                                      const PaperEdgeConfig& cfg) {
  if (!(paper_height_mm > 0 && std::isfinite(paper_height_mm))) {
    throw Error(ErrorCode::InvalidArgument, "paper height must be positive");
  }
  const PaperEdges pe = find_paper_edges(edges, cfg);
  return Calibration::make((pe.bottom_row - pe.top_row) / paper_height_mm,
                           CalibrationMethod::PaperSize,
                           "paper edges at rows " + std::to_string(pe.top_row) + " and " +
                               std::to_string(pe.bottom_row));
}

}  // namespace mouldmark
