#include "mouldmark/line_detect.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>

#include "mouldmark/error.hpp"

namespace mouldmark {

std::string polarity_name(Polarity p) { return p == Polarity::Bright ? "bright" : "dark"; }

Polarity parse_polarity(const std::string& name) {
  if (name == "bright") return Polarity::Bright;
  if (name == "dark") return Polarity::Dark;
  throw Error(ErrorCode::InvalidArgument, "unknown polarity: " + name);
}

namespace {

std::string format_fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

void recompute_distances(ChainLineReport& r) {
  const auto kept = r.kept_positions();
  r.distances_px.clear();
  r.distances_mm.reset();
  r.mean_distance_mm.reset();
  r.implausible = false;
  r.warnings.clear();
  for (std::size_t i = 1; i < kept.size(); ++i) r.distances_px.push_back(kept[i] - kept[i - 1]);
  if (!r.calibration) {
    r.warnings.push_back("no calibration: distances reported in pixels only");
  } else {
    std::vector<double> mm;
    for (double d : r.distances_px) mm.push_back(d / r.calibration->pixels_per_mm);
    if (!mm.empty()) {
      double total = 0;
      for (double d : mm) total += d;
      r.mean_distance_mm = total / static_cast<double>(mm.size());
    }
    for (double d : mm) {
      if (d < kChainGapMinMm || d > kChainGapMaxMm) r.implausible = true;
    }
    if (r.implausible) {
      r.warnings.push_back("chain line distance outside the usual 15-50 mm range");
    }
    r.distances_mm = std::move(mm);
  }
  if (r.positions_px.empty()) {
    r.warnings.push_back("no lines found");
  } else if (kept.size() < 2) {
    r.warnings.push_back("fewer than two kept lines: no distances");
  }
}

}  // namespace

std::vector<double> ChainLineReport::kept_positions() const {
  std::vector<double> out;
  for (std::size_t i = 0; i < positions_px.size(); ++i) {
    if (std::find(omitted_indices.begin(), omitted_indices.end(), static_cast<int>(i)) ==
        omitted_indices.end()) {
      out.push_back(positions_px[i]);
    }
  }
  return out;
}

ChainLineReport with_omissions(const ChainLineReport& report, std::vector<int> omitted) {
  std::sort(omitted.begin(), omitted.end());
  omitted.erase(std::unique(omitted.begin(), omitted.end()), omitted.end());
  for (int i : omitted) {
    if (i < 0 || i >= static_cast<int>(report.positions_px.size())) {
      throw Error(ErrorCode::InvalidArgument, "omitted index out of range: " + std::to_string(i));
    }
  }
  ChainLineReport out = report;
  out.omitted_indices = std::move(omitted);
  recompute_distances(out);
  return out;
}

TvFlowConfig flow_for_band(TvFlowConfig flow, const ScaleBand& band) {
  if (band.t_hi > flow.t_max) flow.t_max = band.t_hi;
  return flow;
}

namespace {

// Multiplies by a separable raised-cosine taper of width fraction * side at
// each border, which suppresses border responses of the band.
Field tapered(Field f, double fraction) {
  if (fraction <= 0) return f;
  auto weights = [&](int len) {
    const double taper = std::max(1.0, fraction * len);
    std::vector<double> w(len);
    for (int i = 0; i < len; ++i) {
      const double d = std::min(i, len - 1 - i) + 0.5;
      w[i] = d >= taper ? 1.0 : 0.5 - 0.5 * std::cos(std::numbers::pi * d / taper);
    }
    return w;
  };
  const auto wx = weights(f.width()), wy = weights(f.height());
  for (int y = 0; y < f.height(); ++y) {
    for (int x = 0; x < f.width(); ++x) f(x, y) *= wx[x] * wy[y];
  }
  return f;
}

void check_band(const ScaleBand& band) {
  if (!(band.t_lo >= 0 && band.t_lo < band.t_hi && std::isfinite(band.t_hi))) {
    throw Error(ErrorCode::InvalidInterval, "band needs 0 <= t_lo < t_hi");
  }
}

Provenance complete(Provenance p, int width, int height) {
  if (p.patch.width == 0 || p.patch.height == 0) p.patch = {p.patch.x0, p.patch.y0, width, height};
  if (p.image_width == 0 || p.image_height == 0) {
    p.image_width = p.patch.x0 + p.patch.width;
    p.image_height = p.patch.y0 + p.patch.height;
  }
  return p;
}

}  // namespace

ChainLineReport analyse_chain_lines(const ScaleSpaceStack& stack, const ChainDetectConfig& cfg,
                                    const std::optional<Calibration>& cal, const Provenance& provenance) {
  check_band(cfg.band);
  cfg.filter.validate();
  cfg.peaks.validate();
  const Field band = band_pass(stack, cfg.band.t_lo, cfg.band.t_hi);
  const Field filtered = rect_fourier_filter(band, cfg.filter);
  auto signal = project(filtered, cfg.filter.orientation);
  if (cfg.polarity == Polarity::Dark) {
    for (double& v : signal) v = -v;
  }

  ChainLineReport r;
  r.orientation = cfg.filter.orientation;
  r.params = cfg;
  r.calibration = cal;
  r.provenance = complete(provenance, stack.width(), stack.height());
  r.signal = smooth_1d(signal, cfg.peaks.smooth_sigma);
  r.threshold = resolve_threshold(r.signal, cfg.peaks);
  const double origin =
      cfg.filter.orientation == Orientation::Vertical ? r.provenance.patch.x0 : r.provenance.patch.y0;
  if (r.signal.size() >= 3) {
    for (int i : find_peaks(r.signal, r.threshold, cfg.peaks.min_separation)) {
      r.positions_px.push_back(origin + i);
    }
  }
  recompute_distances(r);
  return r;
}

ChainLineReport detect_chain_lines(const GrayImage& patch, const ChainDetectConfig& cfg,
                                   const std::optional<Calibration>& cal, const Provenance& provenance) {
  check_band(cfg.band);
  const auto stack = tv_flow(patch.pixels(), flow_for_band(cfg.flow, cfg.band));
  auto report = analyse_chain_lines(stack, cfg, cal, provenance);
  if (report.positions_px.empty()) throw Error(ErrorCode::NoLinesFound, "no chain lines above the threshold");
  return report;
}

void require_centimetre(int width, int height, const Calibration& cal) {
  const double cm = 10.0 * cal.pixels_per_mm;
  if (width + 1e-9 < cm || height + 1e-9 < cm) {
    throw Error(ErrorCode::PatchTooSmall, "patch " + std::to_string(width) + "x" + std::to_string(height) +
                                              " px is smaller than 1 cm (" + format_fixed(cm, 1) + " px)");
  }
}

LaidLineReport analyse_laid_lines(const ScaleSpaceStack& stack, const LaidDetectConfig& cfg,
                                  const Calibration& cal, const Provenance& provenance) {
  check_band(cfg.band);
  cfg.peaks.validate();
  require_centimetre(stack.width(), stack.height(), cal);
  const Field band = tapered(band_pass(stack, cfg.band.t_lo, cfg.band.t_hi), cfg.edge_taper);
  const Sinogram sino = radon(band, angle_grid(cfg.angle_step_deg));
  const double cm = 10.0 * cal.pixels_per_mm;
  const AngleEstimate est =
      periodic_angle(sino, cm / cfg.max_search_density, cm / cfg.min_search_density, cfg.low_confidence_ratio);
  const auto a = static_cast<int>(sino.nearest_angle_index(est.angle_deg));

  LaidLineReport r;
  r.angle_deg = est.angle_deg;
  r.peak_to_mean = est.peak_to_mean;
  r.low_confidence = est.low_confidence;
  r.params = cfg;
  r.calibration = cal;
  r.provenance = complete(provenance, stack.width(), stack.height());

  // Ray sums over the patch side: the mean along interior rays.
  const double side = std::min(stack.width(), stack.height());
  std::vector<double> cross;
  for (std::size_t k = 0; k < sino.offsets_px.size(); ++k) {
    const double v = sino.data(a, static_cast<int>(k)) / side;
    cross.push_back(cfg.polarity == Polarity::Dark ? -v : v);
  }
  r.signal_offsets_px = sino.offsets_px;
  r.signal = smooth_1d(cross, cfg.peaks.smooth_sigma);
  r.threshold = resolve_threshold(r.signal, cfg.peaks);
  if (r.signal.size() >= 3) {
    for (int i : find_peaks(r.signal, r.threshold, cfg.peaks.min_separation)) {
      r.positions_px.push_back(r.signal_offsets_px[i]);
    }
  }
  for (std::size_t i = 1; i < r.positions_px.size(); ++i) {
    r.distances_px.push_back(r.positions_px[i] - r.positions_px[i - 1]);
  }

  const double length = 10.0 * cal.pixels_per_mm;
  r.window_length_px = length;
  double anchor = -0.5 * length;
  if (cfg.window_anchor_px) {
    anchor = *cfg.window_anchor_px;
  } else {
    const auto& p = r.positions_px;
    const auto next = std::upper_bound(p.begin(), p.end(), anchor);
    if (next != p.begin() && next != p.end()) anchor = 0.5 * (*(next - 1) + *next);
    anchor = std::clamp(anchor, -0.5 * side, 0.5 * side - length);
  }
  r.window_anchor_px = anchor;
  r.density_per_cm = static_cast<int>(std::count_if(r.positions_px.begin(), r.positions_px.end(),
                                                    [&](double p) { return p >= anchor && p < anchor + length; }));
  r.implausible = r.density_per_cm < kLaidDensityMin || r.density_per_cm > kLaidDensityMax;

  if (r.positions_px.empty()) r.warnings.push_back("no lines found");
  if (r.low_confidence) r.warnings.push_back("low confidence in the dominant angle");
  if (r.implausible) r.warnings.push_back("laid line density outside the usual 5-15 per cm range");
  if (anchor < -0.5 * side - 1e-9 || anchor + length > 0.5 * side + 1e-9) {
    r.warnings.push_back("density window extends beyond the measured cross-section");
  }
  r.warnings.push_back("line positions are peak centres and only approximate");
  return r;
}

LaidLineReport detect_laid_lines(const GrayImage& patch, const LaidDetectConfig& cfg,
                                 const std::optional<Calibration>& cal, const Provenance& provenance) {
  if (!cal) throw Error(ErrorCode::MissingCalibration, "laid line density needs a calibration");
  check_band(cfg.band);
  require_centimetre(patch.width(), patch.height(), *cal);
  const auto stack = tv_flow(patch.pixels(), flow_for_band(cfg.flow, cfg.band));
  auto report = analyse_laid_lines(stack, cfg, *cal, provenance);
  if (report.positions_px.empty()) throw Error(ErrorCode::NoLinesFound, "no laid lines above the threshold");
  return report;
}

namespace {

// 3x5 bitmap glyphs, rows top to bottom, bit 2 = left column.
const std::map<char, std::array<int, 5>>& glyphs() {
  static const std::map<char, std::array<int, 5>> g = {
      {'0', {7, 5, 5, 5, 7}}, {'1', {2, 6, 2, 2, 7}}, {'2', {7, 1, 7, 4, 7}}, {'3', {7, 1, 7, 1, 7}},
      {'4', {5, 5, 7, 1, 1}}, {'5', {7, 4, 7, 1, 7}}, {'6', {7, 4, 7, 5, 7}}, {'7', {7, 1, 1, 1, 1}},
      {'8', {7, 5, 7, 5, 7}}, {'9', {7, 5, 7, 1, 7}}, {'.', {0, 0, 0, 0, 2}}, {'-', {0, 0, 7, 0, 0}},
      {'/', {1, 1, 2, 4, 4}}, {'m', {0, 0, 7, 7, 5}}, {'c', {0, 0, 7, 4, 7}}, {'p', {0, 7, 5, 7, 4}},
      {'x', {0, 0, 5, 2, 5}}, {'d', {1, 1, 7, 5, 7}}, {'g', {7, 5, 7, 1, 7}}, {' ', {0, 0, 0, 0, 0}},
  };
  return g;
}

constexpr int kGlyphScale = 2;
constexpr std::array<double, 3> kInk{0.0, 0.0, 0.0};
constexpr std::array<double, 3> kPaper{1.0, 1.0, 1.0};

int text_width(const std::string& s) { return static_cast<int>(s.size()) * 4 * kGlyphScale; }

void fill_rect(RgbImage& img, int x0, int y0, int w, int h, std::array<double, 3> c) {
  for (int y = std::max(0, y0); y < std::min(img.height(), y0 + h); ++y) {
    for (int x = std::max(0, x0); x < std::min(img.width(), x0 + w); ++x) img.set_pixel(x, y, c);
  }
}

// Black text on a white box with its top-left corner at (x, y).
void draw_label(RgbImage& img, int x, int y, const std::string& text) {
  const int pad = kGlyphScale;
  fill_rect(img, x, y, text_width(text) + pad, 5 * kGlyphScale + 2 * pad, kPaper);
  int cx = x + pad;
  for (char ch : text) {
    const auto it = glyphs().find(ch);
    if (it != glyphs().end()) {
      for (int row = 0; row < 5; ++row) {
        for (int col = 0; col < 3; ++col) {
          if (it->second[row] & (4 >> col)) {
            fill_rect(img, cx + col * kGlyphScale, y + pad + row * kGlyphScale, kGlyphScale, kGlyphScale, kInk);
          }
        }
      }
    }
    cx += 4 * kGlyphScale;
  }
}

void put(RgbImage& img, double x, double y, std::array<double, 3> c) {
  const int xi = static_cast<int>(std::lround(x)), yi = static_cast<int>(std::lround(y));
  if (xi >= 0 && yi >= 0 && xi < img.width() && yi < img.height()) img.set_pixel(xi, yi, c);
}

// Segment from (x0, y0) to (x1, y1), optionally dashed 4 on / 4 off.
void draw_segment(RgbImage& img, double x0, double y0, double x1, double y1, std::array<double, 3> c,
                  bool dashed) {
  const double len = std::hypot(x1 - x0, y1 - y0);
  const int n = std::max(1, static_cast<int>(std::ceil(len * 2)));
  for (int i = 0; i <= n; ++i) {
    const double s = static_cast<double>(i) / n;
    if (dashed && static_cast<int>(s * len / 4.0) % 2 == 1) continue;
    put(img, x0 + s * (x1 - x0), y0 + s * (y1 - y0), c);
  }
}

RgbImage chain_overlay(RgbImage out, const ChainLineReport& report) {
  const bool vertical = report.orientation == Orientation::Vertical;
  const int extent = vertical ? out.width() : out.height();
  for (double p : report.positions_px) {
    if (!(p >= 0 && std::lround(p) < extent)) {
      throw Error(ErrorCode::PositionOutOfBounds, "line position " + format_fixed(p, 1) + " outside the image");
    }
  }
  for (std::size_t i = 0; i < report.positions_px.size(); ++i) {
    const double p = std::round(report.positions_px[i]);
    const bool omitted = std::find(report.omitted_indices.begin(), report.omitted_indices.end(),
                                   static_cast<int>(i)) != report.omitted_indices.end();
    const auto colour = omitted ? kOmittedColour : kLineColour;
    if (vertical) {
      draw_segment(out, p, 0, p, out.height() - 1, colour, omitted);
    } else {
      draw_segment(out, 0, p, out.width() - 1, p, colour, omitted);
    }
  }
  const auto kept = report.kept_positions();
  const auto& gaps = report.distances_mm ? *report.distances_mm : report.distances_px;
  const std::string unit = report.distances_mm ? "mm" : "px";
  const int label_h = 5 * kGlyphScale + 2 * kGlyphScale;
  for (std::size_t i = 0; i + 1 < kept.size() && i < gaps.size(); ++i) {
    const std::string text = format_fixed(gaps[i], 1);
    const double mid = 0.5 * (kept[i] + kept[i + 1]);
    if (vertical) {
      draw_label(out, static_cast<int>(mid) - text_width(text) / 2, label_h + 4, text);
    } else {
      draw_label(out, label_h + 4, static_cast<int>(mid) - label_h / 2, text);
    }
  }
  std::string legend = std::to_string(kept.size());
  if (report.mean_distance_mm) legend += " " + format_fixed(*report.mean_distance_mm, 2) + unit;
  draw_label(out, 0, 0, legend);
  return out;
}

RgbImage laid_overlay(RgbImage out, const LaidLineReport& report) {
  const PixelRect& patch = report.provenance.patch;
  const int pw = patch.width > 0 ? patch.width : out.width();
  const int ph = patch.height > 0 ? patch.height : out.height();
  if (patch.x0 < 0 || patch.y0 < 0 || patch.x0 + pw > out.width() || patch.y0 + ph > out.height()) {
    throw Error(ErrorCode::PositionOutOfBounds, "report patch lies outside the image");
  }
  const double cx = patch.x0 + (pw - 1) / 2.0, cy = patch.y0 + (ph - 1) / 2.0;
  const double th = report.angle_deg * std::numbers::pi / 180.0;
  const double nx = std::cos(th), ny = std::sin(th);
  const double reach = std::hypot(pw, ph);
  auto inside_patch = [&](double x, double y) {
    return x >= patch.x0 - 0.5 && y >= patch.y0 - 0.5 && x <= patch.x0 + pw - 0.5 && y <= patch.y0 + ph - 0.5;
  };
  for (double p : report.positions_px) {
    if (std::abs(p) > reach) {
      throw Error(ErrorCode::PositionOutOfBounds, "line offset " + format_fixed(p, 1) + " outside the patch");
    }
    const int n = static_cast<int>(std::ceil(2 * reach));
    for (int i = -n; i <= n; ++i) {
      const double tau = 0.5 * i;
      const double x = cx + p * nx - tau * ny, y = cy + p * ny + tau * nx;
      if (inside_patch(x, y)) put(out, x, y, kLineColour);
    }
  }
  const auto seg = window_segment(report);
  for (int w = -1; w <= 1; ++w) {
    draw_segment(out, seg[0] - w * ny, seg[1] + w * nx, seg[2] - w * ny, seg[3] + w * nx, kWindowColour, false);
  }
  for (int end = 0; end < 2; ++end) {
    const double ex = seg[2 * end], ey = seg[2 * end + 1];
    draw_segment(out, ex + 5 * ny, ey - 5 * nx, ex - 5 * ny, ey + 5 * nx, kWindowColour, false);
  }
  draw_label(out, 0, 0, std::to_string(report.density_per_cm) + "/cm " + format_fixed(report.angle_deg, 1) + "dg");
  return out;
}

}  // namespace

std::array<double, 4> window_segment(const LaidLineReport& report) {
  const PixelRect& patch = report.provenance.patch;
  const double cx = patch.x0 + (patch.width - 1) / 2.0, cy = patch.y0 + (patch.height - 1) / 2.0;
  const double th = report.angle_deg * std::numbers::pi / 180.0;
  const double nx = std::cos(th), ny = std::sin(th);
  const double a = report.window_anchor_px, b = report.window_anchor_px + report.window_length_px;
  return {cx + a * nx, cy + a * ny, cx + b * nx, cy + b * ny};
}

RgbImage render_overlay(const RgbImage& img, const ChainLineReport& report) { return chain_overlay(img, report); }
RgbImage render_overlay(const GrayImage& img, const ChainLineReport& report) {
  return chain_overlay(RgbImage::from_gray(img), report);
}
RgbImage render_overlay(const RgbImage& img, const LaidLineReport& report) { return laid_overlay(img, report); }
RgbImage render_overlay(const GrayImage& img, const LaidLineReport& report) {
  return laid_overlay(RgbImage::from_gray(img), report);
}

}  // namespace mouldmark
