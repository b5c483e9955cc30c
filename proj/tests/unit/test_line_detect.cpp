#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "mouldmark/error.hpp"
#include "mouldmark/line_detect.hpp"
#include "mouldmark/phantom.hpp"

using namespace mouldmark;

namespace {

PhantomSpec small_chain(std::vector<double> positions, Orientation o = Orientation::Vertical) {
  PhantomSpec s;
  s.width = o == Orientation::Vertical ? 120 : 60;
  s.height = o == Orientation::Vertical ? 60 : 120;
  s.scale = 4.0;
  s.background = 0.7;
  LineSetElement l;
  l.orientation = o;
  l.positions = std::move(positions);
  l.line_width_px = 4;
  l.contrast = 0.03;
  s.elements.push_back(l);
  s.noise_sigma = 0.003;
  s.seed = 3;
  return s;
}

ChainDetectConfig quick_chain(Orientation o = Orientation::Vertical) {
  ChainDetectConfig c;
  c.band = {0.026, 0.26};
  c.filter.orientation = o;
  return c;
}

const Calibration kCal = Calibration::make(4.0, CalibrationMethod::Explicit);

bool is_colour(const RgbImage& img, int x, int y, std::array<double, 3> c) { return img.pixel(x, y) == c; }

}  // namespace

TEST_CASE("chain lines on a small phantom") {
  const auto ph = generate(small_chain({20, 60, 100}));
  const auto cfg = quick_chain();
  const auto r = detect_chain_lines(ph.image, cfg, kCal);
  REQUIRE(r.positions_px.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(r.positions_px[i] - ph.truth.line_positions_px[i]) <= 2);
  REQUIRE(r.distances_mm);
  CHECK(r.distances_mm->size() == 2);
  for (double d : *r.distances_mm) CHECK(d == doctest::Approx(10.0).epsilon(0.05));
  CHECK(*r.mean_distance_mm == doctest::Approx(((*r.distances_mm)[0] + (*r.distances_mm)[1]) / 2).epsilon(1e-9));
  CHECK(r.implausible);  // 10 mm is below the usual range
  CHECK(r.provenance.patch == PixelRect{0, 0, 120, 60});
  CHECK(r.params.filter == cfg.filter);
}

TEST_CASE("horizontal chain lines") {
  const auto ph = generate(small_chain({20, 60, 100}, Orientation::Horizontal));
  const auto r = detect_chain_lines(ph.image, quick_chain(Orientation::Horizontal), kCal);
  REQUIRE(r.positions_px.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(r.positions_px[i] - ph.truth.line_positions_px[i]) <= 2);
  CHECK(r.orientation == Orientation::Horizontal);
}

TEST_CASE("chain report without calibration has no mm fields") {
  const auto ph = generate(small_chain({20, 60, 100}));
  const auto stack = tv_flow(ph.image.pixels(), flow_for_band({}, quick_chain().band));
  const auto r = analyse_chain_lines(stack, quick_chain(), std::nullopt);
  CHECK_FALSE(r.distances_mm);
  CHECK_FALSE(r.mean_distance_mm);
  CHECK(r.distances_px.size() == 2);
  CHECK_FALSE(r.implausible);
  CHECK(std::find(r.warnings.begin(), r.warnings.end(), "no calibration: distances reported in pixels only") !=
        r.warnings.end());
}

TEST_CASE("positions are reported in source coordinates") {
  const auto ph = generate(small_chain({20, 60, 100}));
  const PixelRect rect{10, 5, 100, 50};
  const auto patch = crop_patch(ph.image, rect);
  const auto r = detect_chain_lines(patch, quick_chain(), kCal, Provenance{"x.png", rect, 120, 60});
  REQUIRE(r.positions_px.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(r.positions_px[i] - ph.truth.line_positions_px[i]) <= 2);
}

TEST_CASE("translation along the lines moves no position by more than 1 px") {
  PhantomSpec s = small_chain({20, 60, 100});
  s.height = 90;
  const auto ph = generate(s);
  std::vector<double> first;
  for (int y0 : {0, 15, 30}) {
    const PixelRect rect{0, y0, 120, 60};
    const auto r = detect_chain_lines(crop_patch(ph.image, rect), quick_chain(), kCal, Provenance{"", rect, 120, 90});
    REQUIRE(r.positions_px.size() == 3);
    if (first.empty()) first = r.positions_px;
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(r.positions_px[i] - first[i]) <= 1);
  }
}

TEST_CASE("intensity scaling with a matched threshold keeps the peaks") {
  const auto ph = generate(small_chain({20, 60, 100}));
  auto cfg = quick_chain();
  cfg.flow.t_max = cfg.band.t_hi;
  const auto stack = tv_flow(ph.image.pixels(), flow_for_band(cfg.flow, cfg.band));
  const auto base = analyse_chain_lines(stack, cfg, kCal);
  REQUIRE(base.positions_px.size() == 3);
  cfg.peaks.threshold = base.threshold;
  Field scaled = ph.image.pixels();
  for (double& v : scaled.storage()) v *= 0.5;
  auto cfg_scaled = cfg;
  cfg_scaled.peaks.threshold = 0.5 * base.threshold;
  // The flow scale is linear in contrast: halving the image halves the scales.
  cfg_scaled.band = {cfg.band.t_lo / 2, cfg.band.t_hi / 2};
  cfg_scaled.flow.dt = cfg.flow.dt / 2;
  cfg_scaled.flow.t_max = cfg.flow.t_max / 2;
  cfg_scaled.flow.inner_tol = cfg.flow.inner_tol * 2;
  const auto stack_scaled = tv_flow(scaled, flow_for_band(cfg_scaled.flow, cfg_scaled.band));
  const auto half = analyse_chain_lines(stack_scaled, cfg_scaled, kCal);
  CHECK(half.positions_px == base.positions_px);
}

TEST_CASE("blank patch with a set threshold finds no lines") {
  PhantomSpec s = small_chain({});
  s.elements.clear();
  auto cfg = quick_chain();
  cfg.peaks.threshold = 0.5;
  CHECK_THROWS_WITH_AS(detect_chain_lines(generate(s).image, cfg, kCal), doctest::Contains("no chain lines"),
                       Error);
  try {
    detect_chain_lines(generate(s).image, cfg, kCal);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoLinesFound);
  }
}

TEST_CASE("omissions recompute distances over kept lines") {
  ChainLineReport r;
  r.positions_px = {10, 110, 200, 330};
  r.calibration = Calibration::make(5.0, CalibrationMethod::Explicit);
  const auto full = with_omissions(r, {});
  CHECK(full.distances_px == std::vector<double>{100, 90, 130});
  CHECK(*full.distances_mm == std::vector<double>{20, 18, 26});
  CHECK(*full.mean_distance_mm == doctest::Approx(64.0 / 3));
  CHECK_FALSE(full.implausible);
  const auto edited = with_omissions(r, {3, 0, 3});
  CHECK(edited.omitted_indices == std::vector<int>{0, 3});
  CHECK(edited.positions_px == r.positions_px);
  CHECK(edited.kept_positions() == std::vector<double>{110, 200});
  CHECK(*edited.distances_mm == std::vector<double>{18});
  CHECK_THROWS_AS(with_omissions(r, {4}), Error);
  CHECK_THROWS_AS(with_omissions(r, {-1}), Error);
  const auto skipped = with_omissions(r, {1});
  CHECK(*skipped.distances_mm == std::vector<double>{38, 26});
  CHECK_FALSE(skipped.implausible);
  const auto wide = with_omissions(r, {1, 2});
  CHECK(*wide.distances_mm == std::vector<double>{64});
  CHECK(wide.implausible);
}

TEST_CASE("chain overlay draws one line per position") {
  ChainLineReport r;
  r.positions_px = {10, 30, 50};
  r.omitted_indices = {2};
  r.calibration = Calibration::make(2.0, CalibrationMethod::Explicit);
  r = with_omissions(r, {2});
  const GrayImage img(64, 48, 0.5);
  const RgbImage out = render_overlay(img, r);
  int red_columns = 0, omitted_columns = 0;
  for (int x = 0; x < 64; ++x) {
    if (is_colour(out, x, 47, kLineColour)) ++red_columns;
    int dashed = 0;
    for (int y = 0; y < 48; ++y) dashed += is_colour(out, x, y, kOmittedColour);
    if (dashed > 0) {
      ++omitted_columns;
      CHECK(x == 50);
      CHECK(dashed < 48);
    }
  }
  CHECK(red_columns == 2);
  CHECK(omitted_columns == 1);
  CHECK(is_colour(out, 10, 47, kLineColour));
  CHECK(is_colour(out, 30, 47, kLineColour));
  r.positions_px.push_back(64);
  CHECK_THROWS_AS(render_overlay(img, r), Error);
}

TEST_CASE("empty chain report changes only the legend") {
  const GrayImage img(64, 48, 0.5);
  const RgbImage out = render_overlay(img, ChainLineReport{});
  const RgbImage base = RgbImage::from_gray(img);
  for (int y = 20; y < 48; ++y)
    for (int x = 0; x < 64; ++x) CHECK(out.pixel(x, y) == base.pixel(x, y));
  CHECK(out != base);
}

TEST_CASE("laid lines need a calibration and a centimetre") {
  const GrayImage img(60, 60, 0.5);
  CHECK_THROWS_AS(detect_laid_lines(img, LaidDetectConfig{}, std::nullopt), Error);
  try {
    detect_laid_lines(img, LaidDetectConfig{}, Calibration::make(10, CalibrationMethod::Explicit));
    FAIL("expected PatchTooSmall");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::PatchTooSmall);
  }
  CHECK_NOTHROW(require_centimetre(60, 60, Calibration::make(6, CalibrationMethod::Explicit)));
  CHECK_THROWS_AS(require_centimetre(59, 60, Calibration::make(6, CalibrationMethod::Explicit)), Error);
}

TEST_CASE("laid grating density on a small patch") {
  PhantomSpec s;
  s.width = s.height = 80;
  s.scale = 6.0;  // 1 cm = 60 px
  s.background = 0.7;
  LineSetElement l;
  l.angle_deg = 88.0;
  l.period = 7.5;  // 8 per cm
  l.line_width_px = 3.5;
  l.contrast = 0.03;
  s.elements.push_back(l);
  s.noise_sigma = 0.003;
  const auto ph = generate(s);
  LaidDetectConfig cfg;
  cfg.band = {0.013, 0.13};
  cfg.flow.t_max = 0.13;
  const auto cal = Calibration::make(6.0, CalibrationMethod::Explicit);
  const auto r = detect_laid_lines(ph.image, cfg, cal);
  CHECK(std::abs(r.angle_deg - 88.0) <= 0.5);
  CHECK(r.density_per_cm == 8);
  CHECK_FALSE(r.implausible);
  CHECK(r.window_length_px == doctest::Approx(60));
  CHECK(std::is_sorted(r.positions_px.begin(), r.positions_px.end()));
  CHECK(std::find(r.warnings.begin(), r.warnings.end(), "line positions are peak centres and only approximate") !=
        r.warnings.end());

  // Moving the window may change the count by at most the line at its edge.
  cfg.window_anchor_px = r.window_anchor_px + 3.75;
  const auto stack = tv_flow(ph.image.pixels(), flow_for_band(cfg.flow, cfg.band));
  const auto moved = analyse_laid_lines(stack, cfg, cal);
  CHECK(moved.window_anchor_px == doctest::Approx(r.window_anchor_px + 3.75));
  CHECK(std::abs(moved.density_per_cm - 8) <= 1);

  const RgbImage out = render_overlay(ph.image, r);
  const auto seg = window_segment(r);
  CHECK(std::hypot(seg[2] - seg[0], seg[3] - seg[1]) == doctest::Approx(60));
  int blue = 0;
  for (int y = 0; y < 80; ++y)
    for (int x = 0; x < 80; ++x) blue += is_colour(out, x, y, kWindowColour);
  CHECK(blue > 60);
}

TEST_CASE("polarity names") {
  CHECK(parse_polarity("dark") == Polarity::Dark);
  CHECK(polarity_name(Polarity::Bright) == "bright");
  CHECK_THROWS_AS(parse_polarity("grey"), Error);
  CHECK(flow_for_band(TvFlowConfig{}, {0.0, 2.0}).t_max == 2.0);
  CHECK(flow_for_band(TvFlowConfig{}, {0.0, 0.5}).t_max == TvFlowConfig{}.t_max);
}
