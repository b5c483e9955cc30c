// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance            run everything
//   acceptance KEY...     run the named criteria
//   acceptance --list     list the keys

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "httplib.h"
#include "mouldmark/calibration.hpp"
#include "mouldmark/edges.hpp"
#include "mouldmark/error.hpp"
#include "mouldmark/image_io.hpp"
#include "mouldmark/line_detect.hpp"
#include "mouldmark/peaks.hpp"
#include "mouldmark/phantom.hpp"
#include "mouldmark/pipeline.hpp"
#include "mouldmark/serialize.hpp"
#include "mouldmark/spectral_tv.hpp"
#include "mouldmark/transforms.hpp"
#include "service.hpp"

using namespace mouldmark;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void check(bool ok, const std::string& note) {
    pass = pass && ok;
    notes.push_back(std::string(ok ? "" : "[x] ") + note);
  }
};

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("mouldmark-acceptance-" + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

// Peak of S(t) with a parabolic refinement between grid points.
double refined_peak(const std::vector<double>& times, const std::vector<double>& s) {
  const auto k = static_cast<std::size_t>(std::max_element(s.begin(), s.end()) - s.begin());
  if (k == 0 || k + 1 >= s.size()) return times[k];
  const double a = s[k - 1], b = s[k], c = s[k + 1];
  const double denom = a - 2 * b + c;
  const double shift = denom != 0 ? 0.5 * (a - c) / denom : 0.0;
  return times[k] + shift * (times[k + 1] - times[k]);
}

// ---- criteria ----

Outcome reconstruction() {
  Outcome o;
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> u(0, 1);
  double worst = 0;
  for (int trial = 0; trial < 20; ++trial) {
    Field f(32, 32);
    for (double& v : f.storage()) v = u(rng);
    TvFlowConfig flow;
    flow.variant = trial % 2 ? TvVariant::Anisotropic : TvVariant::Isotropic;
    const auto stack = tv_flow(f, flow);
    std::uniform_int_distribution<int> idx(1, stack.last_index());
    std::vector<double> edges;
    const int count = 1 + trial % 5;
    for (int k = 0; k < count; ++k) edges.push_back(stack.times[idx(rng)]);
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    worst = std::max(worst, max_abs_diff(decompose(stack, edges).reconstruct(), f));
  }
  o.check(worst <= 1e-6, fmt("max error %.2e over 20 images (limit 1e-6)", worst));
  return o;
}

Outcome disk_eigenfunction() {
  Outcome o;
  const Field f = generate(phantom_preset("disk")).image.pixels();
  const double target = 2.5;
  auto run = [&](double dt) {
    TvFlowConfig flow;
    flow.dt = dt;
    flow.t_max = 4.0;
    const auto stack = tv_flow(f, flow);
    const auto s = spectral_amplitude(stack);
    double total = 0, inside = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      total += s[i];
      if (std::abs(stack.times[i] - target) <= 0.2 * target) inside += s[i];
    }
    return std::pair{refined_peak(stack.times, s), inside / total};
  };
  const auto [peak, fraction] = run(0.013);
  const auto [peak_half, fraction_half] = run(0.0065);
  const double shift = std::abs(peak_half - peak) / peak;
  o.check(std::abs(peak - target) <= 0.2 * target, fmt("S(t) peak at t=%.3f (target 2.5 +/- 20%%)", peak));
  o.check(fraction >= 0.8, fmt("%.1f%% of S mass within +/-20%% of 2.5 (need >= 80%%)", 100 * fraction));
  o.check(shift < 0.05, fmt("halving dt moves the peak to t=%.3f, %.2f%% (need < 5%%)", peak_half, 100 * shift));
  (void)fraction_half;
  return o;
}

Outcome four_disks() {
  Outcome o;
  const PhantomSpec spec = phantom_preset("four-disks");
  const auto ph = generate(spec);
  const auto& scales = ph.truth.disk_scales;
  std::vector<double> order(scales.begin(), scales.end());
  std::sort(order.begin(), order.end());
  // Edges at the geometric means between neighbouring disk scales, with the
  // outer edges placed symmetrically around the first and last scale.
  std::vector<double> edges{order[0] * std::sqrt(order[0] / order[1])};
  for (std::size_t i = 0; i + 1 < order.size(); ++i) edges.push_back(std::sqrt(order[i] * order[i + 1]));
  edges.push_back(order.back() * std::sqrt(order.back() / order[order.size() - 2]));
  TvFlowConfig flow;
  flow.dt = 0.02;
  flow.t_max = edges.back();
  const auto stack = tv_flow(ph.image.pixels(), flow);
  const auto dec = decompose(stack, edges);

  const int w = spec.width, h = spec.height;
  for (std::size_t e = 0; e < spec.elements.size(); ++e) {
    const auto& disk = std::get<DiskElement>(spec.elements[e]);
    const double scale = scales[e];
    // Band 0 is [0, first edge), so disk k sits in band k + 1.
    const auto band_index =
        static_cast<std::size_t>(std::find(order.begin(), order.end(), scale) - order.begin()) + 1;
    // Reference: this disk alone, mean removed.
    PhantomSpec alone = spec;
    alone.elements = {disk};
    Field ref = generate(alone).image.pixels();
    const double m = mean(ref);
    for (double& v : ref.storage()) v -= m;
    // The disk's quadrant.
    const int qx = disk.cx < w / 2.0 ? 0 : w / 2, qy = disk.cy < h / 2.0 ? 0 : h / 2;
    const Field& band = dec.bands[band_index];
    double dot = 0, ref2 = 0, own = 0, total = 0;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const bool mine = x >= qx && x < qx + w / 2 && y >= qy && y < qy + h / 2;
        const double e = band(x, y) * band(x, y);
        total += e;
        if (!mine) continue;
        own += e;
        dot += band(x, y) * ref(x, y);
        ref2 += ref(x, y) * ref(x, y);
      }
    }
    const double recovered = dot / ref2;
    const double leakage = 1.0 - own / total;
    o.check(recovered >= 0.8 && leakage < 0.1,
            fmt("disk h*r/2=%.2f: band %zu recovers %.1f%%, %.1f%% of the band lies on other disks", scale,
                band_index, 100 * recovered, 100 * leakage));
  }
  return o;
}

Outcome anisotropic_rectangles() {
  Outcome o;
  const PhantomSpec spec = phantom_preset("rectangles");
  const auto& rect = std::get<RectElement>(spec.elements.front());
  const Field f = generate(spec).image.pixels();
  const int cx = rect.x0 + rect.w / 2, cy = rect.y0 + rect.h / 2;

  struct Run {
    double correlation, corner_error;
  };
  auto run = [&](TvVariant variant) {
    TvFlowConfig flow;
    flow.variant = variant;
    flow.dt = 0.02;
    flow.t_max = 5.0;
    const auto stack = tv_flow(f, flow);
    const auto s = spectral_amplitude(stack);
    const double peak = refined_peak(stack.times, s);
    const double lo = stack.times[stack.index_of(0.5 * peak)];
    const double hi = stack.times[stack.index_of(std::min(1.5 * peak, stack.t_max()))];
    const Field band = band_pass(stack, lo, hi);
    // Correlation with the rectangle indicator.
    Field ind(f.width(), f.height(), 0.0);
    for (int y = rect.y0; y < rect.y0 + rect.h; ++y)
      for (int x = rect.x0; x < rect.x0 + rect.w; ++x) ind(x, y) = 1.0;
    const double mb = mean(band), mi = mean(ind);
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t k = 0; k < band.size(); ++k) {
      const double a = band.storage()[k] - mb, b = ind.storage()[k] - mi;
      sab += a * b;
      saa += a * a;
      sbb += b * b;
    }
    // Band rescaled so its centre carries the rectangle contrast; compare the corner pixels.
    const double bg = band(0, 0);
    const double gain = rect.contrast / (band(cx, cy) - bg);
    double corner = 0;
    for (auto [x, y] : {std::pair{rect.x0, rect.y0}, {rect.x0 + rect.w - 1, rect.y0},
                        {rect.x0, rect.y0 + rect.h - 1}, {rect.x0 + rect.w - 1, rect.y0 + rect.h - 1}}) {
      corner = std::max(corner, std::abs(gain * (band(x, y) - bg) - rect.contrast));
    }
    return Run{sab / std::sqrt(saa * sbb), corner};
  };
  const Run ani = run(TvVariant::Anisotropic);
  const Run iso = run(TvVariant::Isotropic);
  o.check(ani.correlation >= 0.9, fmt("anisotropic band correlation %.3f (need >= 0.9)", ani.correlation));
  o.check(ani.corner_error < 0.05, fmt("anisotropic corner error %.4f (need < 0.05)", ani.corner_error));
  o.check(iso.corner_error >= 2 * ani.corner_error,
          fmt("isotropic corner error %.4f vs anisotropic %.4f (need >= 2x)", iso.corner_error, ani.corner_error));
  return o;
}

Outcome chain_end_to_end() {
  Outcome o;
  for (const std::string name : {"chain-basic", "chain-wide-gap"}) {
    const auto ph = generate(phantom_preset(name, 1));
    const auto cal = Calibration::make(*ph.truth.pixels_per_mm, CalibrationMethod::Explicit);
    const auto r = detect_chain_lines(ph.image, ChainDetectConfig{}, cal);
    const auto& truth = ph.truth.line_positions_px;
    double worst = 0;
    bool matched = r.positions_px.size() == truth.size();
    for (std::size_t i = 0; matched && i < truth.size(); ++i) worst = std::max(worst, std::abs(r.positions_px[i] - truth[i]));
    std::string positions;
    for (double p : r.positions_px) positions += fmt(" %.0f", p);
    o.check(matched && worst <= 2,
            fmt("%s: %zu lines at%s, %zu expected, worst offset %.1f px", name.c_str(), r.positions_px.size(),
                positions.c_str(), truth.size(), worst));
    double dist_err = 0;
    for (std::size_t i = 0; matched && i + 1 < truth.size(); ++i) {
      const double expect = (truth[i + 1] - truth[i]) / cal.pixels_per_mm;
      dist_err = std::max(dist_err, std::abs((*r.distances_mm)[i] - expect));
    }
    if (name == "chain-basic") {
      o.check(matched && dist_err <= 0.2, fmt("%s: distance error %.3f mm (limit 0.2)", name.c_str(), dist_err));
    } else {
      const bool wide = matched && std::any_of(r.distances_mm->begin(), r.distances_mm->end(),
                                               [](double d) { return d > kChainGapMaxMm; });
      o.check(wide && r.implausible, fmt("%s: 60 mm gap flagged implausible: %s", name.c_str(),
                                         r.implausible ? "yes" : "no"));
    }
  }
  return o;
}

Outcome laid_end_to_end() {
  Outcome o;
  auto detect = [](const std::string& name, TvVariant variant) {
    const auto ph = generate(phantom_preset(name, 1));
    LaidDetectConfig cfg;
    cfg.flow.variant = variant;
    const auto cal = Calibration::make(*ph.truth.pixels_per_mm, CalibrationMethod::Explicit);
    return std::pair{detect_laid_lines(ph.image, cfg, cal), ph.truth};
  };
  const auto [basic, truth] = detect("laid-basic", TvVariant::Isotropic);
  const int expected = static_cast<int>(std::lround(*truth.density_per_cm));
  const double angle_err = std::abs(basic.angle_deg - *truth.line_angle_deg);
  o.check(angle_err <= 0.5, fmt("laid-basic angle %.1f (truth %.1f, limit 0.5)", basic.angle_deg, *truth.line_angle_deg));
  o.check(basic.density_per_cm == expected, fmt("laid-basic density %d/cm (truth %d)", basic.density_per_cm, expected));
  const auto fold = detect("laid-fold", TvVariant::Isotropic).first;
  o.check(fold.density_per_cm == basic.density_per_cm,
          fmt("laid-fold density %d/cm, change %d (need 0), angle %.1f", fold.density_per_cm,
              fold.density_per_cm - basic.density_per_cm, fold.angle_deg));
  const auto iso = detect("laid-degraded", TvVariant::Isotropic).first;
  const auto ani = detect("laid-degraded", TvVariant::Anisotropic).first;
  auto passes = [&](const LaidLineReport& r) {
    return r.density_per_cm == expected && std::abs(r.angle_deg - *truth.line_angle_deg) <= 0.5;
  };
  o.check(passes(ani), fmt("laid-degraded anisotropic: density %d/cm, angle %.1f", ani.density_per_cm, ani.angle_deg));
  o.check(!passes(iso), fmt("laid-degraded isotropic expected to fail: density %d/cm, angle %.1f", iso.density_per_cm,
                            iso.angle_deg));
  return o;
}

Outcome fourier_slice() {
  Outcome o;
  // Two smooth anisotropic bumps away from the centre.
  const int n = 64;
  Field f(n, n);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      const double a = (x - 26.0) / 6.0, b = (y - 35.0) / 4.0;
      const double c = (x - 40.0) / 3.5, d = (y - 24.0) / 5.0;
      f(x, y) = 0.6 * std::exp(-0.5 * (a * a + b * b)) + 0.3 * std::exp(-0.5 * (c * c + d * d + 0.6 * c * d));
    }
  }
  const double centre = (n - 1) / 2.0;
  const std::vector<double> angles{0.0, 45.0, 90.0};
  const auto sino = radon(f, angles);
  const std::size_t len = sino.offsets_px.size();
  for (std::size_t a = 0; a < angles.size(); ++a) {
    const auto col = sino.column(a);
    const double th = angles[a] * std::numbers::pi / 180.0;
    double diff2 = 0, ref2 = 0;
    for (std::size_t k = 0; k < len; ++k) {
      const double w = 2 * std::numbers::pi * (static_cast<double>(k) - static_cast<double>(len / 2)) /
                       static_cast<double>(len);
      std::complex<double> slice = 0, proj = 0;
      for (std::size_t j = 0; j < len; ++j) proj += col[j] * std::polar(1.0, -w * sino.offsets_px[j]);
      // Direct 2D transform along the direction (cos, sin) at the same frequency.
      for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x)
          slice += f(x, y) * std::polar(1.0, -w * ((x - centre) * std::cos(th) + (y - centre) * std::sin(th)));
      diff2 += std::norm(proj - slice);
      ref2 += std::norm(slice);
    }
    const double rel = std::sqrt(diff2 / ref2);
    o.check(rel <= 0.02, fmt("%g deg: relative L2 %.2e (limit 2%%)", angles[a], rel));
  }
  return o;
}

std::vector<int> brute_force_peaks(const std::vector<double>& s, double threshold, int sep) {
  std::vector<int> cand;
  for (std::size_t i = 1; i + 1 < s.size(); ++i)
    if (s[i] > s[i - 1] && s[i] >= s[i + 1] && s[i] >= threshold) cand.push_back(static_cast<int>(i));
  std::vector<int> kept;
  while (!cand.empty()) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < cand.size(); ++k)
      if (s[cand[k]] > s[cand[best]]) best = k;
    const int p = cand[best];
    kept.push_back(p);
    std::erase_if(cand, [&](int c) { return std::abs(c - p) < sep; });
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

Outcome peak_oracle() {
  Outcome o;
  std::mt19937 rng(77);
  std::uniform_int_distribution<int> len(3, 200), sep(1, 12), levels(0, 6);
  std::uniform_real_distribution<double> u(0, 1);
  int mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> s(len(rng));
    const bool coarse = trial % 3 == 0;
    for (double& v : s) v = coarse ? levels(rng) : u(rng);
    PeakConfig cfg;
    cfg.min_separation = sep(rng);
    if (trial % 2) cfg.threshold = u(rng) * (coarse ? 6 : 1);
    const double thr = resolve_threshold(s, cfg);
    if (detect_peaks(s, cfg) != brute_force_peaks(s, thr, cfg.min_separation)) ++mismatches;
  }
  o.check(mismatches == 0, fmt("%d of 1000 random signals differ from the brute-force scan", mismatches));
  return o;
}

Outcome calibration() {
  Outcome o;
  const auto ruler = generate(phantom_preset("ruler"));
  const auto r = calibrate_from_ruler(canny_edges(ruler.image), 1.0, RulerAxis::Horizontal);
  o.check(r.pixels_per_mm == 20.0, fmt("ruler phantom: %.6f px/mm (need exactly 20)", r.pixels_per_mm));
  const auto page = generate(phantom_preset("page"));
  const auto p = calibrate_from_paper_size(canny_edges(page.image), 300.0);
  const double rel = std::abs(p.pixels_per_mm / *page.truth.pixels_per_mm - 1);
  o.check(rel <= 0.01, fmt("page phantom: %.4f px/mm vs %.4f, %.2f%% off (limit 1%%)", p.pixels_per_mm,
                           *page.truth.pixels_per_mm, 100 * rel));
  return o;
}

Outcome cli_contract() {
  Outcome o;
  TempDir dir;
  const std::string d = dir.path.string();
  for (const std::string name : {"chain-basic", "laid-basic", "chain-blank"}) {
    if (run_cli({"phantom", "--preset", name, "--seed", "1", "-o", d}).code != 0) {
      o.check(false, "phantom generation for " + name);
      return o;
    }
  }
  const auto again = run_cli({"phantom", "--preset", "chain-basic", "--seed", "1", "-o", dir.str("again")});
  o.check(again.code == 0 && slurp(dir.str("chain-basic.png")) == slurp(dir.str("again/chain-basic.png")),
          "phantom: same seed gives identical bytes");

  const std::string chain = dir.str("chain-basic.png"), laid = dir.str("laid-basic.png");
  const auto c1 = run_cli({"chains", chain, "--px-per-mm", "10", "-o", dir.str("c1")});
  const auto c2 = run_cli({"chains", chain, "--px-per-mm", "10", "-o", dir.str("c2")});
  o.check(c1.code == 0 && c1.out == c2.out &&
              slurp(dir.str("c1/chains_overlay.png")) == slurp(dir.str("c2/chains_overlay.png")),
          fmt("chains: two runs give identical reports and overlays (exit %d)", c1.code));
  const auto l1 = run_cli({"laids", laid, "--px-per-mm", "12", "-o", dir.str("l1")});
  const auto l2 = run_cli({"laids", laid, "--px-per-mm", "12", "-o", dir.str("l2")});
  o.check(l1.code == 0 && l1.out == l2.out &&
              slurp(dir.str("l1/laids_overlay.png")) == slurp(dir.str("l2/laids_overlay.png")),
          fmt("laids: two runs give identical reports and overlays (exit %d)", l1.code));

  struct Case {
    std::string what;
    std::vector<std::string> args;
    int expect;
  };
  const std::vector<Case> cases{
      {"missing input", {"calibrate", dir.str("absent.png"), "--px-per-mm", "3"}, 2},
      {"patch outside the canvas", {"chains", chain, "--patch", "250,0,100,100", "-o", dir.str("x")}, 2},
      {"ruler on a blank image", {"calibrate", dir.str("chain-blank.png"), "--ruler"}, 3},
      {"laids without calibration", {"laids", laid, "-o", dir.str("x")}, 3},
      {"strict run with capped solver",
       {"chains", chain, "--px-per-mm", "10", "--strict", "--inner-max-iter", "5", "-o", dir.str("x")}, 4},
      {"blank image with a threshold",
       {"chains", dir.str("chain-blank.png"), "--threshold", "0.5", "-o", dir.str("x")}, 5},
      {"0.8 cm patch", {"laids", laid, "--px-per-mm", "12", "--patch", "0,0,96,96", "-o", dir.str("x")}, 6},
  };
  for (const auto& c : cases) {
    const int code = run_cli(c.args).code;
    o.check(code == c.expect, fmt("exit %d for %s (expect %d)", code, c.what.c_str(), c.expect));
  }

  service::ServiceConfig cfg;
  cfg.port = 0;
  service::Service svc(cfg);
  const int port = svc.start_background();
  httplib::Client client("127.0.0.1", port);
  client.set_read_timeout(600, 0);
  auto session_report = [&](const std::string& file, double ppm, const std::string& route) -> std::string {
    const std::string bytes = slurp(file);
    httplib::MultipartFormDataItems items{{"image", bytes, fs::path(file).filename().string(), "image/png"}};
    const auto created = client.Post("/sessions", items);
    if (!created || created->status != 201) return "upload failed";
    const std::string base = "/sessions/" + parse_json(created->body)["session_id"].get<std::string>();
    client.Post(base + "/calibrate", dump_json(Json{{"method", "explicit"}, {"pixels_per_mm", ppm}}),
                "application/json");
    const auto res = client.Post(base + route, "{}", "application/json");
    if (!res || res->status != 200) return "detection failed";
    return dump_json(parse_json(res->body)["report"]);
  };
  o.check(session_report(chain, 10, "/detect/chains") == c1.out, "service chain report equals the CLI report");
  o.check(session_report(laid, 12, "/detect/laids") == l1.out, "service laid report equals the CLI report");
  svc.stop();
  return o;
}

Outcome performance() {
  Outcome o;
  PhantomSpec spec;
  spec.width = spec.height = 256;
  spec.scale = 12.0;
  spec.background = 0.7;
  LineSetElement laid;
  laid.angle_deg = 91.0;
  laid.period = 15.0;
  laid.line_width_px = 7;
  laid.contrast = 0.02;
  spec.elements.push_back(laid);
  LineSetElement chain;
  chain.positions = {60, 190};
  chain.line_width_px = 5;
  chain.contrast = 0.02;
  spec.elements.push_back(chain);
  spec.elements.push_back(InkBlobElement{120, 80, 18, -0.5, 24, 0.35, std::nullopt});
  spec.noise_sigma = 0.005;
  spec.seed = 9;
  const auto ph = generate(spec);

  TvFlowConfig flow;
  const auto t0 = Clock::now();
  const auto stack = tv_flow(ph.image.pixels(), flow);
  const auto out = decompose_intervals(stack, flow, band_intervals({0.026, 0.26, 1.3}, std::nullopt), ".png", true);
  const double full = seconds_since(t0);
  o.check(stack.last_index() == 100 && full < 60,
          fmt("256x256, %d flow steps and 3 bands: %.1f s (limit 60 s)", stack.last_index(), full));

  service::ServiceConfig cfg;
  cfg.port = 0;
  service::Service svc(cfg);
  const int port = svc.start_background();
  httplib::Client client("127.0.0.1", port);
  client.set_read_timeout(600, 0);
  const auto png = encode_png(ph.image);
  const auto created = client.Post("/sessions", std::string(png.begin(), png.end()), "image/png");
  const std::string base = "/sessions/" + parse_json(created->body)["session_id"].get<std::string>();
  client.Post(base + "/calibrate", R"({"method": "explicit", "pixels_per_mm": 12})", "application/json");
  const auto first = client.Post(base + "/detect/chains", "{}", "application/json");
  const auto t1 = Clock::now();
  const auto rerun = client.Post(base + "/detect/chains", R"({"peaks": {"threshold": 0.5}})", "application/json");
  const double chain_rerun = seconds_since(t1);
  const auto t2 = Clock::now();
  const auto laid_rerun = client.Post(base + "/detect/laids", "{}", "application/json");
  const double laid_time = seconds_since(t2);
  svc.stop();
  const bool cached = rerun && rerun->status == 200 && parse_json(rerun->body)["cached"] == true;
  o.check(first && first->status == 200 && cached && chain_rerun < 1,
          fmt("cached chain re-run with a new threshold: %.3f s (limit 1 s)", chain_rerun));
  const bool laid_cached = laid_rerun && laid_rerun->status == 200 && parse_json(laid_rerun->body)["cached"] == true;
  o.check(laid_cached && laid_time < 1, fmt("cached laid run on the same stack: %.3f s (limit 1 s)", laid_time));
  (void)out;
  return o;
}

struct Criterion {
  std::string key;
  std::string title;
  double budget_s;
  std::function<Outcome()> run;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all{
      {"reconstruction", "Reconstruction identity", 60, reconstruction},
      {"disk", "Disk eigenfunction", 120, disk_eigenfunction},
      {"four-disks", "Four-disk separation", 180, four_disks},
      {"rectangles", "Anisotropic rectangles", 0, anisotropic_rectangles},
      {"chain", "Chain phantom end-to-end", 0, chain_end_to_end},
      {"laid", "Laid phantom end-to-end", 0, laid_end_to_end},
      {"fourier-slice", "Fourier slice property", 0, fourier_slice},
      {"peaks", "Peak detector oracle", 0, peak_oracle},
      {"calibration", "Calibration", 0, calibration},
      {"cli", "CLI determinism, exit codes, CLI/service equivalence", 0, cli_contract},
      {"performance", "Performance envelope", 0, performance},
  };
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> keys(argv + 1, argv + argc);
  if (keys.size() == 1 && keys[0] == "--list") {
    for (const auto& c : criteria()) std::printf("%s\n", c.key.c_str());
    return 0;
  }
  for (const auto& k : keys) {
    if (std::none_of(criteria().begin(), criteria().end(), [&](const Criterion& c) { return c.key == k; })) {
      std::fprintf(stderr, "unknown criterion: %s\n", k.c_str());
      return 2;
    }
  }
  int failed = 0, ran = 0;
  for (const auto& c : criteria()) {
    if (!keys.empty() && std::find(keys.begin(), keys.end(), c.key) == keys.end()) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.check(false, std::string("exception: ") + e.what());
    }
    const double elapsed = seconds_since(t0);
    if (c.budget_s > 0) o.check(elapsed < c.budget_s, fmt("runtime %.1f s (limit %.0f s)", elapsed, c.budget_s));
    ++ran;
    if (!o.pass) ++failed;
    std::string detail;
    for (const auto& n : o.notes) detail += (detail.empty() ? "" : "; ") + n;
    std::printf("%s  %-55s %7.1f s  %s\n", o.pass ? "PASS" : "FAIL", c.title.c_str(), elapsed, detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %d criteria passed\n", ran - failed, ran);
  return failed == 0 ? 0 : 1;
}
