#include "mouldmark/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "json.hpp"
#include "mouldmark/error.hpp"

namespace mouldmark {

namespace {

using nlohmann::json;

constexpr double kEdgeRamp = 1.5;

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::InvalidSpec, what); }

double coverage(double distance, double line_width) {
  return std::clamp((0.5 * line_width - std::abs(distance)) / kEdgeRamp + 0.5, 0.0, 1.0);
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct Frame {
  double cx, cy;  // canvas centre
  double s_min, s_max;
};

Frame frame_for(const PhantomSpec& spec, double nx, double ny) {
  Frame f{(spec.width - 1) / 2.0, (spec.height - 1) / 2.0, 1e300, -1e300};
  for (double x : {0.0, spec.width - 1.0}) {
    for (double y : {0.0, spec.height - 1.0}) {
      const double s = (x - f.cx) * nx + (y - f.cy) * ny;
      f.s_min = std::min(f.s_min, s);
      f.s_max = std::max(f.s_max, s);
    }
  }
  return f;
}

struct LineGeometry {
  double nx, ny;       // unit normal
  bool centred;        // offsets are measured from the canvas centre
  double lo, hi;       // range of valid positions
};

LineGeometry line_geometry(const PhantomSpec& spec, const LineSetElement& e) {
  if (e.angle_deg) {
    const double a = *e.angle_deg * std::numbers::pi / 180.0;
    const Frame f = frame_for(spec, std::cos(a), std::sin(a));
    return {std::cos(a), std::sin(a), true, f.s_min, f.s_max};
  }
  if (e.orientation == Orientation::Vertical) return {1, 0, false, 0, spec.width - 1.0};
  return {0, 1, false, 0, spec.height - 1.0};
}

std::vector<double> line_positions(const PhantomSpec& spec, const LineSetElement& e) {
  if (!e.period) return e.positions;
  const LineGeometry g = line_geometry(spec, e);
  std::vector<double> out;
  const double p = *e.period;
  const auto k0 = static_cast<long>(std::ceil((g.lo - e.phase) / p - 1e-9));
  for (long k = k0;; ++k) {
    const double pos = e.phase + static_cast<double>(k) * p;
    if (pos > g.hi + 1e-9) break;
    out.push_back(pos);
  }
  return out;
}

std::vector<std::pair<double, double>> blob_polygon(const InkBlobElement& b, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double amp[3], phase[3];
  double total = 0;
  for (int h = 0; h < 3; ++h) {
    amp[h] = unit(rng) / (h + 1);
    phase[h] = 2 * std::numbers::pi * unit(rng);
    total += amp[h];
  }
  std::vector<std::pair<double, double>> poly;
  for (int k = 0; k < b.vertices; ++k) {
    const double th = 2 * std::numbers::pi * k / b.vertices;
    double wobble = 0;
    for (int h = 0; h < 3; ++h) wobble += amp[h] * std::sin((h + 2) * th + phase[h]);
    const double r = b.radius * (1.0 + b.roughness * (total > 0 ? wobble / total : 0.0));
    poly.emplace_back(b.cx + r * std::cos(th), b.cy + r * std::sin(th));
  }
  return poly;
}

bool inside_polygon(const std::vector<std::pair<double, double>>& poly, double x, double y) {
  bool in = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const auto [xi, yi] = poly[i];
    const auto [xj, yj] = poly[j];
    if ((yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi) in = !in;
  }
  return in;
}

std::vector<int> tick_starts(const PhantomSpec& spec, const RulerTicksElement& r) {
  const int along = r.axis == RulerAxis::Horizontal ? spec.width : spec.height;
  std::vector<int> out;
  for (int k = 0; r.count == 0 || k < r.count; ++k) {
    const int c = r.start_px + k * r.spacing_px;
    if (c + r.tick_width_px > along) break;
    out.push_back(c);
  }
  return out;
}

void check_contrast(double c, const char* what) {
  if (!std::isfinite(c) || std::abs(c) > 1.0) invalid(std::string(what) + " contrast must lie in [-1, 1]");
}

struct Validator {
  const PhantomSpec& spec;

  void operator()(const DiskElement& d) const {
    check_contrast(d.contrast, "disk");
    if (!(d.r > 0)) invalid("disk radius must be positive");
    if (d.cx - d.r < -0.5 || d.cy - d.r < -0.5 || d.cx + d.r > spec.width - 0.5 ||
        d.cy + d.r > spec.height - 0.5) {
      invalid("disk extends beyond the canvas");
    }
  }
  void operator()(const RectElement& r) const {
    check_contrast(r.contrast, "rect");
    if (r.w < 1 || r.h < 1) invalid("rect must be at least 1x1");
    if (r.x0 < 0 || r.y0 < 0 || r.x0 + r.w > spec.width || r.y0 + r.h > spec.height) {
      invalid("rect extends beyond the canvas");
    }
  }
  void operator()(const LineSetElement& e) const {
    check_contrast(e.contrast, "line");
    if (!(e.line_width_px > 0)) invalid("line width must be positive");
    if (e.period.has_value() == !e.positions.empty()) invalid("lines need exactly one of positions or period");
    if (e.period && !(*e.period >= 1.0)) invalid("line period must be at least 1 px");
    if (e.angle_deg && !(*e.angle_deg >= 0 && *e.angle_deg < 180)) invalid("line angle must lie in [0, 180)");
    if (!std::isfinite(e.phase)) invalid("line phase must be finite");
    const LineGeometry g = line_geometry(spec, e);
    for (double p : e.positions) {
      if (!(p >= g.lo && p <= g.hi)) invalid("line position outside the canvas");
    }
  }
  void operator()(const InkBlobElement& b) const {
    check_contrast(b.contrast, "ink blob");
    if (!(b.radius > 0)) invalid("ink blob radius must be positive");
    if (b.vertices < 3) invalid("ink blob needs at least 3 vertices");
    if (!(b.roughness >= 0 && b.roughness < 1)) invalid("ink blob roughness must lie in [0, 1)");
    if (b.cx < 0 || b.cy < 0 || b.cx > spec.width - 1 || b.cy > spec.height - 1) {
      invalid("ink blob centre outside the canvas");
    }
  }
  void operator()(const FoldElement& f) const {
    check_contrast(f.contrast, "fold");
    if (!(f.width_px > 0)) invalid("fold width must be positive");
    if (!(f.angle_deg >= 0 && f.angle_deg < 180)) invalid("fold angle must lie in [0, 180)");
    const double a = f.angle_deg * std::numbers::pi / 180.0;
    const Frame fr = frame_for(spec, std::cos(a), std::sin(a));
    if (!(f.offset_px >= fr.s_min && f.offset_px <= fr.s_max)) invalid("fold misses the canvas");
  }
  void operator()(const RulerTicksElement& r) const {
    check_contrast(r.contrast, "ruler");
    if (r.spacing_px < 1 || r.tick_width_px < 1 || r.tick_length_px < 1 || r.count < 0) {
      invalid("ruler sizes must be positive");
    }
    const bool horizontal = r.axis == RulerAxis::Horizontal;
    const int along = horizontal ? spec.width : spec.height;
    const int across = horizontal ? spec.height : spec.width;
    if (r.start_px < 0 || r.start_px + r.tick_width_px > along) invalid("ruler start outside the canvas");
    if (r.band_start_px < 0 || r.band_start_px + r.tick_length_px > across) {
      invalid("ruler ticks extend beyond the canvas");
    }
    if (r.count > 0 && r.start_px + (r.count - 1) * r.spacing_px + r.tick_width_px > along) {
      invalid("ruler ticks extend beyond the canvas");
    }
  }
};

void clamp_unit(Field& f) {
  for (double& v : f.values()) v = std::clamp(v, 0.0, 1.0);
}

struct Painter {
  const PhantomSpec& spec;
  Field& canvas;
  std::size_t index;

  void operator()(const DiskElement& d) const {
    constexpr int kSub = 8;
    const double r2 = d.r * d.r;
    for (int y = 0; y < spec.height; ++y) {
      for (int x = 0; x < spec.width; ++x) {
        const double dx = std::abs(x - d.cx), dy = std::abs(y - d.cy);
        if (std::hypot(dx, dy) <= d.r - 0.75) {
          canvas(x, y) += d.contrast;
          continue;
        }
        if (std::hypot(std::max(dx - 0.5, 0.0), std::max(dy - 0.5, 0.0)) > d.r) continue;
        int inside = 0;
        for (int j = 0; j < kSub; ++j) {
          for (int i = 0; i < kSub; ++i) {
            const double sx = x - 0.5 + (i + 0.5) / kSub - d.cx;
            const double sy = y - 0.5 + (j + 0.5) / kSub - d.cy;
            inside += sx * sx + sy * sy <= r2 ? 1 : 0;
          }
        }
        canvas(x, y) += d.contrast * inside / (kSub * kSub);
      }
    }
  }
  void operator()(const RectElement& r) const {
    for (int y = r.y0; y < r.y0 + r.h; ++y) {
      for (int x = r.x0; x < r.x0 + r.w; ++x) canvas(x, y) += r.contrast;
    }
  }
  void operator()(const LineSetElement& e) const {
    const LineGeometry g = line_geometry(spec, e);
    const double cx = g.centred ? (spec.width - 1) / 2.0 : 0.0;
    const double cy = g.centred ? (spec.height - 1) / 2.0 : 0.0;
    for (int y = 0; y < spec.height; ++y) {
      for (int x = 0; x < spec.width; ++x) {
        const double s = (x - cx) * g.nx + (y - cy) * g.ny;
        double c = 0;
        if (e.period) {
          const double k = std::round((s - e.phase) / *e.period);
          c = coverage(s - (e.phase + k * *e.period), e.line_width_px);
        } else {
          for (double p : e.positions) c = std::max(c, coverage(s - p, e.line_width_px));
        }
        canvas(x, y) += e.contrast * c;
      }
    }
  }
  void operator()(const InkBlobElement& b) const {
    const std::uint64_t seed = b.seed ? *b.seed : splitmix64(spec.seed ^ splitmix64(index + 1));
    const auto poly = blob_polygon(b, seed);
    const double reach = b.radius * (1.0 + b.roughness) + 1.0;
    const int x0 = std::max(0, static_cast<int>(std::floor(b.cx - reach)));
    const int x1 = std::min(spec.width - 1, static_cast<int>(std::ceil(b.cx + reach)));
    const int y0 = std::max(0, static_cast<int>(std::floor(b.cy - reach)));
    const int y1 = std::min(spec.height - 1, static_cast<int>(std::ceil(b.cy + reach)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        if (inside_polygon(poly, x, y)) canvas(x, y) += b.contrast;
      }
    }
  }
  void operator()(const FoldElement& f) const {
    const double a = f.angle_deg * std::numbers::pi / 180.0;
    const double nx = std::cos(a), ny = std::sin(a);
    const double cx = (spec.width - 1) / 2.0, cy = (spec.height - 1) / 2.0;
    for (int y = 0; y < spec.height; ++y) {
      for (int x = 0; x < spec.width; ++x) {
        const double s = (x - cx) * nx + (y - cy) * ny;
        canvas(x, y) += f.contrast * coverage(s - f.offset_px, f.width_px);
      }
    }
  }
  void operator()(const RulerTicksElement& r) const {
    const bool horizontal = r.axis == RulerAxis::Horizontal;
    for (int c : tick_starts(spec, r)) {
      for (int i = c; i < c + r.tick_width_px; ++i) {
        for (int j = r.band_start_px; j < r.band_start_px + r.tick_length_px; ++j) {
          (horizontal ? canvas(i, j) : canvas(j, i)) += r.contrast;
        }
      }
    }
  }
};

}  // namespace

void PhantomSpec::validate() const {
  if (width < 1 || height < 1 || width > 16384 || height > 16384) invalid("canvas must be 1..16384 px per side");
  if (scale && !(*scale > 0 && std::isfinite(*scale))) invalid("scale must be positive");
  if (!(background >= 0 && background <= 1)) invalid("background must lie in [0, 1]");
  if (!(noise_sigma >= 0 && std::isfinite(noise_sigma))) invalid("noise sigma must be >= 0");
  for (const auto& e : elements) std::visit(Validator{*this}, e);
}

GroundTruth ground_truth(const PhantomSpec& spec) {
  spec.validate();
  GroundTruth t;
  t.pixels_per_mm = spec.scale;
  for (const auto& e : spec.elements) {
    if (const auto* d = std::get_if<DiskElement>(&e)) {
      t.disk_scales.push_back(std::abs(d->contrast) * d->r / 2.0);
    } else if (const auto* l = std::get_if<LineSetElement>(&e)) {
      const auto pos = line_positions(spec, *l);
      t.line_positions_px.insert(t.line_positions_px.end(), pos.begin(), pos.end());
      t.line_angle_deg = l->angle_deg ? *l->angle_deg
                                      : (l->orientation == Orientation::Vertical ? 0.0 : 90.0);
      if (l->period && spec.scale) t.density_per_cm = 10.0 * *spec.scale / *l->period;
    } else if (const auto* r = std::get_if<RulerTicksElement>(&e)) {
      for (int c : tick_starts(spec, *r)) t.tick_columns.push_back(c + (r->tick_width_px - 1) / 2.0);
    }
  }
  std::sort(t.line_positions_px.begin(), t.line_positions_px.end());
  std::sort(t.tick_columns.begin(), t.tick_columns.end());
  return t;
}

Phantom generate(const PhantomSpec& spec) {
  spec.validate();
  Field canvas(spec.width, spec.height, spec.background);
  for (std::size_t i = 0; i < spec.elements.size(); ++i) {
    std::visit(Painter{spec, canvas, i}, spec.elements[i]);
    clamp_unit(canvas);
  }
  if (spec.noise_sigma > 0) {
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> noise(0.0, spec.noise_sigma);
    for (double& v : canvas.values()) v += noise(rng);
    clamp_unit(canvas);
  }
  return {GrayImage(std::move(canvas), spec.scale), ground_truth(spec)};
}

std::vector<std::string> phantom_preset_names() {
  return {"chain-basic", "chain-wide-gap", "chain-blank", "laid-basic", "laid-fold",
          "laid-degraded", "disk", "four-disks", "rectangles", "ruler", "page"};
}

PhantomSpec phantom_preset(const std::string& name, std::uint64_t seed) {
  PhantomSpec s;
  s.seed = seed;
  auto chain_lines = [](std::vector<double> positions) {
    LineSetElement l;
    l.orientation = Orientation::Vertical;
    l.positions = std::move(positions);
    l.line_width_px = 5;
    l.contrast = 0.02;
    return l;
  };
  auto blob = [](double cx, double cy, double radius) {
    InkBlobElement b;
    b.cx = cx;
    b.cy = cy;
    b.radius = radius;
    b.contrast = -0.5;
    return b;
  };
  auto laid_lines = [] {
    LineSetElement l;
    l.angle_deg = 92.0;
    l.period = 15.0;
    l.line_width_px = 7;
    l.contrast = 0.02;
    return l;
  };
  if (name == "chain-basic") {
    s.width = 300;
    s.height = 150;
    s.scale = 10.0;
    s.background = 0.7;
    s.elements.push_back(chain_lines({50, 150, 250}));
    s.elements.push_back(blob(150, 40, 16));
    s.elements.push_back(blob(80, 105, 15));
    s.elements.push_back(blob(215, 90, 17));
    s.noise_sigma = 0.005;
  } else if (name == "chain-wide-gap") {
    s.width = 560;
    s.height = 120;
    s.scale = 5.0;
    s.background = 0.7;
    s.elements.push_back(chain_lines({50, 200, 500}));
    s.elements.push_back(blob(330, 60, 15));
    s.noise_sigma = 0.005;
  } else if (name == "chain-blank") {
    s.width = 300;
    s.height = 150;
    s.scale = 10.0;
    s.background = 0.7;
    s.noise_sigma = 0.005;
  } else if (name == "laid-basic" || name == "laid-fold" || name == "laid-degraded") {
    s.width = 180;
    s.height = 180;
    s.scale = 12.0;
    s.background = 0.7;
    s.elements.push_back(laid_lines());
    s.noise_sigma = name == "laid-degraded" ? 0.02 : 0.005;
    if (name == "laid-fold") s.elements.push_back(FoldElement{120.0, 12.0, 16.0, -0.3});
  } else if (name == "disk") {
    s.width = 64;
    s.height = 64;
    s.elements.push_back(DiskElement{31.5, 31.5, 10, 0.5});
  } else if (name == "four-disks") {
    s.width = 128;
    s.height = 128;
    s.elements.push_back(DiskElement{32, 32, 6, 0.25});
    s.elements.push_back(DiskElement{96, 32, 10, 0.3});
    s.elements.push_back(DiskElement{32, 96, 12, 0.5});
    s.elements.push_back(DiskElement{96, 96, 16, 0.75});
  } else if (name == "rectangles") {
    s.width = 64;
    s.height = 64;
    s.elements.push_back(RectElement{20, 24, 24, 16, 0.5});
  } else if (name == "ruler") {
    s.width = 400;
    s.height = 80;
    s.scale = 20.0;
    s.background = 0.9;
    s.elements.push_back(RulerTicksElement{RulerAxis::Horizontal, 20, 20, 0, 2, 15, 50, -0.7});
  } else if (name == "page") {
    s.width = 400;
    s.height = 2200;
    s.scale = 2000.0 / 300.0;
    s.background = 0.15;
    s.elements.push_back(RectElement{40, 100, 320, 2000, 0.7});
    s.noise_sigma = 0.01;
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown phantom preset: " + name);
  }
  return s;
}

namespace {

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) invalid(where + " must be a JSON object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : obj.items()) {
    if (!ok.count(key)) invalid("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
  if (!obj.contains(key) || obj.at(key).is_null()) return fallback;
  return obj.at(key).get<T>();
}

template <typename T>
T get_required(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) invalid(std::string("missing key '") + key + "' in " + where);
  return obj.at(key).get<T>();
}

RulerAxis parse_axis(const std::string& s) {
  if (s == "horizontal") return RulerAxis::Horizontal;
  if (s == "vertical") return RulerAxis::Vertical;
  invalid("unknown ruler axis: " + s);
}

json element_to_json(const PhantomElement& e) {
  return std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, DiskElement>) {
          return {{"type", "disk"}, {"cx", v.cx}, {"cy", v.cy}, {"r", v.r}, {"contrast", v.contrast}};
        } else if constexpr (std::is_same_v<T, RectElement>) {
          return {{"type", "rect"}, {"x0", v.x0}, {"y0", v.y0}, {"w", v.w}, {"h", v.h},
                  {"contrast", v.contrast}};
        } else if constexpr (std::is_same_v<T, LineSetElement>) {
          json j = {{"type", "lines"}, {"line_width_px", v.line_width_px}, {"contrast", v.contrast}};
          if (v.angle_deg) {
            j["angle_deg"] = *v.angle_deg;
          } else {
            j["orientation"] = orientation_name(v.orientation);
          }
          if (v.period) {
            j["period"] = *v.period;
            j["phase"] = v.phase;
          } else {
            j["positions"] = v.positions;
          }
          return j;
        } else if constexpr (std::is_same_v<T, InkBlobElement>) {
          json j = {{"type", "ink_blob"}, {"cx", v.cx}, {"cy", v.cy}, {"radius", v.radius},
                    {"contrast", v.contrast}, {"vertices", v.vertices}, {"roughness", v.roughness}};
          if (v.seed) j["seed"] = *v.seed;
          return j;
        } else if constexpr (std::is_same_v<T, FoldElement>) {
          return {{"type", "fold"}, {"angle_deg", v.angle_deg}, {"offset_px", v.offset_px},
                  {"width_px", v.width_px}, {"contrast", v.contrast}};
        } else {
          return {{"type", "ruler_ticks"}, {"axis", ruler_axis_name(v.axis)}, {"spacing_px", v.spacing_px},
                  {"start_px", v.start_px}, {"count", v.count}, {"tick_width_px", v.tick_width_px},
                  {"band_start_px", v.band_start_px}, {"tick_length_px", v.tick_length_px},
                  {"contrast", v.contrast}};
        }
      },
      e);
}

PhantomElement element_from_json(const json& j) {
  if (!j.is_object() || !j.contains("type")) invalid("element needs a type");
  const auto type = j.at("type").get<std::string>();
  const std::string where = "element '" + type + "'";
  if (type == "disk") {
    reject_unknown(j, {"type", "cx", "cy", "r", "contrast"}, where);
    return DiskElement{get_required<double>(j, "cx", where), get_required<double>(j, "cy", where),
                       get_required<double>(j, "r", where), get_required<double>(j, "contrast", where)};
  }
  if (type == "rect") {
    reject_unknown(j, {"type", "x0", "y0", "w", "h", "contrast"}, where);
    return RectElement{get_required<int>(j, "x0", where), get_required<int>(j, "y0", where),
                       get_required<int>(j, "w", where), get_required<int>(j, "h", where),
                       get_required<double>(j, "contrast", where)};
  }
  if (type == "lines") {
    reject_unknown(j, {"type", "orientation", "angle_deg", "positions", "period", "phase", "line_width_px",
                       "contrast"},
                   where);
    LineSetElement l;
    if (j.contains("orientation") && j.contains("angle_deg")) invalid("lines take orientation or angle_deg, not both");
    if (j.contains("orientation")) {
      try {
        l.orientation = parse_orientation(j.at("orientation").get<std::string>());
      } catch (const Error& e) {
        invalid(e.what());
      }
    }
    if (j.contains("angle_deg")) l.angle_deg = j.at("angle_deg").get<double>();
    l.positions = get_or<std::vector<double>>(j, "positions", {});
    if (j.contains("period")) l.period = j.at("period").get<double>();
    l.phase = get_or<double>(j, "phase", 0.0);
    l.line_width_px = get_or<double>(j, "line_width_px", l.line_width_px);
    l.contrast = get_required<double>(j, "contrast", where);
    return l;
  }
  if (type == "ink_blob") {
    reject_unknown(j, {"type", "cx", "cy", "radius", "contrast", "vertices", "roughness", "seed"}, where);
    InkBlobElement b;
    b.cx = get_required<double>(j, "cx", where);
    b.cy = get_required<double>(j, "cy", where);
    b.radius = get_required<double>(j, "radius", where);
    b.contrast = get_or<double>(j, "contrast", b.contrast);
    b.vertices = get_or<int>(j, "vertices", b.vertices);
    b.roughness = get_or<double>(j, "roughness", b.roughness);
    if (j.contains("seed")) b.seed = j.at("seed").get<std::uint64_t>();
    return b;
  }
  if (type == "fold") {
    reject_unknown(j, {"type", "angle_deg", "offset_px", "width_px", "contrast"}, where);
    FoldElement f;
    f.angle_deg = get_required<double>(j, "angle_deg", where);
    f.offset_px = get_or<double>(j, "offset_px", 0.0);
    f.width_px = get_or<double>(j, "width_px", f.width_px);
    f.contrast = get_or<double>(j, "contrast", f.contrast);
    return f;
  }
  if (type == "ruler_ticks") {
    reject_unknown(j, {"type", "axis", "spacing_px", "start_px", "count", "tick_width_px", "band_start_px",
                       "tick_length_px", "contrast"},
                   where);
    RulerTicksElement r;
    r.axis = parse_axis(get_or<std::string>(j, "axis", "horizontal"));
    r.spacing_px = get_required<int>(j, "spacing_px", where);
    r.start_px = get_or<int>(j, "start_px", r.start_px);
    r.count = get_or<int>(j, "count", r.count);
    r.tick_width_px = get_or<int>(j, "tick_width_px", r.tick_width_px);
    r.band_start_px = get_or<int>(j, "band_start_px", r.band_start_px);
    r.tick_length_px = get_or<int>(j, "tick_length_px", r.tick_length_px);
    r.contrast = get_or<double>(j, "contrast", r.contrast);
    return r;
  }
  invalid("unknown element type: " + type);
}

}  // namespace

std::string phantom_spec_to_json(const PhantomSpec& spec) {
  json j;
  j["schema"] = 1;
  j["width"] = spec.width;
  j["height"] = spec.height;
  j["scale"] = spec.scale ? json(*spec.scale) : json(nullptr);
  j["background"] = spec.background;
  j["noise_sigma"] = spec.noise_sigma;
  j["seed"] = spec.seed;
  j["elements"] = json::array();
  for (const auto& e : spec.elements) j["elements"].push_back(element_to_json(e));
  return j.dump(2) + "\n";
}

PhantomSpec phantom_spec_from_json(const std::string& text) {
  PhantomSpec s;
  try {
    const json j = json::parse(text);
    reject_unknown(j, {"schema", "width", "height", "scale", "background", "elements", "noise_sigma", "seed"},
                   "phantom spec");
    if (j.contains("schema") && j.at("schema").get<int>() != 1) invalid("unsupported phantom schema");
    s.width = get_required<int>(j, "width", "phantom spec");
    s.height = get_required<int>(j, "height", "phantom spec");
    if (j.contains("scale") && !j.at("scale").is_null()) s.scale = j.at("scale").get<double>();
    s.background = get_or<double>(j, "background", 0.0);
    s.noise_sigma = get_or<double>(j, "noise_sigma", 0.0);
    s.seed = get_or<std::uint64_t>(j, "seed", 0);
    if (j.contains("elements")) {
      if (!j.at("elements").is_array()) invalid("elements must be an array");
      for (const auto& e : j.at("elements")) s.elements.push_back(element_from_json(e));
    }
  } catch (const json::exception& e) {
    invalid(std::string("malformed phantom spec: ") + e.what());
  }
  s.validate();
  return s;
}

std::string ground_truth_to_json(const GroundTruth& t) {
  json j;
  j["schema"] = 1;
  j["line_positions_px"] = t.line_positions_px;
  j["line_angle_deg"] = t.line_angle_deg ? json(*t.line_angle_deg) : json(nullptr);
  j["density_per_cm"] = t.density_per_cm ? json(*t.density_per_cm) : json(nullptr);
  j["disk_scales"] = t.disk_scales;
  j["tick_columns"] = t.tick_columns;
  j["pixels_per_mm"] = t.pixels_per_mm ? json(*t.pixels_per_mm) : json(nullptr);
  return j.dump(2) + "\n";
}

}  // namespace mouldmark
