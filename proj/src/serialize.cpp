#include "mouldmark/serialize.hpp"

#include <algorithm>
#include <initializer_list>
#include <string_view>

#include "mouldmark/error.hpp"

namespace mouldmark {

namespace {

[[noreturn]] void bad(const std::string& message) { throw Error(ErrorCode::InvalidArgument, message); }

void require_object(const Json& j, std::string_view where) {
  if (!j.is_object()) bad(std::string(where) + " must be a JSON object");
}

void check_keys(const Json& j, std::initializer_list<std::string_view> allowed, std::string_view where) {
  require_object(j, where);
  for (const auto& item : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
      bad("unknown key '" + item.key() + "' in " + std::string(where));
    }
  }
}

// Reads j[key] into out when present.
template <typename T>
void read(const Json& j, const char* key, T& out) {
  const auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->template get<T>();
  } catch (const nlohmann::json::exception&) {
    bad(std::string("wrong type for '") + key + "'");
  }
}

template <typename T>
T need(const Json& j, const char* key) {
  if (!j.contains(key)) bad(std::string("missing key '") + key + "'");
  T out{};
  read(j, key, out);
  return out;
}

void read_number(const Json& j, const char* key, double& out) {
  const auto it = j.find(key);
  if (it == j.end()) return;
  if (!it->is_number()) bad(std::string("'") + key + "' must be a number");
  out = it->get<double>();
}

void read_int(const Json& j, const char* key, int& out) {
  const auto it = j.find(key);
  if (it == j.end()) return;
  if (!it->is_number_integer()) bad(std::string("'") + key + "' must be an integer");
  out = it->get<int>();
}

template <typename T>
Json optional_value(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

std::optional<double> optional_number(const Json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_number()) bad(std::string("'") + key + "' must be a number or null");
  return it->get<double>();
}

}  // namespace

std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

Json parse_json(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    bad(std::string("malformed JSON: ") + e.what());
  }
}

Json to_json(const PixelRect& r) {
  return Json{{"x0", r.x0}, {"y0", r.y0}, {"width", r.width}, {"height", r.height}};
}

void apply_json(const Json& j, PixelRect& r) {
  check_keys(j, {"x0", "y0", "width", "height"}, "patch");
  read_int(j, "x0", r.x0);
  read_int(j, "y0", r.y0);
  read_int(j, "width", r.width);
  read_int(j, "height", r.height);
}

Json to_json(const Calibration& cal) {
  return Json{{"pixels_per_mm", cal.pixels_per_mm},
              {"method", calibration_method_name(cal.method)},
              {"confidence_note", cal.confidence_note}};
}

Calibration calibration_from_json(const Json& j) {
  check_keys(j, {"schema", "pixels_per_mm", "method", "confidence_note"}, "calibration");
  double ppm = 0;
  if (!j.contains("pixels_per_mm")) bad("missing key 'pixels_per_mm'");
  read_number(j, "pixels_per_mm", ppm);
  std::string method = "explicit", note;
  read(j, "method", method);
  read(j, "confidence_note", note);
  return Calibration::make(ppm, parse_calibration_method(method), note);
}

Json calibration_document(const Calibration& cal) {
  Json j{{"schema", kSchemaVersion}};
  const Json body = to_json(cal);
  for (const auto& item : body.items()) j[item.key()] = item.value();
  return j;
}

Json to_json(const ScaleBand& b) { return Json{{"t_lo", b.t_lo}, {"t_hi", b.t_hi}}; }

void apply_json(const Json& j, ScaleBand& b) {
  check_keys(j, {"t_lo", "t_hi"}, "band");
  read_number(j, "t_lo", b.t_lo);
  read_number(j, "t_hi", b.t_hi);
}

Json to_json(const TvFlowConfig& f) {
  return Json{{"dt", f.dt},
              {"t_max", f.t_max},
              {"variant", tv_variant_name(f.variant)},
              {"inner_tol", f.inner_tol},
              {"inner_max_iter", f.inner_max_iter}};
}

void apply_json(const Json& j, TvFlowConfig& f) {
  check_keys(j, {"dt", "t_max", "variant", "inner_tol", "inner_max_iter"}, "flow");
  read_number(j, "dt", f.dt);
  read_number(j, "t_max", f.t_max);
  std::string variant = tv_variant_name(f.variant);
  read(j, "variant", variant);
  f.variant = parse_tv_variant(variant);
  read_number(j, "inner_tol", f.inner_tol);
  read_int(j, "inner_max_iter", f.inner_max_iter);
}

Json to_json(const RectFilterSpec& s) {
  return Json{{"width_px", s.width_px},
              {"height_fraction", s.height_fraction},
              {"orientation", orientation_name(s.orientation)}};
}

void apply_json(const Json& j, RectFilterSpec& s) {
  check_keys(j, {"width_px", "height_fraction", "orientation"}, "filter");
  read_int(j, "width_px", s.width_px);
  read_number(j, "height_fraction", s.height_fraction);
  std::string o = orientation_name(s.orientation);
  read(j, "orientation", o);
  s.orientation = parse_orientation(o);
}

Json to_json(const PeakConfig& p) {
  return Json{{"smooth_sigma", p.smooth_sigma},
              {"threshold", optional_value(p.threshold)},
              {"min_separation", p.min_separation}};
}

void apply_json(const Json& j, PeakConfig& p) {
  check_keys(j, {"smooth_sigma", "threshold", "min_separation"}, "peaks");
  read_number(j, "smooth_sigma", p.smooth_sigma);
  if (j.contains("threshold")) p.threshold = optional_number(j, "threshold");
  read_int(j, "min_separation", p.min_separation);
}

Json to_json(const ChainDetectConfig& c) {
  return Json{{"band", to_json(c.band)},
              {"flow", to_json(c.flow)},
              {"filter", to_json(c.filter)},
              {"peaks", to_json(c.peaks)},
              {"polarity", polarity_name(c.polarity)}};
}

void apply_json(const Json& j, ChainDetectConfig& c) {
  check_keys(j, {"band", "flow", "filter", "peaks", "polarity"}, "chain parameters");
  if (j.contains("band")) apply_json(j["band"], c.band);
  if (j.contains("flow")) apply_json(j["flow"], c.flow);
  if (j.contains("filter")) apply_json(j["filter"], c.filter);
  if (j.contains("peaks")) apply_json(j["peaks"], c.peaks);
  std::string pol = polarity_name(c.polarity);
  read(j, "polarity", pol);
  c.polarity = parse_polarity(pol);
}

Json to_json(const LaidDetectConfig& c) {
  return Json{{"band", to_json(c.band)},
              {"flow", to_json(c.flow)},
              {"peaks", to_json(c.peaks)},
              {"polarity", polarity_name(c.polarity)},
              {"angle_step_deg", c.angle_step_deg},
              {"low_confidence_ratio", c.low_confidence_ratio},
              {"min_search_density", c.min_search_density},
              {"max_search_density", c.max_search_density},
              {"edge_taper", c.edge_taper},
              {"window_anchor_px", optional_value(c.window_anchor_px)}};
}

void apply_json(const Json& j, LaidDetectConfig& c) {
  check_keys(j,
             {"band", "flow", "peaks", "polarity", "angle_step_deg", "low_confidence_ratio",
              "min_search_density", "max_search_density", "edge_taper", "window_anchor_px"},
             "laid parameters");
  if (j.contains("band")) apply_json(j["band"], c.band);
  if (j.contains("flow")) apply_json(j["flow"], c.flow);
  if (j.contains("peaks")) apply_json(j["peaks"], c.peaks);
  std::string pol = polarity_name(c.polarity);
  read(j, "polarity", pol);
  c.polarity = parse_polarity(pol);
  read_number(j, "angle_step_deg", c.angle_step_deg);
  read_number(j, "low_confidence_ratio", c.low_confidence_ratio);
  read_number(j, "min_search_density", c.min_search_density);
  read_number(j, "max_search_density", c.max_search_density);
  read_number(j, "edge_taper", c.edge_taper);
  if (j.contains("window_anchor_px")) c.window_anchor_px = optional_number(j, "window_anchor_px");
}

Json to_json(const Provenance& p, const std::optional<Calibration>& cal) {
  return Json{{"source", p.source},
              {"patch", to_json(p.patch)},
              {"image_width", p.image_width},
              {"image_height", p.image_height},
              {"calibration_method",
               cal ? Json(calibration_method_name(cal->method)) : Json(nullptr)}};
}

namespace {

Provenance provenance_from_json(const Json& j) {
  check_keys(j, {"source", "patch", "image_width", "image_height", "calibration_method"}, "provenance");
  Provenance p;
  read(j, "source", p.source);
  if (j.contains("patch")) apply_json(j["patch"], p.patch);
  read_int(j, "image_width", p.image_width);
  read_int(j, "image_height", p.image_height);
  return p;
}

void check_header(const Json& j, const char* kind) {
  require_object(j, "report");
  if (need<int>(j, "schema") != kSchemaVersion) bad("unsupported schema version");
  if (need<std::string>(j, "kind") != kind) bad(std::string("expected a ") + kind + " document");
}

}  // namespace

Json to_json(const ChainLineReport& r) {
  Json j{{"schema", kSchemaVersion},
         {"kind", "chain_lines"},
         {"orientation", orientation_name(r.orientation)},
         {"positions_px", r.positions_px},
         {"omitted_indices", r.omitted_indices},
         {"distances_px", r.distances_px}};
  if (r.distances_mm) j["distances_mm"] = *r.distances_mm;
  if (r.mean_distance_mm) j["mean_distance_mm"] = *r.mean_distance_mm;
  j["distance_basis"] = "projection over the patch";
  j["implausible"] = r.implausible;
  j["warnings"] = r.warnings;
  j["threshold"] = r.threshold;
  j["signal"] = r.signal;
  j["params"] = to_json(r.params);
  j["calibration"] = r.calibration ? to_json(*r.calibration) : Json(nullptr);
  j["provenance"] = to_json(r.provenance, r.calibration);
  return j;
}

ChainLineReport chain_report_from_json(const Json& j) {
  check_header(j, "chain_lines");
  check_keys(j,
             {"schema", "kind", "orientation", "positions_px", "omitted_indices", "distances_px",
              "distances_mm", "mean_distance_mm", "distance_basis", "implausible", "warnings",
              "threshold", "signal", "params", "calibration", "provenance"},
             "chain report");
  ChainLineReport r;
  r.orientation = parse_orientation(need<std::string>(j, "orientation"));
  r.positions_px = need<std::vector<double>>(j, "positions_px");
  read(j, "omitted_indices", r.omitted_indices);
  read(j, "distances_px", r.distances_px);
  if (j.contains("distances_mm")) r.distances_mm = need<std::vector<double>>(j, "distances_mm");
  r.mean_distance_mm = optional_number(j, "mean_distance_mm");
  read(j, "implausible", r.implausible);
  read(j, "warnings", r.warnings);
  read_number(j, "threshold", r.threshold);
  read(j, "signal", r.signal);
  if (j.contains("params")) apply_json(j["params"], r.params);
  if (j.contains("calibration") && !j["calibration"].is_null()) {
    r.calibration = calibration_from_json(j["calibration"]);
  }
  if (j.contains("provenance")) r.provenance = provenance_from_json(j["provenance"]);
  return r;
}

Json to_json(const LaidLineReport& r) {
  return Json{{"schema", kSchemaVersion},
              {"kind", "laid_lines"},
              {"angle_deg", r.angle_deg},
              {"peak_to_mean", r.peak_to_mean},
              {"low_confidence", r.low_confidence},
              {"positions_px", r.positions_px},
              {"positions_approximate", true},
              {"density_per_cm", r.density_per_cm},
              {"implausible", r.implausible},
              {"window_anchor_px", r.window_anchor_px},
              {"window_length_px", r.window_length_px},
              {"distances_px", r.distances_px},
              {"warnings", r.warnings},
              {"threshold", r.threshold},
              {"signal_offsets_px", r.signal_offsets_px},
              {"signal", r.signal},
              {"params", to_json(r.params)},
              {"calibration", to_json(r.calibration)},
              {"provenance", to_json(r.provenance, r.calibration)}};
}

LaidLineReport laid_report_from_json(const Json& j) {
  check_header(j, "laid_lines");
  check_keys(j,
             {"schema", "kind", "angle_deg", "peak_to_mean", "low_confidence", "positions_px",
              "positions_approximate", "density_per_cm", "implausible", "window_anchor_px",
              "window_length_px", "distances_px", "warnings", "threshold", "signal_offsets_px",
              "signal", "params", "calibration", "provenance"},
             "laid report");
  LaidLineReport r;
  read_number(j, "angle_deg", r.angle_deg);
  read_number(j, "peak_to_mean", r.peak_to_mean);
  read(j, "low_confidence", r.low_confidence);
  r.positions_px = need<std::vector<double>>(j, "positions_px");
  read_int(j, "density_per_cm", r.density_per_cm);
  read(j, "implausible", r.implausible);
  read_number(j, "window_anchor_px", r.window_anchor_px);
  read_number(j, "window_length_px", r.window_length_px);
  read(j, "distances_px", r.distances_px);
  read(j, "warnings", r.warnings);
  read_number(j, "threshold", r.threshold);
  read(j, "signal_offsets_px", r.signal_offsets_px);
  read(j, "signal", r.signal);
  if (j.contains("params")) apply_json(j["params"], r.params);
  r.calibration = calibration_from_json(j.at("calibration"));
  if (j.contains("provenance")) r.provenance = provenance_from_json(j["provenance"]);
  return r;
}

DecompositionManifest manifest_from_stack(const ScaleSpaceStack& stack, const TvFlowConfig& flow) {
  DecompositionManifest m;
  m.flow = flow;
  m.mean = stack.frames.empty() ? 0.0 : mean(stack.frames.front());
  m.steps = static_cast<int>(stack.steps.size());
  m.nonconverged_steps = stack.nonconverged_steps();
  for (const auto& s : stack.steps) {
    m.max_iterations = std::max(m.max_iterations, s.iterations);
    m.max_residual = std::max(m.max_residual, s.residual);
  }
  if (stack.frames.size() >= 3) {
    m.spectrum_times = stack.times;
    m.spectrum = spectral_amplitude(stack);
  }
  if (m.nonconverged_steps > 0) {
    m.warnings.push_back(std::to_string(m.nonconverged_steps) +
                         " flow steps stopped at inner_max_iter before reaching inner_tol");
  }
  return m;
}

Json to_json(const DecompositionManifest& m) {
  Json bands = Json::array();
  for (const auto& b : m.bands) {
    bands.push_back(Json{{"t_lo", b.t_lo}, {"t_hi", b.t_hi}, {"file", b.file}, {"energy", b.energy}});
  }
  Json j{{"schema", kSchemaVersion},
         {"kind", "decomposition"},
         {"source", m.source},
         {"patch", to_json(m.patch)},
         {"image_width", m.image_width},
         {"image_height", m.image_height},
         {"flow", to_json(m.flow)},
         {"bands", bands},
         {"residual_file", m.residual_file},
         {"mean", m.mean},
         {"spectrum", Json{{"times", m.spectrum_times}, {"amplitude", m.spectrum}}},
         {"solver",
          Json{{"steps", m.steps},
               {"nonconverged_steps", m.nonconverged_steps},
               {"max_iterations", m.max_iterations},
               {"max_residual", m.max_residual}}},
         {"warnings", m.warnings}};
  if (m.reconstruction_error) j["reconstruction_error"] = *m.reconstruction_error;
  return j;
}

DecompositionManifest manifest_from_json(const Json& j) {
  check_header(j, "decomposition");
  check_keys(j,
             {"schema", "kind", "source", "patch", "image_width", "image_height", "flow", "bands",
              "residual_file", "mean", "spectrum", "solver", "warnings", "reconstruction_error"},
             "manifest");
  DecompositionManifest m;
  read(j, "source", m.source);
  if (j.contains("patch")) apply_json(j["patch"], m.patch);
  read_int(j, "image_width", m.image_width);
  read_int(j, "image_height", m.image_height);
  if (j.contains("flow")) apply_json(j["flow"], m.flow);
  if (j.contains("bands")) {
    if (!j["bands"].is_array()) bad("'bands' must be an array");
    for (const auto& b : j["bands"]) {
      check_keys(b, {"t_lo", "t_hi", "file", "energy"}, "band entry");
      BandEntry e;
      read_number(b, "t_lo", e.t_lo);
      read_number(b, "t_hi", e.t_hi);
      read(b, "file", e.file);
      read_number(b, "energy", e.energy);
      m.bands.push_back(e);
    }
  }
  read(j, "residual_file", m.residual_file);
  read_number(j, "mean", m.mean);
  if (j.contains("spectrum")) {
    const auto& s = j["spectrum"];
    check_keys(s, {"times", "amplitude"}, "spectrum");
    read(s, "times", m.spectrum_times);
    read(s, "amplitude", m.spectrum);
  }
  if (j.contains("solver")) {
    const auto& s = j["solver"];
    check_keys(s, {"steps", "nonconverged_steps", "max_iterations", "max_residual"}, "solver");
    read_int(s, "steps", m.steps);
    read_int(s, "nonconverged_steps", m.nonconverged_steps);
    read_int(s, "max_iterations", m.max_iterations);
    read_number(s, "max_residual", m.max_residual);
  }
  read(j, "warnings", m.warnings);
  m.reconstruction_error = optional_number(j, "reconstruction_error");
  return m;
}

}  // namespace mouldmark
