#include "mouldmark/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "mouldmark/error.hpp"

namespace mouldmark {

void apply_json(const Json& j, CalibrationRequest& req) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "calibration request must be an object");
  for (const auto& item : j.items()) {
    const auto& k = item.key();
    const auto& v = item.value();
    try {
      if (k == "method") {
        req.method = parse_calibration_method(v.get<std::string>());
      } else if (k == "pixels_per_mm") {
        req.pixels_per_mm = v.is_null() ? std::nullopt : std::optional<double>(v.get<double>());
      } else if (k == "tick_spacing_mm") {
        req.tick_spacing_mm = v.get<double>();
      } else if (k == "axis") {
        req.axis = parse_ruler_axis(v.get<std::string>());
      } else if (k == "paper_height_mm") {
        req.paper_height_mm = v.is_null() ? std::nullopt : std::optional<double>(v.get<double>());
      } else if (k == "canny") {
        if (!v.is_object()) throw Error(ErrorCode::InvalidArgument, "'canny' must be an object");
        for (const auto& c : v.items()) {
          if (c.key() == "sigma") req.canny.sigma = c.value().get<double>();
          else if (c.key() == "low") req.canny.low = c.value().get<double>();
          else if (c.key() == "high") req.canny.high = c.value().get<double>();
          else throw Error(ErrorCode::InvalidArgument, "unknown key '" + c.key() + "' in canny");
        }
      } else if (k == "params") {
        apply_json(v, req);
      } else {
        throw Error(ErrorCode::InvalidArgument, "unknown key '" + k + "' in calibration");
      }
    } catch (const nlohmann::json::exception&) {
      throw Error(ErrorCode::InvalidArgument, "wrong type for '" + k + "' in calibration");
    }
  }
}

Json to_json(const CalibrationRequest& req) {
  Json j{{"method", calibration_method_name(req.method)}};
  if (req.pixels_per_mm) j["pixels_per_mm"] = *req.pixels_per_mm;
  j["tick_spacing_mm"] = req.tick_spacing_mm;
  j["axis"] = ruler_axis_name(req.axis);
  if (req.paper_height_mm) j["paper_height_mm"] = *req.paper_height_mm;
  j["canny"] = Json{{"sigma", req.canny.sigma}, {"low", req.canny.low}, {"high", req.canny.high}};
  return j;
}

Calibration run_calibration(const GrayImage& image, const CalibrationRequest& req) {
  switch (req.method) {
    case CalibrationMethod::Explicit:
      if (!req.pixels_per_mm) throw Error(ErrorCode::InvalidArgument, "explicit calibration needs pixels_per_mm");
      return Calibration::make(*req.pixels_per_mm, CalibrationMethod::Explicit, "given by the user");
    case CalibrationMethod::Ruler:
      if (!(req.tick_spacing_mm > 0)) throw Error(ErrorCode::InvalidArgument, "tick spacing must be positive");
      return calibrate_from_ruler(canny_edges(image, req.canny), req.tick_spacing_mm, req.axis);
    case CalibrationMethod::PaperSize:
      if (!req.paper_height_mm || !(*req.paper_height_mm > 0)) {
        throw Error(ErrorCode::InvalidArgument, "paper-size calibration needs a positive paper_height_mm");
      }
      return calibrate_from_paper_size(canny_edges(image, req.canny), *req.paper_height_mm);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown calibration method");
}

PixelRect resolve_patch(const GrayImage& image, const std::optional<PixelRect>& patch) {
  if (!patch) return {0, 0, image.width(), image.height()};
  const PixelRect& r = *patch;
  if (r.width <= 0 || r.height <= 0 || r.x0 < 0 || r.y0 < 0 || r.x0 + r.width > image.width() ||
      r.y0 + r.height > image.height()) {
    throw Error(ErrorCode::OutOfBounds, "patch " + std::to_string(r.x0) + "," + std::to_string(r.y0) + "," +
                                            std::to_string(r.width) + "," + std::to_string(r.height) +
                                            " is not inside the " + std::to_string(image.width()) + "x" +
                                            std::to_string(image.height()) + " image");
  }
  return r;
}

Provenance make_provenance(const std::string& source, const PixelRect& patch, const GrayImage& image) {
  return Provenance{source, patch, image.width(), image.height()};
}

TvFlowConfig detection_flow(const ChainDetectConfig& cfg) { return flow_for_band(cfg.flow, cfg.band); }
TvFlowConfig detection_flow(const LaidDetectConfig& cfg) { return flow_for_band(cfg.flow, cfg.band); }

std::vector<std::pair<double, double>> band_intervals(const std::vector<double>& edges,
                                                      const std::optional<ScaleBand>& band) {
  std::vector<std::pair<double, double>> out;
  if (!edges.empty()) {
    double lo = 0;
    for (double e : edges) {
      out.emplace_back(lo, e);
      lo = e;
    }
  } else {
    const ScaleBand b = band.value_or(ScaleBand{});
    out.emplace_back(b.t_lo, b.t_hi);
  }
  for (const auto& [lo, hi] : out) {
    if (!(lo >= 0 && lo < hi && std::isfinite(hi))) {
      throw Error(ErrorCode::InvalidInterval, "band edges must ascend from 0");
    }
  }
  return out;
}

TvFlowConfig flow_for_intervals(TvFlowConfig flow, const std::vector<std::pair<double, double>>& intervals) {
  for (const auto& iv : intervals) flow.t_max = std::max(flow.t_max, iv.second);
  return flow;
}

DecompositionOutput decompose_intervals(const ScaleSpaceStack& stack, const TvFlowConfig& flow,
                                        const std::vector<std::pair<double, double>>& intervals,
                                        const std::string& ext, bool verify) {
  DecompositionOutput out;
  out.manifest = manifest_from_stack(stack, flow);
  const Field& input = stack.frames.front();
  Field total(input.width(), input.height(), 0.0);
  for (std::size_t i = 0; i < intervals.size(); ++i) {
    const auto [lo, hi] = intervals[i];
    Field band = band_pass(stack, lo, hi);
    char name[32];
    std::snprintf(name, sizeof name, "band_%02zu", i);
    BandEntry e{stack.times[stack.index_of(lo)], stack.times[stack.index_of(hi)], name + ext, 0.0};
    for (std::size_t k = 0; k < band.size(); ++k) {
      e.energy += band.storage()[k] * band.storage()[k];
      total.storage()[k] += band.storage()[k];
    }
    out.manifest.bands.push_back(e);
    out.bands.push_back(std::move(band));
  }
  out.residual = scale_remainder(stack, stack.index_of(intervals.back().second));
  out.manifest.residual_file = "residual" + ext;
  if (verify) {
    const Field below = scale_remainder(stack, stack.index_of(intervals.front().first));
    for (std::size_t k = 0; k < total.size(); ++k) {
      total.storage()[k] += out.residual.storage()[k] + input.storage()[k] - below.storage()[k];
    }
    out.manifest.reconstruction_error = max_abs_diff(total, input);
  }
  return out;
}

}  // namespace mouldmark
