#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "mouldmark/calibration.hpp"
#include "mouldmark/error.hpp"
#include "mouldmark/image_io.hpp"
#include "mouldmark/line_detect.hpp"
#include "mouldmark/peaks.hpp"
#include "mouldmark/phantom.hpp"
#include "mouldmark/pipeline.hpp"
#include "mouldmark/serialize.hpp"
#include "mouldmark/spectral_tv.hpp"
#include "mouldmark/transforms.hpp"

namespace py = pybind11;
using namespace mouldmark;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Field to_field(const Array& a) {
  if (a.ndim() != 2) throw Error(ErrorCode::InvalidArgument, "expected a 2D array");
  const auto h = static_cast<int>(a.shape(0)), w = static_cast<int>(a.shape(1));
  return Field(w, h, std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const Field& f) {
  Array out({f.height(), f.width()});
  std::copy(f.storage().begin(), f.storage().end(), out.mutable_data());
  return out;
}

GrayImage to_image(const Array& a, std::optional<double> scale) { return GrayImage(to_field(a), scale); }

TvFlowConfig flow_config(const std::string& flow_json) {
  TvFlowConfig flow;
  apply_json(parse_json(flow_json), flow);
  flow.validate();
  return flow;
}

std::optional<Calibration> explicit_calibration(std::optional<double> px_per_mm) {
  if (!px_per_mm) return std::nullopt;
  return Calibration::make(*px_per_mm, CalibrationMethod::Explicit);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Watermark line measurement core";

  static py::exception<Error> error_type(m, "MouldmarkError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::reinterpret_borrow<py::object>(error_type.ptr())(std::string(e.what()));
      exc.attr("code") = std::string(error_code_name(e.code()));
      PyErr_SetObject(error_type.ptr(), exc.ptr());
    }
  });

  m.def("preset_names", &phantom_preset_names);

  m.def(
      "phantom",
      [](const std::string& preset, std::uint64_t seed) {
        const Phantom ph = generate(phantom_preset(preset, seed));
        return py::make_tuple(to_array(ph.image.pixels()), ph.image.scale(), ground_truth_to_json(ph.truth));
      },
      py::arg("preset"), py::arg("seed") = 0);

  m.def(
      "phantom_from_spec",
      [](const std::string& spec_json) {
        const Phantom ph = generate(phantom_spec_from_json(spec_json));
        return py::make_tuple(to_array(ph.image.pixels()), ph.image.scale(), ground_truth_to_json(ph.truth));
      },
      py::arg("spec_json"));

  m.def(
      "preset_spec", [](const std::string& preset, std::uint64_t seed) {
        return phantom_spec_to_json(phantom_preset(preset, seed));
      },
      py::arg("preset"), py::arg("seed") = 0);

  m.def(
      "read_gray",
      [](const std::string& path) {
        const GrayImage g = read_gray(path);
        return py::make_tuple(to_array(g.pixels()), g.scale());
      },
      py::arg("path"));

  m.def(
      "write_png", [](const std::string& path, const Array& image) { write_image(path, GrayImage::clamped(to_field(image))); },
      py::arg("path"), py::arg("image"));

  m.def(
      "tv_functional",
      [](const Array& image, const std::string& variant) { return tv_functional(to_field(image), parse_tv_variant(variant)); },
      py::arg("image"), py::arg("variant") = "isotropic");

  m.def(
      "spectral_response",
      [](const Array& image, const std::string& flow_json) {
        const auto stack = tv_flow(to_field(image), flow_config(flow_json));
        return py::make_tuple(stack.times, spectral_amplitude(stack));
      },
      py::arg("image"), py::arg("flow_json") = "{}");

  m.def(
      "band_pass",
      [](const Array& image, double t_lo, double t_hi, const std::string& flow_json) {
        return to_array(band_pass(to_field(image), t_lo, t_hi, flow_config(flow_json)));
      },
      py::arg("image"), py::arg("t_lo"), py::arg("t_hi"), py::arg("flow_json") = "{}");

  m.def(
      "decompose",
      [](const Array& image, const std::vector<double>& edges, const std::string& flow_json) {
        const auto dec = decompose(to_field(image), edges, flow_config(flow_json));
        py::list bands;
        for (const auto& b : dec.bands) bands.append(to_array(b));
        return py::make_tuple(dec.band_edges, bands, to_array(dec.residual));
      },
      py::arg("image"), py::arg("edges"), py::arg("flow_json") = "{}");

  m.def(
      "radon",
      [](const Array& image, std::optional<std::vector<double>> angles) {
        const auto sino = radon(to_field(image), angles ? *angles : angle_grid());
        // Rows are angles, columns offsets.
        Array data({static_cast<py::ssize_t>(sino.angles_deg.size()), static_cast<py::ssize_t>(sino.offsets_px.size())});
        for (std::size_t a = 0; a < sino.angles_deg.size(); ++a) {
          const auto col = sino.column(a);
          std::copy(col.begin(), col.end(), data.mutable_data() + a * sino.offsets_px.size());
        }
        return py::make_tuple(data, sino.angles_deg, sino.offsets_px);
      },
      py::arg("image"), py::arg("angles") = std::nullopt);

  m.def(
      "detect_peaks",
      [](const std::vector<double>& signal, double smooth_sigma, std::optional<double> threshold, int min_separation) {
        PeakConfig cfg;
        cfg.smooth_sigma = smooth_sigma;
        cfg.threshold = threshold;
        cfg.min_separation = min_separation;
        return detect_peaks(signal, cfg);
      },
      py::arg("signal"), py::arg("smooth_sigma") = 0.0, py::arg("threshold") = std::nullopt,
      py::arg("min_separation") = 1);

  m.def(
      "calibrate",
      [](const Array& image, const std::string& request_json) {
        CalibrationRequest req;
        apply_json(parse_json(request_json), req);
        return dump_json(calibration_document(run_calibration(to_image(image, std::nullopt), req)));
      },
      py::arg("image"), py::arg("request_json"));

  m.def(
      "detect_chains",
      [](const Array& image, std::optional<double> px_per_mm, const std::string& config_json, std::optional<double> scale) {
        ChainDetectConfig cfg;
        apply_json(parse_json(config_json), cfg);
        const GrayImage img = to_image(image, scale);
        std::optional<ChainLineReport> report;
        {
          py::gil_scoped_release release;
          report = detect_chain_lines(img, cfg, explicit_calibration(px_per_mm),
                                      make_provenance("array", resolve_patch(img, std::nullopt), img));
        }
        return dump_json(to_json(*report));
      },
      py::arg("image"), py::arg("px_per_mm") = std::nullopt, py::arg("config_json") = "{}",
      py::arg("scale") = std::nullopt);

  m.def(
      "detect_laids",
      [](const Array& image, std::optional<double> px_per_mm, const std::string& config_json, std::optional<double> scale) {
        LaidDetectConfig cfg;
        apply_json(parse_json(config_json), cfg);
        const GrayImage img = to_image(image, scale);
        std::optional<LaidLineReport> report;
        {
          py::gil_scoped_release release;
          report = detect_laid_lines(img, cfg, explicit_calibration(px_per_mm),
                                     make_provenance("array", resolve_patch(img, std::nullopt), img));
        }
        return dump_json(to_json(*report));
      },
      py::arg("image"), py::arg("px_per_mm") = std::nullopt, py::arg("config_json") = "{}",
      py::arg("scale") = std::nullopt);
}
