#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "mouldmark/image_io.hpp"
#include "mouldmark/phantom.hpp"

namespace mouldmark::cli {

namespace fs = std::filesystem;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::InsufficientTicks:
    case ErrorCode::EdgesNotFound:
    case ErrorCode::MissingCalibration:
      return kCalibrationFailed;
    case ErrorCode::NoLinesFound:
      return kNoLines;
    case ErrorCode::PatchTooSmall:
      return kPatchTooSmall;
    default:
      return kUsage;
  }
}

void apply_json(const Json& j, RunConfig& cfg) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "config must be a JSON object");
  for (const auto& item : j.items()) {
    const auto& k = item.key();
    const auto& v = item.value();
    try {
      if (k == "input") {
        cfg.input = v.get<std::string>();
      } else if (k == "patch") {
        PixelRect r = cfg.patch.value_or(PixelRect{});
        apply_json(v, r);
        cfg.patch = r;
      } else if (k == "band") {
        ScaleBand b = cfg.band.value_or(ScaleBand{});
        apply_json(v, b);
        cfg.band = b;
        cfg.chain.band = b;
        cfg.laid.band = b;
      } else if (k == "flow") {
        apply_json(v, cfg.flow);
        apply_json(v, cfg.chain.flow);
        apply_json(v, cfg.laid.flow);
      } else if (k == "filter") {
        apply_json(v, cfg.chain.filter);
      } else if (k == "peaks") {
        apply_json(v, cfg.chain.peaks);
        apply_json(v, cfg.laid.peaks);
      } else if (k == "polarity") {
        cfg.chain.polarity = cfg.laid.polarity = parse_polarity(v.get<std::string>());
      } else if (k == "chain") {
        apply_json(v, cfg.chain);
      } else if (k == "laid") {
        apply_json(v, cfg.laid);
      } else if (k == "edges") {
        cfg.edges = v.get<std::vector<double>>();
      } else if (k == "calibration") {
        CalibrationRequest req = cfg.calibration.value_or(CalibrationRequest{});
        apply_json(v, req);
        cfg.calibration = req;
      } else if (k == "output_dir") {
        cfg.output_dir = v.get<std::string>();
      } else if (k == "image_format") {
        cfg.image_format = v.get<std::string>();
      } else if (k == "strict") {
        cfg.strict = v.get<bool>();
      } else {
        throw Error(ErrorCode::InvalidArgument, "unknown key '" + k + "' in config");
      }
    } catch (const nlohmann::json::exception&) {
      throw Error(ErrorCode::InvalidArgument, "wrong type for '" + k + "' in config");
    }
  }
}

namespace {

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << text;
}

PixelRect parse_rect(const std::string& s) {
  std::vector<int> v;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stoi(part, &used));
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidArgument, "patch must be x0,y0,width,height");
    }
  }
  if (v.size() != 4) throw Error(ErrorCode::InvalidArgument, "patch must be x0,y0,width,height");
  return {v[0], v[1], v[2], v[3]};
}

// Flags shared by the commands that read an image.
struct CommonFlags {
  std::string input;
  std::string config;
  std::string patch;
  std::string output;
  std::string format;
  bool strict = false;
  // Calibration.
  double px_per_mm = 0;
  bool ruler = false;
  double tick_spacing_mm = 1.0;
  std::string ruler_axis;
  double paper_height_mm = 0;
  std::string calibration_file;
  double canny_sigma = 0, canny_low = 0, canny_high = 0;
  // Flow and band.
  std::string variant;
  double dt = 0, t_max = 0, inner_tol = 0, t_lo = 0, t_hi = 0;
  int inner_max_iter = 0;

  CLI::App* app = nullptr;

  bool given(const std::string& name) const {
    const CLI::Option* opt = app->get_option_no_throw(name);
    return opt != nullptr && opt->count() > 0;
  }
};

void add_input(CLI::App* app, CommonFlags& f) {
  f.app = app;
  app->add_option("input", f.input, "Input image (PNG, JPEG, PGM/PPM)");
  app->add_option("--config", f.config, "JSON config file");
}

void add_calibration_flags(CLI::App* app, CommonFlags& f) {
  app->add_option("--px-per-mm", f.px_per_mm, "Explicit pixel size")->check(CLI::PositiveNumber);
  app->add_flag("--ruler", f.ruler, "Measure ruler ticks in the image");
  app->add_option("--tick-spacing-mm", f.tick_spacing_mm, "Ruler tick spacing")->check(CLI::PositiveNumber);
  app->add_option("--ruler-axis", f.ruler_axis, "horizontal or vertical");
  app->add_option("--paper-height-mm", f.paper_height_mm, "Known paper height")->check(CLI::PositiveNumber);
  app->add_option("--calibration", f.calibration_file, "Calibration JSON from the calibrate command");
  app->add_option("--canny-sigma", f.canny_sigma, "Canny smoothing");
  app->add_option("--canny-low", f.canny_low, "Canny low threshold (fraction of max)");
  app->add_option("--canny-high", f.canny_high, "Canny high threshold (fraction of max)");
}

void add_patch_output(CLI::App* app, CommonFlags& f) {
  app->add_option("--patch", f.patch, "Patch rectangle x0,y0,width,height");
  app->add_option("-o,--output", f.output, "Output directory");
}

void add_flow_flags(CLI::App* app, CommonFlags& f) {
  app->add_option("--variant", f.variant, "isotropic or anisotropic");
  app->add_option("--dt", f.dt, "Flow step");
  app->add_option("--t-max", f.t_max, "Final flow scale");
  app->add_option("--inner-tol", f.inner_tol, "Inner solver tolerance");
  app->add_option("--inner-max-iter", f.inner_max_iter, "Inner solver iteration cap");
  app->add_option("--t-lo", f.t_lo, "Lower band edge");
  app->add_option("--t-hi", f.t_hi, "Upper band edge");
  app->add_flag("--strict", f.strict, "Fail when any flow step does not converge");
}

void apply_flow_flags(const CommonFlags& f, TvFlowConfig& flow) {
  if (f.given("--variant")) flow.variant = parse_tv_variant(f.variant);
  if (f.given("--dt")) flow.dt = f.dt;
  if (f.given("--t-max")) flow.t_max = f.t_max;
  if (f.given("--inner-tol")) flow.inner_tol = f.inner_tol;
  if (f.given("--inner-max-iter")) flow.inner_max_iter = f.inner_max_iter;
}

void apply_band_flags(const CommonFlags& f, ScaleBand& band) {
  if (f.given("--t-lo")) band.t_lo = f.t_lo;
  if (f.given("--t-hi")) band.t_hi = f.t_hi;
}

// Defaults, then the config file, then the common flags.
RunConfig base_config(const CommonFlags& f) {
  RunConfig cfg;
  if (!f.config.empty()) apply_json(parse_json(read_text(f.config)), cfg);
  if (!f.input.empty()) cfg.input = f.input;
  if (!f.patch.empty()) cfg.patch = parse_rect(f.patch);
  if (!f.output.empty()) cfg.output_dir = f.output;
  if (!f.format.empty()) cfg.image_format = f.format;
  if (f.strict) cfg.strict = true;

  const bool explicit_cal = f.given("--px-per-mm");
  const bool paper = f.given("--paper-height-mm");
  const bool from_file = f.given("--calibration");
  if (explicit_cal + paper + f.ruler + from_file > 1) {
    throw Error(ErrorCode::InvalidArgument,
                "choose one of --px-per-mm, --ruler, --paper-height-mm, --calibration");
  }
  if (from_file) {
    const Calibration cal = calibration_from_json(parse_json(read_text(f.calibration_file)));
    CalibrationRequest req;
    req.pixels_per_mm = cal.pixels_per_mm;
    cfg.calibration = req;
  } else if (explicit_cal || paper || f.ruler) {
    CalibrationRequest req = cfg.calibration.value_or(CalibrationRequest{});
    if (explicit_cal) {
      req.method = CalibrationMethod::Explicit;
      req.pixels_per_mm = f.px_per_mm;
    } else if (paper) {
      req.method = CalibrationMethod::PaperSize;
      req.paper_height_mm = f.paper_height_mm;
    } else {
      req.method = CalibrationMethod::Ruler;
    }
    cfg.calibration = req;
  }
  if (cfg.calibration) {
    auto& req = *cfg.calibration;
    if (f.given("--tick-spacing-mm")) req.tick_spacing_mm = f.tick_spacing_mm;
    if (f.given("--ruler-axis")) req.axis = parse_ruler_axis(f.ruler_axis);
    if (f.given("--canny-sigma")) req.canny.sigma = f.canny_sigma;
    if (f.given("--canny-low")) req.canny.low = f.canny_low;
    if (f.given("--canny-high")) req.canny.high = f.canny_high;
  }
  return cfg;
}

struct Loaded {
  RgbImage colour;
  GrayImage gray;
  std::string source;
};

Loaded load_input(const RunConfig& cfg) {
  if (!cfg.input) throw Error(ErrorCode::InvalidArgument, "no input image given");
  const fs::path path(*cfg.input);
  if (!fs::exists(path)) throw Error(ErrorCode::Io, "input not found: " + path.string());
  Loaded l;
  l.colour = read_image(path);
  l.gray = to_grayscale(l.colour);
  l.source = path.filename().string();
  return l;
}

std::optional<Calibration> calibrate(const RunConfig& cfg, const GrayImage& image) {
  if (!cfg.calibration) return std::nullopt;
  return run_calibration(image, *cfg.calibration);
}

fs::path output_dir(const RunConfig& cfg) {
  fs::path dir(cfg.output_dir);
  fs::create_directories(dir);
  return dir;
}

std::string image_ext(const RunConfig& cfg) {
  if (cfg.image_format != "png" && cfg.image_format != "pgm") {
    throw Error(ErrorCode::InvalidArgument, "image format must be png or pgm");
  }
  return "." + cfg.image_format;
}

struct NonConverged {};

ScaleSpaceStack flow_or_fail(const GrayImage& patch, const TvFlowConfig& flow, bool strict, std::ostream& err) {
  flow.validate();
  auto stack = tv_flow(patch.pixels(), flow);
  if (stack.nonconverged_steps() > 0) {
    err << "warning: " << stack.nonconverged_steps() << " flow steps did not reach inner_tol\n";
    if (strict) throw NonConverged{};
  }
  return stack;
}

std::vector<int> parse_indices(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ',')) {
    if (part.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(part, &used));
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidArgument, "--omit expects comma-separated indices");
    }
  }
  return out;
}

// ---- calibrate ----

int cmd_calibrate(const CommonFlags& f, std::ostream& out) {
  RunConfig cfg = base_config(f);
  if (!cfg.calibration) throw Error(ErrorCode::InvalidArgument, "choose a calibration method");
  const Loaded in = load_input(cfg);
  out << dump_json(calibration_document(run_calibration(in.gray, *cfg.calibration)));
  return kOk;
}

// ---- decompose ----

struct DecomposeFlags {
  std::vector<double> edges;
  bool verify = false;
};

int cmd_decompose(const CommonFlags& f, const DecomposeFlags& d, std::ostream& out, std::ostream& err) {
  RunConfig cfg = base_config(f);
  apply_flow_flags(f, cfg.flow);
  if (!d.edges.empty()) cfg.edges = d.edges;
  const bool band_flags = f.given("--t-lo") || f.given("--t-hi");
  if (band_flags) {
    ScaleBand b = cfg.band.value_or(ScaleBand{});
    apply_band_flags(f, b);
    cfg.band = b;
  }

  const auto intervals = band_intervals(band_flags ? std::vector<double>{} : cfg.edges, cfg.band);
  const TvFlowConfig flow = flow_for_intervals(cfg.flow, intervals);
  flow.validate();

  const Loaded in = load_input(cfg);
  const PixelRect rect = resolve_patch(in.gray, cfg.patch);
  const GrayImage patch = crop_patch(in.gray, rect);
  const auto stack = tv_flow(patch.pixels(), flow);

  const fs::path dir = output_dir(cfg);
  auto result = decompose_intervals(stack, flow, intervals, image_ext(cfg), d.verify);
  DecompositionManifest& m = result.manifest;
  m.source = in.source;
  m.patch = rect;
  m.image_width = in.gray.width();
  m.image_height = in.gray.height();
  for (std::size_t i = 0; i < result.bands.size(); ++i) {
    write_image(dir / m.bands[i].file, normalize_for_display(result.bands[i]));
  }
  write_image(dir / m.residual_file, normalize_for_display(result.residual));
  write_text(dir / "manifest.json", dump_json(to_json(m)));
  out << dump_json(to_json(m));

  if (m.reconstruction_error && *m.reconstruction_error > 1e-6) {
    err << "error: reconstruction error " << *m.reconstruction_error << " exceeds 1e-6\n";
    return kNonConvergence;
  }
  if (cfg.strict && m.nonconverged_steps > 0) {
    err << "error: " << m.nonconverged_steps << " flow steps did not converge\n";
    return kNonConvergence;
  }
  for (const auto& w : m.warnings) err << "warning: " << w << "\n";
  return kOk;
}

// ---- chains ----

struct ChainFlags {
  int filter_width = 1;
  double filter_height = 0;
  bool johnson = false;
  std::string orientation;
  double sigma = 0;
  double threshold = 0;
  int min_separation = 1;
  std::string polarity;
  std::string omit;
};

void apply_peak_flags(const CommonFlags& f, PeakConfig& p, double sigma, double threshold, int min_sep) {
  if (f.given("--sigma")) p.smooth_sigma = sigma;
  if (f.given("--threshold")) p.threshold = threshold;
  if (f.given("--min-separation")) p.min_separation = min_sep;
}

int cmd_chains(const CommonFlags& f, const ChainFlags& c, std::ostream& out, std::ostream& err) {
  RunConfig cfg = base_config(f);
  ChainDetectConfig& chain = cfg.chain;
  apply_flow_flags(f, chain.flow);
  apply_band_flags(f, chain.band);
  if (c.johnson) chain.filter = RectFilterSpec::johnson(chain.filter.orientation);
  if (f.given("--filter-width")) chain.filter.width_px = c.filter_width;
  if (f.given("--filter-height")) chain.filter.height_fraction = c.filter_height;
  if (f.given("--orientation")) chain.filter.orientation = parse_orientation(c.orientation);
  apply_peak_flags(f, chain.peaks, c.sigma, c.threshold, c.min_separation);
  if (f.given("--polarity")) chain.polarity = parse_polarity(c.polarity);
  chain.filter.validate();
  chain.peaks.validate();
  const auto omit = parse_indices(c.omit);

  const Loaded in = load_input(cfg);
  const auto cal = calibrate(cfg, in.gray);
  const PixelRect rect = resolve_patch(in.gray, cfg.patch);
  const GrayImage patch = crop_patch(in.gray, rect);
  if (!(chain.band.t_lo >= 0 && chain.band.t_lo < chain.band.t_hi)) {
    throw Error(ErrorCode::InvalidInterval, "band needs 0 <= t_lo < t_hi");
  }
  const auto stack = flow_or_fail(patch, detection_flow(chain), cfg.strict, err);
  ChainLineReport report = analyse_chain_lines(stack, chain, cal, make_provenance(in.source, rect, in.gray));
  if (!omit.empty()) report = with_omissions(report, omit);

  const fs::path dir = output_dir(cfg);
  write_text(dir / "chains.json", dump_json(to_json(report)));
  write_image(dir / "chains_overlay.png", render_overlay(in.colour, report));
  out << dump_json(to_json(report));
  for (const auto& w : report.warnings) err << "warning: " << w << "\n";
  if (report.positions_px.empty()) {
    err << "error: no chain lines above the threshold\n";
    return kNoLines;
  }
  return kOk;
}

// ---- laids ----

struct LaidFlags {
  double sigma = 0;
  double threshold = 0;
  int min_separation = 1;
  std::string polarity;
  double angle_step = 0;
  double window_anchor = 0;
};

int cmd_laids(const CommonFlags& f, const LaidFlags& l, std::ostream& out, std::ostream& err) {
  RunConfig cfg = base_config(f);
  LaidDetectConfig& laid = cfg.laid;
  apply_flow_flags(f, laid.flow);
  apply_band_flags(f, laid.band);
  apply_peak_flags(f, laid.peaks, l.sigma, l.threshold, l.min_separation);
  if (f.given("--polarity")) laid.polarity = parse_polarity(l.polarity);
  if (f.given("--angle-step")) laid.angle_step_deg = l.angle_step;
  if (f.given("--window-anchor")) laid.window_anchor_px = l.window_anchor;
  laid.peaks.validate();

  const Loaded in = load_input(cfg);
  const auto cal = calibrate(cfg, in.gray);
  if (!cal) throw Error(ErrorCode::MissingCalibration, "laid line density needs a calibration");
  const PixelRect rect = resolve_patch(in.gray, cfg.patch);
  require_centimetre(rect.width, rect.height, *cal);
  const GrayImage patch = crop_patch(in.gray, rect);
  if (!(laid.band.t_lo >= 0 && laid.band.t_lo < laid.band.t_hi)) {
    throw Error(ErrorCode::InvalidInterval, "band needs 0 <= t_lo < t_hi");
  }
  const auto stack = flow_or_fail(patch, detection_flow(laid), cfg.strict, err);
  const LaidLineReport report = analyse_laid_lines(stack, laid, *cal, make_provenance(in.source, rect, in.gray));

  const fs::path dir = output_dir(cfg);
  write_text(dir / "laids.json", dump_json(to_json(report)));
  write_image(dir / "laids_overlay.png", render_overlay(in.colour, report));
  out << dump_json(to_json(report));
  for (const auto& w : report.warnings) err << "warning: " << w << "\n";
  if (report.positions_px.empty()) {
    err << "error: no laid lines above the threshold\n";
    return kNoLines;
  }
  return kOk;
}

// ---- phantom ----

struct PhantomFlags {
  std::string preset;
  std::string spec;
  std::uint64_t seed = 0;
  std::string output = ".";
  std::string name;
  std::string format = "png";
  bool list = false;
  CLI::App* app = nullptr;
};

int cmd_phantom(const PhantomFlags& p, std::ostream& out) {
  if (p.list) {
    for (const auto& n : phantom_preset_names()) out << n << "\n";
    return kOk;
  }
  if (p.preset.empty() == p.spec.empty()) {
    throw Error(ErrorCode::InvalidArgument, "give exactly one of --preset or --spec");
  }
  PhantomSpec spec;
  if (!p.preset.empty()) {
    spec = phantom_preset(p.preset, p.seed);
  } else {
    spec = phantom_spec_from_json(read_text(p.spec));
    if (p.app->count("--seed") > 0) spec.seed = p.seed;
  }
  if (p.format != "png" && p.format != "pgm") throw Error(ErrorCode::InvalidArgument, "format must be png or pgm");
  const Phantom ph = generate(spec);
  const std::string stem = !p.name.empty() ? p.name : (!p.preset.empty() ? p.preset : "phantom");
  const fs::path dir(p.output);
  fs::create_directories(dir);
  const fs::path image = dir / (stem + "." + p.format);
  write_image(image, ph.image);
  write_text(dir / (stem + ".truth.json"), ground_truth_to_json(ph.truth));
  write_text(dir / (stem + ".spec.json"), phantom_spec_to_json(spec));
  out << image.string() << "\n";
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Chain and laid line measurement for paper images", "mouldmark"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "mouldmark 0.1.0");

  CommonFlags cal_f;
  auto* calibrate_cmd = app.add_subcommand("calibrate", "Measure pixels per millimetre");
  add_input(calibrate_cmd, cal_f);
  add_calibration_flags(calibrate_cmd, cal_f);

  CommonFlags dec_f;
  DecomposeFlags dec;
  auto* decompose_cmd = app.add_subcommand("decompose", "Spectral TV bands, residual and manifest");
  add_input(decompose_cmd, dec_f);
  add_patch_output(decompose_cmd, dec_f);
  add_flow_flags(decompose_cmd, dec_f);
  decompose_cmd->add_option("--edges", dec.edges, "Band edges t1,t2,... (bands start at 0)")->delimiter(',');
  decompose_cmd->add_flag("--verify", dec.verify, "Check that bands and residual rebuild the input");
  decompose_cmd->add_option("--format", dec_f.format, "Band image format: png or pgm");

  CommonFlags ch_f;
  ChainFlags ch;
  auto* chains_cmd = app.add_subcommand("chains", "Detect chain lines and measure their distances");
  add_input(chains_cmd, ch_f);
  add_patch_output(chains_cmd, ch_f);
  add_flow_flags(chains_cmd, ch_f);
  add_calibration_flags(chains_cmd, ch_f);
  chains_cmd->add_option("--filter-width", ch.filter_width, "Fourier mask width (odd px)");
  chains_cmd->add_option("--filter-height", ch.filter_height, "Fourier mask extent (fraction of the axis)");
  chains_cmd->add_flag("--johnson", ch.johnson, "Use the 3 px by 1/3 mask");
  chains_cmd->add_option("--orientation", ch.orientation, "vertical or horizontal");
  chains_cmd->add_option("--sigma", ch.sigma, "Signal smoothing");
  chains_cmd->add_option("--threshold", ch.threshold, "Absolute peak threshold");
  chains_cmd->add_option("--min-separation", ch.min_separation, "Minimum peak separation (px)");
  chains_cmd->add_option("--polarity", ch.polarity, "bright or dark lines");
  chains_cmd->add_option("--omit", ch.omit, "Line indices to omit, comma-separated");

  CommonFlags ld_f;
  LaidFlags ld;
  auto* laids_cmd = app.add_subcommand("laids", "Detect laid lines and count them per centimetre");
  add_input(laids_cmd, ld_f);
  add_patch_output(laids_cmd, ld_f);
  add_flow_flags(laids_cmd, ld_f);
  add_calibration_flags(laids_cmd, ld_f);
  laids_cmd->add_option("--sigma", ld.sigma, "Cross-section smoothing");
  laids_cmd->add_option("--threshold", ld.threshold, "Absolute peak threshold");
  laids_cmd->add_option("--min-separation", ld.min_separation, "Minimum peak separation (px)");
  laids_cmd->add_option("--polarity", ld.polarity, "bright or dark lines");
  laids_cmd->add_option("--angle-step", ld.angle_step, "Radon angle step (degrees)");
  laids_cmd->add_option("--window-anchor", ld.window_anchor, "Start of the 1 cm window (px from centre)");

  PhantomFlags ph;
  auto* phantom_cmd = app.add_subcommand("phantom", "Write a synthetic test image and its ground truth");
  ph.app = phantom_cmd;
  phantom_cmd->add_option("--preset", ph.preset, "Preset name");
  phantom_cmd->add_option("--spec", ph.spec, "Phantom spec JSON");
  phantom_cmd->add_option("--seed", ph.seed, "Random seed");
  phantom_cmd->add_option("-o,--output", ph.output, "Output directory");
  phantom_cmd->add_option("--name", ph.name, "File stem");
  phantom_cmd->add_option("--format", ph.format, "png or pgm");
  phantom_cmd->add_flag("--list", ph.list, "List presets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*calibrate_cmd) return cmd_calibrate(cal_f, out);
    if (*decompose_cmd) return cmd_decompose(dec_f, dec, out, err);
    if (*chains_cmd) return cmd_chains(ch_f, ch, out, err);
    if (*laids_cmd) return cmd_laids(ld_f, ld, out, err);
    if (*phantom_cmd) return cmd_phantom(ph, out);
  } catch (const NonConverged&) {
    err << "error: flow did not converge (--strict)\n";
    return kNonConvergence;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kUsage;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"mouldmark"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace mouldmark::cli
