#include "service.hpp"

#include <cstdlib>
#include <functional>
#include <future>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "httplib.h"
#include "mouldmark/error.hpp"
#include "mouldmark/image_io.hpp"
#include "mouldmark/pipeline.hpp"

namespace mouldmark::service {

namespace {

using Clock = std::chrono::steady_clock;
using StackPtr = std::shared_ptr<const ScaleSpaceStack>;

struct HttpError {
  int status;
  std::string code;
  std::string message;
};

int status_for(ErrorCode code) { return code == ErrorCode::UnsupportedFormat ? 415 : 422; }

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

struct Session {
  std::string id;
  std::string source;
  RgbImage colour;
  GrayImage gray;
  std::optional<Calibration> calibration;
  std::map<std::string, std::shared_future<StackPtr>> stacks;
  std::map<std::string, std::vector<std::uint8_t>> artifacts;
  std::map<std::string, ChainLineReport> chain_reports;
  std::map<std::string, LaidLineReport> laid_reports;
  int next_report = 1;
  Clock::time_point last_used;
  std::mutex mu;
};

using SessionPtr = std::shared_ptr<Session>;

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

Json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return Json::object();
  try {
    return Json::parse(req.body);
  } catch (const nlohmann::json::parse_error&) {
    throw HttpError{400, "invalid_json", "request body is not valid JSON"};
  }
}

void check_object(const Json& j) {
  if (!j.is_object()) throw HttpError{400, "invalid_json", "request body must be a JSON object"};
}

// Splits the transport-level keys (patch, variant) from a parameter object.
struct DetectRequest {
  std::optional<PixelRect> patch;
  std::optional<TvVariant> variant;
  Json params = Json::object();
};

DetectRequest split_request(const Json& body) {
  check_object(body);
  DetectRequest r;
  for (const auto& item : body.items()) {
    if (item.key() == "patch") {
      PixelRect p;
      apply_json(item.value(), p);
      r.patch = p;
    } else if (item.key() == "variant") {
      if (!item.value().is_string()) throw Error(ErrorCode::InvalidArgument, "'variant' must be a string");
      r.variant = parse_tv_variant(item.value().get<std::string>());
    } else {
      r.params[item.key()] = item.value();
    }
  }
  return r;
}

}  // namespace

ServiceConfig ServiceConfig::from_env() {
  ServiceConfig c;
  c.host = env_or("MOULDMARK_HOST", c.host);
  c.port = std::stoi(env_or("MOULDMARK_PORT", std::to_string(c.port)));
  c.max_upload_bytes = std::stoull(env_or("MOULDMARK_MAX_UPLOAD_BYTES", std::to_string(c.max_upload_bytes)));
  c.session_ttl = std::chrono::seconds(std::stoll(env_or("MOULDMARK_SESSION_TTL_S", std::to_string(c.session_ttl.count()))));
  c.workers = std::max(1, std::stoi(env_or("MOULDMARK_WORKERS", std::to_string(c.workers))));
  return c;
}

struct Service::State {
  ServiceConfig config;
  httplib::Server server;
  std::thread thread;
  int port = -1;

  mutable std::mutex mu;
  std::map<std::string, SessionPtr> sessions;
  std::mt19937_64 rng{std::random_device{}()};

  explicit State(ServiceConfig c) : config(std::move(c)) {}

  void expire() {
    const auto now = Clock::now();
    std::lock_guard lock(mu);
    for (auto it = sessions.begin(); it != sessions.end();) {
      bool stale = false;
      {
        std::lock_guard s(it->second->mu);
        stale = now - it->second->last_used > config.session_ttl;
      }
      it = stale ? sessions.erase(it) : std::next(it);
    }
  }

  SessionPtr find(const std::string& id) {
    expire();
    std::lock_guard lock(mu);
    const auto it = sessions.find(id);
    if (it == sessions.end()) throw HttpError{404, "unknown_session", "no session " + id};
    std::lock_guard s(it->second->mu);
    it->second->last_used = Clock::now();
    return it->second;
  }

  std::string base_url(const Session& s) const { return "/sessions/" + s.id + "/artifacts/"; }

  // Runs or reuses the flow for the patch. Concurrent requests with the same
  // key wait for one solve.
  std::pair<StackPtr, bool> stack_for(Session& s, const PixelRect& rect, const TvFlowConfig& flow) {
    flow.validate();
    const std::string key = dump_json(Json{{"patch", to_json(rect)}, {"flow", to_json(flow)}});
    std::promise<StackPtr> promise;
    std::shared_future<StackPtr> future;
    bool cached = false;
    {
      std::lock_guard lock(s.mu);
      const auto it = s.stacks.find(key);
      if (it != s.stacks.end()) {
        future = it->second;
        cached = true;
      } else {
        future = promise.get_future().share();
        s.stacks.emplace(key, future);
      }
    }
    if (!cached) {
      try {
        const GrayImage patch = crop_patch(s.gray, rect);
        promise.set_value(std::make_shared<const ScaleSpaceStack>(tv_flow(patch.pixels(), flow)));
      } catch (...) {
        promise.set_exception(std::current_exception());
        std::lock_guard lock(s.mu);
        s.stacks.erase(key);
      }
    }
    return {future.get(), cached};
  }

  // ---- handlers ----

  void create_session(const httplib::Request& req, httplib::Response& res) {
    std::string bytes, source = "upload";
    if (req.is_multipart_form_data()) {
      if (req.files.empty()) throw HttpError{400, "missing_image", "multipart upload without a file"};
      const auto it = req.files.count("image") ? req.files.find("image") : req.files.begin();
      bytes = it->second.content;
      if (!it->second.filename.empty()) source = it->second.filename;
    } else {
      bytes = req.body;
    }
    if (bytes.size() > config.max_upload_bytes) {
      throw HttpError{413, "payload_too_large", "image exceeds the upload limit"};
    }
    const std::span<const std::uint8_t> view(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size());
    if (detect_format(view) == ImageFormat::Unknown) {
      throw HttpError{415, "unsupported_format", "upload is not a PNG, JPEG or PGM/PPM image"};
    }
    auto s = std::make_shared<Session>();
    s->colour = decode_image(view);
    s->gray = to_grayscale(s->colour);
    s->source = source;
    s->last_used = Clock::now();
    expire();
    {
      std::lock_guard lock(mu);
      do {
        s->id = hex64(rng()) + hex64(rng());
      } while (sessions.count(s->id));
      sessions.emplace(s->id, s);
    }
    res.status = 201;
    res.set_content(dump_json(Json{{"session_id", s->id},
                                   {"source", s->source},
                                   {"width", s->gray.width()},
                                   {"height", s->gray.height()}}),
                    "application/json");
  }

  void session_info(const std::string& id, httplib::Response& res) {
    const auto s = find(id);
    std::lock_guard lock(s->mu);
    res.set_content(dump_json(Json{{"session_id", s->id},
                                   {"source", s->source},
                                   {"width", s->gray.width()},
                                   {"height", s->gray.height()},
                                   {"calibration", s->calibration ? to_json(*s->calibration) : Json(nullptr)}}),
                    "application/json");
  }

  void delete_session(const std::string& id, httplib::Response& res) {
    find(id);
    std::lock_guard lock(mu);
    sessions.erase(id);
    res.status = 204;
  }

  void calibrate(const std::string& id, const httplib::Request& req, httplib::Response& res) {
    const auto s = find(id);
    const Json body = parse_body(req);
    check_object(body);
    CalibrationRequest request;
    apply_json(body, request);
    const Calibration cal = run_calibration(s->gray, request);
    {
      std::lock_guard lock(s->mu);
      s->calibration = cal;
    }
    res.set_content(dump_json(calibration_document(cal)), "application/json");
  }

  void decompose(const std::string& id, const httplib::Request& req, httplib::Response& res) {
    const auto s = find(id);
    const Json body = parse_body(req);
    check_object(body);
    std::optional<PixelRect> patch;
    std::optional<ScaleBand> band;
    std::vector<double> edges;
    TvFlowConfig flow;
    for (const auto& item : body.items()) {
      const auto& k = item.key();
      if (k == "patch") {
        PixelRect p;
        apply_json(item.value(), p);
        patch = p;
      } else if (k == "band") {
        ScaleBand b;
        apply_json(item.value(), b);
        band = b;
      } else if (k == "edges") {
        if (!item.value().is_array()) throw Error(ErrorCode::InvalidArgument, "'edges' must be an array");
        for (const auto& e : item.value()) {
          if (!e.is_number()) throw Error(ErrorCode::InvalidArgument, "'edges' must hold numbers");
          edges.push_back(e.get<double>());
        }
      } else if (k == "flow") {
        apply_json(item.value(), flow);
      } else if (k == "variant") {
        if (!item.value().is_string()) throw Error(ErrorCode::InvalidArgument, "'variant' must be a string");
        flow.variant = parse_tv_variant(item.value().get<std::string>());
      } else {
        throw Error(ErrorCode::InvalidArgument, "unknown key '" + k + "' in decompose request");
      }
    }
    const auto intervals = band_intervals(edges, band);
    const TvFlowConfig full = flow_for_intervals(flow, intervals);
    const PixelRect rect = resolve_patch(s->gray, patch);
    const auto [stack, cached] = stack_for(*s, rect, full);

    auto out = decompose_intervals(*stack, full, intervals, ".png", false);
    auto& m = out.manifest;
    m.source = s->source;
    m.patch = rect;
    m.image_width = s->gray.width();
    m.image_height = s->gray.height();
    const std::string prefix =
        "dec-" + hex64(std::hash<std::string>{}(dump_json(Json{{"patch", to_json(rect)},
                                                              {"flow", to_json(full)},
                                                              {"intervals", Json(intervals)}}))) +
        "-";
    Json artifacts = Json::object();
    {
      std::lock_guard lock(s->mu);
      for (std::size_t i = 0; i < out.bands.size(); ++i) {
        m.bands[i].file = prefix + m.bands[i].file;
        s->artifacts[m.bands[i].file] = encode_png(normalize_for_display(out.bands[i]));
        artifacts[m.bands[i].file] = base_url(*s) + m.bands[i].file;
      }
      m.residual_file = prefix + m.residual_file;
      s->artifacts[m.residual_file] = encode_png(normalize_for_display(out.residual));
      artifacts[m.residual_file] = base_url(*s) + m.residual_file;
    }
    res.set_content(dump_json(Json{{"cached", cached}, {"manifest", to_json(m)}, {"artifacts", artifacts}}),
                    "application/json");
  }

  Json chain_response(Session& s, const std::string& rid, const ChainLineReport& report, bool cached) {
    const std::string file = rid + "-overlay.png";
    auto png = encode_png(render_overlay(s.colour, report));
    std::lock_guard lock(s.mu);
    s.artifacts[file] = std::move(png);
    s.chain_reports[rid] = report;
    return Json{{"report_id", rid}, {"cached", cached}, {"report", to_json(report)}, {"overlay", base_url(s) + file}};
  }

  Json laid_response(Session& s, const std::string& rid, const LaidLineReport& report, bool cached) {
    const std::string file = rid + "-overlay.png";
    auto png = encode_png(render_overlay(s.colour, report));
    std::lock_guard lock(s.mu);
    s.artifacts[file] = std::move(png);
    s.laid_reports[rid] = report;
    return Json{{"report_id", rid}, {"cached", cached}, {"report", to_json(report)}, {"overlay", base_url(s) + file}};
  }

  std::string next_report_id(Session& s) {
    std::lock_guard lock(s.mu);
    return "r" + std::to_string(s.next_report++);
  }

  void detect_chains(const std::string& id, const httplib::Request& req, httplib::Response& res) {
    const auto s = find(id);
    const DetectRequest r = split_request(parse_body(req));
    ChainDetectConfig cfg;
    apply_json(r.params, cfg);
    if (r.variant) cfg.flow.variant = *r.variant;
    cfg.filter.validate();
    cfg.peaks.validate();
    if (!(cfg.band.t_lo >= 0 && cfg.band.t_lo < cfg.band.t_hi)) {
      throw Error(ErrorCode::InvalidInterval, "band needs 0 <= t_lo < t_hi");
    }
    const PixelRect rect = resolve_patch(s->gray, r.patch);
    std::optional<Calibration> cal;
    {
      std::lock_guard lock(s->mu);
      cal = s->calibration;
    }
    const auto [stack, cached] = stack_for(*s, rect, detection_flow(cfg));
    const auto report = analyse_chain_lines(*stack, cfg, cal, make_provenance(s->source, rect, s->gray));
    res.set_content(dump_json(chain_response(*s, next_report_id(*s), report, cached)), "application/json");
  }

  void detect_laids(const std::string& id, const httplib::Request& req, httplib::Response& res) {
    const auto s = find(id);
    const DetectRequest r = split_request(parse_body(req));
    LaidDetectConfig cfg;
    apply_json(r.params, cfg);
    if (r.variant) cfg.flow.variant = *r.variant;
    cfg.peaks.validate();
    if (!(cfg.band.t_lo >= 0 && cfg.band.t_lo < cfg.band.t_hi)) {
      throw Error(ErrorCode::InvalidInterval, "band needs 0 <= t_lo < t_hi");
    }
    const PixelRect rect = resolve_patch(s->gray, r.patch);
    std::optional<Calibration> cal;
    {
      std::lock_guard lock(s->mu);
      cal = s->calibration;
    }
    if (!cal) throw Error(ErrorCode::MissingCalibration, "laid line density needs a calibration");
    require_centimetre(rect.width, rect.height, *cal);
    const auto [stack, cached] = stack_for(*s, rect, detection_flow(cfg));
    const auto report = analyse_laid_lines(*stack, cfg, *cal, make_provenance(s->source, rect, s->gray));
    res.set_content(dump_json(laid_response(*s, next_report_id(*s), report, cached)), "application/json");
  }

  void get_report(const std::string& id, const std::string& rid, httplib::Response& res) {
    const auto s = find(id);
    std::lock_guard lock(s->mu);
    if (const auto it = s->chain_reports.find(rid); it != s->chain_reports.end()) {
      res.set_content(dump_json(to_json(it->second)), "application/json");
    } else if (const auto lt = s->laid_reports.find(rid); lt != s->laid_reports.end()) {
      res.set_content(dump_json(to_json(lt->second)), "application/json");
    } else {
      throw HttpError{404, "unknown_report", "no report " + rid};
    }
  }

  void patch_report(const std::string& id, const std::string& rid, const httplib::Request& req,
                    httplib::Response& res) {
    const auto s = find(id);
    const Json body = parse_body(req);
    check_object(body);
    std::vector<int> omitted;
    for (const auto& item : body.items()) {
      if (item.key() != "omitted_indices") {
        throw Error(ErrorCode::InvalidArgument, "unknown key '" + item.key() + "' in report edit");
      }
      if (!item.value().is_array()) throw Error(ErrorCode::InvalidArgument, "'omitted_indices' must be an array");
      for (const auto& v : item.value()) {
        if (!v.is_number_integer()) throw Error(ErrorCode::InvalidArgument, "'omitted_indices' must hold integers");
        omitted.push_back(v.get<int>());
      }
    }
    ChainLineReport current;
    {
      std::lock_guard lock(s->mu);
      const auto it = s->chain_reports.find(rid);
      if (it == s->chain_reports.end()) {
        if (s->laid_reports.count(rid)) {
          throw Error(ErrorCode::InvalidArgument, "only chain reports accept omissions");
        }
        throw HttpError{404, "unknown_report", "no report " + rid};
      }
      current = it->second;
    }
    const auto edited = with_omissions(current, omitted);
    res.set_content(dump_json(chain_response(*s, rid, edited, true)), "application/json");
  }

  void artifact(const std::string& id, const std::string& name, httplib::Response& res) {
    const auto s = find(id);
    std::lock_guard lock(s->mu);
    const auto it = s->artifacts.find(name);
    if (it == s->artifacts.end()) throw HttpError{404, "unknown_artifact", "no artifact " + name};
    res.set_content(std::string(it->second.begin(), it->second.end()), "image/png");
  }
};

namespace {

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message) {
  res.status = status;
  res.set_content(dump_json(Json{{"error", Json{{"code", code}, {"message", message}}}}), "application/json");
}

// Wraps a handler with the error-to-status mapping.
template <typename F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const HttpError& e) {
      send_error(res, e.status, e.code, e.message);
    } catch (const Error& e) {
      send_error(res, status_for(e.code()), std::string(error_code_name(e.code())), e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, "internal", e.what());
    }
  };
}

}  // namespace

Service::Service(ServiceConfig config) : state_(std::make_unique<State>(std::move(config))) {
  State* st = state_.get();
  auto& svr = st->server;
  const int workers = st->config.workers;
  svr.new_task_queue = [workers] { return new httplib::ThreadPool(static_cast<std::size_t>(workers)); };
  // Slightly above the limit so oversized uploads reach the handler's 413
  // with a JSON body; anything far larger is refused by the server itself.
  svr.set_payload_max_length(st->config.max_upload_bytes + 64 * 1024);

  svr.Get("/health", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(dump_json(Json{{"status", "ok"}, {"schema", kSchemaVersion}}), "application/json");
  });
  svr.Post("/sessions", guarded([st](const auto& req, auto& res) { st->create_session(req, res); }));
  svr.Get(R"(/sessions/([0-9a-f]+))",
          guarded([st](const auto& req, auto& res) { st->session_info(req.matches[1], res); }));
  svr.Delete(R"(/sessions/([0-9a-f]+))",
             guarded([st](const auto& req, auto& res) { st->delete_session(req.matches[1], res); }));
  svr.Post(R"(/sessions/([0-9a-f]+)/calibrate)",
           guarded([st](const auto& req, auto& res) { st->calibrate(req.matches[1], req, res); }));
  svr.Post(R"(/sessions/([0-9a-f]+)/decompose)",
           guarded([st](const auto& req, auto& res) { st->decompose(req.matches[1], req, res); }));
  svr.Post(R"(/sessions/([0-9a-f]+)/detect/chains)",
           guarded([st](const auto& req, auto& res) { st->detect_chains(req.matches[1], req, res); }));
  svr.Post(R"(/sessions/([0-9a-f]+)/detect/laids)",
           guarded([st](const auto& req, auto& res) { st->detect_laids(req.matches[1], req, res); }));
  svr.Get(R"(/sessions/([0-9a-f]+)/reports/([A-Za-z0-9]+))",
          guarded([st](const auto& req, auto& res) { st->get_report(req.matches[1], req.matches[2], res); }));
  svr.Patch(R"(/sessions/([0-9a-f]+)/reports/([A-Za-z0-9]+))", guarded([st](const auto& req, auto& res) {
              st->patch_report(req.matches[1], req.matches[2], req, res);
            }));
  svr.Get(R"(/sessions/([0-9a-f]+)/artifacts/([A-Za-z0-9_.\-]+))",
          guarded([st](const auto& req, auto& res) { st->artifact(req.matches[1], req.matches[2], res); }));
  svr.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (!res.body.empty()) return;
    const std::string code = res.status == 413 ? "payload_too_large" : res.status == 404 ? "not_found" : "error";
    send_error(res, res.status, code, httplib::status_message(res.status));
  });
}

Service::~Service() { stop(); }

int Service::bind() {
  auto& st = *state_;
  if (st.config.port == 0) {
    st.port = st.server.bind_to_any_port(st.config.host);
  } else {
    st.port = st.server.bind_to_port(st.config.host, st.config.port) ? st.config.port : -1;
  }
  return st.port;
}

void Service::listen() { state_->server.listen_after_bind(); }

int Service::start_background() {
  const int port = bind();
  if (port < 0) return port;
  state_->thread = std::thread([this] { listen(); });
  state_->server.wait_until_ready();
  return port;
}

void Service::stop() {
  if (!state_) return;
  state_->server.stop();
  if (state_->thread.joinable()) state_->thread.join();
}

std::size_t Service::session_count() const {
  std::lock_guard lock(state_->mu);
  return state_->sessions.size();
}

httplib::Server& Service::server() { return state_->server; }

}  // namespace mouldmark::service
