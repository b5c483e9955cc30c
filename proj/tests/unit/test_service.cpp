#ifdef MOULDMARK_HAVE_TOOLS

#include <sstream>

#include "cli.hpp"
#include "doctest.h"
#include "httplib.h"
#include "mouldmark/image_io.hpp"
#include "mouldmark/phantom.hpp"
#include "mouldmark/serialize.hpp"
#include "service.hpp"

#include <filesystem>
#include <fstream>
#include <random>

using namespace mouldmark;
namespace fs = std::filesystem;

namespace {

struct Running {
  service::Service svc;
  int port;
  httplib::Client client;
  explicit Running(service::ServiceConfig cfg)
      : svc(cfg), port(svc.start_background()), client("127.0.0.1", port) {
    client.set_read_timeout(300, 0);
  }
  ~Running() { svc.stop(); }
};

service::ServiceConfig test_config() {
  service::ServiceConfig c;
  c.port = 0;
  c.max_upload_bytes = 200000;
  c.workers = 2;
  return c;
}

std::string small_chain_png() {
  PhantomSpec s;
  s.width = 120;
  s.height = 60;
  s.scale = 4.0;
  s.background = 0.7;
  LineSetElement l;
  l.positions = {20, 60, 100};
  l.line_width_px = 4;
  l.contrast = 0.03;
  s.elements.push_back(l);
  s.noise_sigma = 0.003;
  s.seed = 5;
  const auto bytes = encode_png(generate(s).image);
  return std::string(bytes.begin(), bytes.end());
}

std::string upload(httplib::Client& c, const std::string& png, const std::string& filename = "small.png") {
  httplib::MultipartFormDataItems items{{"image", png, filename, "image/png"}};
  const auto res = c.Post("/sessions", items);
  REQUIRE(res);
  REQUIRE(res->status == 201);
  return parse_json(res->body)["session_id"].get<std::string>();
}

std::string error_code(const httplib::Result& res) {
  REQUIRE(res);
  return parse_json(res->body)["error"]["code"].get<std::string>();
}

const char* kQuickChain = R"({"band": {"t_lo": 0.026, "t_hi": 0.26}, "flow": {"t_max": 0.26}})";

}  // namespace

TEST_CASE("service health, uploads and session lifecycle") {
  Running r(test_config());
  const auto health = r.client.Get("/health");
  REQUIRE(health);
  CHECK(health->status == 200);

  const std::string png = small_chain_png();
  const auto raw = r.client.Post("/sessions", png, "image/png");
  REQUIRE(raw);
  CHECK(raw->status == 201);
  const Json created = parse_json(raw->body);
  CHECK(created["width"] == 120);
  CHECK(created["height"] == 60);

  const std::string id = upload(r.client, png);
  CHECK(r.svc.session_count() == 2);
  const auto info = r.client.Get("/sessions/" + id);
  REQUIRE(info);
  CHECK(parse_json(info->body)["source"] == "small.png");
  CHECK(parse_json(info->body)["calibration"].is_null());

  const auto text = r.client.Post("/sessions", "hello world", "text/plain");
  CHECK(text->status == 415);
  CHECK(error_code(text) == "unsupported_format");

  const auto big = r.client.Post("/sessions", std::string(250000, 'x'), "application/octet-stream");
  REQUIRE(big);
  CHECK(big->status == 413);
  CHECK(error_code(big) == "payload_too_large");

  const auto missing = r.client.Get("/sessions/0123abcd");
  CHECK(missing->status == 404);
  CHECK(error_code(missing) == "unknown_session");
  CHECK(r.client.Get("/nowhere")->status == 404);

  CHECK(r.client.Delete("/sessions/" + id)->status == 204);
  CHECK(r.client.Get("/sessions/" + id)->status == 404);
}

TEST_CASE("service detection, caching, edits and artifacts") {
  Running r(test_config());
  const std::string png = small_chain_png();
  const std::string id = upload(r.client, png);
  const std::string base = "/sessions/" + id;

  const auto bad_json = r.client.Post(base + "/calibrate", "{oops", "application/json");
  CHECK(bad_json->status == 400);
  CHECK(error_code(bad_json) == "invalid_json");
  const auto bad_cal = r.client.Post(base + "/calibrate", R"({"method": "ruler"})", "application/json");
  CHECK(bad_cal->status == 422);
  CHECK(error_code(bad_cal) == "insufficient_ticks");

  const auto laid_uncal = r.client.Post(base + "/detect/laids", "{}", "application/json");
  CHECK(laid_uncal->status == 422);
  CHECK(error_code(laid_uncal) == "missing_calibration");

  const auto cal = r.client.Post(base + "/calibrate", R"({"method": "explicit", "pixels_per_mm": 4})",
                                 "application/json");
  REQUIRE(cal->status == 200);
  CHECK(parse_json(cal->body)["pixels_per_mm"] == 4.0);

  const auto first = r.client.Post(base + "/detect/chains", kQuickChain, "application/json");
  REQUIRE(first->status == 200);
  const Json a = parse_json(first->body);
  CHECK(a["cached"] == false);
  CHECK(a["report"]["positions_px"].size() == 3);
  const std::string rid = a["report_id"];

  const auto second = r.client.Post(base + "/detect/chains", kQuickChain, "application/json");
  const Json b = parse_json(second->body);
  CHECK(b["cached"] == true);
  CHECK(b["report"] == a["report"]);
  CHECK(b["report_id"] != a["report_id"]);

  const auto edit = r.client.Patch(base + "/reports/" + rid, R"({"omitted_indices": [0]})", "application/json");
  REQUIRE(edit->status == 200);
  const Json e = parse_json(edit->body);
  CHECK(e["report"]["distances_mm"].size() == 1);
  CHECK(e["report"]["positions_px"] == a["report"]["positions_px"]);
  const auto stored = r.client.Get(base + "/reports/" + rid);
  CHECK(parse_json(stored->body)["omitted_indices"] == Json::array({0}));
  CHECK(r.client.Patch(base + "/reports/" + rid, R"({"omitted_indices": [9]})", "application/json")->status == 422);
  CHECK(r.client.Get(base + "/reports/r99")->status == 404);

  const std::string overlay = a["overlay"];
  const auto art = r.client.Get(overlay);
  REQUIRE(art->status == 200);
  CHECK(art->body.substr(1, 3) == "PNG");
  CHECK(r.client.Get(base + "/artifacts/none.png")->status == 404);

  const auto unknown = r.client.Post(base + "/detect/chains", R"({"colour": 1})", "application/json");
  CHECK(unknown->status == 422);
  CHECK(error_code(unknown) == "invalid_argument");
  const auto outside = r.client.Post(base + "/detect/chains", R"({"patch": {"x0": 100, "y0": 0, "width": 50, "height": 10}})",
                                     "application/json");
  CHECK(outside->status == 422);
  CHECK(error_code(outside) == "out_of_bounds");

  const auto dec = r.client.Post(base + "/decompose", R"({"edges": [0.026, 0.13], "flow": {"t_max": 0.13}})",
                                 "application/json");
  REQUIRE(dec->status == 200);
  const Json d = parse_json(dec->body);
  CHECK(d["manifest"]["bands"].size() == 2);
  for (const auto& [name, url] : d["artifacts"].items()) {
    CAPTURE(name);
    CHECK(r.client.Get(url.get<std::string>())->status == 200);
  }
}

TEST_CASE("service reports match the command line") {
  const std::string png = small_chain_png();
  std::random_device rd;
  const fs::path dir = fs::temp_directory_path() / ("mouldmark-svc-" + std::to_string(rd()));
  fs::create_directories(dir);
  std::ofstream((dir / "small.png").string(), std::ios::binary) << png;
  std::ostringstream out, err;
  const int code = cli::run({"chains", (dir / "small.png").string(), "--px-per-mm", "4", "--t-lo", "0.026", "--t-hi",
                             "0.26", "--t-max", "0.26", "-o", (dir / "o").string()},
                            out, err);
  fs::remove_all(dir);
  REQUIRE(code == 0);

  Running r(test_config());
  const std::string id = upload(r.client, png, "small.png");
  r.client.Post("/sessions/" + id + "/calibrate", R"({"method": "explicit", "pixels_per_mm": 4})", "application/json");
  const auto res = r.client.Post("/sessions/" + id + "/detect/chains", kQuickChain, "application/json");
  REQUIRE(res->status == 200);
  CHECK(dump_json(parse_json(res->body)["report"]) == out.str());
}

#endif
