#include <cmath>

#include "doctest.h"
#include "mouldmark/error.hpp"
#include "mouldmark/phantom.hpp"

using namespace mouldmark;

namespace {

ErrorCode spec_error(const PhantomSpec& s) {
  try {
    generate(s);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Io;
}

}  // namespace

TEST_CASE("empty spec gives a constant background and an empty truth") {
  PhantomSpec s;
  s.width = 10;
  s.height = 7;
  s.background = 0.3;
  const auto ph = generate(s);
  CHECK(ph.image == GrayImage(10, 7, 0.3));
  CHECK(ph.truth == GroundTruth{});
}

TEST_CASE("disk truth is h r / 2") {
  const auto ph = generate(phantom_preset("disk"));
  CHECK(ph.truth.disk_scales == std::vector<double>{2.5});
  CHECK(ph.image(31, 31) == 0.5);
  CHECK(ph.image(0, 0) == 0.0);
  // Edge pixels carry partial coverage; the total matches the disk area.
  CHECK(sum(ph.image.pixels()) == doctest::Approx(0.5 * M_PI * 100).epsilon(0.01));
}

TEST_CASE("chain preset truth") {
  const auto ph = generate(phantom_preset("chain-basic"));
  CHECK(ph.truth.line_positions_px == std::vector<double>{50, 150, 250});
  CHECK(ph.truth.pixels_per_mm == 10.0);
  CHECK(ph.image.scale() == 10.0);
}

TEST_CASE("laid preset truth") {
  const auto truth = ground_truth(phantom_preset("laid-basic"));
  REQUIRE(truth.density_per_cm);
  CHECK(*truth.density_per_cm == doctest::Approx(8.0));
  CHECK(truth.line_angle_deg == 92.0);
}

TEST_CASE("same seed gives identical images, different seeds differ") {
  const auto a = generate(phantom_preset("chain-basic", 7));
  const auto b = generate(phantom_preset("chain-basic", 7));
  const auto c = generate(phantom_preset("chain-basic", 8));
  CHECK(a.image == b.image);
  CHECK(a.truth == b.truth);
  CHECK_FALSE(a.image == c.image);
}

TEST_CASE("rectangles are pixel exact") {
  PhantomSpec s;
  s.width = 12;
  s.height = 9;
  s.background = 0.1;
  s.elements.push_back(RectElement{2, 3, 5, 4, 0.4});
  s.elements.push_back(RectElement{4, 0, 3, 9, 0.7});
  const auto img = generate(s).image;
  for (int y = 0; y < 9; ++y) {
    for (int x = 0; x < 12; ++x) {
      double v = 0.1;
      if (x >= 2 && x < 7 && y >= 3 && y < 7) v = std::min(1.0, v + 0.4);
      if (x >= 4 && x < 7) v = std::min(1.0, v + 0.7);
      CHECK(img(x, y) == doctest::Approx(v).epsilon(1e-15));
    }
  }
}

TEST_CASE("vertical lines peak at their columns with soft edges") {
  PhantomSpec s;
  s.width = 40;
  s.height = 5;
  LineSetElement l;
  l.orientation = Orientation::Vertical;
  l.positions = {10, 25};
  l.line_width_px = 3;
  l.contrast = 0.5;
  s.elements.push_back(l);
  const auto img = generate(s).image;
  CHECK(img(10, 2) == 0.5);
  CHECK(img(25, 0) == 0.5);
  CHECK(img(17, 2) == 0.0);
  CHECK(img(12, 2) > 0.0);
  CHECK(img(12, 2) < 0.5);
}

TEST_CASE("ruler truth lists tick columns") {
  const auto truth = ground_truth(phantom_preset("ruler"));
  REQUIRE(truth.tick_columns.size() >= 2);
  CHECK(truth.tick_columns[1] - truth.tick_columns[0] == doctest::Approx(20));
  CHECK(truth.pixels_per_mm == 20.0);
}

TEST_CASE("invalid specs are rejected") {
  PhantomSpec s;
  s.elements.push_back(DiskElement{5, 5, 10, 0.5});
  CHECK(spec_error(s) == ErrorCode::InvalidSpec);
  s.elements = {RectElement{60, 0, 10, 10, 0.5}};
  CHECK(spec_error(s) == ErrorCode::InvalidSpec);
  s.elements = {RectElement{0, 0, 10, 10, 1.5}};
  CHECK(spec_error(s) == ErrorCode::InvalidSpec);
  LineSetElement l;
  l.positions = {100};
  l.contrast = 0.1;
  s.elements = {l};
  CHECK(spec_error(s) == ErrorCode::InvalidSpec);
  l.positions.clear();
  s.elements = {l};
  CHECK(spec_error(s) == ErrorCode::InvalidSpec);
  s.elements.clear();
  s.width = 0;
  CHECK(spec_error(s) == ErrorCode::InvalidSpec);
  s.width = 10;
  s.noise_sigma = -1;
  CHECK(spec_error(s) == ErrorCode::InvalidSpec);
  CHECK_THROWS_AS(phantom_preset("marbled"), Error);
}

TEST_CASE("spec json round trip") {
  for (const auto& name : phantom_preset_names()) {
    CAPTURE(name);
    const auto spec = phantom_preset(name, 11);
    const std::string text = phantom_spec_to_json(spec);
    const auto back = phantom_spec_from_json(text);
    CHECK(phantom_spec_to_json(back) == text);
    CHECK(generate(back).image == generate(spec).image);
  }
}

TEST_CASE("spec json rejects unknown keys and malformed text") {
  auto code = [](const std::string& text) {
    try {
      phantom_spec_from_json(text);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::Io;
  };
  CHECK(code("{") == ErrorCode::InvalidSpec);
  CHECK(code(R"({"width": 10, "height": 10, "colour": 1})") == ErrorCode::InvalidSpec);
  CHECK(code(R"({"width": 10, "height": 10, "elements": [{"type": "star"}]})") == ErrorCode::InvalidSpec);
  CHECK(code(R"({"width": 10, "height": 10, "elements": [{"type": "disk", "cx": 5, "cy": 5, "r": 2}]})") ==
        ErrorCode::InvalidSpec);
  CHECK_NOTHROW(phantom_spec_from_json(R"({"width": 10, "height": 10})"));
}

TEST_CASE("truth json lists the populated fields") {
  const std::string text = ground_truth_to_json(ground_truth(phantom_preset("chain-basic")));
  CHECK(text.find("\"line_positions_px\"") != std::string::npos);
  CHECK(text.find("50") != std::string::npos);
}
