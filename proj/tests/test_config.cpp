#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "tofwave/config.hpp"
#include "tofwave/errors.hpp"

using namespace tofwave;

namespace {

std::string data_path(const std::string& name) {
  const char* dir = std::getenv("TOFWAVE_TEST_DATA");
  return std::string(dir ? dir : "tests/data") + "/" + name;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ErrorCode code_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected a parse failure");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("empty input gives the defaults") {
  CHECK(serialize_config(parse_config("")) == serialize_config(Config{}));
  CHECK(serialize_config(parse_config("# only a comment\n\n")) == serialize_config(Config{}));
  CHECK_NOTHROW(validate_config(Config{}));
}

TEST_CASE("bad values report the line") {
  try {
    parse_config("[model]\n\nalpha_re = abc\n");
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ParseError);
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    CHECK(std::string(e.what()).find("abc") != std::string::npos);
  }
  CHECK(code_of("[model]\nalpha_re = 1.0x\n") == ErrorCode::ParseError);
  CHECK(code_of("[grid]\npoints = 12.5\n") == ErrorCode::ParseError);
  CHECK(code_of("[profile]\ncheck_boundary = maybe\n") == ErrorCode::ParseError);
  CHECK(code_of("[evolution]\nscheme = rk4\n") == ErrorCode::ParseError);
  CHECK(code_of("[model\nalpha_re = 1\n") == ErrorCode::ParseError);
  CHECK(code_of("alpha_re = 1\n") == ErrorCode::ParseError);
  CHECK(code_of("[model]\nalpha_re\n") == ErrorCode::ParseError);
}

TEST_CASE("unknown keys and sections are rejected") {
  CHECK(code_of("[model]\ngamma = 1\n") == ErrorCode::UnknownKey);
  CHECK(code_of("[solver]\n") == ErrorCode::UnknownKey);
  CHECK(code_of("[model]\nalpha_re =\n") == ErrorCode::MissingRequired);
}

TEST_CASE("overrides") {
  Config c;
  apply_override(c, "grid.points=1024");
  apply_override(c, " model.beta0_im = 0.75 ");
  CHECK(c.grid.points == 1024);
  CHECK(c.model.beta0.imag() == 0.75);
  CHECK_THROWS_AS(apply_override(c, "points=5"), Error);
  CHECK_THROWS_AS(apply_override(c, "grid.nothing=5"), Error);
}

TEST_CASE("validation") {
  Config c;
  c.grid.points = 8;
  CHECK_THROWS_AS(validate_config(c), Error);
  c = Config{};
  c.evolution.sim.dt = 0.0;
  CHECK_THROWS_AS(validate_config(c), Error);
  c = Config{};
  c.rates.m = 4.0;
  CHECK_THROWS_AS(validate_config(c), Error);
  c = Config{};
  c.spectral.s_max = c.spectral.s_min;
  CHECK_THROWS_AS(validate_config(c), Error);
}

TEST_CASE("normalized text matches the golden files") {
  CHECK(normalize_config_text(slurp(data_path("partial.cfg"))) == slurp(data_path("partial.normalized.cfg")));
  CHECK(serialize_config(Config{}) == slurp(data_path("default.normalized.cfg")));
  const Config p = load_config(data_path("partial.cfg"));
  CHECK(p.model.alpha.real() == 0.75);
  CHECK(p.grid.points == 2048);
  CHECK(p.evolution.sim.scheme == Scheme::IMEX1);
  CHECK(p.evolution.sim.t_final == 50.0);
}

TEST_CASE("serialization round trips") {
  Config c;
  c.model.alpha = {0.123456789012345, -1e-17};
  c.evolution.amplitude = 3e-3;
  c.verify.sweep.gk_points = 31;
  const std::string text = serialize_config(c);
  CHECK(serialize_config(parse_config(text)) == text);
  CHECK(parse_config(text).model.alpha == c.model.alpha);
  const auto keys = config_keys();
  CHECK(keys.front() == "model.alpha_re");
  CHECK(std::count(text.begin(), text.end(), '=') == static_cast<long>(keys.size()));
  CHECK_THROWS_AS(load_config("/nonexistent/file.cfg"), Error);
}
