#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "tofwave/errors.hpp"
#include "tofwave/io.hpp"

using namespace tofwave;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("tofwave_io_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST_CASE("number formatting round trips") {
  for (double v : {0.0, 1.0, -2.5, 0.1, 1.0 / 3.0, 6.02214076e23, 2.2250738585072014e-308}) CHECK(std::stod(format_number(v)) == v);
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(std::numeric_limits<double>::quiet_NaN()) == "nan");
  CHECK(format_number(-INFINITY) == "-inf");
}

TEST_CASE("fnv1a hash") {
  CHECK(fnv1a64("") == 14695981039346656037ull);
  CHECK(hash_hex("a") == "af63dc4c8601ec8c");
  CHECK(hash_hex("foobar") == "85944171f73967e8");
  CHECK(hash_hex("abc").size() == 16);
}

TEST_CASE("csv writer") {
  const fs::path d = scratch_dir("csv");
  {
    CsvWriter w(d / "a.csv", {"t", "value"});
    w.row(std::vector<double>{0.0, 0.5});
    w.row(std::vector<std::string>{"1", "x"});
    CHECK_THROWS_AS(w.row(std::vector<double>{1.0}), Error);
    w.close();
  }
  CHECK(slurp(d / "a.csv") == "t,value\n0,0.5\n1,x\n");
  write_text_atomic(d / "sub" / "b.txt", "hello\n");
  CHECK(slurp(d / "sub" / "b.txt") == "hello\n");
  CHECK_FALSE(fs::exists(d / "sub" / "b.txt.tmp"));
  fs::remove_all(d);
}

TEST_CASE("run manifest") {
  const fs::path d = scratch_dir("manifest");
  RunContext ctx(d, "profile", "[grid]\npoints = 64\n", 7, true);
  ctx.json("out.json", Json{{"c", 1.5}});
  auto csv = ctx.csv("out.csv", {"x"});
  csv.row(std::vector<double>{1.0});
  csv.close();
  ctx.add_input_hash("config", "[grid]\npoints = 64\n");
  ctx.timing("solve", 0.25);
  ctx.check("converged", true);
  CHECK(ctx.all_passed());
  ctx.check("residual", false);
  CHECK_FALSE(ctx.all_passed());
  ctx.set_note("why", "residual too large");
  ctx.write_manifest(1);

  const Json m = Json::parse(slurp(d / "manifest.json"));
  CHECK(m["subcommand"] == "profile");
  CHECK(m["seed"] == 7);
  CHECK(m["exit_code"] == 1);
  CHECK(m["pass"] == false);
  CHECK(m["outputs"].size() == 2);
  CHECK(m["checks"].size() == 2);
  CHECK(m["inputs"]["config"] == hash_hex("[grid]\npoints = 64\n"));
  CHECK(m["notes"]["why"] == "residual too large");
  CHECK(Json::parse(slurp(d / "out.json"))["c"] == 1.5);
  fs::remove_all(d);
}
