#include <doctest.h>

#include <charconv>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <random>

#include "featmap/errors.hpp"
#include "featmap/io.hpp"

using namespace featmap;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  fs::path d = fs::temp_directory_path() / "featmap-unit-io";
  fs::create_directories(d);
  return d / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("doubles round trip through text") {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<std::uint64_t> bits;
  int tested = 0;
  while (tested < 20000) {
    std::uint64_t b = bits(rng);
    double v;
    std::memcpy(&v, &b, sizeof v);
    if (!std::isfinite(v)) continue;
    // from_chars, unlike stod, accepts subnormals
    std::string t = format_double(v);
    double back = 0;
    std::from_chars(t.data(), t.data() + t.size(), back);
    CHECK(back == v);
    ++tested;
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(std::numeric_limits<double>::quiet_NaN()) == "nan");
  CHECK(format_double(-std::numeric_limits<double>::infinity()) == "-inf");
}

TEST_CASE("csv escaping") {
  CHECK(csv_escape("plain") == "plain");
  CHECK(csv_escape("a,b") == "\"a,b\"");
  CHECK(csv_escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(csv_escape("two\nlines") == "\"two\nlines\"");
}

TEST_CASE("csv write and read back") {
  auto p = scratch("t.csv");
  {
    CsvWriter w(p, {"name", "value"});
    w.row(std::vector<std::string>{"f0:x,y", format_double(0.1 + 0.2)});
    w.row(std::vector<std::string>{"q\"uote", "nan"});
    double v[] = {1.5, -2e-300};
    w.row(v);
    CHECK_THROWS_AS(w.row(std::vector<std::string>{"only one"}), std::logic_error);
    w.close();
  }
  std::string raw = slurp(p);
  CHECK(raw.rfind("name,value\r\n", 0) == 0);
  auto t = read_csv(p);
  REQUIRE(t.rows.size() == 3);
  CHECK(t.header == std::vector<std::string>{"name", "value"});
  CHECK(t.rows[0][0] == "f0:x,y");
  CHECK(std::stod(t.rows[0][1]) == 0.1 + 0.2);
  CHECK(t.rows[1][0] == "q\"uote");
  CHECK(std::stod(t.rows[2][1]) == -2e-300);
  CHECK(t.column("value") == 1);
  CHECK(t.column("missing") == -1);
}

TEST_CASE("pgm layout") {
  auto p = scratch("t.pgm");
  // 3 x 2, bottom row first in memory
  std::vector<double> v = {0.0, 0.5, 1.0, 1.2, -0.1, 0.25};
  write_pgm(p, 3, 2, v);
  std::string raw = slurp(p);
  std::string header = "P5\n3 2\n255\n";
  REQUIRE(raw.size() == header.size() + 6);
  CHECK(raw.substr(0, header.size()) == header);
  auto px = [&](int i) { return static_cast<unsigned char>(raw[header.size() + i]); };
  // top row (the second in memory) comes first
  CHECK(px(0) == 255);
  CHECK(px(1) == 0);
  CHECK(px(2) == 64);
  CHECK(px(3) == 0);
  CHECK(px(4) == 128);
  CHECK(px(5) == 255);
  CHECK_THROWS(write_pgm(p, 4, 2, v));
}

TEST_CASE("density and gradient tables") {
  Grid g{2, 2, 1.0, {0, 0}};
  std::vector<double> rho = {0.1, 0.2, 0.3, 0.4};
  auto p = scratch("d.csv");
  write_density_csv(p, g, rho);
  auto t = read_csv(p);
  CHECK(t.header == std::vector<std::string>{"ex", "ey", "rho"});
  REQUIRE(t.rows.size() == 4);
  CHECK(t.rows[2][0] == "0");
  CHECK(t.rows[2][1] == "1");
  CHECK(t.rows[2][2] == "0.3");

  GradientReport rep;
  rep.rows.push_back({"f0.ax", 1.0, 1.0000001, 1e-7, false, true});
  write_gradient_csv(scratch("g.csv"), rep);
  auto tg = read_csv(scratch("g.csv"));
  CHECK(tg.header == std::vector<std::string>{"param", "analytic", "fd", "rel_err"});
  CHECK(tg.rows[0][0] == "f0.ax");

  History h;
  h.records.push_back({0, 3.0, 0.1, 2.0, {0.5, 0.25}});
  write_history_csv(scratch("h.csv"), h);
  auto th = read_csv(scratch("h.csv"));
  CHECK(th.header == std::vector<std::string>{"iter", "objective", "max_constraint", "grad_norm", "s_1", "s_2"});
  CHECK(th.rows[0][5] == "0.25");
}

}
