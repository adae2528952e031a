#include <doctest.h>

#include <filesystem>
#include <string>

#include "pde_embed/gridfield.hpp"
#include "pde_embed/rng.hpp"
#include "pde_embed/util.hpp"

using namespace pde_embed;

namespace {
std::string tmp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}
} // namespace

TEST_CASE("indexing puts t outermost, then y, then x") {
  GridField f = GridField::make(3, 2, 2);
  f.x0 = 1.0;
  f.dx = 0.5;
  f.y0 = -1.0;
  f.dy = 2.0;
  f.t0 = 0.0;
  f.dt = 0.1;
  for (std::size_t i = 0; i < f.size(); ++i) f.values[i] = double(i);
  CHECK(f.at(0, 0, 0) == 0.0);
  CHECK(f.at(1, 0, 0) == 1.0);
  CHECK(f.at(0, 1, 0) == 3.0);
  CHECK(f.at(0, 0, 1) == 6.0);
  CHECK(f.at(2, 1, 1) == 11.0);
  CHECK(f.x(2) == 2.0);
  CHECK(f.y(1) == 1.0);
  CHECK(f.t(1) == doctest::Approx(0.1));
  CHECK_NOTHROW(f.validate());
}

TEST_CASE("validation catches inconsistent shapes") {
  GridField f = GridField::make(2, 2, 1);
  f.values.pop_back();
  CHECK_THROWS(f.validate());
  GridField g = GridField::make(2, 1, 1);
  g.dx = 0.0;
  CHECK_THROWS(g.validate());
  GridField h = GridField::make(2, 1, 1);
  h.values[0] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS(h.validate());
}

TEST_CASE("csv round trip preserves layout and bits") {
  Rng rng(4);
  SUBCASE("1d with time") {
    GridField f = GridField::make(5, 1, 3);
    f.x0 = 1.0;
    f.dx = 0.25;
    f.dt = 0.5;
    for (auto& v : f.values) v = rng.uniform(-1, 1);
    auto path = tmp_path("pde_embed_field1d.csv");
    write_field_csv(path, f);
    GridField g = read_field_csv(path);
    CHECK(g.nx == f.nx);
    CHECK(g.ny == 1);
    CHECK(g.nt == f.nt);
    CHECK(g.values == f.values);
    CHECK(g.x0 == f.x0);
    CHECK(g.dx == f.dx);
    CHECK(read_file(path).substr(0, 10) == std::string("x,t,value\n"));
    std::filesystem::remove(path);
  }
  SUBCASE("2d with time") {
    GridField f = GridField::make(4, 3, 2);
    f.dx = 20.0;
    f.dy = 20.0;
    f.x0 = 10.0;
    f.y0 = 10.0;
    for (auto& v : f.values) v = rng.uniform(100, 300);
    auto path = tmp_path("pde_embed_field2d.csv");
    write_field_csv(path, f);
    GridField g = read_field_csv(path);
    CHECK(g.ny == 3);
    CHECK(g.values == f.values);
    CHECK(g.dy == f.dy);
    CHECK(read_file(path).substr(0, 12) == std::string("x,y,t,value\n"));
    std::filesystem::remove(path);
  }
}

TEST_CASE("read_csv_values returns the last column") {
  auto path = tmp_path("pde_embed_cols.csv");
  atomic_write_file(path, "a,b,c\n1,2,3\n4,5,6.5\n");
  CHECK(read_csv_values(path) == std::vector<double>{3.0, 6.5});
  std::filesystem::remove(path);
}
