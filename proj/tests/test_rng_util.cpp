#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "pde_embed/rng.hpp"
#include "pde_embed/util.hpp"

using namespace pde_embed;

TEST_CASE("rng streams are deterministic and tag-separated") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  CHECK(Rng::derive(1, "points") == Rng::derive(1, "points"));
  CHECK(Rng::derive(1, "points") != Rng::derive(1, "shuffle"));
  CHECK(Rng::derive(1, "points") != Rng::derive(2, "points"));

  Rng c(7);
  for (int i = 0; i < 1000; ++i) {
    double u = c.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    double v = c.uniform(1.0, 2.0);
    CHECK(v >= 1.0);
    CHECK(v < 2.0);
  }
}

TEST_CASE("normal draws have the right first two moments") {
  Rng rng(2718);
  const int n = 200000;
  double sum = 0, sq = 0;
  for (int i = 0; i < n; ++i) {
    double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  double mean = sum / n;
  double var = sq / n - mean * mean;
  CHECK(std::abs(mean) <= 4.0 / std::sqrt(double(n)));
  // var of the sample variance of a normal is ~2/n.
  CHECK(std::abs(var - 1.0) <= 4.0 * std::sqrt(2.0 / double(n)));
}

TEST_CASE("base64 round trip covers all tail lengths") {
  Rng rng(5);
  for (int len : {0, 1, 2, 3, 4, 5, 17, 256, 1000}) {
    std::vector<uint8_t> bytes(len);
    for (auto& x : bytes) x = uint8_t(rng.next_u64());
    auto text = base64_encode(bytes);
    CHECK(base64_decode(text) == bytes);
    CHECK(text.size() % 4 == 0);
  }
  CHECK(base64_encode(std::vector<uint8_t>{'M', 'a', 'n'}) == "TWFu");
  CHECK_THROWS_AS(base64_decode("ab=c"), std::invalid_argument);
  CHECK_THROWS_AS(base64_decode("a"), std::invalid_argument);
}

TEST_CASE("fnv1a64 known vectors") {
  auto hash_str = [](const std::string& s) {
    return fnv1a64(std::span(reinterpret_cast<const uint8_t*>(s.data()), s.size()));
  };
  CHECK(hash_str("") == 0xcbf29ce484222325ull);
  CHECK(hash_str("a") == 0xaf63dc4c8601ec8cull);
  CHECK(hash_str("foobar") == 0x85944171f73967e8ull);
}

TEST_CASE("double byte serialization is little endian and lossless") {
  std::vector<double> vals = {0.0, -0.0, 1.0 / 3.0, -2.5e300, 5e-324,
                              std::numeric_limits<double>::max()};
  auto bytes = doubles_to_bytes(vals);
  REQUIRE(bytes.size() == vals.size() * 8);
  auto back = bytes_to_doubles(bytes);
  REQUIRE(back.size() == vals.size());
  for (size_t i = 0; i < vals.size(); ++i) {
    CHECK(std::memcmp(&back[i], &vals[i], 8) == 0);
  }
  // 1.0 in IEEE little endian.
  auto one = doubles_to_bytes(std::vector<double>{1.0});
  CHECK(one == std::vector<uint8_t>{0, 0, 0, 0, 0, 0, 0xf0, 0x3f});
  CHECK_THROWS(bytes_to_doubles(std::vector<uint8_t>{1, 2, 3}));
}

TEST_CASE("fmt_g17 round trips exactly") {
  for (double v : {1.0 / 3.0, 0.1, 1e-300, 123456.789, -0.0, 2.0}) {
    CHECK(std::stod(fmt_g17(v)) == v);
  }
  CHECK(fmt_g17(2.0) == "2");
}

TEST_CASE("atomic file write and read") {
  namespace fs = std::filesystem;
  auto path = (fs::temp_directory_path() / "pde_embed_util_test.txt").string();
  atomic_write_file(path, "alpha\nbeta");
  CHECK(read_file(path) == "alpha\nbeta");
  atomic_write_file(path, "gamma");
  CHECK(read_file(path) == "gamma");
  fs::remove(path);
  CHECK_THROWS(read_file(path));
  // No stray temp files left behind.
  for (const auto& e : fs::directory_iterator(fs::temp_directory_path())) {
    auto name = e.path().filename().string();
    CHECK(name.find("pde_embed_util_test.txt.") == std::string::npos);
  }
}
