#include <doctest.h>

#include <array>
#include <cmath>
#include <filesystem>
#include <set>

#include "kgprompt/error.hpp"
#include "kgprompt/util.hpp"

using namespace kgprompt;

TEST_SUITE("util") {
  TEST_CASE("sha256 matches published test vectors") {
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  }

  TEST_CASE("select_subset returns short lists unchanged") {
    std::vector<std::string> items{"a", "b"};
    CHECK(select_subset(items, 5, 203) == items);
    CHECK(select_subset(items, 2, 203) == items);
    CHECK(select_subset(items, 0, 203).empty());
  }

  TEST_CASE("select_subset is deterministic and order preserving") {
    std::vector<int> items(30);
    for (int i = 0; i < 30; ++i) items[i] = i * 7;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      auto a = select_subset(items, 6, seed);
      CHECK(a == select_subset(items, 6, seed));
      REQUIRE(a.size() == 6);
      CHECK(std::is_sorted(a.begin(), a.end()));
      CHECK(std::set<int>(a.begin(), a.end()).size() == 6);
    }
  }

  TEST_CASE("1-of-4 draws are uniform within three sigma") {
    std::vector<char> items{'a', 'b', 'c', 'd'};
    std::array<int, 4> counts{};
    const int draws = 10'000;
    for (int s = 0; s < draws; ++s) counts[select_subset(items, 1, static_cast<std::uint64_t>(s))[0] - 'a']++;
    const double sigma = std::sqrt(draws * 0.25 * 0.75);
    for (int c : counts) CHECK(std::abs(c - 2500) <= 3 * sigma);
  }

  TEST_CASE("sample_indices draws every m-subset of a small set") {
    std::set<std::vector<std::size_t>> seen;
    for (std::uint64_t s = 0; s < 2000; ++s) seen.insert(sample_indices(5, 2, s));
    CHECK(seen.size() == 10);
  }

  TEST_CASE("uniform_below stays in range") {
    std::mt19937_64 rng(1);
    for (std::uint64_t bound : {1ULL, 2ULL, 3ULL, 1000ULL, (1ULL << 63) + 5}) {
      for (int i = 0; i < 200; ++i) CHECK(uniform_below(rng, bound) < bound);
    }
  }

  TEST_CASE("derive_seed separates keys") {
    CHECK(derive_seed(203, {"a", "b"}) == derive_seed(203, {"a", "b"}));
    CHECK(derive_seed(203, {"a", "b"}) != derive_seed(203, {"ab"}));
    CHECK(derive_seed(203, {"a"}) != derive_seed(204, {"a"}));
  }

  TEST_CASE("utf8 offsets count code points") {
    std::string s = "caf\xC3\xA9 \xE2\x86\x92 x";
    CHECK(utf8_length(s) == 8);
    CHECK(utf8_byte_offset(s, 4) == 5);
    CHECK(utf8_byte_offset(s, 8) == s.size());
    CHECK_THROWS_AS(utf8_byte_offset(s, 9), Error);
  }

  TEST_CASE("split_whitespace and join") {
    auto parts = split_whitespace("  a\tb \n c  ");
    REQUIRE(parts.size() == 3);
    CHECK(parts[2] == "c");
    CHECK(join({"x", "y", "z"}, ", ") == "x, y, z");
    CHECK(join({}, ", ").empty());
  }

  TEST_CASE("atomic write round trips") {
    auto dir = std::filesystem::temp_directory_path() / "kgprompt_util_test";
    std::filesystem::remove_all(dir);
    write_file_atomic(dir / "sub" / "f.txt", "hello\nworld\n");
    CHECK(read_file(dir / "sub" / "f.txt") == "hello\nworld\n");
    std::vector<std::string> lines;
    for_each_line(dir / "sub" / "f.txt", [&](std::string_view l, std::size_t n) {
      lines.emplace_back(l);
      CHECK(n == lines.size());
    });
    CHECK(lines == std::vector<std::string>{"hello", "world"});
    CHECK_THROWS_AS(read_file(dir / "missing"), Error);
    std::filesystem::remove_all(dir);
  }
}
