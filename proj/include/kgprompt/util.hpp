#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace kgprompt {

// Hex-encoded SHA-256 digest.
std::string sha256_hex(std::string_view data);

std::string read_file(const std::filesystem::path& path);

/// Writes through a uniquely named temporary in the same directory and
/// renames it into place, so readers never observe a partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// Calls fn(line, line_number) for every line of a text file. Line numbers
/// start at 1. A trailing '\r' is stripped.
void for_each_line(const std::filesystem::path& path,
                   const std::function<void(std::string_view, std::size_t)>& fn);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t basis = 0xcbf29ce484222325ULL);

std::uint64_t splitmix64(std::uint64_t x);

/// Mixes a base seed with any number of string keys into a generator seed.
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::string_view> keys);

/// Uniform integer in [0, bound) by rejection; std::uniform_int_distribution
/// is implementation-defined, this is not.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound);

/// Fisher-Yates shuffle driven by uniform_below.
template <typename T>
void seeded_shuffle(std::vector<T>& items, std::mt19937_64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    auto j = static_cast<std::size_t>(uniform_below(rng, i));
    std::swap(items[i - 1], items[j]);
  }
}

/// Indices of a uniformly random m-subset of [0, n), ascending. Returns all
/// indices when n <= m.
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t m, std::uint64_t seed);

/// Uniform random m-subset preserving the original relative order;
/// items are returned unchanged when items.size() <= m.
template <typename T>
std::vector<T> select_subset(const std::vector<T>& items, std::size_t m, std::uint64_t seed) {
  if (items.size() <= m) return items;
  std::vector<T> out;
  out.reserve(m);
  for (auto idx : sample_indices(items.size(), m, seed)) out.push_back(items[idx]);
  return out;
}

// UTF-8 helpers; offsets below are code-point offsets.
std::size_t utf8_length(std::string_view text);
/// Byte offset of the given code-point offset; throws InvalidArgument when
/// the offset lies beyond the end of the text.
std::size_t utf8_byte_offset(std::string_view text, std::size_t codepoint_offset);

std::vector<std::string_view> split_whitespace(std::string_view text);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace kgprompt
