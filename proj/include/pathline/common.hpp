#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pathline {

inline constexpr std::string_view kToolVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Hashing / digests.
//
// All digests in the toolkit are 64-bit FNV-1a over raw bytes, rendered as 16
// lowercase hex characters in serialized form. Doubles are hashed by their
// IEEE-754 bit patterns, so two states hash equal iff they are bitwise equal.
// ---------------------------------------------------------------------------

class Fnv1a {
 public:
  void update(const void* data, std::size_t size);
  void update(std::string_view s) { update(s.data(), s.size()); }
  void update_u64(std::uint64_t v);
  void update_i64(std::int64_t v) { update_u64(static_cast<std::uint64_t>(v)); }
  void update_double(double v);
  void update_doubles(std::span<const double> v);

  std::uint64_t value() const { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ull;
};

std::string digest_hex(std::uint64_t digest);
std::uint64_t parse_digest_hex(const std::string& hex);

// ---------------------------------------------------------------------------
// Text round-trips and file plumbing.
// ---------------------------------------------------------------------------

// Shortest decimal string that parses back to exactly the same double
// ("1.5", "0.30000000000000004", "-0", "inf" never appears: values must be
// finite).
std::string format_double(double v);
// Strict inverse: the whole token must parse, no trailing junk.
double parse_double(std::string_view s);

// Write-temp-then-rename, so readers never observe a half-written file and
// concurrent writers of distinct paths cannot interleave.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Deterministic random streams.
//
// The engine is std::mt19937_64 (fully specified by the standard), but every
// variate transform is written out here because the standard library's
// distributions are implementation-defined. Streams for distinct purposes are
// derived from a base seed plus a tag, so adding a consumer never shifts the
// draws of another.
// ---------------------------------------------------------------------------

std::uint64_t splitmix64(std::uint64_t x);

// Derived stream seed for (base, tag) and an optional index (e.g. epoch).
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag,
                          std::uint64_t index = 0);

class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1), 53-bit resolution.
  double uniform();
  // Uniform on [lo, hi).
  double uniform(double lo, double hi);
  // Standard normal via Box-Muller; second variate of each pair is cached.
  double normal();
  // Uniform integer in [0, n), rejection sampled (n > 0).
  std::uint64_t index(std::uint64_t n);

  // In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(index(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

}  // namespace pathline
