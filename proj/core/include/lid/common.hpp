#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace lid {

// Base of every error the library raises.  Subclasses let the CLI map
// failures onto exit codes (usage/config errors vs. runtime failures).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A precondition on an argument was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// A file could not be read/written or has an unexpected layout.
class IoError : public Error {
 public:
  using Error::Error;
};

// Configuration file or command line problem.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Seeded pseudo random source.  Gaussian and uniform draws are computed
// here rather than with <random> distributions so that streams are
// identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  // Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi);
  // Uniform integer in [0, n).
  std::size_t index(std::size_t n);
  double gaussian();

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_[4];
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Derives an independent stream seed from a base seed and a label.
std::uint64_t derive_seed(std::uint64_t base, std::string_view label);

std::uint32_t crc32(std::span<const std::uint8_t> bytes, std::uint32_t init = 0);
std::string hex32(std::uint32_t v);

// Shortest representation that parses back to the same double.
std::string format_real(double v);
double parse_real(std::string_view s);
long long parse_int(std::string_view s);

std::vector<std::string> split(std::string_view s, char sep);
std::string trim(std::string_view s);

// Minimal RFC 4180 helpers; fields containing separators or quotes are quoted.
std::vector<std::string> parse_csv_line(std::string_view line);
std::string csv_escape(std::string_view field);
// Reads a CSV file into rows, skipping blank lines.
std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text(const std::filesystem::path& path, std::string_view text);
std::string read_text(const std::filesystem::path& path);

}  // namespace lid
