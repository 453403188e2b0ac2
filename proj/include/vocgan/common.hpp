#pragma once

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>

namespace vocgan {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Tensor/axis mismatches. Message names the offending axis.
struct ShapeError : Error {
  using Error::Error;
};

// Invalid model or training configuration.
struct ConfigError : Error {
  using Error::Error;
};

// API misuse: missing grad, non-scalar loss, negative scale index.
struct ContractError : Error {
  using Error::Error;
};

// Math domain violations (log of non-positive value, sqrt of negative).
struct DomainError : Error {
  using Error::Error;
};

// Bad input data: file formats, sample rates, empty datasets, I/O.
struct DataError : Error {
  using Error::Error;
};

// Non-finite values where training must abort.
struct NumericError : Error {
  using Error::Error;
};

namespace detail {
inline void str_append(std::ostringstream&) {}
template <typename A, typename... Rest>
void str_append(std::ostringstream& os, const A& a, const Rest&... rest) {
  os << a;
  str_append(os, rest...);
}
}  // namespace detail

template <typename... Args>
std::string strcat_(const Args&... args) {
  std::ostringstream os;
  detail::str_append(os, args...);
  return os.str();
}

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

}  // namespace vocgan
