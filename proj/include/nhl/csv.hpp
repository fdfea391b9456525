#pragma once

// Minimal CSV writing with round-trip (17 significant digit) numbers.

#include <cmath>
#include <complex>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

namespace nhl {

inline std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::setprecision(17) << x;
  return os.str();
}

inline std::string format_number(std::size_t x) { return std::to_string(x); }
inline std::string format_number(int x) { return std::to_string(x); }
inline std::string format_number(bool x) { return x ? "1" : "0"; }
inline std::string format_number(const std::string& s) { return s; }
inline std::string format_number(const char* s) { return s; }

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& os) : os_(os) {}

  template <class... Ts>
  void row(const Ts&... cells) {
    bool first = true;
    ((os_ << (first ? "" : ",") << format_number(cells), first = false), ...);
    os_ << '\n';
  }

 private:
  std::ostream& os_;
};

// FNV-1a, 64 bit.
inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

}  // namespace nhl
