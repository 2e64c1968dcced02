#pragma once

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace pforest {

// Neumaier compensated summation. Bit-reproducibility in this library comes
// from accumulating in fixed canonical orders; the compensation keeps those
// sums accurate to well below one ulp of the true value.
class StableSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  void subtract(double x) { add(-x); }
  double value() const { return sum_ + comp_; }
  void reset() { sum_ = comp_ = 0.0; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// base^exp by left-to-right multiplication; fixed evaluation order keeps the
// result reproducible (no libm pow).
inline double pow_int(double base, int exp) {
  double r = 1.0;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

inline double mean_of(const std::vector<double>& v) {
  StableSum s;
  for (double x : v) s.add(x);
  return s.value() / static_cast<double>(v.size());
}

// Sample standard deviation (n-1 denominator).
inline double sample_sd(const std::vector<double>& v) {
  const double m = mean_of(v);
  StableSum s;
  for (double x : v) s.add((x - m) * (x - m));
  return std::sqrt(s.value() / static_cast<double>(v.size() - 1));
}

// Shortest round-trip decimal form; parsing it back recovers the exact bits.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline bool parse_double(std::string_view text, double& out) {
  const char* first = text.data();
  const char* last = text.data() + text.size();
  const auto res = std::from_chars(first, last, out);
  return res.ec == std::errc() && res.ptr == last;
}

// Validation failures (bad flags, malformed configs): CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Data or runtime failures (unreadable files, bad cells): CLI exit code 3.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pforest
