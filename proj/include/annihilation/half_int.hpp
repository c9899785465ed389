#pragma once

#include <compare>
#include <stdexcept>
#include <string>

namespace annihilation {

/// Non-negative multiple of 1/2, stored as its doubled numerator.
///
/// Moments are indexed by k with M_k = \int f |xi|^{2k}; k runs over
/// half-integers so the odd powers of |xi| are reachable exactly.
class HalfInt {
 public:
  constexpr HalfInt() = default;
  constexpr explicit HalfInt(int twice) : twice_(twice) {}

  static constexpr HalfInt whole(int k) { return HalfInt(2 * k); }
  static HalfInt from_double(double k) {
    const double t = 2.0 * k;
    const int r = static_cast<int>(t + (t >= 0 ? 0.5 : -0.5));
    if (t - r > 1e-9 || r - t > 1e-9)
      throw std::invalid_argument("not a half-integer: " + std::to_string(k));
    return HalfInt(r);
  }

  constexpr int twice() const { return twice_; }
  constexpr double value() const { return 0.5 * twice_; }
  constexpr bool is_integer() const { return twice_ % 2 == 0; }

  constexpr HalfInt operator+(HalfInt o) const { return HalfInt(twice_ + o.twice_); }
  constexpr HalfInt operator-(HalfInt o) const { return HalfInt(twice_ - o.twice_); }
  constexpr auto operator<=>(const HalfInt&) const = default;

  /// "3/2", "2", "1/2".
  std::string str() const {
    return is_integer() ? std::to_string(twice_ / 2) : std::to_string(twice_) + "/2";
  }

 private:
  int twice_ = 0;
};

namespace literals {
constexpr HalfInt operator""_hk(unsigned long long twice) { return HalfInt(static_cast<int>(twice)); }
}  // namespace literals

}  // namespace annihilation
