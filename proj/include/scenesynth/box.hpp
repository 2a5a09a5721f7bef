#pragma once

#include <algorithm>
#include <compare>
#include <ostream>

namespace scenesynth {

/// Continuous axis-aligned rectangle [u_min, u_max] x [v_min, v_max] in pixels.
struct BoxF {
  double u_min = 0.0;
  double v_min = 0.0;
  double u_max = 0.0;
  double v_max = 0.0;

  double width() const { return u_max - u_min; }
  double height() const { return v_max - v_min; }
  friend constexpr bool operator==(const BoxF&, const BoxF&) = default;
};

/// Inclusive integer pixel rectangle: pixels x_min..x_max, y_min..y_max.
struct BoxI {
  int x_min = 0;
  int y_min = 0;
  int x_max = 0;
  int y_max = 0;

  int width() const { return x_max - x_min + 1; }
  int height() const { return y_max - y_min + 1; }
  bool contains(const BoxI& o) const {
    return o.x_min >= x_min && o.y_min >= y_min && o.x_max <= x_max && o.y_max <= y_max;
  }
  BoxF to_continuous() const { return {double(x_min), double(y_min), double(x_max), double(y_max)}; }

  friend constexpr auto operator<=>(const BoxI&, const BoxI&) = default;
};

inline BoxI box_union(const BoxI& a, const BoxI& b) {
  return {std::min(a.x_min, b.x_min), std::min(a.y_min, b.y_min), std::max(a.x_max, b.x_max),
          std::max(a.y_max, b.y_max)};
}

inline std::ostream& operator<<(std::ostream& os, const BoxI& b) {
  return os << '(' << b.x_min << ',' << b.y_min << ',' << b.x_max << ',' << b.y_max << ')';
}
inline std::ostream& operator<<(std::ostream& os, const BoxF& b) {
  return os << '(' << b.u_min << ',' << b.v_min << ',' << b.u_max << ',' << b.v_max << ')';
}

}  // namespace scenesynth
