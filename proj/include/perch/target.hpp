#pragma once

#include <array>
#include <optional>
#include <string>

#include "perch/error.hpp"
#include "perch/geometry.hpp"

namespace perch {

enum class MarkerDictionary { kDict4x4_100, kArucoOriginal };

inline const char *to_string(MarkerDictionary d) {
  return d == MarkerDictionary::kDict4x4_100 ? "DICT_4X4_100" : "DICT_ARUCO_ORIGINAL";
}

// Target frame: origin at the shared marker center, x to the right and y
// down as seen by a camera looking at the printed face, z pointing away from
// that camera. A fronto-parallel camera therefore sees the target with
// rotation = identity. Corners run top-left, top-right, bottom-right,
// bottom-left, i.e. clockwise in the image like ArUco.
struct MarkerSpec {
  int id = 0;
  MarkerDictionary dictionary = MarkerDictionary::kDict4x4_100;
  double side = 0.0;  // meters
  std::array<Vec3, 4> corner_points{};
};

inline std::array<Vec3, 4> square_corners(double side) {
  const double h = 0.5 * side;
  return {Vec3(-h, -h, 0.0), Vec3(h, -h, 0.0), Vec3(h, h, 0.0), Vec3(-h, h, 0.0)};
}

inline MarkerSpec make_marker(int id, MarkerDictionary dict, double side) {
  if (!(side > 0.0) || !std::isfinite(side)) throw Error(ErrorCode::kInvalidArgument, "marker side must be positive");
  return {id, dict, side, square_corners(side)};
}

/// Large outer marker (M1) with a small marker (M2) printed at its center.
struct PerchingTarget {
  MarkerSpec large;
  MarkerSpec small;

  void validate() const {
    if (!(large.side > small.side)) throw Error(ErrorCode::kInvalidArgument, "target: large side must exceed small side");
    if (large.id == small.id) throw Error(ErrorCode::kInvalidArgument, "target: marker ids must differ");
  }
};

inline PerchingTarget make_target(int large_id, double large_side, int small_id, double small_side) {
  PerchingTarget t{make_marker(large_id, MarkerDictionary::kDict4x4_100, large_side),
                   make_marker(small_id, MarkerDictionary::kArucoOriginal, small_side)};
  t.validate();
  return t;
}

/// 150 mm marker id 997 (4x4_100) with a 25 mm marker id 5 (ARUCO_ORIGINAL).
inline PerchingTarget default_target() { return make_target(997, 0.150, 5, 0.025); }

inline std::optional<MarkerSpec> marker_by_id(const PerchingTarget &t, int id) {
  if (id == t.large.id) return t.large;
  if (id == t.small.id) return t.small;
  return std::nullopt;
}

}  // namespace perch
