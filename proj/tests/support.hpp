#pragma once

#include <filesystem>
#include <string>

#include "homog/geometry.hpp"

#ifndef HOMOG_FIXTURE_DIR
#error "HOMOG_FIXTURE_DIR must point at the shipped fixtures"
#endif

namespace testing_support {

inline std::filesystem::path fixture_dir() { return HOMOG_FIXTURE_DIR; }

inline homog::Geometry disk25() {
  homog::GeometrySpec s;
  s.delta = 0.2;
  s.e_shapes.push_back(homog::Disk{{0.5, 0.5}, 0.25});
  return homog::validate(s);
}

inline homog::Geometry slit() {
  homog::GeometrySpec s;
  s.delta = 0.2;
  s.f_curves.push_back(homog::Polyline{{{0.3, 0.5}, {0.7, 0.5}}});
  return homog::validate(s);
}

inline homog::Geometry empty_geometry(double delta = 0.25) {
  homog::GeometrySpec s;
  s.delta = delta;
  return homog::validate(s);
}

}  // namespace testing_support
