#pragma once

#include "opsplit/field.hpp"

#include <charconv>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace opsplit {

/// Coefficient map keyed by canonical coefficient name (see physics.hpp).
using CoefficientMap = std::map<std::string, double>;

/// Shortest decimal text that reads back to the same double.
inline std::string format_number(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

/// name=value pairs joined by ';', e.g. "D=0.3;c=0.5".
inline std::string format_coefficients(const CoefficientMap& mu) {
  std::string out;
  for (const auto& [name, value] : mu) {
    if (!out.empty()) out += ';';
    out += name + '=' + format_number(value);
  }
  return out;
}

/// Time-ordered frames with uniform spacing plus generation metadata.
struct Trajectory {
  std::vector<Field> frames;
  double dt = 0.0;
  CoefficientMap mu;
  std::uint64_t seed = 0;
  std::string generator;
  std::map<std::string, std::string> solver_settings;

  std::size_t size() const { return frames.size(); }
  const Grid& grid() const { return frames.front().grid(); }
  int channels() const { return frames.front().channels(); }

  void validate() const {
    require(frames.size() >= 2, "trajectory: needs at least two frames");
    require(std::isfinite(dt) && dt > 0.0, "trajectory: dt must be positive");
    for (const auto& f : frames)
      require(f.same_shape(frames.front()), "trajectory: frames do not share grid and channels");
  }
};

}  // namespace opsplit
