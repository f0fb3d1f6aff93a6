#ifndef BMMIX_LOCATION_HPP
#define BMMIX_LOCATION_HPP

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include "bmmix/common.hpp"

namespace bmmix {

// A point in the q-dimensional input space. For the nuclear case q = 2 and
// the coordinates are (Z, N). Coordinates compare exactly (no tolerance);
// canonical parsing makes that safe for the integer-valued tables we read.
struct Location {
  std::vector<double> coords;

  Location() = default;
  Location(std::initializer_list<double> c) : coords(c) { validate(); }
  explicit Location(std::vector<double> c) : coords(std::move(c)) { validate(); }
  static Location zn(double z, double n) { return Location{z, n}; }

  void validate() const {
    require(!coords.empty(), "Location: q >= 1 required");
    for (double c : coords) require(std::isfinite(c), "Location: coordinates must be finite");
  }

  std::size_t dim() const { return coords.size(); }
  double operator[](std::size_t i) const { return coords[i]; }
  double z() const { return coords.at(0); }
  double n() const { return coords.at(1); }

  bool operator==(const Location& o) const { return coords == o.coords; }

  std::string str() const {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < coords.size(); ++i) {
      if (i) os << ",";
      os << coords[i];
    }
    os << ")";
    return os.str();
  }
};

struct LocationHash {
  std::size_t operator()(const Location& loc) const {
    std::size_t h = 0xcbf29ce484222325ULL;
    for (double c : loc.coords) {
      if (c == 0.0) c = 0.0;  // normalize -0.0
      std::size_t bits = std::hash<double>{}(c);
      h ^= bits + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return h;
  }
};

inline double sq_distance_coord(const Location& a, const Location& b, std::size_t i) {
  const double d = a[i] - b[i];
  return d * d;
}

}  // namespace bmmix

#endif  // BMMIX_LOCATION_HPP
