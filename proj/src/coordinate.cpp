#include "wikigeo/coordinate.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace wikigeo {

bool coordinate_in_range(double lat, double lon) {
  return std::isfinite(lat) && std::isfinite(lon) && lat >= -90.0 &&
         lat <= 90.0 && lon >= -180.0 && lon <= 180.0;
}

QuantizedCoordinate quantize(const Coordinate& c) {
  return {std::llround(c.lat * 1e5), std::llround(c.lon * 1e5)};
}

std::string format_degrees(double deg) {
  long long q = std::llround(deg * 1e5);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%lld.%05lld", q < 0 ? "-" : "",
                std::llabs(q) / 100000, std::llabs(q) % 100000);
  return buf;
}

std::optional<double> parse_degrees(std::string_view s) {
  if (s.empty()) return std::nullopt;
  std::string tmp(s);
  char* end = nullptr;
  double v = std::strtod(tmp.c_str(), &end);
  if (end != tmp.c_str() + tmp.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace wikigeo
