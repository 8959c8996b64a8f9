#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace wikigeo {

// Geographic point in decimal degrees.
struct Coordinate {
  double lat = 0.0;
  double lon = 0.0;
  friend bool operator==(const Coordinate&, const Coordinate&) = default;
};

// lat in [-90, 90], lon in [-180, 180], both finite.
bool coordinate_in_range(double lat, double lon);

// Equality key for coordinates at 5 fraction digits (~1.1 m).
struct QuantizedCoordinate {
  std::int64_t lat_e5 = 0;
  std::int64_t lon_e5 = 0;
  friend auto operator<=>(const QuantizedCoordinate&,
                          const QuantizedCoordinate&) = default;
};

QuantizedCoordinate quantize(const Coordinate& c);

// Fixed-point decimal with exactly 5 fraction digits, e.g. "42.81667",
// "-110.00000". Agrees with quantize(): formatting then parsing round-trips
// the quantized value.
std::string format_degrees(double deg);

std::optional<double> parse_degrees(std::string_view s);

}  // namespace wikigeo
