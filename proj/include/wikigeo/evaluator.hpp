#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "wikigeo/coordinate.hpp"
#include "wikigeo/io.hpp"

namespace wikigeo {

// Great-circle distance on a sphere of mean radius 6371.0088 km.
double haversine_km(const Coordinate& a, const Coordinate& b);

struct AccuracyPoint {
  double tolerance_km = 0.0;
  double accuracy = 0.0;  // hits / n_scored; 0 when nothing was scored
  std::uint64_t n_scored = 0;
};

// Fraction of predictions within tolerance_km of gold (inclusive).
// Unresolved predictions (empty optional) count as misses, not exclusions.
// Throws EvalError when the lists differ in length.
AccuracyPoint accuracy_at(std::span<const std::optional<Coordinate>> predicted,
                          std::span<const Coordinate> gold,
                          double tolerance_km);

// One point per tolerance; tolerances must be strictly ascending.
std::vector<AccuracyPoint> accuracy_curve(
    std::span<const std::optional<Coordinate>> predicted,
    std::span<const Coordinate> gold, std::span<const double> tolerances_km);

// Plot-ready TSV: header line, then tolerance_km, accuracy, n_scored.
void write_accuracy_tsv(const std::vector<AccuracyPoint>& curve,
                        io::LineSink& sink);

}  // namespace wikigeo
