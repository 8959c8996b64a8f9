#include "wikigeo/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "wikigeo/errors.hpp"

namespace wikigeo {

namespace {

constexpr double kEarthRadiusKm = 6371.0088;
constexpr double kPi = 3.14159265358979323846;

double radians(double degrees) { return degrees * kPi / 180.0; }

}  // namespace

double haversine_km(const Coordinate& a, const Coordinate& b) {
  double lat1 = radians(a.lat);
  double lat2 = radians(b.lat);
  double dlat = lat2 - lat1;
  double dlon = radians(b.lon - a.lon);
  double s1 = std::sin(dlat / 2.0);
  double s2 = std::sin(dlon / 2.0);
  double h = s1 * s1 + std::cos(lat1) * std::cos(lat2) * s2 * s2;
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

AccuracyPoint accuracy_at(std::span<const std::optional<Coordinate>> predicted,
                          std::span<const Coordinate> gold,
                          double tolerance_km) {
  if (predicted.size() != gold.size()) {
    throw EvalError("prediction/gold size mismatch: " +
                    std::to_string(predicted.size()) + " vs " +
                    std::to_string(gold.size()));
  }
  AccuracyPoint point;
  point.tolerance_km = tolerance_km;
  point.n_scored = predicted.size();
  if (predicted.empty()) return point;
  std::uint64_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (!predicted[i]) continue;  // unresolved scores as a miss
    if (haversine_km(*predicted[i], gold[i]) <= tolerance_km) ++hits;
  }
  point.accuracy =
      static_cast<double>(hits) / static_cast<double>(point.n_scored);
  return point;
}

std::vector<AccuracyPoint> accuracy_curve(
    std::span<const std::optional<Coordinate>> predicted,
    std::span<const Coordinate> gold, std::span<const double> tolerances_km) {
  for (std::size_t i = 1; i < tolerances_km.size(); ++i) {
    if (!(tolerances_km[i - 1] < tolerances_km[i])) {
      throw EvalError("tolerances must be strictly ascending");
    }
  }
  std::vector<AccuracyPoint> curve;
  curve.reserve(tolerances_km.size());
  for (double tolerance : tolerances_km) {
    curve.push_back(accuracy_at(predicted, gold, tolerance));
  }
  return curve;
}

void write_accuracy_tsv(const std::vector<AccuracyPoint>& curve,
                        io::LineSink& sink) {
  sink.write("tolerance_km\taccuracy\tn_scored");
  char buf[96];
  for (const AccuracyPoint& point : curve) {
    std::snprintf(buf, sizeof(buf), "%.3f\t%.6f\t%llu", point.tolerance_km,
                  point.accuracy,
                  static_cast<unsigned long long>(point.n_scored));
    sink.write(buf);
  }
}

}  // namespace wikigeo
