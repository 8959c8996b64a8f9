#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "wikigeo/coordinate.hpp"
#include "wikigeo/diagnostics.hpp"
#include "wikigeo/io.hpp"

namespace wikigeo {

struct GazetteerEntry {
  std::uint64_t geoname_id = 0;
  std::string name;
  std::vector<std::string> alternate_names;  // no empty strings
  Coordinate coordinate;
};

// Familiarity proxy: how many alternate names an entry has.
inline std::size_t alternate_name_count(const GazetteerEntry& entry) {
  return entry.alternate_names.size();
}

// Name-keyed candidate store loaded from the GeoNames main table.
// Immutable after load; concurrent lookups are safe.
class Gazetteer {
 public:
  // Tab-separated lines; columns used: 0 geonameid, 1 name, 3 alternate
  // names (comma-separated), 4 latitude, 5 longitude. Lines that do not
  // parse are skipped with a diagnostic; a repeated geonameid is fatal.
  static Gazetteer load_geonames(io::LineSource& lines,
                                 Diagnostics* diagnostics = nullptr);

  // All entries whose primary or alternate name equals the query under
  // normalize_name, ordered by descending alternate-name count, ties by
  // ascending geoname_id. The order is the familiarity ranking: the first
  // candidate is the most familiar reading of the name.
  std::vector<const GazetteerEntry*> lookup(std::string_view name) const;

  const std::vector<GazetteerEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  // NFC, apostrophe mapping, case fold: the one canonical key form shared
  // with the annotator so corpus notations and gazetteer names align.
  static std::string normalize_name(std::string_view name);

 private:
  std::vector<GazetteerEntry> entries_;
  std::unordered_map<std::string, std::vector<std::uint32_t>> index_;
};

}  // namespace wikigeo
