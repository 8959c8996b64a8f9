#include "wikigeo/gazetteer.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <unordered_set>

#include "wikigeo/errors.hpp"
#include "wikigeo/unicode.hpp"

namespace wikigeo {

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.push_back(s.substr(start));
      return parts;
    }
    parts.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) {
    s.remove_suffix(1);
  }
  return s;
}

std::optional<std::uint64_t> parse_id(std::string_view s) {
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
    return std::nullopt;
  }
  return value;
}

std::optional<double> parse_double(std::string_view s) {
  std::string buf(s);
  if (buf.empty()) return std::nullopt;
  char* end = nullptr;
  double value = std::strtod(buf.c_str(), &end);
  if (end != buf.c_str() + buf.size()) return std::nullopt;
  return value;
}

}  // namespace

std::string Gazetteer::normalize_name(std::string_view name) {
  return uni::fold_case(uni::normalize_text(name));
}

Gazetteer Gazetteer::load_geonames(io::LineSource& lines,
                                   Diagnostics* diagnostics) {
  Gazetteer gazetteer;
  std::unordered_set<std::uint64_t> seen_ids;
  auto warn = [&](const char* why) {
    if (diagnostics) {
      diagnostics->warn("gazetteer line " +
                        std::to_string(lines.line_number()) + ": " + why);
    }
  };
  std::string line;
  while (lines.next(line)) {
    if (line.empty()) continue;
    std::vector<std::string_view> cols = split(line, '\t');
    if (cols.size() < 6) {
      warn("fewer than 6 columns");
      continue;
    }
    auto id = parse_id(trim(cols[0]));
    if (!id) {
      warn("unparsable geonameid");
      continue;
    }
    std::string name(trim(cols[1]));
    if (name.empty()) {
      warn("empty name");
      continue;
    }
    auto lat = parse_double(trim(cols[4]));
    auto lon = parse_double(trim(cols[5]));
    if (!lat || !lon || !coordinate_in_range(*lat, *lon)) {
      warn("unparsable or out-of-range coordinate");
      continue;
    }
    if (!seen_ids.insert(*id).second) {
      throw GazetteerError("duplicate geonameid " + std::to_string(*id) +
                           " at line " + std::to_string(lines.line_number()));
    }
    GazetteerEntry entry;
    entry.geoname_id = *id;
    entry.name = std::move(name);
    for (std::string_view alt : split(cols[3], ',')) {
      alt = trim(alt);
      if (!alt.empty()) entry.alternate_names.emplace_back(alt);
    }
    entry.coordinate = Coordinate{*lat, *lon};
    gazetteer.entries_.push_back(std::move(entry));
  }

  for (std::uint32_t i = 0; i < gazetteer.entries_.size(); ++i) {
    const GazetteerEntry& entry = gazetteer.entries_[i];
    gazetteer.index_[normalize_name(entry.name)].push_back(i);
    for (const std::string& alt : entry.alternate_names) {
      gazetteer.index_[normalize_name(alt)].push_back(i);
    }
  }
  for (auto& [name, postings] : gazetteer.index_) {
    (void)name;
    std::sort(postings.begin(), postings.end(),
              [&gazetteer](std::uint32_t a, std::uint32_t b) {
                const GazetteerEntry& ea = gazetteer.entries_[a];
                const GazetteerEntry& eb = gazetteer.entries_[b];
                std::size_t ca = alternate_name_count(ea);
                std::size_t cb = alternate_name_count(eb);
                if (ca != cb) return ca > cb;
                return ea.geoname_id < eb.geoname_id;
              });
    postings.erase(std::unique(postings.begin(), postings.end()),
                   postings.end());
  }
  return gazetteer;
}

std::vector<const GazetteerEntry*> Gazetteer::lookup(
    std::string_view name) const {
  std::vector<const GazetteerEntry*> result;
  auto it = index_.find(normalize_name(name));
  if (it == index_.end()) return result;
  result.reserve(it->second.size());
  for (std::uint32_t i : it->second) result.push_back(&entries_[i]);
  return result;
}

}  // namespace wikigeo
