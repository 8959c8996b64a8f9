#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wikigeo/coordinate.hpp"
#include "wikigeo/dump_ingest.hpp"
#include "wikigeo/span.hpp"

namespace wikigeo {

enum class AnnotationSource { kHyperlink, kTitleMatch };

std::string_view to_string(AnnotationSource source);
std::optional<AnnotationSource> annotation_source_from_string(
    std::string_view name);

// One located expression: where it sits in the article text, its exact
// surface form, and the coordinate assigned to it.
struct LocationAnnotation {
  Span span;  // code points into the article text, end-exclusive
  std::string notation;
  Coordinate coordinate;
  AnnotationSource source = AnnotationSource::kHyperlink;
  friend bool operator==(const LocationAnnotation&,
                         const LocationAnnotation&) = default;
};

struct AnnotatedArticle {
  std::string title;
  std::uint64_t page_id = 0;
  std::string text;  // UTF-8, already normalized
  Coordinate article_coordinate;
  std::vector<LocationAnnotation> annotations;  // sorted by span start
};

// Match strings derived from a title, longest first: the full title, the
// title without its first parenthetical, and that without its first comma
// tail ("Melbourne, Ontario" also matches as plain "Melbourne").
std::vector<std::string> title_variants(std::string_view title);

// Links whose target has an indexed coordinate become annotations carrying
// that coordinate; the rest are dropped (they point at non-location
// articles) and only counted.
std::vector<LocationAnnotation> annotate_hyperlinks(
    const std::u32string& text, const std::vector<TextLink>& links,
    const CoordinateIndex& index, std::uint64_t* links_unindexed = nullptr);

// Scans left to right for unlinked occurrences of any title variant.
// Longest variant wins at each offset; matches are case-sensitive, must sit
// on word boundaries (no letter or digit adjacent), and may not overlap the
// occupied spans or each other. Each match carries the article coordinate.
std::vector<LocationAnnotation> annotate_title_matches(
    const std::u32string& text, std::string_view title,
    const Coordinate& article_coordinate, const std::vector<Span>& occupied);

enum class AnnotateStatus {
  kAnnotated,
  kSkippedNoCoordinate,  // article itself has no coordinate: not corpus-worthy
  kFailed,               // markup did not extract; see error
};

struct AnnotateResult {
  AnnotateStatus status = AnnotateStatus::kFailed;
  AnnotatedArticle article;  // meaningful only when kAnnotated
  std::string error;
  std::uint64_t links_total = 0;
  std::uint64_t links_unindexed = 0;
};

AnnotateResult annotate_article(const RawArticle& raw,
                                const CoordinateIndex& index);

}  // namespace wikigeo
