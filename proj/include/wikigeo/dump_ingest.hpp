#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "wikigeo/coordinate.hpp"
#include "wikigeo/diagnostics.hpp"
#include "wikigeo/io.hpp"
#include "wikigeo/span.hpp"

namespace wikigeo {

struct RawArticle {
  std::string title;
  std::uint64_t page_id = 0;
  std::string html;
};

// Field mapping of a line-delimited dump. kFixture is the native schema,
// the other two mirror the public dump layouts they are named after.
enum class DumpFormat { kFixture, kEnterprise, kCirrus };

std::optional<DumpFormat> dump_format_from_string(std::string_view name);

// Index key form: underscores to spaces, whitespace runs collapsed to one
// space, trimmed, NFC. Hrefs use underscores where titles use spaces, so
// both sides must pass through this before lookup.
std::string normalize_title(std::string_view title);

// Pulls articles out of a dump one line at a time. Malformed lines are
// reported to diagnostics and skipped; only unreadable input is fatal.
class ArticleStream {
 public:
  ArticleStream(std::unique_ptr<io::LineSource> lines, DumpFormat format,
                Diagnostics* diagnostics = nullptr);

  std::optional<RawArticle> next();

  std::uint64_t lines_read() const { return lines_read_; }
  std::uint64_t lines_skipped() const { return lines_skipped_; }

 private:
  std::unique_ptr<io::LineSource> lines_;
  DumpFormat format_;
  Diagnostics* diagnostics_;
  std::uint64_t lines_read_ = 0;
  std::uint64_t lines_skipped_ = 0;
};

// Immutable after build; keyed by normalize_title. First insert wins.
class CoordinateIndex {
 public:
  bool insert(std::string_view title, const Coordinate& coordinate);
  std::optional<Coordinate> find(std::string_view title) const;

  std::size_t size() const { return entries_.size(); }
  std::uint64_t duplicates() const { return duplicates_; }
  const std::unordered_map<std::string, Coordinate>& entries() const {
    return entries_;
  }

  // First-wins union: existing keys keep their coordinate.
  void merge_from(const CoordinateIndex& other);

 private:
  std::unordered_map<std::string, Coordinate> entries_;
  std::uint64_t duplicates_ = 0;
};

// Builds the title-to-coordinate map from a coordinate dump. kFixture reads
// {"title","lat","lon"}; any other format reads the search-index layout
// ({"title","coordinates":[{"coord":{"lat","lon"},"primary":...}]}), where
// lines without a "title" key (bulk-action headers) and documents without
// coordinates are passed over silently.
CoordinateIndex build_coordinate_index(io::LineSource& lines,
                                       DumpFormat format,
                                       Diagnostics* diagnostics = nullptr);

struct TextLink {
  Span span;  // code points into the extracted text, end-exclusive
  std::string target_title;
};

struct ExtractedText {
  std::string text;  // UTF-8; all spans over it count code points
  std::vector<TextLink> links;
};

// Flattens article markup to plain text and collects anchor spans.
// Block elements are separated by single newlines; inline tags vanish.
// Visible text is normalized (uni::normalize_text) run by run, before any
// offset is assigned. Anchors whose target leaves the article namespace
// (fragments, schemes, "Name:Space" prefixes) keep their text but produce
// no link. Throws ExtractError on unbalanced anchor tags.
ExtractedText html_to_text_with_links(std::string_view html);

}  // namespace wikigeo
