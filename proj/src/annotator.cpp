#include "wikigeo/annotator.hpp"

#include <algorithm>

#include "wikigeo/errors.hpp"
#include "wikigeo/unicode.hpp"

namespace wikigeo {

std::string_view to_string(AnnotationSource source) {
  return source == AnnotationSource::kHyperlink ? "hyperlink" : "title_match";
}

std::optional<AnnotationSource> annotation_source_from_string(
    std::string_view name) {
  if (name == "hyperlink") return AnnotationSource::kHyperlink;
  if (name == "title_match") return AnnotationSource::kTitleMatch;
  return std::nullopt;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) {
    s.remove_suffix(1);
  }
  return s;
}

std::string strip_parenthetical(std::string_view title) {
  std::size_t open = title.find('(');
  if (open == std::string_view::npos) return std::string(title);
  std::size_t close = title.find(')', open + 1);
  std::string_view left = trim(title.substr(0, open));
  std::string_view right = close == std::string_view::npos
                               ? std::string_view{}
                               : trim(title.substr(close + 1));
  std::string out(left);
  if (!left.empty() && !right.empty() && right.front() != ',' &&
      right.front() != ';' && right.front() != '.') {
    out += ' ';
  }
  out += right;
  return out;
}

std::string strip_comma_tail(std::string_view title) {
  std::size_t comma = title.find(',');
  if (comma == std::string_view::npos) return std::string(title);
  return std::string(trim(title.substr(0, comma)));
}

}  // namespace

std::vector<std::string> title_variants(std::string_view title) {
  std::vector<std::string> variants;
  auto push = [&variants](std::string v) {
    if (v.empty()) return;
    if (std::find(variants.begin(), variants.end(), v) == variants.end()) {
      variants.push_back(std::move(v));
    }
  };
  std::string full(trim(title));
  std::string no_paren = strip_parenthetical(full);
  std::string no_comma = strip_comma_tail(no_paren);
  push(full);
  push(no_paren);
  push(no_comma);
  std::stable_sort(variants.begin(), variants.end(),
                   [](const std::string& a, const std::string& b) {
                     return a.size() > b.size();
                   });
  return variants;
}

std::vector<LocationAnnotation> annotate_hyperlinks(
    const std::u32string& text, const std::vector<TextLink>& links,
    const CoordinateIndex& index, std::uint64_t* links_unindexed) {
  std::vector<LocationAnnotation> annotations;
  for (const TextLink& link : links) {
    std::optional<Coordinate> coordinate = index.find(link.target_title);
    if (!coordinate) {
      if (links_unindexed) ++*links_unindexed;
      continue;
    }
    LocationAnnotation annotation;
    annotation.span = link.span;
    annotation.notation = uni::to_utf8(
        text.substr(link.span.begin, link.span.length()));
    annotation.coordinate = *coordinate;
    annotation.source = AnnotationSource::kHyperlink;
    annotations.push_back(std::move(annotation));
  }
  return annotations;
}

std::vector<LocationAnnotation> annotate_title_matches(
    const std::u32string& text, std::string_view title,
    const Coordinate& article_coordinate, const std::vector<Span>& occupied) {
  // Variants are matched against normalized text, so normalize them too.
  std::vector<std::u32string> variants;
  for (const std::string& v : title_variants(title)) {
    std::u32string v32 = uni::to_utf32(uni::normalize_text(v));
    if (v32.empty()) continue;
    if (std::find(variants.begin(), variants.end(), v32) == variants.end()) {
      variants.push_back(std::move(v32));
    }
  }
  std::stable_sort(variants.begin(), variants.end(),
                   [](const std::u32string& a, const std::u32string& b) {
                     return a.size() > b.size();
                   });

  auto overlaps_occupied = [&occupied](const Span& span) {
    auto it = std::lower_bound(
        occupied.begin(), occupied.end(), span,
        [](const Span& a, const Span& b) { return a.end <= b.begin; });
    return it != occupied.end() && it->overlaps(span);
  };

  std::vector<LocationAnnotation> matches;
  std::size_t i = 0;
  while (i < text.size()) {
    bool accepted = false;
    for (const std::u32string& v : variants) {
      if (i + v.size() > text.size()) continue;
      if (text.compare(i, v.size(), v) != 0) continue;
      bool boundary_left = i == 0 || !uni::is_letter_or_digit(text[i - 1]);
      bool boundary_right = i + v.size() == text.size() ||
                            !uni::is_letter_or_digit(text[i + v.size()]);
      if (!boundary_left || !boundary_right) continue;
      Span span{i, i + v.size()};
      if (overlaps_occupied(span)) continue;
      LocationAnnotation annotation;
      annotation.span = span;
      annotation.notation = uni::to_utf8(v);
      annotation.coordinate = article_coordinate;
      annotation.source = AnnotationSource::kTitleMatch;
      matches.push_back(std::move(annotation));
      i = span.end;
      accepted = true;
      break;
    }
    if (!accepted) ++i;
  }
  return matches;
}

AnnotateResult annotate_article(const RawArticle& raw,
                                const CoordinateIndex& index) {
  AnnotateResult result;
  std::optional<Coordinate> coordinate = index.find(raw.title);
  if (!coordinate) {
    result.status = AnnotateStatus::kSkippedNoCoordinate;
    return result;
  }
  ExtractedText extracted;
  try {
    extracted = html_to_text_with_links(raw.html);
  } catch (const ExtractError& e) {
    result.status = AnnotateStatus::kFailed;
    result.error = e.what();
    return result;
  }
  result.links_total = extracted.links.size();

  std::u32string text32 = uni::to_utf32(extracted.text);
  std::vector<LocationAnnotation> hyperlinks = annotate_hyperlinks(
      text32, extracted.links, index, &result.links_unindexed);
  std::vector<Span> occupied;
  occupied.reserve(hyperlinks.size());
  for (const LocationAnnotation& a : hyperlinks) occupied.push_back(a.span);
  std::vector<LocationAnnotation> title_matches = annotate_title_matches(
      text32, raw.title, *coordinate, occupied);

  AnnotatedArticle article;
  article.title = raw.title;
  article.page_id = raw.page_id;
  article.text = std::move(extracted.text);
  article.article_coordinate = *coordinate;
  article.annotations.reserve(hyperlinks.size() + title_matches.size());
  std::merge(hyperlinks.begin(), hyperlinks.end(), title_matches.begin(),
             title_matches.end(), std::back_inserter(article.annotations),
             [](const LocationAnnotation& a, const LocationAnnotation& b) {
               return a.span.begin < b.span.begin;
             });
  result.status = AnnotateStatus::kAnnotated;
  result.article = std::move(article);
  return result;
}

}  // namespace wikigeo
