#include "wikigeo/corpus.hpp"

#include <algorithm>
#include <set>

#include "json.hpp"
#include "wikigeo/errors.hpp"
#include "wikigeo/unicode.hpp"

namespace wikigeo {

namespace {

using ordered_json = nlohmann::ordered_json;

bool sentence_punct(char32_t cp) {
  return cp == U'.' || cp == U'?' || cp == U'!';
}

}  // namespace

std::vector<Span> segment_sentences(const std::u32string& text) {
  std::vector<Span> sentences;
  std::size_t start = std::u32string::npos;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (start == std::u32string::npos) {
      if (uni::is_space(text[i])) continue;
      start = i;
    }
    if (!sentence_punct(text[i])) continue;
    std::size_t j = i + 1;
    while (j < text.size() && uni::is_space(text[j])) ++j;
    if (j > i + 1 && j < text.size() && uni::is_upper(text[j])) {
      sentences.push_back(Span{start, i + 1});
      start = std::u32string::npos;
      i = j - 1;
    }
  }
  if (start != std::u32string::npos) {
    std::size_t end = text.size();
    while (end > start && uni::is_space(text[end - 1])) --end;
    if (end > start) sentences.push_back(Span{start, end});
  }
  return sentences;
}

std::uint64_t count_tokens(const std::u32string& text) {
  std::uint64_t n = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    if (uni::is_space(text[i])) {
      ++i;
      continue;
    }
    std::size_t begin = i;
    while (i < text.size() && !uni::is_space(text[i])) ++i;
    std::size_t end = i;
    while (begin < end && uni::is_punct(text[begin])) ++begin;
    while (begin < end && uni::is_punct(text[end - 1])) --end;
    if (begin < end) ++n;
  }
  return n;
}

void StatsAccumulator::add(const AnnotatedArticle& article) {
  ++n_articles_;
  std::u32string text32 = uni::to_utf32(article.text);
  n_sentences_ += segment_sentences(text32).size();
  n_tokens_ += count_tokens(text32);
  n_expressions_ += article.annotations.size();
  std::set<std::string_view> unique_here;
  for (const LocationAnnotation& a : article.annotations) {
    unique_here.insert(a.notation);
    ++profiles_[a.notation][quantize(a.coordinate)];
  }
  sum_unique_per_article_ += unique_here.size();
}

void StatsAccumulator::merge_from(const StatsAccumulator& other) {
  n_articles_ += other.n_articles_;
  n_sentences_ += other.n_sentences_;
  n_tokens_ += other.n_tokens_;
  n_expressions_ += other.n_expressions_;
  sum_unique_per_article_ += other.sum_unique_per_article_;
  for (const auto& [notation, counts] : other.profiles_) {
    auto& mine = profiles_[notation];
    for (const auto& [coordinate, count] : counts) {
      mine[coordinate] += count;
    }
  }
}

CorpusStats StatsAccumulator::finalize() const {
  CorpusStats stats;
  stats.n_articles = n_articles_;
  stats.n_sentences = n_sentences_;
  stats.n_tokens = n_tokens_;
  stats.n_expressions = n_expressions_;
  stats.n_unique_notations = profiles_.size();
  for (const auto& [notation, counts] : profiles_) {
    (void)notation;
    if (counts.size() < 2) continue;
    ++stats.n_ambiguous_unique_notations;
    std::uint64_t total = 0;
    std::uint64_t max_count = 0;
    for (const auto& [coordinate, count] : counts) {
      (void)coordinate;
      total += count;
      max_count = std::max(max_count, count);
    }
    std::uint64_t at_max = 0;
    for (const auto& [coordinate, count] : counts) {
      (void)coordinate;
      if (count == max_count) at_max += count;
    }
    stats.n_ambiguous_expressions += total;
    stats.n_recessive_expressions += total - at_max;
  }
  if (stats.n_expressions > 0) {
    stats.ambiguous_expression_fraction =
        static_cast<double>(stats.n_ambiguous_expressions) /
        static_cast<double>(stats.n_expressions);
    stats.recessive_expression_fraction =
        static_cast<double>(stats.n_recessive_expressions) /
        static_cast<double>(stats.n_expressions);
  }
  if (stats.n_unique_notations > 0) {
    stats.ambiguous_unique_fraction =
        static_cast<double>(stats.n_ambiguous_unique_notations) /
        static_cast<double>(stats.n_unique_notations);
  }
  if (stats.n_articles > 0) {
    double articles = static_cast<double>(stats.n_articles);
    stats.per_article_sentences =
        static_cast<double>(stats.n_sentences) / articles;
    stats.per_article_tokens = static_cast<double>(stats.n_tokens) / articles;
    stats.per_article_expressions =
        static_cast<double>(stats.n_expressions) / articles;
    stats.per_article_unique_expressions =
        static_cast<double>(sum_unique_per_article_) / articles;
  }
  return stats;
}

CorpusStats compute_stats(std::span<const AnnotatedArticle> articles) {
  StatsAccumulator accumulator;
  for (const AnnotatedArticle& article : articles) accumulator.add(article);
  return accumulator.finalize();
}

std::string corpus_line(const AnnotatedArticle& article) {
  ordered_json j;
  j["title"] = article.title;
  j["page_id"] = article.page_id;
  j["lat"] = format_degrees(article.article_coordinate.lat);
  j["lon"] = format_degrees(article.article_coordinate.lon);
  j["text"] = article.text;
  ordered_json annotations = ordered_json::array();
  for (const LocationAnnotation& a : article.annotations) {
    ordered_json item;
    item["start"] = a.span.begin;
    item["end"] = a.span.end;
    item["notation"] = a.notation;
    item["lat"] = format_degrees(a.coordinate.lat);
    item["lon"] = format_degrees(a.coordinate.lon);
    item["source"] = to_string(a.source);
    annotations.push_back(std::move(item));
  }
  j["annotations"] = std::move(annotations);
  return j.dump();
}

std::uint64_t write_corpus(std::span<const AnnotatedArticle> articles,
                           io::LineSink& sink) {
  std::uint64_t written = 0;
  for (const AnnotatedArticle& article : articles) {
    sink.write(corpus_line(article));
    ++written;
  }
  return written;
}

namespace {

[[noreturn]] void fail(std::uint64_t line, const std::string& what) {
  throw CorpusError(what, line);
}

Coordinate read_coordinate(const ordered_json& j, std::uint64_t line,
                           const std::string& where) {
  auto lat_it = j.find("lat");
  auto lon_it = j.find("lon");
  if (lat_it == j.end() || lon_it == j.end() || !lat_it->is_string() ||
      !lon_it->is_string()) {
    fail(line, where + ": lat/lon must be decimal strings");
  }
  std::string lat_s = lat_it->get<std::string>();
  std::string lon_s = lon_it->get<std::string>();
  auto lat = parse_degrees(lat_s);
  auto lon = parse_degrees(lon_s);
  if (!lat || !lon) fail(line, where + ": unparsable coordinate");
  if (format_degrees(*lat) != lat_s || format_degrees(*lon) != lon_s) {
    fail(line, where + ": coordinate not in canonical 5-decimal form");
  }
  if (!coordinate_in_range(*lat, *lon)) {
    fail(line, where + ": coordinate out of range");
  }
  return Coordinate{*lat, *lon};
}

}  // namespace

AnnotatedArticle parse_corpus_line(const std::string& line,
                                   std::uint64_t line_number) {
  ordered_json j = ordered_json::parse(line, nullptr,
                                       /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) {
    fail(line_number, "not a JSON object");
  }
  AnnotatedArticle article;
  auto title = j.find("title");
  if (title == j.end() || !title->is_string()) {
    fail(line_number, "missing string field \"title\"");
  }
  article.title = title->get<std::string>();
  auto page_id = j.find("page_id");
  if (page_id == j.end() || !page_id->is_number_unsigned()) {
    fail(line_number, "missing unsigned field \"page_id\"");
  }
  article.page_id = page_id->get<std::uint64_t>();
  article.article_coordinate = read_coordinate(j, line_number, "article");
  auto text = j.find("text");
  if (text == j.end() || !text->is_string()) {
    fail(line_number, "missing string field \"text\"");
  }
  article.text = text->get<std::string>();
  std::u32string text32 = uni::to_utf32(article.text);

  auto annotations = j.find("annotations");
  if (annotations == j.end() || !annotations->is_array()) {
    fail(line_number, "missing array field \"annotations\"");
  }
  QuantizedCoordinate article_q = quantize(article.article_coordinate);
  std::size_t previous_end = 0;
  for (const ordered_json& item : *annotations) {
    if (!item.is_object()) fail(line_number, "annotation is not an object");
    LocationAnnotation a;
    auto start = item.find("start");
    auto end = item.find("end");
    if (start == item.end() || end == item.end() ||
        !start->is_number_unsigned() || !end->is_number_unsigned()) {
      fail(line_number, "annotation start/end must be unsigned");
    }
    a.span.begin = start->get<std::uint64_t>();
    a.span.end = end->get<std::uint64_t>();
    if (a.span.begin >= a.span.end) {
      fail(line_number, "annotation span is empty or inverted");
    }
    if (a.span.end > text32.size()) {
      fail(line_number, "annotation span exceeds text length");
    }
    if (!article.annotations.empty() && a.span.begin < previous_end) {
      fail(line_number, "annotation spans out of order or overlapping");
    }
    auto notation = item.find("notation");
    if (notation == item.end() || !notation->is_string()) {
      fail(line_number, "annotation missing string \"notation\"");
    }
    a.notation = notation->get<std::string>();
    if (uni::to_utf8(text32.substr(a.span.begin, a.span.length())) !=
        a.notation) {
      fail(line_number, "notation does not match text at span [" +
                            std::to_string(a.span.begin) + ", " +
                            std::to_string(a.span.end) + ")");
    }
    a.coordinate = read_coordinate(item, line_number, "annotation");
    auto source = item.find("source");
    if (source == item.end() || !source->is_string()) {
      fail(line_number, "annotation missing string \"source\"");
    }
    auto parsed = annotation_source_from_string(source->get<std::string>());
    if (!parsed) fail(line_number, "unknown annotation source");
    a.source = *parsed;
    if (a.source == AnnotationSource::kTitleMatch &&
        quantize(a.coordinate) != article_q) {
      fail(line_number,
           "title_match coordinate differs from article coordinate");
    }
    previous_end = a.span.end;
    article.annotations.push_back(std::move(a));
  }
  return article;
}

CorpusReader::CorpusReader(std::unique_ptr<io::LineSource> lines)
    : lines_(std::move(lines)) {}

CorpusReader::~CorpusReader() = default;

std::optional<AnnotatedArticle> CorpusReader::next() {
  std::string line;
  while (lines_->next(line)) {
    if (line.empty()) continue;
    return parse_corpus_line(line, lines_->line_number());
  }
  return std::nullopt;
}

std::uint64_t CorpusReader::line_number() const {
  return lines_->line_number();
}

}  // namespace wikigeo
