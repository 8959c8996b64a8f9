#include "wikigeo/dump_ingest.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <string>

#include "json.hpp"
#include "wikigeo/errors.hpp"
#include "wikigeo/unicode.hpp"

namespace wikigeo {

namespace {

using nlohmann::json;

json parse_json_line(const std::string& line) {
  return json::parse(line, nullptr, /*allow_exceptions=*/false);
}

std::optional<std::uint64_t> get_uint(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) return std::nullopt;
  if (it->is_number_unsigned()) return it->get<std::uint64_t>();
  if (it->is_number_integer() && it->get<std::int64_t>() >= 0) {
    return static_cast<std::uint64_t>(it->get<std::int64_t>());
  }
  return std::nullopt;
}

std::optional<std::string> get_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) return std::nullopt;
  return it->get<std::string>();
}

std::optional<double> get_number(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_number()) return std::nullopt;
  return it->get<double>();
}

bool ascii_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

std::string_view trim_ascii(std::string_view s) {
  while (!s.empty() && ascii_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && ascii_space(s.back())) s.remove_suffix(1);
  return s;
}

}  // namespace

std::optional<DumpFormat> dump_format_from_string(std::string_view name) {
  if (name == "fixture") return DumpFormat::kFixture;
  if (name == "enterprise") return DumpFormat::kEnterprise;
  if (name == "cirrus") return DumpFormat::kCirrus;
  return std::nullopt;
}

std::string normalize_title(std::string_view title) {
  std::u32string cps = uni::to_utf32(title);
  std::u32string out;
  out.reserve(cps.size());
  bool pending_space = false;
  for (char32_t cp : cps) {
    if (cp == U'_' || uni::is_space(cp)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(U' ');
      pending_space = false;
    }
    out.push_back(cp);
  }
  return uni::nfc(uni::to_utf8(out));
}

ArticleStream::ArticleStream(std::unique_ptr<io::LineSource> lines,
                             DumpFormat format, Diagnostics* diagnostics)
    : lines_(std::move(lines)), format_(format), diagnostics_(diagnostics) {}

std::optional<RawArticle> ArticleStream::next() {
  std::string line;
  while (lines_->next(line)) {
    ++lines_read_;
    if (trim_ascii(line).empty()) {
      --lines_read_;
      continue;
    }
    auto skip = [&](const char* why) {
      ++lines_skipped_;
      if (diagnostics_) {
        diagnostics_->warn("article dump line " +
                           std::to_string(lines_->line_number()) + ": " + why);
      }
    };
    json j = parse_json_line(line);
    if (j.is_discarded() || !j.is_object()) {
      skip("not a JSON object");
      continue;
    }
    RawArticle article;
    if (format_ == DumpFormat::kFixture) {
      auto title = get_string(j, "title");
      auto page_id = get_uint(j, "page_id");
      auto html = get_string(j, "html");
      if (!title || !page_id || !html) {
        skip("missing or mistyped title/page_id/html");
        continue;
      }
      article.title = *title;
      article.page_id = *page_id;
      article.html = std::move(*html);
    } else {
      auto title = get_string(j, "name");
      auto page_id = get_uint(j, "identifier");
      if (!title || !page_id) {
        skip("missing or mistyped name/identifier");
        continue;
      }
      auto body = j.find("article_body");
      if (body == j.end() || !body->is_object()) {
        skip("missing article_body");
        continue;
      }
      auto html = get_string(*body, "html");
      if (!html) {
        skip("missing article_body.html");
        continue;
      }
      article.title = *title;
      article.page_id = *page_id;
      article.html = std::move(*html);
    }
    article.title = std::string(trim_ascii(article.title));
    if (article.title.empty()) {
      skip("empty title");
      continue;
    }
    return article;
  }
  return std::nullopt;
}

bool CoordinateIndex::insert(std::string_view title,
                             const Coordinate& coordinate) {
  auto [it, inserted] =
      entries_.emplace(normalize_title(title), coordinate);
  (void)it;
  if (!inserted) ++duplicates_;
  return inserted;
}

std::optional<Coordinate> CoordinateIndex::find(std::string_view title) const {
  auto it = entries_.find(normalize_title(title));
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void CoordinateIndex::merge_from(const CoordinateIndex& other) {
  duplicates_ += other.duplicates_;
  for (const auto& [title, coordinate] : other.entries_) {
    auto [it, inserted] = entries_.emplace(title, coordinate);
    (void)it;
    if (!inserted) ++duplicates_;
  }
}

namespace {

// Picks the document coordinate from a search-index record: the entry
// flagged primary if any, else the first well-formed one.
std::optional<Coordinate> cirrus_coordinate(const json& doc) {
  auto coords = doc.find("coordinates");
  if (coords == doc.end() || !coords->is_array()) return std::nullopt;
  std::optional<Coordinate> first;
  for (const json& item : *coords) {
    if (!item.is_object()) continue;
    auto coord = item.find("coord");
    if (coord == item.end() || !coord->is_object()) continue;
    auto lat = get_number(*coord, "lat");
    auto lon = get_number(*coord, "lon");
    if (!lat || !lon) continue;
    Coordinate c{*lat, *lon};
    auto primary = item.find("primary");
    if (primary != item.end() && primary->is_boolean() &&
        primary->get<bool>()) {
      return c;
    }
    if (!first) first = c;
  }
  return first;
}

}  // namespace

CoordinateIndex build_coordinate_index(io::LineSource& lines,
                                       DumpFormat format,
                                       Diagnostics* diagnostics) {
  CoordinateIndex index;
  auto warn = [&](const char* why) {
    if (diagnostics) {
      diagnostics->warn("coordinate dump line " +
                        std::to_string(lines.line_number()) + ": " + why);
    }
  };
  std::string line;
  while (lines.next(line)) {
    if (trim_ascii(line).empty()) continue;
    json j = parse_json_line(line);
    if (j.is_discarded() || !j.is_object()) {
      warn("not a JSON object");
      continue;
    }
    std::optional<std::string> title = get_string(j, "title");
    std::optional<Coordinate> coordinate;
    if (format == DumpFormat::kFixture) {
      auto lat = get_number(j, "lat");
      auto lon = get_number(j, "lon");
      if (!title || !lat || !lon) {
        warn("missing or mistyped title/lat/lon");
        continue;
      }
      coordinate = Coordinate{*lat, *lon};
    } else {
      // Bulk-action header lines carry no "title"; not an error.
      if (!title) continue;
      coordinate = cirrus_coordinate(j);
      if (!coordinate) continue;  // article without coordinates
    }
    if (!coordinate_in_range(coordinate->lat, coordinate->lon)) {
      warn("coordinate out of range");
      continue;
    }
    if (!index.insert(*title, *coordinate)) {
      warn("duplicate title, first occurrence kept");
    }
  }
  return index;
}

namespace {

// --- HTML flattening ---------------------------------------------------
//
// The extractor understands just enough markup for article bodies: tags,
// comments, character entities, script/style islands and <head> sections.
// Anything else passes through as text.

bool is_block_tag(std::string_view name) {
  static const std::array<std::string_view, 38> kBlocks = {
      "address", "article",    "aside",  "blockquote", "br",     "caption",
      "center",  "dd",         "div",    "dl",         "dt",     "fieldset",
      "figcaption", "figure",  "footer", "h1",         "h2",     "h3",
      "h4",      "h5",         "h6",     "header",     "hr",     "li",
      "main",    "nav",        "ol",     "p",          "pre",    "section",
      "table",   "tbody",      "td",     "tfoot",      "th",     "thead",
      "tr",      "ul"};
  return std::find(kBlocks.begin(), kBlocks.end(), name) != kBlocks.end();
}

void append_entity(std::string& out, std::string_view body) {
  if (body == "amp") {
    out += '&';
  } else if (body == "lt") {
    out += '<';
  } else if (body == "gt") {
    out += '>';
  } else if (body == "quot") {
    out += '"';
  } else if (body == "apos") {
    out += '\'';
  } else if (body == "nbsp") {
    uni::append_utf8(out, U'\u00A0');
  } else if (body.size() >= 2 && body[0] == '#') {
    std::uint32_t cp = 0;
    bool ok = true;
    if (body[1] == 'x' || body[1] == 'X') {
      if (body.size() < 3) ok = false;
      for (std::size_t i = 2; ok && i < body.size(); ++i) {
        char c = body[i];
        int digit = (c >= '0' && c <= '9')   ? c - '0'
                    : (c >= 'a' && c <= 'f') ? c - 'a' + 10
                    : (c >= 'A' && c <= 'F') ? c - 'A' + 10
                                             : -1;
        if (digit < 0 || cp > 0x10FFFF) ok = false;
        else cp = cp * 16 + static_cast<std::uint32_t>(digit);
      }
    } else {
      for (std::size_t i = 1; ok && i < body.size(); ++i) {
        char c = body[i];
        if (c < '0' || c > '9' || cp > 0x10FFFF) ok = false;
        else cp = cp * 10 + static_cast<std::uint32_t>(c - '0');
      }
    }
    if (!ok) {
      out += '&';
      out += body;
      out += ';';
      return;
    }
    if (cp == 0 || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
      cp = 0xFFFD;
    }
    uni::append_utf8(out, static_cast<char32_t>(cp));
  } else {
    out += '&';
    out += body;
    out += ';';
  }
}

std::string decode_entities(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    std::size_t amp = s.find('&', i);
    if (amp == std::string_view::npos) {
      out.append(s.substr(i));
      break;
    }
    out.append(s.substr(i, amp - i));
    std::size_t semi = s.find(';', amp + 1);
    if (semi == std::string_view::npos || semi == amp + 1 ||
        semi - amp > 32) {
      out += '&';
      i = amp + 1;
      continue;
    }
    append_entity(out, s.substr(amp + 1, semi - amp - 1));
    i = semi + 1;
  }
  return out;
}

std::string percent_decode(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '%' && i + 2 < s.size() &&
        std::isxdigit(static_cast<unsigned char>(s[i + 1])) &&
        std::isxdigit(static_cast<unsigned char>(s[i + 2]))) {
      auto hex = [](char c) {
        return c <= '9' ? c - '0' : (c | 0x20) - 'a' + 10;
      };
      out += static_cast<char>(hex(s[i + 1]) * 16 + hex(s[i + 2]));
      i += 2;
    } else {
      out += s[i];
    }
  }
  return out;
}

// Href to article title; empty result means "not an article link".
std::string link_target(std::string_view href) {
  std::string decoded = decode_entities(href);
  std::string_view t = trim_ascii(decoded);
  if (t.empty() || t[0] == '#' || t.substr(0, 2) == "//") return {};
  if (t.substr(0, 2) == "./") {
    t.remove_prefix(2);
  } else if (t.substr(0, 6) == "/wiki/") {
    t.remove_prefix(6);
  }
  std::size_t frag = t.find('#');
  if (frag != std::string_view::npos) t = t.substr(0, frag);
  if (t.find(':') != std::string_view::npos) return {};  // scheme/namespace
  std::string title = percent_decode(t);
  std::replace(title.begin(), title.end(), '_', ' ');
  title = std::string(trim_ascii(title));
  return title;
}

char ascii_lower(char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

bool iequal(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (ascii_lower(a[i]) != ascii_lower(b[i])) return false;
  }
  return true;
}

struct Tag {
  std::string name;       // lowercase
  bool closing = false;
  bool self_closing = false;
  std::string href;       // raw attribute value, anchors only
  std::size_t end = 0;    // byte index just past '>'
};

// Parses the tag starting at html[pos] == '<'. Returns nullopt when the
// '<' does not open a tag and should be treated as literal text.
std::optional<Tag> parse_tag(std::string_view html, std::size_t pos) {
  std::size_t i = pos + 1;
  if (i >= html.size()) return std::nullopt;
  Tag tag;
  if (html[i] == '/') {
    tag.closing = true;
    ++i;
  }
  if (i >= html.size() || !std::isalpha(static_cast<unsigned char>(html[i]))) {
    return std::nullopt;
  }
  std::size_t name_start = i;
  while (i < html.size() &&
         (std::isalnum(static_cast<unsigned char>(html[i])))) {
    ++i;
  }
  tag.name = std::string(html.substr(name_start, i - name_start));
  for (char& c : tag.name) c = ascii_lower(c);

  // Attribute scan; quotes may hide '>' characters.
  while (i < html.size()) {
    char c = html[i];
    if (c == '>') {
      tag.end = i + 1;
      return tag;
    }
    if (c == '/' && i + 1 < html.size() && html[i + 1] == '>') {
      tag.self_closing = true;
      tag.end = i + 2;
      return tag;
    }
    if (ascii_space(c) || c == '/') {
      ++i;
      continue;
    }
    std::size_t attr_start = i;
    while (i < html.size() && html[i] != '=' && html[i] != '>' &&
           html[i] != '/' && !ascii_space(html[i])) {
      ++i;
    }
    std::string_view attr = html.substr(attr_start, i - attr_start);
    while (i < html.size() && ascii_space(html[i])) ++i;
    std::string_view value;
    if (i < html.size() && html[i] == '=') {
      ++i;
      while (i < html.size() && ascii_space(html[i])) ++i;
      if (i < html.size() && (html[i] == '"' || html[i] == '\'')) {
        char quote = html[i++];
        std::size_t value_start = i;
        while (i < html.size() && html[i] != quote) ++i;
        value = html.substr(value_start, i - value_start);
        if (i < html.size()) ++i;
      } else {
        std::size_t value_start = i;
        while (i < html.size() && !ascii_space(html[i]) && html[i] != '>') {
          ++i;
        }
        value = html.substr(value_start, i - value_start);
      }
    }
    if (iequal(attr, "href")) tag.href = std::string(value);
  }
  // No closing '>'; treat the rest as a malformed tag and swallow it.
  tag.end = html.size();
  return tag;
}

std::size_t count_cps(std::string_view bytes) {
  std::size_t n = 0;
  for (unsigned char c : bytes) {
    if ((c & 0xC0) != 0x80) ++n;
  }
  return n;
}

struct OpenAnchor {
  std::size_t text_begin = 0;   // code points into output text
  std::string target;
  std::size_t markup_offset = 0;  // code points into input markup
};

}  // namespace

ExtractedText html_to_text_with_links(std::string_view html) {
  ExtractedText result;
  std::string& out = result.text;
  std::size_t out_cps = 0;
  std::size_t in_cps = 0;  // code points consumed from the markup
  std::optional<OpenAnchor> anchor;
  int head_depth = 0;

  auto append_text = [&](std::string_view raw) {
    std::string run = uni::normalize_text(decode_entities(raw));
    std::string_view visible = run;
    if (out.empty() || out.back() == '\n') {
      while (!visible.empty() && ascii_space(visible.front())) {
        visible.remove_prefix(1);
      }
    }
    out.append(visible);
    out_cps += count_cps(visible);
  };
  auto append_break = [&] {
    if (!out.empty() && out.back() != '\n') {
      out += '\n';
      ++out_cps;
    }
  };

  std::size_t i = 0;
  while (i < html.size()) {
    if (html[i] != '<') {
      std::size_t next = html.find('<', i);
      if (next == std::string_view::npos) next = html.size();
      std::string_view raw = html.substr(i, next - i);
      if (head_depth == 0) append_text(raw);
      in_cps += count_cps(raw);
      i = next;
      continue;
    }
    // Comments and declarations.
    if (html.substr(i, 4) == "<!--") {
      std::size_t close = html.find("-->", i + 4);
      std::size_t end = close == std::string_view::npos ? html.size()
                                                        : close + 3;
      in_cps += count_cps(html.substr(i, end - i));
      i = end;
      continue;
    }
    if (i + 1 < html.size() && (html[i + 1] == '!' || html[i + 1] == '?')) {
      std::size_t close = html.find('>', i + 1);
      std::size_t end = close == std::string_view::npos ? html.size()
                                                        : close + 1;
      in_cps += count_cps(html.substr(i, end - i));
      i = end;
      continue;
    }
    std::optional<Tag> tag = parse_tag(html, i);
    if (!tag) {
      if (head_depth == 0) append_text(html.substr(i, 1));
      ++in_cps;
      ++i;
      continue;
    }
    std::size_t tag_start_cp = in_cps;
    in_cps += count_cps(html.substr(i, tag->end - i));
    i = tag->end;

    if (tag->name == "script" || tag->name == "style") {
      if (tag->closing || tag->self_closing) continue;
      // Raw-text island: skip to its end tag.
      std::string close = "</" + tag->name;
      std::size_t at = i;
      std::size_t island_end = html.size();
      while (at + close.size() <= html.size()) {
        if (iequal(html.substr(at, close.size()), close)) {
          std::size_t gt = html.find('>', at);
          island_end = gt == std::string_view::npos ? html.size() : gt + 1;
          break;
        }
        ++at;
      }
      in_cps += count_cps(html.substr(i, island_end - i));
      i = island_end;
      continue;
    }
    if (tag->name == "head") {
      if (tag->self_closing) continue;
      head_depth += tag->closing ? -1 : 1;
      if (head_depth < 0) head_depth = 0;
      continue;
    }
    if (head_depth > 0) continue;
    if (tag->name == "a") {
      if (!tag->closing && !tag->self_closing) {
        if (anchor) {
          throw ExtractError("nested anchor at markup offset " +
                                 std::to_string(tag_start_cp),
                             tag_start_cp);
        }
        anchor = OpenAnchor{out_cps, link_target(tag->href), tag_start_cp};
      } else if (tag->closing) {
        if (!anchor) {
          throw ExtractError("unmatched anchor close at markup offset " +
                                 std::to_string(tag_start_cp),
                             tag_start_cp);
        }
        if (out_cps > anchor->text_begin && !anchor->target.empty()) {
          result.links.push_back(
              TextLink{Span{anchor->text_begin, out_cps},
                       std::move(anchor->target)});
        }
        anchor.reset();
      }
      continue;
    }
    if (is_block_tag(tag->name)) append_break();
  }
  if (anchor) {
    throw ExtractError("anchor never closed, opened at markup offset " +
                           std::to_string(anchor->markup_offset),
                       anchor->markup_offset);
  }
  while (!out.empty() && out.back() == '\n' &&
         (result.links.empty() || result.links.back().span.end < out_cps)) {
    out.pop_back();
    --out_cps;
  }
  return result;
}

}  // namespace wikigeo
