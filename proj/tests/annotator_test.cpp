#include <algorithm>
#include <cctype>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "testutil.hpp"
#include "wikigeo/annotator.hpp"
#include "wikigeo/unicode.hpp"

using namespace wikigeo;

TEST_CASE("title_variants strips parentheticals then comma tails") {
  CHECK(title_variants("Melbourne, Ontario") ==
        std::vector<std::string>{"Melbourne, Ontario", "Melbourne"});
  CHECK(title_variants("Waterloo (Albertson, North Carolina)") ==
        std::vector<std::string>{"Waterloo (Albertson, North Carolina)",
                                 "Waterloo"});
  CHECK(title_variants("Canada") == std::vector<std::string>{"Canada"});
}

TEST_CASE("title_variants deduplicates and drops empty results") {
  // Parenthetical at the very start would leave an empty variant.
  std::vector<std::string> v = title_variants("(disambiguation)");
  CHECK(v == std::vector<std::string>{"(disambiguation)"});

  // Comma and parenthetical together: paren strip runs first.
  v = title_variants("Springfield (city), Ohio");
  REQUIRE(v.size() == 3);
  CHECK(v[0] == "Springfield (city), Ohio");
  CHECK(v[1] == "Springfield, Ohio");
  CHECK(v[2] == "Springfield");
}

TEST_CASE("title_variants orders longest first") {
  for (const char* title :
       {"Melbourne, Ontario", "Waterloo (Albertson, North Carolina)",
        "Springfield (city), Ohio", "A, B, C"}) {
    std::vector<std::string> variants = title_variants(title);
    REQUIRE_FALSE(variants.empty());
    for (std::size_t i = 1; i < variants.size(); ++i) {
      CHECK(variants[i - 1].size() >= variants[i].size());
    }
    // Deduplicated.
    std::vector<std::string> copy = variants;
    std::sort(copy.begin(), copy.end());
    CHECK(std::adjacent_find(copy.begin(), copy.end()) == copy.end());
  }
}

TEST_CASE("annotate_hyperlinks keeps indexed targets and drops the rest") {
  CoordinateIndex index = testutil::golden_index();
  std::u32string text = uni::to_utf32(testutil::golden_text());

  SUBCASE("self-link target resolves to its coordinate") {
    std::vector<TextLink> links = {{{0, 9}, "Melbourne, Ontario"}};
    std::vector<LocationAnnotation> annotations =
        annotate_hyperlinks(text, links, index);
    REQUIRE(annotations.size() == 1);
    CHECK(annotations[0].span == Span{0, 9});
    CHECK(annotations[0].notation == "Melbourne");
    CHECK(format_degrees(annotations[0].coordinate.lat) == "42.81667");
    CHECK(format_degrees(annotations[0].coordinate.lon) == "-81.55194");
    CHECK(annotations[0].source == AnnotationSource::kHyperlink);
  }

  SUBCASE("plain-name target resolves to the other place") {
    std::vector<TextLink> links = {{{280, 289}, "Melbourne"}};
    std::vector<LocationAnnotation> annotations =
        annotate_hyperlinks(text, links, index);
    REQUIRE(annotations.size() == 1);
    CHECK(format_degrees(annotations[0].coordinate.lat) == "-37.81417");
    CHECK(format_degrees(annotations[0].coordinate.lon) == "144.96306");
  }

  SUBCASE("unindexed target yields no annotation but is counted") {
    std::vector<TextLink> links = {{{301, 310}, "Australia"}};
    std::uint64_t unindexed = 0;
    std::vector<LocationAnnotation> annotations =
        annotate_hyperlinks(text, links, index, &unindexed);
    CHECK(annotations.empty());
    CHECK(unindexed == 1);
  }

  SUBCASE("underscored target is normalized before lookup") {
    std::vector<TextLink> links = {{{46, 62}, "Middlesex_County,_Ontario"}};
    std::vector<LocationAnnotation> annotations =
        annotate_hyperlinks(text, links, index);
    REQUIRE(annotations.size() == 1);
    CHECK(annotations[0].notation == "Middlesex County");
  }
}

TEST_CASE("annotate_title_matches finds unlinked title occurrences") {
  std::u32string text = uni::to_utf32(testutil::golden_text());
  Coordinate article{42.81667, -81.55194};

  SUBCASE("unoccupied occurrence becomes a title match") {
    std::vector<Span> occupied = {{0, 9}, {280, 289}};
    std::vector<LocationAnnotation> annotations = annotate_title_matches(
        text, "Melbourne, Ontario", article, occupied);
    REQUIRE(annotations.size() == 1);
    CHECK(annotations[0].span == Span{205, 214});
    CHECK(annotations[0].notation == "Melbourne");
    CHECK(annotations[0].source == AnnotationSource::kTitleMatch);
    CHECK(quantize(annotations[0].coordinate) == quantize(article));
  }

  SUBCASE("fully occupied text yields nothing") {
    std::vector<Span> occupied = {{0, 9}, {205, 214}, {280, 289}};
    CHECK(annotate_title_matches(text, "Melbourne, Ontario", article,
                                 occupied)
              .empty());
  }
}

TEST_CASE("title matching respects word boundaries") {
  Coordinate c{1.0, 2.0};
  auto spans_in = [&](const std::string& text_utf8, const std::string& title) {
    std::vector<LocationAnnotation> annotations = annotate_title_matches(
        uni::to_utf32(text_utf8), title, c, {});
    std::vector<Span> spans;
    for (const auto& a : annotations) spans.push_back(a.span);
    return spans;
  };
  CHECK(spans_in("Melbournes are many", "Melbourne").empty());
  CHECK(spans_in("xMelbourne", "Melbourne").empty());
  CHECK(spans_in("Melbourne7", "Melbourne").empty());
  CHECK(spans_in("Melbourne", "Melbourne") == std::vector<Span>{{0, 9}});
  CHECK(spans_in("in Melbourne.", "Melbourne") ==
        std::vector<Span>{{3, 12}});
  CHECK(spans_in("(Melbourne)", "Melbourne") == std::vector<Span>{{1, 10}});
  CHECK(spans_in("melbourne", "Melbourne").empty());  // case-sensitive
}

TEST_CASE("longest variant wins at a shared start offset") {
  Coordinate c{1.0, 2.0};
  std::u32string text =
      uni::to_utf32("Melbourne, Ontario and Melbourne both appear");
  std::vector<LocationAnnotation> annotations =
      annotate_title_matches(text, "Melbourne, Ontario", c, {});
  REQUIRE(annotations.size() == 2);
  CHECK(annotations[0].span == Span{0, 18});
  CHECK(annotations[0].notation == "Melbourne, Ontario");
  CHECK(annotations[1].span == Span{23, 32});
  CHECK(annotations[1].notation == "Melbourne");
}

TEST_CASE("title matches agree with a byte-scan oracle on random text") {
  std::mt19937_64 rng(555);
  const std::string title = "Foo";
  Coordinate c{5.0, 6.0};
  for (int round = 0; round < 300; ++round) {
    // ASCII soup with frequent embedded occurrences of the title.
    std::string text;
    std::size_t length = rng() % 60;
    for (std::size_t i = 0; i < length; ++i) {
      switch (rng() % 6) {
        case 0: text += "Foo"; break;
        case 1: text += 'x'; break;
        case 2: text += ' '; break;
        case 3: text += 'F'; break;
        case 4: text += '.'; break;
        case 5: text += '9'; break;
      }
    }
    // Oracle: left-to-right byte scan with ASCII boundary checks.
    std::vector<Span> expected;
    auto alnum = [](char ch) {
      return std::isalnum(static_cast<unsigned char>(ch)) != 0;
    };
    std::size_t at = 0;
    while ((at = text.find(title, at)) != std::string::npos) {
      bool left_ok = at == 0 || !alnum(text[at - 1]);
      std::size_t end = at + title.size();
      bool right_ok = end == text.size() || !alnum(text[end]);
      if (left_ok && right_ok) {
        expected.push_back({at, end});
        at = end;
      } else {
        ++at;
      }
    }
    std::vector<LocationAnnotation> annotations =
        annotate_title_matches(uni::to_utf32(text), title, c, {});
    std::vector<Span> actual;
    for (const auto& a : annotations) actual.push_back(a.span);
    CHECK(actual == expected);
  }
}

TEST_CASE("matches skip occupied spans and never overlap each other") {
  Coordinate c{1.0, 2.0};
  std::u32string text = uni::to_utf32("Foo Foo Foo");
  std::vector<Span> occupied = {{4, 7}};
  std::vector<LocationAnnotation> annotations =
      annotate_title_matches(text, "Foo", c, occupied);
  REQUIRE(annotations.size() == 2);
  CHECK(annotations[0].span == Span{0, 3});
  CHECK(annotations[1].span == Span{8, 11});
}

TEST_CASE("annotate_article reproduces the golden annotation table") {
  CoordinateIndex index = testutil::golden_index();
  AnnotateResult result =
      annotate_article(testutil::golden_raw_article(), index);
  REQUIRE(result.status == AnnotateStatus::kAnnotated);
  const AnnotatedArticle& article = result.article;
  CHECK(article.title == "Melbourne, Ontario");
  CHECK(article.page_id == testutil::kGoldenPageId);
  CHECK(article.text == testutil::golden_text());
  CHECK(format_degrees(article.article_coordinate.lat) == "42.81667");

  const auto& expected = testutil::golden_annotations();
  REQUIRE(article.annotations.size() == expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    const LocationAnnotation& got = article.annotations[i];
    CHECK(got.span.begin == expected[i].begin);
    CHECK(got.span.end == expected[i].end);
    CHECK(got.notation == expected[i].notation);
    CHECK(format_degrees(got.coordinate.lat) == expected[i].lat);
    CHECK(format_degrees(got.coordinate.lon) == expected[i].lon);
    CHECK(to_string(got.source) == expected[i].source);
  }
  CHECK(result.links_total == 8);
  CHECK(result.links_unindexed == 0);
}

TEST_CASE("article with no indexed coordinate is skipped") {
  CoordinateIndex index;
  index.insert("Somewhere Else", {1.0, 2.0});
  AnnotateResult result =
      annotate_article(testutil::golden_raw_article(), index);
  CHECK(result.status == AnnotateStatus::kSkippedNoCoordinate);
}

TEST_CASE("article with no links and no title occurrences annotates empty") {
  CoordinateIndex index;
  index.insert("Quietville", {10.0, 20.0});
  RawArticle raw{"Quietville", 7, "<p>Nothing to see in this text.</p>"};
  AnnotateResult result = annotate_article(raw, index);
  REQUIRE(result.status == AnnotateStatus::kAnnotated);
  CHECK(result.article.annotations.empty());
  CHECK(result.article.text == "Nothing to see in this text.");
}

TEST_CASE("markup failures surface as per-article failures") {
  CoordinateIndex index;
  index.insert("Broken", {1.0, 2.0});
  RawArticle raw{"Broken", 8, "<p>text</a></p>"};
  AnnotateResult result = annotate_article(raw, index);
  CHECK(result.status == AnnotateStatus::kFailed);
  CHECK_FALSE(result.error.empty());
}

TEST_CASE("annotation invariants hold on golden and random articles") {
  std::mt19937_64 rng(777);
  CoordinateIndex index = testutil::golden_index();

  auto check_invariants = [&](const AnnotatedArticle& article) {
    std::u32string text32 = uni::to_utf32(article.text);
    std::size_t previous_end = 0;
    for (const LocationAnnotation& a : article.annotations) {
      REQUIRE(a.span.begin < a.span.end);
      REQUIRE(a.span.end <= text32.size());
      CHECK(a.span.begin >= previous_end);  // sorted, disjoint
      previous_end = a.span.end;
      CHECK(uni::to_utf8(text32.substr(a.span.begin, a.span.length())) ==
            a.notation);
      if (a.source == AnnotationSource::kTitleMatch) {
        CHECK(quantize(a.coordinate) ==
              quantize(article.article_coordinate));
      }
    }
  };

  check_invariants(testutil::golden_annotated());

  // Randomized articles built over the golden vocabulary.
  const std::vector<std::string> pieces = {
      "Melbourne",      "Ontario",   "Canada",     "word",
      "Middlesex County", "Victoria", "river town", "Melbourne, Ontario"};
  for (int round = 0; round < 100; ++round) {
    std::string html = "<p>";
    std::size_t parts = 1 + rng() % 12;
    for (std::size_t p = 0; p < parts; ++p) {
      const std::string& piece = pieces[rng() % pieces.size()];
      if (rng() % 3 == 0) {
        std::string href = piece;
        std::replace(href.begin(), href.end(), ' ', '_');
        html += "<a href=\"./" + href + "\">" + piece + "</a> ";
      } else {
        html += piece + " ";
      }
    }
    html += "</p>";
    RawArticle raw{"Melbourne, Ontario",
                   static_cast<std::uint64_t>(1 + round), html};
    AnnotateResult result = annotate_article(raw, index);
    REQUIRE(result.status == AnnotateStatus::kAnnotated);
    check_invariants(result.article);

    // Determinism: annotating again gives identical output.
    AnnotateResult again = annotate_article(raw, index);
    REQUIRE(again.status == AnnotateStatus::kAnnotated);
    CHECK(again.article.text == result.article.text);
    CHECK(again.article.annotations == result.article.annotations);

    // Precedence: no title match overlaps a hyperlink annotation.
    for (const LocationAnnotation& t : result.article.annotations) {
      if (t.source != AnnotationSource::kTitleMatch) continue;
      for (const LocationAnnotation& h : result.article.annotations) {
        if (h.source == AnnotationSource::kHyperlink) {
          CHECK_FALSE(t.span.overlaps(h.span));
        }
      }
    }
  }
}
