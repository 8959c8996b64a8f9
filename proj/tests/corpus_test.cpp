#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "testutil.hpp"
#include "wikigeo/corpus.hpp"
#include "wikigeo/errors.hpp"
#include "wikigeo/io.hpp"
#include "wikigeo/unicode.hpp"

using namespace wikigeo;

namespace {

AnnotatedArticle make_article(std::uint64_t page_id, const std::string& text,
                              const std::vector<LocationAnnotation>& annotations,
                              Coordinate coordinate = {10.0, 20.0}) {
  AnnotatedArticle article;
  article.title = "Article " + std::to_string(page_id);
  article.page_id = page_id;
  article.text = text;
  article.article_coordinate = coordinate;
  article.annotations = annotations;
  return article;
}

LocationAnnotation ann(std::size_t begin, std::size_t end,
                       const std::string& notation, double lat, double lon,
                       AnnotationSource source = AnnotationSource::kHyperlink) {
  return {{begin, end}, notation, {lat, lon}, source};
}

// Brute-force ambiguity counts over explicit notation profiles.
struct HandCount {
  std::uint64_t ambiguous = 0;
  std::uint64_t recessive = 0;
  std::uint64_t ambiguous_unique = 0;
};

HandCount hand_count(const std::vector<AnnotatedArticle>& articles) {
  std::map<std::string, std::map<QuantizedCoordinate, std::uint64_t>> profiles;
  for (const auto& article : articles) {
    for (const auto& a : article.annotations) {
      profiles[a.notation][quantize(a.coordinate)]++;
    }
  }
  HandCount count;
  for (const auto& [notation, profile] : profiles) {
    if (profile.size() < 2) continue;
    count.ambiguous_unique++;
    std::uint64_t total = 0, max_count = 0;
    for (const auto& [q, c] : profile) {
      total += c;
      max_count = std::max(max_count, c);
    }
    std::uint64_t at_max = 0;
    for (const auto& [q, c] : profile) {
      if (c == max_count) at_max += c;
    }
    count.ambiguous += total;
    count.recessive += total - at_max;
  }
  return count;
}

std::vector<AnnotatedArticle> random_corpus(std::mt19937_64& rng,
                                            std::size_t max_articles) {
  const std::vector<std::string> names = {"Alpha", "Beta", "Gamma", "Delta"};
  // Tiny coordinate space so the same notation often lands on both
  // repeated and distinct coordinates.
  const std::vector<Coordinate> coords = {
      {10.0, 20.0}, {30.0, 40.0}, {-50.0, 60.0}};
  std::vector<AnnotatedArticle> articles;
  std::size_t n = 1 + rng() % max_articles;
  for (std::size_t i = 0; i < n; ++i) {
    std::string text;
    std::vector<LocationAnnotation> annotations;
    std::size_t mentions = rng() % 6;
    for (std::size_t m = 0; m < mentions; ++m) {
      const std::string& name = names[rng() % names.size()];
      if (!text.empty()) text += " and ";
      std::size_t begin = uni::to_utf32(text).size();
      text += name;
      annotations.push_back(ann(begin, begin + uni::to_utf32(name).size(),
                                name, 0, 0));
      annotations.back().coordinate = coords[rng() % coords.size()];
    }
    if (text.empty()) text = "Nothing here.";
    articles.push_back(make_article(i + 1, text, annotations,
                                    coords[rng() % coords.size()]));
  }
  return articles;
}

}  // namespace

TEST_CASE("sentence segmentation splits on terminator + space + uppercase") {
  auto sentences = segment_sentences(uni::to_utf32(testutil::golden_text()));
  REQUIRE(sentences.size() == 4);
  // First sentence runs through "Canada."
  CHECK(sentences[0].begin == 0);
  CHECK(sentences[0].end == 80);
  CHECK(sentences[1].begin == 81);

  CHECK(segment_sentences(uni::to_utf32("no split here. ok")).size() == 1);
  CHECK(segment_sentences(uni::to_utf32("One. Two. Three.")).size() == 3);
  CHECK(segment_sentences(uni::to_utf32("Ends abruptly")).size() == 1);
  CHECK(segment_sentences(uni::to_utf32("What? Yes! Fine.")).size() == 3);
  CHECK(segment_sentences(std::u32string()).empty());
  CHECK(segment_sentences(uni::to_utf32("   ")).empty());
}

TEST_CASE("token counting strips edge punctuation") {
  CHECK(count_tokens(uni::to_utf32("Hello, world!")) == 2);
  CHECK(count_tokens(uni::to_utf32("a b  c")) == 3);
  CHECK(count_tokens(uni::to_utf32("-- ( ) ...")) == 0);
  CHECK(count_tokens(uni::to_utf32("self-made")) == 1);
  CHECK(count_tokens(std::u32string()) == 0);
}

TEST_CASE("corpus line carries the full schema in fixed order") {
  AnnotatedArticle article = testutil::golden_annotated();
  std::string line = corpus_line(article);
  // Deterministic field order.
  CHECK(line.find("{\"title\":") == 0);
  CHECK(line.find("\"page_id\":") < line.find("\"lat\":"));
  CHECK(line.find("\"lat\":") < line.find("\"lon\":"));
  CHECK(line.find("\"lon\":") < line.find("\"text\":"));
  CHECK(line.find("\"text\":") < line.find("\"annotations\":"));

  nlohmann::json parsed = nlohmann::json::parse(line);
  CHECK(parsed["title"] == "Melbourne, Ontario");
  CHECK(parsed["page_id"] == testutil::kGoldenPageId);
  CHECK(parsed["lat"] == "42.81667");
  CHECK(parsed["lon"] == "-81.55194");
  REQUIRE(parsed["annotations"].size() == 9);
  CHECK(parsed["annotations"][0]["start"] == 0);
  CHECK(parsed["annotations"][0]["end"] == 9);
  CHECK(parsed["annotations"][0]["notation"] == "Melbourne");
  CHECK(parsed["annotations"][0]["lat"] == "42.81667");
  CHECK(parsed["annotations"][0]["source"] == "hyperlink");
  CHECK(parsed["annotations"][6]["source"] == "title_match");
}

TEST_CASE("write_corpus counts lines and an empty corpus writes nothing") {
  testutil::TempDir dir;
  {
    auto sink = io::open_line_sink(dir.path("empty.jsonl"));
    CHECK(write_corpus({}, *sink) == 0);
    sink->close();
    CHECK(io::read_file(dir.path("empty.jsonl")).empty());
  }
  {
    std::vector<AnnotatedArticle> articles = {testutil::golden_annotated()};
    auto sink = io::open_line_sink(dir.path("one.jsonl"));
    CHECK(write_corpus(articles, *sink) == 1);
    sink->close();
    std::vector<std::string> lines =
        testutil::split_lines(io::read_file(dir.path("one.jsonl")));
    REQUIRE(lines.size() == 1);
    CHECK(nlohmann::json::parse(lines[0])["annotations"].size() == 9);
  }
}

TEST_CASE("corpus round trip preserves every field bit-exactly") {
  AnnotatedArticle article = testutil::golden_annotated();
  std::string line = corpus_line(article);
  AnnotatedArticle back = parse_corpus_line(line, 1);
  CHECK(back.title == article.title);
  CHECK(back.page_id == article.page_id);
  CHECK(back.text == article.text);
  CHECK(quantize(back.article_coordinate) ==
        quantize(article.article_coordinate));
  REQUIRE(back.annotations.size() == article.annotations.size());
  for (std::size_t i = 0; i < back.annotations.size(); ++i) {
    CHECK(back.annotations[i].span == article.annotations[i].span);
    CHECK(back.annotations[i].notation == article.annotations[i].notation);
    CHECK(back.annotations[i].source == article.annotations[i].source);
    CHECK(quantize(back.annotations[i].coordinate) ==
          quantize(article.annotations[i].coordinate));
  }
  // Serialization is a fixed point.
  CHECK(corpus_line(back) == line);
}

TEST_CASE("random articles survive the serialization round trip") {
  std::mt19937_64 rng(31337);
  for (int round = 0; round < 50; ++round) {
    for (const AnnotatedArticle& article : random_corpus(rng, 4)) {
      std::string line = corpus_line(article);
      AnnotatedArticle back = parse_corpus_line(line, 1);
      CHECK(corpus_line(back) == line);
    }
  }
}

TEST_CASE("corpus reader rejects corruption with line numbers") {
  AnnotatedArticle article = testutil::golden_annotated();
  std::string line = corpus_line(article);

  auto expect_error = [](const std::string& bad_line,
                         const std::string& needle) {
    try {
      parse_corpus_line(bad_line, 7);
      FAIL_CHECK("expected CorpusError for: " << needle);
    } catch (const CorpusError& e) {
      CHECK(std::string(e.what()).find("line 7") != std::string::npos);
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };

  SUBCASE("notation disagrees with the span") {
    nlohmann::json j = nlohmann::json::parse(line);
    j["annotations"][0]["notation"] = "Sydney";
    expect_error(j.dump(), "notation");
  }

  SUBCASE("latitude out of range") {
    nlohmann::json j = nlohmann::json::parse(line);
    j["lat"] = "91.00000";
    expect_error(j.dump(), "range");
  }

  SUBCASE("non-canonical coordinate string") {
    nlohmann::json j = nlohmann::json::parse(line);
    j["lat"] = "42.816670";
    expect_error(j.dump(), "canonical");
  }

  SUBCASE("missing field") {
    nlohmann::json j = nlohmann::json::parse(line);
    j.erase("page_id");
    expect_error(j.dump(), "page_id");
  }

  SUBCASE("overlapping spans") {
    nlohmann::json j = nlohmann::json::parse(line);
    j["annotations"][1]["start"] = 0;
    j["annotations"][1]["end"] = 9;
    j["annotations"][1]["notation"] = "Melbourne";
    expect_error(j.dump(), "overlap");
  }

  SUBCASE("title_match coordinate must equal the article coordinate") {
    nlohmann::json j = nlohmann::json::parse(line);
    j["annotations"][6]["lat"] = "11.00000";
    expect_error(j.dump(), "title_match");
  }

  SUBCASE("not json at all") {
    expect_error("not json", "");
  }
}

TEST_CASE("corpus reader yields articles and skips blank lines") {
  std::string data = corpus_line(testutil::golden_annotated()) + "\n\n";
  CorpusReader reader(io::lines_from_string(data));
  auto first = reader.next();
  REQUIRE(first.has_value());
  CHECK(first->page_id == testutil::kGoldenPageId);
  CHECK_FALSE(reader.next().has_value());
}

TEST_CASE("golden article statistics match the hand count") {
  std::vector<AnnotatedArticle> corpus = {testutil::golden_annotated()};
  CorpusStats stats = compute_stats(corpus);
  CHECK(stats.n_articles == 1);
  CHECK(stats.n_sentences == 4);
  CHECK(stats.n_expressions == 9);
  CHECK(stats.n_unique_notations == 7);
  CHECK(stats.n_ambiguous_expressions == 3);
  CHECK(stats.n_recessive_expressions == 1);
  CHECK(stats.n_ambiguous_unique_notations == 1);
  CHECK(stats.ambiguous_expression_fraction == 3.0 / 9.0);
  CHECK(stats.recessive_expression_fraction == 1.0 / 9.0);
  CHECK(stats.ambiguous_unique_fraction == 1.0 / 7.0);
  CHECK(stats.per_article_expressions == 9.0);
  CHECK(stats.per_article_unique_expressions == 7.0);
  CHECK(stats.per_article_sentences == 4.0);
}

TEST_CASE("unambiguous corpora have zero ambiguous and recessive counts") {
  std::vector<AnnotatedArticle> corpus = {
      make_article(1, "Alpha then Beta",
                   {ann(0, 5, "Alpha", 1.0, 2.0), ann(11, 15, "Beta", 3.0, 4.0)}),
      make_article(2, "Alpha again",
                   {ann(0, 5, "Alpha", 1.0, 2.0)}),
  };
  CorpusStats stats = compute_stats(corpus);
  CHECK(stats.n_expressions == 3);
  CHECK(stats.n_ambiguous_expressions == 0);
  CHECK(stats.n_recessive_expressions == 0);
  CHECK(stats.ambiguous_expression_fraction == 0.0);
  CHECK(stats.recessive_expression_fraction == 0.0);
}

TEST_CASE("minority coordinate occurrences are recessive") {
  // "Springfield" twice at one coordinate, once at another, across articles.
  std::vector<AnnotatedArticle> corpus = {
      make_article(1, "Springfield here",
                   {ann(0, 11, "Springfield", 10.0, 20.0)}),
      make_article(2, "Springfield there",
                   {ann(0, 11, "Springfield", 10.0, 20.0)}),
      make_article(3, "Springfield elsewhere",
                   {ann(0, 11, "Springfield", 30.0, 40.0)}),
  };
  CorpusStats stats = compute_stats(corpus);
  CHECK(stats.n_expressions == 3);
  CHECK(stats.n_ambiguous_expressions == 3);
  CHECK(stats.n_recessive_expressions == 1);
}

TEST_CASE("tied maximal coordinates leave no occurrence recessive") {
  std::vector<AnnotatedArticle> corpus = {
      make_article(1, "Tie one", {ann(0, 3, "Tie", 10.0, 20.0)}),
      make_article(2, "Tie two", {ann(0, 3, "Tie", 30.0, 40.0)}),
  };
  CorpusStats stats = compute_stats(corpus);
  CHECK(stats.n_ambiguous_expressions == 2);
  CHECK(stats.n_recessive_expressions == 0);
}

TEST_CASE("merge with an empty accumulator is the identity") {
  std::vector<AnnotatedArticle> corpus = {testutil::golden_annotated()};
  StatsAccumulator a;
  for (const auto& article : corpus) a.add(article);
  StatsAccumulator empty;
  StatsAccumulator merged = a;
  merged.merge_from(empty);
  CorpusStats left = merged.finalize();
  CorpusStats right = a.finalize();
  CHECK(left.n_expressions == right.n_expressions);
  CHECK(left.n_ambiguous_expressions == right.n_ambiguous_expressions);
  CHECK(left.n_recessive_expressions == right.n_recessive_expressions);
  CHECK(left.n_sentences == right.n_sentences);
  CHECK(left.n_tokens == right.n_tokens);
}

TEST_CASE("merge is commutative and agrees with single-pass statistics") {
  std::mt19937_64 rng(2718);
  for (int round = 0; round < 40; ++round) {
    std::vector<AnnotatedArticle> corpus = random_corpus(rng, 8);
    std::size_t split = rng() % (corpus.size() + 1);

    StatsAccumulator whole;
    for (const auto& article : corpus) whole.add(article);

    StatsAccumulator head, tail;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      (i < split ? head : tail).add(corpus[i]);
    }
    StatsAccumulator ab = head;
    ab.merge_from(tail);
    StatsAccumulator ba = tail;
    ba.merge_from(head);

    CorpusStats expected = whole.finalize();
    for (const CorpusStats& got : {ab.finalize(), ba.finalize()}) {
      CHECK(got.n_articles == expected.n_articles);
      CHECK(got.n_sentences == expected.n_sentences);
      CHECK(got.n_tokens == expected.n_tokens);
      CHECK(got.n_expressions == expected.n_expressions);
      CHECK(got.n_unique_notations == expected.n_unique_notations);
      CHECK(got.n_ambiguous_expressions == expected.n_ambiguous_expressions);
      CHECK(got.n_recessive_expressions == expected.n_recessive_expressions);
      CHECK(got.ambiguous_expression_fraction ==
            expected.ambiguous_expression_fraction);
    }

    // Independent brute-force oracle over the same corpus.
    HandCount oracle = hand_count(corpus);
    CHECK(expected.n_ambiguous_expressions == oracle.ambiguous);
    CHECK(expected.n_recessive_expressions == oracle.recessive);
    CHECK(expected.n_ambiguous_unique_notations == oracle.ambiguous_unique);

    // Invariant chain: recessive <= ambiguous <= expressions.
    CHECK(expected.n_recessive_expressions <=
          expected.n_ambiguous_expressions);
    CHECK(expected.n_ambiguous_expressions <= expected.n_expressions);
  }
}

TEST_CASE("statistics are invariant under article reordering") {
  std::mt19937_64 rng(1414);
  std::vector<AnnotatedArticle> corpus = random_corpus(rng, 10);
  CorpusStats forward = compute_stats(corpus);
  std::reverse(corpus.begin(), corpus.end());
  CorpusStats backward = compute_stats(corpus);
  CHECK(forward.n_ambiguous_expressions == backward.n_ambiguous_expressions);
  CHECK(forward.n_recessive_expressions == backward.n_recessive_expressions);
  CHECK(forward.n_unique_notations == backward.n_unique_notations);
  CHECK(forward.n_tokens == backward.n_tokens);
}

TEST_CASE("empty corpus finalizes to zeros without dividing by zero") {
  CorpusStats stats = compute_stats({});
  CHECK(stats.n_articles == 0);
  CHECK(stats.n_expressions == 0);
  CHECK(stats.ambiguous_expression_fraction == 0.0);
  CHECK(stats.recessive_expression_fraction == 0.0);
  CHECK(stats.per_article_expressions == 0.0);
}
