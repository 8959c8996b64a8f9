#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wikigeo/annotator.hpp"
#include "wikigeo/coordinate.hpp"
#include "wikigeo/io.hpp"
#include "wikigeo/span.hpp"

namespace wikigeo {

struct CorpusStats {
  std::uint64_t n_articles = 0;
  std::uint64_t n_sentences = 0;
  std::uint64_t n_tokens = 0;
  std::uint64_t n_expressions = 0;
  std::uint64_t n_unique_notations = 0;
  std::uint64_t n_ambiguous_expressions = 0;
  std::uint64_t n_recessive_expressions = 0;
  std::uint64_t n_ambiguous_unique_notations = 0;
  double ambiguous_expression_fraction = 0.0;
  double recessive_expression_fraction = 0.0;
  double ambiguous_unique_fraction = 0.0;
  double per_article_sentences = 0.0;
  double per_article_tokens = 0.0;
  double per_article_expressions = 0.0;
  double per_article_unique_expressions = 0.0;
};

// Streaming corpus statistics. Accumulators built over disjoint article
// sets merge associatively and commutatively, so shards can be counted in
// parallel and combined. A notation is ambiguous when it occurs with two
// or more distinct coordinates (quantized to 5 decimals); an occurrence is
// recessive when its notation is ambiguous and its coordinate is not among
// the most frequent ones for that notation.
class StatsAccumulator {
 public:
  void add(const AnnotatedArticle& article);
  void merge_from(const StatsAccumulator& other);
  CorpusStats finalize() const;

 private:
  std::uint64_t n_articles_ = 0;
  std::uint64_t n_sentences_ = 0;
  std::uint64_t n_tokens_ = 0;
  std::uint64_t n_expressions_ = 0;
  std::uint64_t sum_unique_per_article_ = 0;
  std::map<std::string, std::map<QuantizedCoordinate, std::uint64_t>>
      profiles_;
};

CorpusStats compute_stats(std::span<const AnnotatedArticle> articles);

// Approximate sentence bounds: a sentence ends at [.?!] followed by
// whitespace and an uppercase letter. Leading/trailing whitespace is not
// part of any sentence.
std::vector<Span> segment_sentences(const std::u32string& text);

// Whitespace-separated tokens with edge punctuation stripped; tokens that
// are all punctuation do not count.
std::uint64_t count_tokens(const std::u32string& text);

// One corpus record as a JSON line (schema documented in the README);
// field order is fixed and coordinates are 5-decimal strings, so equal
// articles serialize to identical bytes.
std::string corpus_line(const AnnotatedArticle& article);

std::uint64_t write_corpus(std::span<const AnnotatedArticle> articles,
                           io::LineSink& sink);

// Validating reader: every schema or invariant violation (bad span, wrong
// notation, out-of-range or non-canonical coordinate) throws CorpusError
// naming the line. Corruption must not pass silently.
class CorpusReader {
 public:
  explicit CorpusReader(std::unique_ptr<io::LineSource> lines);
  ~CorpusReader();

  std::optional<AnnotatedArticle> next();
  std::uint64_t line_number() const;

 private:
  std::unique_ptr<io::LineSource> lines_;
};

// Parses and validates a single corpus line (line_number only labels
// errors). Exposed for callers that stream lines themselves.
AnnotatedArticle parse_corpus_line(const std::string& line,
                                   std::uint64_t line_number);

}  // namespace wikigeo
