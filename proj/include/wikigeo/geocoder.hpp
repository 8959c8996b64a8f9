#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wikigeo/annotator.hpp"
#include "wikigeo/coordinate.hpp"
#include "wikigeo/diagnostics.hpp"
#include "wikigeo/gazetteer.hpp"
#include "wikigeo/io.hpp"
#include "wikigeo/span.hpp"

namespace wikigeo {

struct UdToken {
  int index = 0;  // 1-based within the sentence
  std::string form;
  Span span;  // code points into the sentence text
  int head = 0;  // 0 is the root
  std::string deprel;
};

struct DependencySentence {
  std::string text;  // slice of the article text the tokens cover
  std::vector<UdToken> tokens;
  std::size_t char_offset = 0;  // sentence start within the article text
};

// Parsed but not yet anchored to article text: token spans are unset.
struct ConlluSentence {
  std::vector<UdToken> tokens;
};

struct ConlluDocument {
  std::uint64_t page_id = 0;
  bool has_page_id = false;  // true when a "# newdoc id = N" header was seen
  std::vector<ConlluSentence> sentences;
};

// Reads documents from a CoNLL-U stream. "# newdoc id = <page_id>"
// comments delimit documents; multiword ranges ("3-4") and empty nodes
// ("5.1") are skipped; each sentence must have contiguous ids and exactly
// one root. Violations throw ConlluError with the offending line.
class ConlluReader {
 public:
  explicit ConlluReader(std::unique_ptr<io::LineSource> lines);
  ~ConlluReader();

  std::optional<ConlluDocument> next();

 private:
  std::unique_ptr<io::LineSource> lines_;
  std::optional<std::uint64_t> pending_page_id_;
  bool saw_any_marker_ = false;
  bool exhausted_ = false;
};

// Anchors token forms to the article text by a whitespace-skipping forward
// scan, producing sentence slices and token spans. A form that cannot be
// found at or after the cursor throws ConlluError naming the token.
std::vector<DependencySentence> align_sentences(
    const std::vector<ConlluSentence>& sentences,
    std::string_view article_text);

inline constexpr std::size_t kNoSentence =
    std::numeric_limits<std::size_t>::max();

// A gold annotation placed on the sentence/token grid. Mentions with empty
// token_ids (annotation outside the parsed text or crossing a sentence
// boundary) can still be resolved by the familiarity rule.
struct ExpressionMention {
  LocationAnnotation annotation;
  std::size_t sentence_index = kNoSentence;
  std::vector<int> token_ids;
  int head_token = 0;  // covered token whose head lies outside the mention
};

std::vector<ExpressionMention> align_mentions(
    const std::vector<LocationAnnotation>& annotations,
    const std::vector<DependencySentence>& sentences,
    Diagnostics* diagnostics = nullptr);

// Sentence grouping from the built-in segmenter, for running the
// familiarity strategy without a dependency parse. Token ids stay empty.
std::vector<ExpressionMention> mentions_from_text(
    const std::vector<LocationAnnotation>& annotations,
    const std::u32string& text);

enum class Strategy { kFamiliarity, kDependency };
enum class Provenance { kGazetteer, kCopiedPrevious, kUnresolved };

std::string_view to_string(Strategy strategy);
std::optional<Strategy> strategy_from_string(std::string_view name);
std::string_view to_string(Provenance provenance);
std::optional<Provenance> provenance_from_string(std::string_view name);

struct Prediction {
  ExpressionMention mention;
  std::optional<Coordinate> predicted;  // empty iff provenance unresolved
  Strategy strategy = Strategy::kFamiliarity;
  Provenance provenance = Provenance::kUnresolved;
};

// Picks each mention's most familiar gazetteer reading: the candidate with
// the most alternate names (ties to the lowest geoname_id). Mentions with
// no candidates copy the nearest preceding resolved mention in the same
// sentence, else stay unresolved. Mentions must be in document order.
std::vector<Prediction> resolve_familiarity(
    std::span<const ExpressionMention> mentions, const Gazetteer& gazetteer);

// head/modifier relation between two mentions, as indices into the
// mention list.
struct DependentPair {
  std::size_t head_index = 0;
  std::size_t modifier_index = 0;
};

// Finds mention pairs connected in the dependency tree: B modifies A when
// walking up from B's head token reaches a token of A before any other
// mention. Each mention modifies at most one head (the nearest).
std::vector<DependentPair> find_dependent_pairs(
    std::span<const ExpressionMention> mentions,
    const std::vector<DependencySentence>& sentences);

// Modifiers resolve by the familiarity rule first (bottom-up through
// chains); a head mention then picks its candidate closest to a resolved
// modifier's coordinate, or copies it when it has no candidates of its
// own. Mentions in no pair fall back to the familiarity rule. With an
// empty pair list this equals resolve_familiarity apart from the strategy
// tag.
std::vector<Prediction> resolve_dependency(
    std::span<const ExpressionMention> mentions,
    std::span<const DependentPair> pairs, const Gazetteer& gazetteer);

// Prediction JSONL: {"page_id","start","end","strategy","provenance",
// "lat","lon"}, the coordinate fields absent when unresolved.
std::string prediction_line(std::uint64_t page_id,
                            const Prediction& prediction);

struct PredictionRecord {
  std::uint64_t page_id = 0;
  Span span;
  Strategy strategy = Strategy::kFamiliarity;
  Provenance provenance = Provenance::kUnresolved;
  std::optional<Coordinate> predicted;
};

// Throws EvalError naming the line on any schema violation.
PredictionRecord parse_prediction_line(const std::string& line,
                                       std::uint64_t line_number);

}  // namespace wikigeo
