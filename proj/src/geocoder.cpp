#include "wikigeo/geocoder.hpp"

#include <algorithm>
#include <charconv>
#include <unordered_map>

#include "json.hpp"
#include "wikigeo/corpus.hpp"
#include "wikigeo/errors.hpp"
#include "wikigeo/evaluator.hpp"
#include "wikigeo/unicode.hpp"

namespace wikigeo {

namespace {

using ordered_json = nlohmann::ordered_json;

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

std::optional<int> parse_int(std::string_view s) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
    return std::nullopt;
  }
  return value;
}

[[noreturn]] void conllu_fail(std::uint64_t line, const std::string& what) {
  throw ConlluError("conllu line " + std::to_string(line) + ": " + what);
}

void validate_sentence(const ConlluSentence& sentence, std::uint64_t line) {
  int n = static_cast<int>(sentence.tokens.size());
  int roots = 0;
  for (const UdToken& token : sentence.tokens) {
    if (token.head < 0 || token.head > n) {
      conllu_fail(line, "head " + std::to_string(token.head) +
                            " out of range for " + std::to_string(n) +
                            " tokens");
    }
    if (token.head == token.index) {
      conllu_fail(line, "token " + std::to_string(token.index) +
                            " is its own head");
    }
    if (token.head == 0) ++roots;
  }
  if (roots != 1) {
    conllu_fail(line, "sentence has " + std::to_string(roots) +
                          " roots, expected exactly 1");
  }
}

}  // namespace

ConlluReader::ConlluReader(std::unique_ptr<io::LineSource> lines)
    : lines_(std::move(lines)) {}

ConlluReader::~ConlluReader() = default;

std::optional<ConlluDocument> ConlluReader::next() {
  if (exhausted_) return std::nullopt;
  ConlluDocument document;
  bool started = saw_any_marker_ || pending_page_id_.has_value();
  if (pending_page_id_) {
    document.page_id = *pending_page_id_;
    document.has_page_id = true;
    pending_page_id_.reset();
  }
  ConlluSentence sentence;
  auto end_sentence = [&] {
    if (sentence.tokens.empty()) return;
    validate_sentence(sentence, lines_->line_number());
    document.sentences.push_back(std::move(sentence));
    sentence = ConlluSentence{};
  };

  std::string line;
  while (lines_->next(line)) {
    std::string_view view = trim(line);
    if (view.empty()) {
      end_sentence();
      continue;
    }
    if (view[0] == '#') {
      std::string_view body = trim(view.substr(1));
      if (body.substr(0, 9) == "newdoc id") {
        std::size_t eq = body.find('=');
        if (eq == std::string_view::npos) {
          conllu_fail(lines_->line_number(), "newdoc marker without an id");
        }
        auto id = parse_int(trim(body.substr(eq + 1)));
        if (!id || *id < 0) {
          conllu_fail(lines_->line_number(), "newdoc id is not an integer");
        }
        saw_any_marker_ = true;
        if (started || !document.sentences.empty() ||
            !sentence.tokens.empty()) {
          if (document.has_page_id || !document.sentences.empty() ||
              !sentence.tokens.empty()) {
            end_sentence();
            pending_page_id_ = static_cast<std::uint64_t>(*id);
            return document;
          }
        }
        document.page_id = static_cast<std::uint64_t>(*id);
        document.has_page_id = true;
        started = true;
      }
      continue;
    }
    started = true;
    std::vector<std::string_view> cols = split(line, '\t');
    if (cols.size() != 10) {
      conllu_fail(lines_->line_number(),
                  "expected 10 tab-separated columns, got " +
                      std::to_string(cols.size()));
    }
    std::string_view id_col = cols[0];
    if (id_col.find('-') != std::string_view::npos) continue;  // range line
    if (id_col.find('.') != std::string_view::npos) continue;  // empty node
    auto id = parse_int(id_col);
    if (!id || *id <= 0) {
      conllu_fail(lines_->line_number(), "unparsable token id");
    }
    if (*id != static_cast<int>(sentence.tokens.size()) + 1) {
      conllu_fail(lines_->line_number(),
                  "non-contiguous token id " + std::to_string(*id));
    }
    auto head = parse_int(cols[6]);
    if (!head) {
      conllu_fail(lines_->line_number(), "unparsable head");
    }
    UdToken token;
    token.index = *id;
    token.form = std::string(cols[1]);
    token.head = *head;
    token.deprel = std::string(cols[7]);
    sentence.tokens.push_back(std::move(token));
  }
  end_sentence();
  exhausted_ = true;
  if (!started && document.sentences.empty()) return std::nullopt;
  return document;
}

std::vector<DependencySentence> align_sentences(
    const std::vector<ConlluSentence>& sentences,
    std::string_view article_text) {
  std::u32string text32 = uni::to_utf32(article_text);
  std::vector<DependencySentence> aligned;
  aligned.reserve(sentences.size());
  std::size_t cursor = 0;
  for (std::size_t s = 0; s < sentences.size(); ++s) {
    DependencySentence out;
    out.tokens = sentences[s].tokens;
    for (UdToken& token : out.tokens) {
      std::u32string form32 =
          uni::to_utf32(uni::normalize_text(token.form));
      if (form32.empty()) {
        throw ConlluError("sentence " + std::to_string(s + 1) + " token " +
                          std::to_string(token.index) +
                          ": form is empty after normalization");
      }
      while (cursor < text32.size() && uni::is_space(text32[cursor])) {
        ++cursor;
      }
      std::size_t at;
      if (text32.compare(cursor, form32.size(), form32) == 0) {
        at = cursor;
      } else {
        at = text32.find(form32, cursor);
        if (at == std::u32string::npos) {
          throw ConlluError("sentence " + std::to_string(s + 1) + " token " +
                            std::to_string(token.index) + " (\"" +
                            token.form + "\"): not found in article text");
        }
      }
      token.span = Span{at, at + form32.size()};
      cursor = token.span.end;
    }
    if (!out.tokens.empty()) {
      out.char_offset = out.tokens.front().span.begin;
      std::size_t sentence_end = out.tokens.back().span.end;
      for (UdToken& token : out.tokens) {
        token.span.begin -= out.char_offset;
        token.span.end -= out.char_offset;
      }
      out.text = uni::to_utf8(text32.substr(
          out.char_offset, sentence_end - out.char_offset));
    }
    aligned.push_back(std::move(out));
  }
  return aligned;
}

std::vector<ExpressionMention> align_mentions(
    const std::vector<LocationAnnotation>& annotations,
    const std::vector<DependencySentence>& sentences,
    Diagnostics* diagnostics) {
  std::vector<ExpressionMention> mentions;
  mentions.reserve(annotations.size());
  for (const LocationAnnotation& annotation : annotations) {
    ExpressionMention mention;
    mention.annotation = annotation;
    for (std::size_t s = 0; s < sentences.size(); ++s) {
      const DependencySentence& sentence = sentences[s];
      if (sentence.tokens.empty()) continue;
      std::size_t begin = sentence.char_offset;
      std::size_t end =
          sentence.char_offset + sentence.tokens.back().span.end;
      if (annotation.span.begin < begin || annotation.span.begin >= end) {
        continue;
      }
      if (annotation.span.end > end) {
        if (diagnostics) {
          diagnostics->warn("annotation \"" + annotation.notation +
                            "\" crosses a sentence boundary; left unaligned");
        }
        break;
      }
      mention.sentence_index = s;
      for (const UdToken& token : sentence.tokens) {
        Span absolute{token.span.begin + begin, token.span.end + begin};
        if (absolute.overlaps(annotation.span)) {
          mention.token_ids.push_back(token.index);
        }
      }
      if (!mention.token_ids.empty()) {
        // Head: the covered token whose head is not itself covered.
        for (int id : mention.token_ids) {
          int head = sentence.tokens[static_cast<std::size_t>(id) - 1].head;
          bool internal =
              std::find(mention.token_ids.begin(), mention.token_ids.end(),
                        head) != mention.token_ids.end();
          if (!internal) {
            mention.head_token = id;
            break;
          }
        }
        if (mention.head_token == 0) {
          mention.head_token = mention.token_ids.front();
        }
      }
      break;
    }
    mentions.push_back(std::move(mention));
  }
  return mentions;
}

std::vector<ExpressionMention> mentions_from_text(
    const std::vector<LocationAnnotation>& annotations,
    const std::u32string& text) {
  std::vector<Span> sentences = segment_sentences(text);
  std::vector<ExpressionMention> mentions;
  mentions.reserve(annotations.size());
  for (const LocationAnnotation& annotation : annotations) {
    ExpressionMention mention;
    mention.annotation = annotation;
    for (std::size_t s = 0; s < sentences.size(); ++s) {
      if (annotation.span.begin >= sentences[s].begin &&
          annotation.span.begin < sentences[s].end) {
        mention.sentence_index = s;
        break;
      }
    }
    mentions.push_back(std::move(mention));
  }
  return mentions;
}

std::string_view to_string(Strategy strategy) {
  return strategy == Strategy::kFamiliarity ? "familiarity" : "dependency";
}

std::optional<Strategy> strategy_from_string(std::string_view name) {
  if (name == "familiarity") return Strategy::kFamiliarity;
  if (name == "dependency") return Strategy::kDependency;
  return std::nullopt;
}

std::string_view to_string(Provenance provenance) {
  switch (provenance) {
    case Provenance::kGazetteer:
      return "gazetteer";
    case Provenance::kCopiedPrevious:
      return "copied_previous";
    case Provenance::kUnresolved:
      return "unresolved";
  }
  return "unresolved";
}

std::optional<Provenance> provenance_from_string(std::string_view name) {
  if (name == "gazetteer") return Provenance::kGazetteer;
  if (name == "copied_previous") return Provenance::kCopiedPrevious;
  if (name == "unresolved") return Provenance::kUnresolved;
  return std::nullopt;
}

namespace {

// Nearest preceding mention in the same sentence that already has a
// coordinate; copied coordinates chain.
std::optional<Coordinate> copy_previous(
    const std::vector<Prediction>& predictions, std::size_t upto,
    std::size_t sentence_index) {
  if (sentence_index == kNoSentence) return std::nullopt;
  for (std::size_t j = upto; j-- > 0;) {
    if (predictions[j].mention.sentence_index != sentence_index) continue;
    if (predictions[j].predicted) return predictions[j].predicted;
  }
  return std::nullopt;
}

}  // namespace

std::vector<Prediction> resolve_familiarity(
    std::span<const ExpressionMention> mentions, const Gazetteer& gazetteer) {
  std::vector<Prediction> predictions;
  predictions.reserve(mentions.size());
  for (const ExpressionMention& mention : mentions) {
    Prediction prediction;
    prediction.mention = mention;
    prediction.strategy = Strategy::kFamiliarity;
    std::vector<const GazetteerEntry*> candidates =
        gazetteer.lookup(mention.annotation.notation);
    if (!candidates.empty()) {
      prediction.predicted = candidates.front()->coordinate;
      prediction.provenance = Provenance::kGazetteer;
    } else if (auto copied = copy_previous(predictions, predictions.size(),
                                           mention.sentence_index)) {
      prediction.predicted = copied;
      prediction.provenance = Provenance::kCopiedPrevious;
    } else {
      prediction.provenance = Provenance::kUnresolved;
    }
    predictions.push_back(std::move(prediction));
  }
  return predictions;
}

std::vector<DependentPair> find_dependent_pairs(
    std::span<const ExpressionMention> mentions,
    const std::vector<DependencySentence>& sentences) {
  std::vector<DependentPair> pairs;
  // token id -> mention index, per sentence.
  std::unordered_map<std::size_t, std::unordered_map<int, std::size_t>>
      owners;
  for (std::size_t m = 0; m < mentions.size(); ++m) {
    if (mentions[m].sentence_index == kNoSentence) continue;
    auto& sentence_owners = owners[mentions[m].sentence_index];
    for (int id : mentions[m].token_ids) {
      sentence_owners.emplace(id, m);
    }
  }
  for (std::size_t m = 0; m < mentions.size(); ++m) {
    const ExpressionMention& mention = mentions[m];
    if (mention.token_ids.empty() || mention.sentence_index == kNoSentence) {
      continue;
    }
    const DependencySentence& sentence = sentences[mention.sentence_index];
    const auto& sentence_owners = owners[mention.sentence_index];
    int walk =
        sentence.tokens[static_cast<std::size_t>(mention.head_token) - 1]
            .head;
    std::size_t guard = sentence.tokens.size();
    while (walk != 0 && guard-- > 0) {
      auto owner = sentence_owners.find(walk);
      if (owner != sentence_owners.end()) {
        if (owner->second != m) {
          pairs.push_back(DependentPair{owner->second, m});
        }
        break;
      }
      walk = sentence.tokens[static_cast<std::size_t>(walk) - 1].head;
    }
  }
  return pairs;
}

std::vector<Prediction> resolve_dependency(
    std::span<const ExpressionMention> mentions,
    std::span<const DependentPair> pairs, const Gazetteer& gazetteer) {
  std::vector<std::vector<std::size_t>> modifiers_of(mentions.size());
  for (const DependentPair& pair : pairs) {
    modifiers_of[pair.head_index].push_back(pair.modifier_index);
  }

  // Chains resolve bottom-up: a mention's height is one more than its
  // deepest modifier's. Malformed cycles collapse to height 0.
  std::vector<int> height(mentions.size(), -1);
  std::vector<int> state(mentions.size(), 0);
  auto compute_height = [&](auto&& self, std::size_t i) -> int {
    if (state[i] == 1) return 0;  // cycle guard
    if (height[i] >= 0) return height[i];
    state[i] = 1;
    int h = 0;
    for (std::size_t modifier : modifiers_of[i]) {
      h = std::max(h, 1 + self(self, modifier));
    }
    state[i] = 2;
    height[i] = h;
    return h;
  };
  for (std::size_t i = 0; i < mentions.size(); ++i) {
    compute_height(compute_height, i);
  }

  std::vector<std::size_t> order(mentions.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&height](std::size_t a, std::size_t b) {
                     return height[a] < height[b];
                   });

  std::vector<Prediction> predictions(mentions.size());
  for (std::size_t i : order) {
    const ExpressionMention& mention = mentions[i];
    Prediction& prediction = predictions[i];
    prediction.mention = mention;
    prediction.strategy = Strategy::kDependency;

    std::vector<std::size_t> resolved_modifiers;
    for (std::size_t modifier : modifiers_of[i]) {
      if (predictions[modifier].predicted) {
        resolved_modifiers.push_back(modifier);
      }
    }
    std::vector<const GazetteerEntry*> candidates =
        gazetteer.lookup(mention.annotation.notation);
    if (!resolved_modifiers.empty()) {
      if (!candidates.empty()) {
        const GazetteerEntry* best = nullptr;
        double best_distance = 0.0;
        for (const GazetteerEntry* candidate : candidates) {
          double distance = std::numeric_limits<double>::infinity();
          for (std::size_t modifier : resolved_modifiers) {
            distance = std::min(
                distance, haversine_km(candidate->coordinate,
                                       *predictions[modifier].predicted));
          }
          if (!best || distance < best_distance ||
              (distance == best_distance &&
               candidate->geoname_id < best->geoname_id)) {
            best = candidate;
            best_distance = distance;
          }
        }
        prediction.predicted = best->coordinate;
        prediction.provenance = Provenance::kGazetteer;
      } else {
        prediction.predicted =
            predictions[resolved_modifiers.front()].predicted;
        prediction.provenance = Provenance::kCopiedPrevious;
      }
      continue;
    }
    // No usable modifier: familiarity rule.
    if (!candidates.empty()) {
      prediction.predicted = candidates.front()->coordinate;
      prediction.provenance = Provenance::kGazetteer;
    } else if (auto copied =
                   copy_previous(predictions, i, mention.sentence_index)) {
      prediction.predicted = copied;
      prediction.provenance = Provenance::kCopiedPrevious;
    } else {
      prediction.provenance = Provenance::kUnresolved;
    }
  }
  return predictions;
}

std::string prediction_line(std::uint64_t page_id,
                            const Prediction& prediction) {
  ordered_json j;
  j["page_id"] = page_id;
  j["start"] = prediction.mention.annotation.span.begin;
  j["end"] = prediction.mention.annotation.span.end;
  j["strategy"] = to_string(prediction.strategy);
  j["provenance"] = to_string(prediction.provenance);
  if (prediction.predicted) {
    j["lat"] = format_degrees(prediction.predicted->lat);
    j["lon"] = format_degrees(prediction.predicted->lon);
  }
  return j.dump();
}

PredictionRecord parse_prediction_line(const std::string& line,
                                       std::uint64_t line_number) {
  auto fail = [line_number](const std::string& what) -> void {
    throw EvalError("predictions line " + std::to_string(line_number) +
                    ": " + what);
  };
  ordered_json j =
      ordered_json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) fail("not a JSON object");
  PredictionRecord record;
  auto page_id = j.find("page_id");
  auto start = j.find("start");
  auto end = j.find("end");
  if (page_id == j.end() || !page_id->is_number_unsigned() ||
      start == j.end() || !start->is_number_unsigned() || end == j.end() ||
      !end->is_number_unsigned()) {
    fail("page_id/start/end must be unsigned integers");
  }
  record.page_id = page_id->get<std::uint64_t>();
  record.span.begin = start->get<std::uint64_t>();
  record.span.end = end->get<std::uint64_t>();
  if (record.span.begin >= record.span.end) fail("empty or inverted span");
  auto strategy = j.find("strategy");
  if (strategy == j.end() || !strategy->is_string()) {
    fail("missing string \"strategy\"");
  }
  auto parsed_strategy = strategy_from_string(strategy->get<std::string>());
  if (!parsed_strategy) fail("unknown strategy");
  record.strategy = *parsed_strategy;
  auto provenance = j.find("provenance");
  if (provenance == j.end() || !provenance->is_string()) {
    fail("missing string \"provenance\"");
  }
  auto parsed_provenance =
      provenance_from_string(provenance->get<std::string>());
  if (!parsed_provenance) fail("unknown provenance");
  record.provenance = *parsed_provenance;
  auto lat = j.find("lat");
  auto lon = j.find("lon");
  bool has_coordinate = lat != j.end() || lon != j.end();
  if (record.provenance == Provenance::kUnresolved) {
    if (has_coordinate) fail("unresolved prediction carries a coordinate");
  } else {
    if (lat == j.end() || lon == j.end() || !lat->is_string() ||
        !lon->is_string()) {
      fail("resolved prediction must carry lat/lon strings");
    }
    auto lat_value = parse_degrees(lat->get<std::string>());
    auto lon_value = parse_degrees(lon->get<std::string>());
    if (!lat_value || !lon_value ||
        !coordinate_in_range(*lat_value, *lon_value)) {
      fail("unparsable or out-of-range coordinate");
    }
    record.predicted = Coordinate{*lat_value, *lon_value};
  }
  return record;
}

}  // namespace wikigeo
