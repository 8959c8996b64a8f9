#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "wikigeo/annotator.hpp"
#include "wikigeo/corpus.hpp"
#include "wikigeo/dump_ingest.hpp"
#include "wikigeo/errors.hpp"
#include "wikigeo/evaluator.hpp"
#include "wikigeo/gazetteer.hpp"
#include "wikigeo/geocoder.hpp"
#include "wikigeo/io.hpp"
#include "wikigeo/unicode.hpp"

namespace {

using namespace wikigeo;

void print_kv(const char* key, std::uint64_t value) {
  std::printf("%-30s %llu\n", key, static_cast<unsigned long long>(value));
}

void print_kv(const char* key, double value) {
  std::printf("%-30s %.6f\n", key, value);
}

// Runs fn(i) for every index with a small thread pool, results in order.
template <typename Result, typename Fn>
std::vector<Result> parallel_map(std::size_t n, unsigned workers, Fn fn) {
  std::vector<Result> results(n);
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) results[i] = fn(i);
    return results;
  }
  std::atomic<std::size_t> cursor{0};
  auto run = [&] {
    while (true) {
      std::size_t i = cursor.fetch_add(1);
      if (i >= n) return;
      results[i] = fn(i);
    }
  };
  std::vector<std::thread> threads;
  unsigned count = std::min<std::size_t>(workers, n);
  threads.reserve(count);
  for (unsigned t = 0; t < count; ++t) threads.emplace_back(run);
  for (std::thread& t : threads) t.join();
  return results;
}

constexpr std::size_t kBatchPerWorker = 64;

struct BuildOptions {
  std::string html_dump;
  std::string coord_dump;
  std::string format = "fixture";
  std::string coord_format;  // empty: derived from format
  std::string out;
  unsigned workers = 1;
  bool deterministic = false;
};

int cmd_build(const BuildOptions& opt) {
  DumpFormat article_format = opt.format == "fixture"
                                  ? DumpFormat::kFixture
                                  : DumpFormat::kEnterprise;
  DumpFormat coord_format;
  if (!opt.coord_format.empty()) {
    coord_format = *dump_format_from_string(opt.coord_format);
  } else {
    coord_format = opt.format == "fixture" ? DumpFormat::kFixture
                                           : DumpFormat::kCirrus;
  }

  Diagnostics diagnostics;
  diagnostics.echo_to(&std::cerr);

  auto coord_lines = io::open_lines(opt.coord_dump);
  CoordinateIndex index =
      build_coordinate_index(*coord_lines, coord_format, &diagnostics);
  ArticleStream articles(io::open_lines(opt.html_dump), article_format,
                         &diagnostics);
  auto sink = io::open_line_sink(opt.out);

  std::uint64_t annotated = 0, skipped = 0, failed = 0;
  std::uint64_t n_hyperlink = 0, n_title_match = 0;
  std::uint64_t links_total = 0, links_unindexed = 0;
  std::uint64_t written = 0;
  std::vector<std::pair<std::uint64_t, std::string>> buffered;

  std::size_t batch_size = kBatchPerWorker * std::max(1u, opt.workers);
  bool exhausted = false;
  while (!exhausted) {
    std::vector<RawArticle> batch;
    batch.reserve(batch_size);
    while (batch.size() < batch_size) {
      std::optional<RawArticle> article = articles.next();
      if (!article) {
        exhausted = true;
        break;
      }
      batch.push_back(std::move(*article));
    }
    if (batch.empty()) break;
    std::vector<AnnotateResult> results = parallel_map<AnnotateResult>(
        batch.size(), opt.workers,
        [&batch, &index](std::size_t i) {
          return annotate_article(batch[i], index);
        });
    for (std::size_t i = 0; i < results.size(); ++i) {
      AnnotateResult& result = results[i];
      links_total += result.links_total;
      links_unindexed += result.links_unindexed;
      switch (result.status) {
        case AnnotateStatus::kAnnotated: {
          for (const LocationAnnotation& a : result.article.annotations) {
            if (a.source == AnnotationSource::kHyperlink) ++n_hyperlink;
            else ++n_title_match;
          }
          ++annotated;
          std::string line = corpus_line(result.article);
          if (opt.deterministic) {
            buffered.emplace_back(result.article.page_id, std::move(line));
          } else {
            sink->write(line);
            ++written;
          }
          break;
        }
        case AnnotateStatus::kSkippedNoCoordinate:
          ++skipped;
          break;
        case AnnotateStatus::kFailed:
          ++failed;
          diagnostics.warn("article \"" + batch[i].title + "\" (page_id " +
                           std::to_string(batch[i].page_id) +
                           "): " + result.error);
          break;
      }
    }
  }
  if (opt.deterministic) {
    std::stable_sort(buffered.begin(), buffered.end(),
                     [](const auto& a, const auto& b) {
                       return a.first < b.first;
                     });
    for (const auto& [page_id, line] : buffered) {
      (void)page_id;
      sink->write(line);
      ++written;
    }
  }
  sink->close();

  print_kv("dump lines read", articles.lines_read());
  print_kv("dump lines malformed", articles.lines_skipped());
  print_kv("articles annotated", annotated);
  print_kv("articles skipped", skipped);
  print_kv("articles failed", failed);
  print_kv("annotations total", n_hyperlink + n_title_match);
  print_kv("  hyperlink", n_hyperlink);
  print_kv("  title_match", n_title_match);
  print_kv("anchor links seen", links_total);
  print_kv("anchor links unindexed", links_unindexed);
  print_kv("index entries", index.size());
  print_kv("index duplicate titles", index.duplicates());
  print_kv("corpus lines written", written);
  print_kv("warnings", diagnostics.count());
  return 0;
}

struct StatsOptions {
  std::string corpus;
  std::string out;  // optional JSON report
};

int cmd_stats(const StatsOptions& opt) {
  CorpusReader reader(io::open_lines(opt.corpus));
  StatsAccumulator accumulator;
  while (std::optional<AnnotatedArticle> article = reader.next()) {
    accumulator.add(*article);
  }
  CorpusStats stats = accumulator.finalize();

  print_kv("articles", stats.n_articles);
  print_kv("sentences", stats.n_sentences);
  print_kv("tokens", stats.n_tokens);
  print_kv("expressions", stats.n_expressions);
  print_kv("unique_notations", stats.n_unique_notations);
  print_kv("ambiguous_expressions", stats.n_ambiguous_expressions);
  print_kv("recessive_expressions", stats.n_recessive_expressions);
  print_kv("ambiguous_unique_notations", stats.n_ambiguous_unique_notations);
  print_kv("ambiguous_expression_fraction",
           stats.ambiguous_expression_fraction);
  print_kv("recessive_expression_fraction",
           stats.recessive_expression_fraction);
  print_kv("ambiguous_unique_fraction", stats.ambiguous_unique_fraction);
  print_kv("per_article_sentences", stats.per_article_sentences);
  print_kv("per_article_tokens", stats.per_article_tokens);
  print_kv("per_article_expressions", stats.per_article_expressions);
  print_kv("per_article_unique_expressions",
           stats.per_article_unique_expressions);
  std::printf("note: sentence and token counts come from the built-in "
              "segmenter and are approximate\n");

  if (!opt.out.empty()) {
    nlohmann::ordered_json j;
    j["articles"] = stats.n_articles;
    j["sentences"] = stats.n_sentences;
    j["tokens"] = stats.n_tokens;
    j["expressions"] = stats.n_expressions;
    j["unique_notations"] = stats.n_unique_notations;
    j["ambiguous_expressions"] = stats.n_ambiguous_expressions;
    j["recessive_expressions"] = stats.n_recessive_expressions;
    j["ambiguous_unique_notations"] = stats.n_ambiguous_unique_notations;
    j["ambiguous_expression_fraction"] = stats.ambiguous_expression_fraction;
    j["recessive_expression_fraction"] = stats.recessive_expression_fraction;
    j["ambiguous_unique_fraction"] = stats.ambiguous_unique_fraction;
    j["per_article_sentences"] = stats.per_article_sentences;
    j["per_article_tokens"] = stats.per_article_tokens;
    j["per_article_expressions"] = stats.per_article_expressions;
    j["per_article_unique_expressions"] =
        stats.per_article_unique_expressions;
    auto sink = io::open_line_sink(opt.out);
    sink->write(j.dump(2));
    sink->close();
  }
  return 0;
}

// Hands out parse documents by page id, reading forward on demand and
// caching documents the corpus has not asked for yet.
class ConlluDocs {
 public:
  explicit ConlluDocs(std::unique_ptr<io::LineSource> lines)
      : reader_(std::move(lines)) {}

  std::optional<ConlluDocument> take(std::uint64_t page_id) {
    auto it = cache_.find(page_id);
    if (it != cache_.end()) {
      ConlluDocument document = std::move(it->second);
      cache_.erase(it);
      return document;
    }
    while (!exhausted_) {
      std::optional<ConlluDocument> document = reader_.next();
      if (!document) {
        exhausted_ = true;
        break;
      }
      if (!document->has_page_id) {
        throw ConlluError(
            "document without a \"# newdoc id = <page_id>\" marker cannot "
            "be joined to the corpus");
      }
      if (document->page_id == page_id) return document;
      cache_.emplace(document->page_id, std::move(*document));
    }
    return std::nullopt;
  }

 private:
  ConlluReader reader_;
  std::unordered_map<std::uint64_t, ConlluDocument> cache_;
  bool exhausted_ = false;
};

struct GeocodeOptions {
  std::string corpus;
  std::string gazetteer;
  std::string strategy;
  std::string conllu;
  std::string out;
  std::uint64_t sample_size = 0;  // 0: no sampling
  std::uint64_t seed = 0;
  bool has_seed = false;
  unsigned workers = 1;
};

// Seeded uniform sample of page ids; sorted input makes the draw a
// function of the id set, not of corpus order.
std::unordered_set<std::uint64_t> sample_page_ids(
    std::vector<std::uint64_t> ids, std::uint64_t size, std::uint64_t seed) {
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  std::uint64_t k = std::min<std::uint64_t>(size, ids.size());
  std::mt19937_64 rng(seed);
  for (std::uint64_t i = 0; i < k; ++i) {
    std::uint64_t j = i + rng() % (ids.size() - i);
    std::swap(ids[i], ids[j]);
  }
  return {ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(k)};
}

struct ArticlePredictions {
  std::vector<std::string> lines;
  std::uint64_t by_provenance[3] = {0, 0, 0};
};

ArticlePredictions predict_article(const AnnotatedArticle& article,
                                   std::optional<ConlluDocument> document,
                                   Strategy strategy,
                                   const Gazetteer& gazetteer,
                                   Diagnostics* diagnostics) {
  std::vector<ExpressionMention> mentions;
  std::vector<DependentPair> pairs;
  if (strategy == Strategy::kDependency && document) {
    std::vector<DependencySentence> sentences =
        align_sentences(document->sentences, article.text);
    mentions = align_mentions(article.annotations, sentences, diagnostics);
    pairs = find_dependent_pairs(mentions, sentences);
  } else {
    mentions = mentions_from_text(article.annotations,
                                  uni::to_utf32(article.text));
  }
  std::vector<Prediction> predictions =
      strategy == Strategy::kFamiliarity
          ? resolve_familiarity(mentions, gazetteer)
          : resolve_dependency(mentions, pairs, gazetteer);
  ArticlePredictions result;
  result.lines.reserve(predictions.size());
  for (const Prediction& prediction : predictions) {
    result.lines.push_back(prediction_line(article.page_id, prediction));
    ++result.by_provenance[static_cast<int>(prediction.provenance)];
  }
  return result;
}

int cmd_geocode(const GeocodeOptions& opt) {
  Strategy strategy = *strategy_from_string(opt.strategy);
  Diagnostics diagnostics;
  diagnostics.echo_to(&std::cerr);

  auto gazetteer_lines = io::open_lines(opt.gazetteer);
  Gazetteer gazetteer =
      Gazetteer::load_geonames(*gazetteer_lines, &diagnostics);

  std::optional<std::unordered_set<std::uint64_t>> selected;
  if (opt.sample_size > 0) {
    std::vector<std::uint64_t> ids;
    CorpusReader scan(io::open_lines(opt.corpus));
    while (std::optional<AnnotatedArticle> article = scan.next()) {
      ids.push_back(article->page_id);
    }
    selected = sample_page_ids(std::move(ids), opt.sample_size, opt.seed);
  }

  std::optional<ConlluDocs> documents;
  if (strategy == Strategy::kDependency) {
    documents.emplace(io::open_lines(opt.conllu));
  } else if (!opt.conllu.empty()) {
    std::cerr << "note: --conllu is not used by the familiarity strategy\n";
  }

  CorpusReader reader(io::open_lines(opt.corpus));
  auto sink = io::open_line_sink(opt.out);
  std::uint64_t articles_processed = 0, predictions_written = 0;
  std::uint64_t by_provenance[3] = {0, 0, 0};
  std::uint64_t missing_documents = 0;

  std::size_t batch_size = kBatchPerWorker * std::max(1u, opt.workers);
  bool exhausted = false;
  while (!exhausted) {
    std::vector<AnnotatedArticle> batch;
    std::vector<std::optional<ConlluDocument>> batch_docs;
    while (batch.size() < batch_size) {
      std::optional<AnnotatedArticle> article = reader.next();
      if (!article) {
        exhausted = true;
        break;
      }
      if (selected && !selected->count(article->page_id)) continue;
      if (documents) {
        batch_docs.push_back(documents->take(article->page_id));
        if (!batch_docs.back()) ++missing_documents;
      } else {
        batch_docs.emplace_back();
      }
      batch.push_back(std::move(*article));
    }
    if (batch.empty()) break;
    std::vector<ArticlePredictions> results =
        parallel_map<ArticlePredictions>(
            batch.size(), opt.workers, [&](std::size_t i) {
              return predict_article(batch[i], std::move(batch_docs[i]),
                                     strategy, gazetteer, nullptr);
            });
    for (ArticlePredictions& result : results) {
      ++articles_processed;
      for (int p = 0; p < 3; ++p) by_provenance[p] += result.by_provenance[p];
      for (std::string& line : result.lines) {
        sink->write(line);
        ++predictions_written;
      }
    }
  }
  sink->close();

  print_kv("articles processed", articles_processed);
  if (selected) print_kv("articles sampled", selected->size());
  print_kv("predictions written", predictions_written);
  print_kv("  gazetteer", by_provenance[0]);
  print_kv("  copied_previous", by_provenance[1]);
  print_kv("  unresolved", by_provenance[2]);
  if (strategy == Strategy::kDependency) {
    print_kv("articles without parse", missing_documents);
  }
  if (diagnostics.count() > 0) print_kv("warnings", diagnostics.count());
  return 0;
}

struct EvalOptions {
  std::string corpus;
  std::vector<std::string> predictions;
  std::vector<double> tolerances;
  std::string out;
};

int cmd_eval(const EvalOptions& opt) {
  // Gold coordinates keyed by page id and span.
  std::unordered_map<std::uint64_t,
                     std::unordered_map<std::uint64_t, Coordinate>>
      gold;
  {
    CorpusReader reader(io::open_lines(opt.corpus));
    while (std::optional<AnnotatedArticle> article = reader.next()) {
      auto& spans = gold[article->page_id];
      for (const LocationAnnotation& a : article->annotations) {
        std::uint64_t key = (static_cast<std::uint64_t>(a.span.begin) << 32) |
                            static_cast<std::uint64_t>(a.span.end);
        spans[key] = a.coordinate;
      }
    }
  }

  struct Scored {
    std::vector<std::optional<Coordinate>> predicted;
    std::vector<Coordinate> gold;
  };
  std::unordered_map<std::string, Scored> by_strategy;
  for (const std::string& path : opt.predictions) {
    auto lines = io::open_lines(path);
    std::string line;
    while (lines->next(line)) {
      if (line.empty()) continue;
      PredictionRecord record =
          parse_prediction_line(line, lines->line_number());
      auto page = gold.find(record.page_id);
      std::uint64_t key =
          (static_cast<std::uint64_t>(record.span.begin) << 32) |
          static_cast<std::uint64_t>(record.span.end);
      if (page == gold.end() || !page->second.count(key)) {
        throw EvalError(
            path + " line " + std::to_string(lines->line_number()) +
            ": no gold annotation for page_id " +
            std::to_string(record.page_id) + " span [" +
            std::to_string(record.span.begin) + ", " +
            std::to_string(record.span.end) + ")");
      }
      Scored& scored = by_strategy[std::string(to_string(record.strategy))];
      scored.predicted.push_back(record.predicted);
      scored.gold.push_back(page->second[key]);
    }
  }
  if (by_strategy.empty()) {
    std::cerr << "note: no predictions found; nothing to score\n";
    return 0;
  }

  for (const char* strategy : {"familiarity", "dependency"}) {
    auto it = by_strategy.find(strategy);
    if (it == by_strategy.end()) continue;
    const Scored& scored = it->second;
    std::vector<AccuracyPoint> curve =
        accuracy_curve(scored.predicted, scored.gold, opt.tolerances);
    std::string path = opt.out + "_" + strategy + ".tsv";
    auto sink = io::open_line_sink(path);
    write_accuracy_tsv(curve, *sink);
    sink->close();
    AccuracyPoint at161 = accuracy_at(scored.predicted, scored.gold, 161.0);
    std::printf("accuracy@161km %s %.6f (n=%llu)\n", strategy, at161.accuracy,
                static_cast<unsigned long long>(at161.n_scored));
    std::printf("wrote %s\n", path.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Builds a coordinate-annotated corpus from article dumps and "
               "evaluates gazetteer geocoding strategies over it"};
  app.require_subcommand(1);

  BuildOptions build;
  CLI::App* build_cmd = app.add_subcommand(
      "build", "Annotate a dump into a corpus file");
  build_cmd->add_option("--html-dump", build.html_dump,
                        "Article dump (JSONL, optionally .gz or tar)")
      ->required()->check(CLI::ExistingFile);
  build_cmd->add_option("--coord-dump", build.coord_dump,
                        "Coordinate dump (JSONL, optionally .gz)")
      ->required()->check(CLI::ExistingFile);
  build_cmd->add_option("--format", build.format,
                        "Dump flavor: fixture, enterprise or cirrus")
      ->check(CLI::IsMember({"fixture", "enterprise", "cirrus"}));
  build_cmd->add_option("--coord-format", build.coord_format,
                        "Override coordinate dump flavor (fixture or cirrus)")
      ->check(CLI::IsMember({"fixture", "cirrus"}));
  build_cmd->add_option("--out", build.out, "Corpus output path (JSONL)")
      ->required();
  build_cmd->add_option("--workers", build.workers, "Annotation threads")
      ->check(CLI::Range(1u, 256u));
  build_cmd->add_flag("--deterministic", build.deterministic,
                      "Sort corpus lines by page_id");

  StatsOptions stats;
  CLI::App* stats_cmd =
      app.add_subcommand("stats", "Corpus statistics report");
  stats_cmd->add_option("--corpus", stats.corpus, "Corpus file")
      ->required()->check(CLI::ExistingFile);
  stats_cmd->add_option("--out", stats.out, "Also write the report as JSON");

  GeocodeOptions geocode;
  CLI::App* geocode_cmd = app.add_subcommand(
      "geocode", "Resolve corpus expressions against a gazetteer");
  geocode_cmd->add_option("--corpus", geocode.corpus, "Corpus file")
      ->required()->check(CLI::ExistingFile);
  geocode_cmd->add_option("--gazetteer", geocode.gazetteer,
                          "GeoNames main-table TSV")
      ->required()->check(CLI::ExistingFile);
  geocode_cmd->add_option("--strategy", geocode.strategy,
                          "familiarity or dependency")
      ->required()->check(CLI::IsMember({"familiarity", "dependency"}));
  geocode_cmd->add_option("--conllu", geocode.conllu,
                          "Dependency parses (CoNLL-U with newdoc ids); "
                          "required for the dependency strategy")
      ->check(CLI::ExistingFile);
  geocode_cmd->add_option("--out", geocode.out, "Predictions output (JSONL)")
      ->required();
  geocode_cmd->add_option("--sample-size", geocode.sample_size,
                          "Evaluate a seeded random article sample")
      ->check(CLI::PositiveNumber);
  CLI::Option* seed_option =
      geocode_cmd->add_option("--seed", geocode.seed, "Sampling seed");
  geocode_cmd->add_option("--workers", geocode.workers, "Resolution threads")
      ->check(CLI::Range(1u, 256u));

  EvalOptions eval;
  CLI::App* eval_cmd = app.add_subcommand(
      "eval", "Score predictions against gold coordinates");
  eval_cmd->add_option("--corpus", eval.corpus, "Corpus file (gold)")
      ->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--predictions", eval.predictions,
                       "Prediction files (repeatable)")
      ->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--tolerances", eval.tolerances,
                       "Comma-separated tolerance distances in km "
                       "(default 10,25,50,100,161,250,500,1000,2000)")
      ->delimiter(',');
  eval_cmd->add_option("--out", eval.out,
                       "Report path prefix; writes <out>_<strategy>.tsv")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*build_cmd) return cmd_build(build);
    if (*stats_cmd) return cmd_stats(stats);
    if (*geocode_cmd) {
      if (geocode.strategy == "dependency" && geocode.conllu.empty()) {
        std::cerr << "error: --conllu is required with --strategy "
                     "dependency\n";
        return 2;
      }
      if (geocode.sample_size > 0 && seed_option->count() == 0) {
        std::cerr << "error: --sample-size requires --seed\n";
        return 2;
      }
      geocode.has_seed = seed_option->count() > 0;
      return cmd_geocode(geocode);
    }
    if (*eval_cmd) {
      if (eval.tolerances.empty()) {
        eval.tolerances = {10, 25, 50, 100, 161, 250, 500, 1000, 2000};
      }
      for (std::size_t i = 0; i < eval.tolerances.size(); ++i) {
        if (eval.tolerances[i] < 0 ||
            (i > 0 && eval.tolerances[i] <= eval.tolerances[i - 1])) {
          std::cerr << "error: --tolerances must be non-negative and "
                       "strictly ascending\n";
          return 2;
        }
      }
      return cmd_eval(eval);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
