#pragma once

// Corpus-level scoring of a cache pair: per-phrase aggregates of the local
// measures, ranked suggestion lists and histograms for the global view.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lmdiff/cache.hpp"
#include "lmdiff/measures.hpp"

namespace lmdiff {

inline constexpr std::size_t kDefaultSuggestionCount = 50;
inline constexpr std::size_t kDefaultMarkerCount = 20;
inline constexpr std::size_t kDefaultBinCount = 51;
inline constexpr std::size_t kDefaultTopkMean = 10;

struct Aggregation {
  enum class Kind { Average, Median, UpperQuartile, Max, TopkMean };
  Kind kind = Kind::Average;
  std::size_t k_agg = kDefaultTopkMean;  // only used by TopkMean

  static Aggregation average() { return {Kind::Average}; }
  static Aggregation median() { return {Kind::Median}; }
  static Aggregation upper_quartile() { return {Kind::UpperQuartile}; }
  static Aggregation max() { return {Kind::Max}; }
  static Aggregation topk_mean(std::size_t k = kDefaultTopkMean) { return {Kind::TopkMean, k}; }

  friend bool operator==(const Aggregation& a, const Aggregation& b) {
    return a.kind == b.kind && (a.kind != Kind::TopkMean || a.k_agg == b.k_agg);
  }
};

/// "average", "median", "upper_quartile", "max", "topk_mean(10)".
std::string aggregation_name(const Aggregation& a);

/// Accepts the names above plus "maximum" and a bare "topk_mean" (k = 10).
std::optional<Aggregation> parse_aggregation(std::string_view name);

/// Throws InvalidInput on an empty sequence or a topk_mean with k_agg == 0.
/// Median averages the two central order statistics for even lengths; the
/// upper quartile is the ceil(0.75 n)-th smallest value; topk_mean averages the
/// min(k_agg, n) largest values.
double aggregate(std::span<const double> values, const Aggregation& method);

struct ColumnKey {
  BaseMeasure base;
  Aggregation agg;

  friend bool operator==(const ColumnKey&, const ColumnKey&) = default;
};

std::string column_name(const ColumnKey& key);

/// A column key, optionally prefixed with "abs:" to rank by magnitude.
struct MeasureKey {
  ColumnKey column;
  bool absolute = false;
};

std::string measure_key_name(const MeasureKey& key);

/// Parses "base:agg" or "abs:base:agg". Throws InvalidInput.
MeasureKey parse_measure_key(std::string_view text);

struct ScoreGrid {
  std::vector<ColumnKey> columns;

  /// The eight global measures (four bases by average and max) followed by
  /// median, upper quartile and topk_mean(10) for the probability, rank and
  /// clamped rank differences.
  static ScoreGrid default_grid();
};

struct ResultRow {
  std::uint32_t index = 0;
  std::string text;
  std::vector<double> values;  // one per column, in column order

  friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

struct ComparisonResults {
  std::string m1_id;
  std::string m2_id;
  std::string dataset_name;
  std::string dataset_hash;
  std::vector<ColumnKey> columns;
  std::vector<ResultRow> rows;

  /// Throws InvalidInput if the column is not part of the grid.
  std::size_t column_index(const ColumnKey& key) const;

  /// Column values in row order, with `abs` applied when requested.
  std::vector<double> column_values(const MeasureKey& key) const;

  friend bool operator==(const ComparisonResults&, const ComparisonResults&) = default;
};

/// Scores every phrase of a comparable cache pair. Throws ComparabilityError
/// for incomparable caches and AlignmentError (with the phrase index) when a
/// phrase's tokens do not line up. `threads == 0` picks the hardware count.
ComparisonResults score_corpus(const AnalysisCache& c1, const AnalysisCache& c2,
                               const ScoreGrid& grid = ScoreGrid::default_grid(),
                               std::uint32_t rank_cap = kDefaultRankCap, unsigned threads = 0);

struct SuggestionEntry {
  std::uint32_t index = 0;
  double score = 0.0;

  friend bool operator==(const SuggestionEntry&, const SuggestionEntry&) = default;
};

struct SuggestionSet {
  std::string key;
  std::vector<SuggestionEntry> entries;  // descending score, ascending index on ties
};

SuggestionSet top_snippets(const ComparisonResults& results, const MeasureKey& key,
                           std::size_t n = kDefaultSuggestionCount);

struct Histogram {
  std::vector<double> edges;  // counts.size() + 1, strictly increasing
  std::vector<std::uint64_t> counts;
  std::vector<double> markers;  // largest values, descending
};

/// Uniform bins over [min, max]; the last bin is closed on both ends. A
/// constant input yields one bin of width 1 centred on the value.
Histogram make_histogram(std::span<const double> values, std::size_t bin_count = kDefaultBinCount,
                         std::size_t marker_count = kDefaultMarkerCount);

Histogram corpus_histogram(const ComparisonResults& results, const MeasureKey& key,
                           std::size_t bin_count = kDefaultBinCount);

/// Binary form: "LMDR" | u32 version | u32 len + JSON metadata |
/// per row: u32 index, u32 len + text, f64 value per column.
inline constexpr std::uint32_t kResultsFormatVersion = 1;
inline constexpr std::string_view kResultsMagic = "LMDR";

std::string write_results(const ComparisonResults& results);
ComparisonResults read_results(std::string_view bytes);

/// Tab-separated table, one row per phrase. Text fields escape '\\', '\t',
/// '\n' and '\r'; values are printed with round-trip precision.
std::string write_results_tsv(const ComparisonResults& results);

}  // namespace lmdiff
