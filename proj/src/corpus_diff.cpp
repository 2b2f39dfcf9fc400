#include "lmdiff/corpus_diff.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <thread>

#include "lmdiff/error.hpp"

namespace lmdiff {

std::string aggregation_name(const Aggregation& a) {
  switch (a.kind) {
    case Aggregation::Kind::Average: return "average";
    case Aggregation::Kind::Median: return "median";
    case Aggregation::Kind::UpperQuartile: return "upper_quartile";
    case Aggregation::Kind::Max: return "max";
    case Aggregation::Kind::TopkMean: return "topk_mean(" + std::to_string(a.k_agg) + ")";
  }
  return "";
}

std::optional<Aggregation> parse_aggregation(std::string_view name) {
  if (name == "average" || name == "mean") return Aggregation::average();
  if (name == "median") return Aggregation::median();
  if (name == "upper_quartile") return Aggregation::upper_quartile();
  if (name == "max" || name == "maximum") return Aggregation::max();
  if (name == "topk_mean") return Aggregation::topk_mean();
  constexpr std::string_view prefix = "topk_mean(";
  if (name.starts_with(prefix) && name.ends_with(")")) {
    const auto digits = name.substr(prefix.size(), name.size() - prefix.size() - 1);
    std::size_t k = 0;
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), k);
    if (ec == std::errc{} && ptr == digits.data() + digits.size() && k >= 1)
      return Aggregation::topk_mean(k);
  }
  return std::nullopt;
}

double aggregate(std::span<const double> values, const Aggregation& method) {
  if (values.empty()) throw InvalidInput("cannot aggregate an empty sequence");
  for (double v : values)
    if (!std::isfinite(v)) throw InvalidInput("cannot aggregate non-finite values");

  const std::size_t n = values.size();
  switch (method.kind) {
    case Aggregation::Kind::Average:
      return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
    case Aggregation::Kind::Max:
      return *std::max_element(values.begin(), values.end());
    default: break;
  }

  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  switch (method.kind) {
    case Aggregation::Kind::Median:
      return (sorted[(n - 1) / 2] + sorted[n / 2]) / 2.0;
    case Aggregation::Kind::UpperQuartile: {
      // nearest rank: ceil(3n/4), 1-based
      const std::size_t rank = (3 * n + 3) / 4;
      return sorted[rank - 1];
    }
    case Aggregation::Kind::TopkMean: {
      if (method.k_agg == 0) throw InvalidInput("topk_mean needs k >= 1");
      const std::size_t k = std::min(method.k_agg, n);
      double sum = 0.0;
      for (std::size_t i = 0; i < k; ++i) sum += sorted[n - 1 - i];
      return sum / static_cast<double>(k);
    }
    default: break;
  }
  return 0.0;
}

std::string column_name(const ColumnKey& key) {
  return std::string(base_measure_name(key.base)) + ":" + aggregation_name(key.agg);
}

std::string measure_key_name(const MeasureKey& key) {
  return (key.absolute ? "abs:" : "") + column_name(key.column);
}

MeasureKey parse_measure_key(std::string_view text) {
  MeasureKey key;
  std::string_view rest = text;
  if (rest.starts_with("abs:")) {
    key.absolute = true;
    rest.remove_prefix(4);
  }
  const auto colon = rest.find(':');
  if (colon == std::string_view::npos)
    throw InvalidInput("measure key '" + std::string(text) + "' must look like base:aggregation");
  const auto base = parse_base_measure(rest.substr(0, colon));
  if (!base) throw InvalidInput("unknown measure '" + std::string(rest.substr(0, colon)) + "'");
  const auto agg = parse_aggregation(rest.substr(colon + 1));
  if (!agg) throw InvalidInput("unknown aggregation '" + std::string(rest.substr(colon + 1)) + "'");
  key.column = {*base, *agg};
  return key;
}

ScoreGrid ScoreGrid::default_grid() {
  ScoreGrid g;
  for (const auto& gm : all_global_measures())
    g.columns.push_back({gm.base, gm.reducer == Reducer::Average ? Aggregation::average()
                                                                 : Aggregation::max()});
  for (BaseMeasure b : {BaseMeasure::ProbDiff, BaseMeasure::RankDiff, BaseMeasure::ClampedRankDiff}) {
    g.columns.push_back({b, Aggregation::median()});
    g.columns.push_back({b, Aggregation::upper_quartile()});
    g.columns.push_back({b, Aggregation::topk_mean()});
  }
  return g;
}

std::size_t ComparisonResults::column_index(const ColumnKey& key) const {
  const auto it = std::find(columns.begin(), columns.end(), key);
  if (it == columns.end()) throw InvalidInput("measure '" + column_name(key) + "' is not in the results");
  return static_cast<std::size_t>(it - columns.begin());
}

std::vector<double> ComparisonResults::column_values(const MeasureKey& key) const {
  const std::size_t c = column_index(key.column);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(key.absolute ? std::fabs(r.values[c]) : r.values[c]);
  return out;
}

ComparisonResults score_corpus(const AnalysisCache& c1, const AnalysisCache& c2,
                               const ScoreGrid& grid, std::uint32_t rank_cap, unsigned threads) {
  const auto report = check_comparable(c1, c2);
  if (!report.comparable)
    throw ComparabilityError("caches '" + c1.model_id + "' and '" + c2.model_id + "' are not comparable",
                             report.reasons);
  if (c1.phrases.size() != c2.phrases.size())
    throw ComparabilityError("caches hold different phrase counts", {"phrase counts differ"});

  ComparisonResults res;
  res.m1_id = c1.model_id;
  res.m2_id = c2.model_id;
  res.dataset_name = c1.dataset_name;
  res.dataset_hash = c1.dataset_hash;
  res.columns = grid.columns;
  res.rows.resize(c1.phrases.size());

  const MeasureConfig cfg{rank_cap, c1.k};
  auto score_one = [&](std::size_t i) {
    std::vector<LocalMeasures> local;
    try {
      local = phrase_measures(c1.phrases[i], c2.phrases[i], cfg);
    } catch (const AlignmentError& e) {
      throw AlignmentError("phrase " + std::to_string(i) + ": " + e.what(), e.position,
                           static_cast<std::ptrdiff_t>(i));
    }
    auto& row = res.rows[i];
    row.index = static_cast<std::uint32_t>(i);
    row.text = c1.phrases[i].phrase_text;
    row.values.reserve(grid.columns.size());
    std::vector<double> series(local.size());
    std::optional<BaseMeasure> loaded;
    for (const auto& col : grid.columns) {
      if (loaded != col.base) {
        const auto id = as_local(col.base);
        for (std::size_t t = 0; t < local.size(); ++t) series[t] = measure_value(local[t], id);
        loaded = col.base;
      }
      row.values.push_back(aggregate(series, col.agg));
    }
  };

  const std::size_t n = res.rows.size();
  if (threads == 0) threads = std::max(1U, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(1, n / 64)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) score_one(i);
    return res;
  }

  // Strided partition; rows are written in place so the merge is by index.
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < n; i += threads) score_one(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  // Report the lowest failing phrase regardless of thread scheduling.
  std::exception_ptr first;
  std::ptrdiff_t first_index = -1;
  for (auto& e : errors) {
    if (!e) continue;
    try {
      std::rethrow_exception(e);
    } catch (const AlignmentError& a) {
      if (first_index < 0 || a.phrase_index < first_index) {
        first_index = a.phrase_index;
        first = e;
      }
    } catch (...) {
      if (!first) first = e;
    }
  }
  if (first) std::rethrow_exception(first);
  return res;
}

SuggestionSet top_snippets(const ComparisonResults& results, const MeasureKey& key, std::size_t n) {
  const auto values = results.column_values(key);
  std::vector<SuggestionEntry> all(values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    all[i] = {results.rows[i].index, values[i]};
  const auto before = [](const SuggestionEntry& a, const SuggestionEntry& b) {
    return a.score > b.score || (a.score == b.score && a.index < b.index);
  };
  const std::size_t take = std::min(n, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(take), all.end(), before);
  all.resize(take);
  return {measure_key_name(key), std::move(all)};
}

Histogram make_histogram(std::span<const double> values, std::size_t bin_count, std::size_t marker_count) {
  if (values.empty()) throw InvalidInput("histogram of an empty sequence");
  if (bin_count == 0) throw InvalidInput("histogram needs at least one bin");
  for (double v : values)
    if (!std::isfinite(v)) throw InvalidInput("histogram of non-finite values");

  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double hi = *hi_it;

  Histogram h;
  if (lo == hi) {
    h.edges = {lo - 0.5, lo + 0.5};
    h.counts = {values.size()};
  } else {
    h.edges.resize(bin_count + 1);
    for (std::size_t i = 0; i < bin_count; ++i)
      h.edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bin_count);
    h.edges[bin_count] = hi;
    h.counts.assign(bin_count, 0);
    const double width = (hi - lo) / static_cast<double>(bin_count);
    for (double v : values) {
      auto b = static_cast<std::size_t>(std::min((v - lo) / width, static_cast<double>(bin_count - 1)));
      // Snap to the stored edges so membership is edges[b] <= v < edges[b+1].
      while (b > 0 && v < h.edges[b]) --b;
      while (b + 1 < bin_count && v >= h.edges[b + 1]) ++b;
      ++h.counts[b];
    }
  }

  const std::size_t m = std::min(marker_count, values.size());
  std::vector<double> sorted(values.begin(), values.end());
  std::partial_sort(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(m), sorted.end(),
                    std::greater<>());
  h.markers.assign(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(m));
  return h;
}

Histogram corpus_histogram(const ComparisonResults& results, const MeasureKey& key, std::size_t bin_count) {
  if (results.rows.empty()) throw InvalidInput("results hold no rows");
  const auto values = results.column_values(key);
  return make_histogram(values, bin_count, kDefaultMarkerCount);
}

}  // namespace lmdiff
