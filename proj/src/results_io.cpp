#include <cstdio>

#include "binary.hpp"
#include "json.hpp"
#include "lmdiff/corpus_diff.hpp"
#include "lmdiff/error.hpp"

namespace lmdiff {

using nlohmann::json;

namespace {

ColumnKey parse_column(const std::string& name) {
  const auto key = parse_measure_key(name);
  if (key.absolute) throw FormatError("results column '" + name + "' cannot carry abs:");
  return key.column;
}

std::string escape_field(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  return out;
}

std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string write_results(const ComparisonResults& results) {
  json cols = json::array();
  for (const auto& c : results.columns) cols.push_back(column_name(c));
  const json meta{{"m1_id", results.m1_id},
                  {"m2_id", results.m2_id},
                  {"dataset_name", results.dataset_name},
                  {"dataset_hash", results.dataset_hash},
                  {"columns", cols},
                  {"row_count", results.rows.size()}};
  detail::ByteWriter w;
  w.raw(kResultsMagic);
  w.u32(kResultsFormatVersion);
  w.str(meta.dump());
  for (const auto& row : results.rows) {
    if (row.values.size() != results.columns.size())
      throw InvalidInput("row " + std::to_string(row.index) + " does not fill every column");
    w.u32(row.index);
    w.str(row.text);
    for (double v : row.values) w.f64(v);
  }
  return std::move(w).take();
}

ComparisonResults read_results(std::string_view bytes) {
  detail::ByteReader r(bytes, "results");
  if (r.remaining() < kResultsMagic.size() || r.raw(kResultsMagic.size()) != kResultsMagic)
    throw FormatError("not a comparison results file (bad magic)");
  const auto version = r.u32();
  if (version != kResultsFormatVersion)
    throw VersionError("unsupported results format version " + std::to_string(version));

  ComparisonResults res;
  std::size_t row_count = 0;
  try {
    const json meta = json::parse(r.str());
    res.m1_id = meta.at("m1_id").get<std::string>();
    res.m2_id = meta.at("m2_id").get<std::string>();
    res.dataset_name = meta.at("dataset_name").get<std::string>();
    res.dataset_hash = meta.at("dataset_hash").get<std::string>();
    for (const auto& c : meta.at("columns")) res.columns.push_back(parse_column(c.get<std::string>()));
    row_count = meta.at("row_count").get<std::size_t>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("results metadata: ") + e.what());
  } catch (const InvalidInput& e) {
    throw FormatError(std::string("results metadata: ") + e.what());
  }
  for (std::size_t i = 0; i < row_count; ++i) {
    ResultRow row;
    row.index = r.u32();
    row.text = r.str();
    row.values.resize(res.columns.size());
    for (double& v : row.values) v = r.f64();
    res.rows.push_back(std::move(row));
  }
  if (!r.done()) throw FormatError("results: trailing bytes");
  return res;
}

std::string write_results_tsv(const ComparisonResults& results) {
  std::string out = "index\ttext";
  for (const auto& c : results.columns) {
    out += '\t';
    out += column_name(c);
  }
  out += '\n';
  for (const auto& row : results.rows) {
    out += std::to_string(row.index);
    out += '\t';
    out += escape_field(row.text);
    for (double v : row.values) {
      out += '\t';
      out += format_value(v);
    }
    out += '\n';
  }
  return out;
}

}  // namespace lmdiff
