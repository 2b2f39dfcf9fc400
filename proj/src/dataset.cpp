#include "lmdiff/dataset.hpp"

#include <algorithm>

#include "lmdiff/error.hpp"
#include "lmdiff/fileio.hpp"
#include "lmdiff/sha256.hpp"

namespace lmdiff {

namespace {

std::string_view trim(std::string_view s) {
  const auto* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

std::string_view unquote(std::string_view v) {
  if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front())
    return v.substr(1, v.size() - 2);
  return v;
}

// Splits on '\n' and drops one trailing '\r' per line.
std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (end == text.size()) break;
    start = end + 1;
  }
  return lines;
}

}  // namespace

std::string dataset_content_hash(std::span<const std::string> phrases) {
  Sha256 h;
  for (std::size_t i = 0; i < phrases.size(); ++i) {
    if (i > 0) h.update("\n");
    h.update(phrases[i]);
  }
  return h.hex_digest();
}

DatasetFile parse_dataset(std::string_view bytes) {
  if (bytes.starts_with("\xEF\xBB\xBF")) bytes.remove_prefix(3);
  const auto lines = split_lines(bytes);
  if (lines.empty() || trim(lines[0]) != "---")
    throw FormatError("dataset must start with a '---' header line");

  DatasetFile ds;
  std::string checksum;
  std::size_t i = 1;
  bool closed = false;
  for (; i < lines.size(); ++i) {
    const auto line = trim(lines[i]);
    if (line == "---") {
      closed = true;
      ++i;
      break;
    }
    if (line.empty() || line.front() == '#') continue;
    const auto colon = line.find(':');
    if (colon == std::string_view::npos || colon == 0)
      throw FormatError("malformed header line " + std::to_string(i + 1) + ": expected 'key: value'");
    std::string key(trim(line.substr(0, colon)));
    std::string value(unquote(trim(line.substr(colon + 1))));
    if (key == "name") ds.name = value;
    if (key == "checksum") checksum = value;
    ds.header.emplace_back(std::move(key), std::move(value));
  }
  if (!closed) throw FormatError("dataset header is not closed by '---'");
  if (ds.name.empty()) throw FormatError("dataset header lacks a 'name'");

  for (; i < lines.size(); ++i)
    if (!trim(lines[i]).empty()) ds.phrases.emplace_back(lines[i]);
  if (ds.phrases.empty()) throw FormatError("dataset '" + ds.name + "' has no phrases");

  ds.content_hash = dataset_content_hash(ds.phrases);
  if (!checksum.empty() && checksum != ds.content_hash)
    throw IntegrityError("dataset '" + ds.name + "' checksum " + checksum +
                         " does not match content hash " + ds.content_hash);
  return ds;
}

DatasetFile load_dataset(const std::filesystem::path& path) { return parse_dataset(read_file(path)); }

std::string render_dataset(std::string_view name, std::span<const std::string> phrases) {
  std::string out = "---\nname: ";
  out += name;
  out += "\nchecksum: ";
  out += dataset_content_hash(phrases);
  out += "\n---\n";
  for (const auto& p : phrases) {
    out += p;
    out += '\n';
  }
  return out;
}

std::string vocab_fingerprint(std::span<const VocabEntry> vocab) {
  std::vector<const VocabEntry*> sorted;
  sorted.reserve(vocab.size());
  for (const auto& e : vocab) sorted.push_back(&e);
  std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->id < b->id; });
  Sha256 h;
  for (const auto* e : sorted) {
    h.update(std::to_string(e->id)).update("\t").update(e->token).update("\n");
  }
  return h.hex_digest();
}

}  // namespace lmdiff
