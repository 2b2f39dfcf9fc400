#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace lmdiff {

/// A corpus: a "---" delimited key/value header followed by one phrase per line.
struct DatasetFile {
  std::string name;
  std::string content_hash;
  std::vector<std::string> phrases;
  /// Every header entry in file order, including `name` and `checksum`.
  std::vector<std::pair<std::string, std::string>> header;
};

/// SHA-256 of the phrases joined by '\n' with no trailing newline.
std::string dataset_content_hash(std::span<const std::string> phrases);

/// Throws FormatError for a missing or malformed header or an empty body and
/// IntegrityError when a declared `checksum` does not match the phrases.
DatasetFile parse_dataset(std::string_view bytes);

DatasetFile load_dataset(const std::filesystem::path& path);

/// Canonical text form with `name` and `checksum` in the header.
std::string render_dataset(std::string_view name, std::span<const std::string> phrases);

struct VocabEntry {
  std::uint32_t id;
  std::string token;
};

/// SHA-256 over "id\ttoken\n" lines in ascending id order.
std::string vocab_fingerprint(std::span<const VocabEntry> vocab);

}  // namespace lmdiff
