#pragma once

#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace grasp {

enum class Provenance { synthetic, human };

const char* to_string(Provenance p) noexcept;
Provenance provenance_from_string(const std::string& s);

/// label -> set of verbatim values
using EntityMap = std::map<std::string, std::set<std::string>>;

/// One sentence-level instance with its gold extraction targets.
struct Example {
  std::string id;
  std::string text;
  EntityMap entities;
  Provenance provenance = Provenance::human;

  /// Total number of values across all labels.
  std::size_t value_count() const;

  friend bool operator==(const Example&, const Example&) = default;
};

class CorpusError : public std::runtime_error {
 public:
  explicit CorpusError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

  /// 1-based line number of the offending record, 0 when not line-specific.
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class LabelSchema {
 public:
  explicit LabelSchema(std::vector<std::string> labels);

  /// Labels in order of first appearance across the examples.
  static LabelSchema from_examples(const std::vector<Example>& examples);

  const std::vector<std::string>& labels() const noexcept { return labels_; }
  bool contains(const std::string& label) const;

 private:
  std::vector<std::string> labels_;
};

struct DatasetSplit {
  std::vector<Example> candidates;
  std::vector<Example> validation;
  std::vector<Example> test;
};

struct CorpusDocument {
  std::string id;
  std::string text;
  std::size_t chunk_size = 2000;  // in code points
};

// Record codec. Entity values are emitted as sorted lists.
nlohmann::json to_json(const Example& e);
Example example_from_json(const nlohmann::json& j);

std::vector<Example> parse_examples(std::istream& in);
std::vector<Example> load_examples(const std::filesystem::path& path);
void write_examples(std::ostream& out, const std::vector<Example>& examples);
void save_examples(const std::filesystem::path& path, const std::vector<Example>& examples);

/// Deterministic partition into candidates / validation. Relative input order
/// is preserved within each side.
DatasetSplit split_dataset(const std::vector<Example>& examples, std::size_t n_validation,
                           std::uint64_t seed);

/// Draws n chunks by uniform start offset on the chunk-size grid (with replacement).
std::vector<std::string> sample_chunks(const CorpusDocument& doc, std::size_t n, std::uint64_t seed);

CorpusDocument load_document(const std::filesystem::path& path, std::size_t chunk_size);

}  // namespace grasp
