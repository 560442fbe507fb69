#pragma once

#include "grasp/corpus.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <string>
#include <vector>

namespace grasp {

/// Model output for one example.
struct Prediction {
  std::string example_id;
  EntityMap entities;
};

struct LabelCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  LabelCounts& operator+=(const LabelCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  friend bool operator==(const LabelCounts&, const LabelCounts&) = default;
};

/// label -> counts. Only labels that occur in gold or prediction are present.
struct ExtractionCounts {
  std::map<std::string, LabelCounts> labels;

  ExtractionCounts& operator+=(const ExtractionCounts& o);
  friend bool operator==(const ExtractionCounts&, const ExtractionCounts&) = default;
};

struct LabelScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  LabelCounts counts;
};

struct MetricReport {
  double micro_precision = 0.0;
  double micro_recall = 0.0;
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;
  std::map<std::string, LabelScore> per_label;

  nlohmann::json to_json() const;
  /// Tab-separated per-label table with a header row.
  std::string label_table() const;
};

/// Surrounding whitespace removed; nothing else.
std::string normalize_value(const std::string& v);

/// Per-label set comparison after normalization. Throws std::invalid_argument
/// when the ids differ.
ExtractionCounts score_example(const Example& gold, const Prediction& pred);

/// Micro scores pool counts over labels; macro-F1 averages per-label F1 over
/// labels with any gold or predicted value. 0/0 is taken as 0.
MetricReport aggregate(const std::vector<ExtractionCounts>& counts);

std::vector<Prediction> load_predictions(const std::filesystem::path& path);
void save_predictions(const std::filesystem::path& path, const std::vector<Prediction>& preds);

}  // namespace grasp
