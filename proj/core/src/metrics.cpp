#include "grasp/metrics.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <stdexcept>

namespace grasp {

using nlohmann::json;

ExtractionCounts& ExtractionCounts::operator+=(const ExtractionCounts& o) {
  for (const auto& [label, c] : o.labels) labels[label] += c;
  return *this;
}

std::string normalize_value(const std::string& v) {
  constexpr const char* kSpace = " \t\r\n\f\v";
  const auto b = v.find_first_not_of(kSpace);
  if (b == std::string::npos) return {};
  const auto e = v.find_last_not_of(kSpace);
  return v.substr(b, e - b + 1);
}

namespace {

std::set<std::string> normalized(const std::set<std::string>& values) {
  std::set<std::string> out;
  for (const auto& v : values) {
    auto n = normalize_value(v);
    if (!n.empty()) out.insert(std::move(n));
  }
  return out;
}

double safe_div(double num, double den) {
  return den > 0 ? num / den : 0.0;
}

double harmonic(double p, double r) {
  return p + r > 0 ? 2.0 * p * r / (p + r) : 0.0;
}

}  // namespace

ExtractionCounts score_example(const Example& gold, const Prediction& pred) {
  if (gold.id != pred.example_id) {
    throw std::invalid_argument("prediction for '" + pred.example_id + "' scored against gold '" + gold.id + "'");
  }
  std::set<std::string> labels;
  for (const auto& [l, v] : gold.entities) labels.insert(l);
  for (const auto& [l, v] : pred.entities) labels.insert(l);

  ExtractionCounts out;
  static const std::set<std::string> kEmpty;
  for (const auto& label : labels) {
    const auto git = gold.entities.find(label);
    const auto pit = pred.entities.find(label);
    const auto g = normalized(git == gold.entities.end() ? kEmpty : git->second);
    const auto p = normalized(pit == pred.entities.end() ? kEmpty : pit->second);
    if (g.empty() && p.empty()) continue;
    LabelCounts c;
    for (const auto& v : p) (g.count(v) ? c.tp : c.fp) += 1;
    c.fn = g.size() - c.tp;
    out.labels[label] = c;
  }
  return out;
}

MetricReport aggregate(const std::vector<ExtractionCounts>& counts) {
  ExtractionCounts total;
  for (const auto& c : counts) total += c;

  MetricReport rep;
  LabelCounts pooled;
  double f1_sum = 0.0;
  std::size_t n_labels = 0;
  for (const auto& [label, c] : total.labels) {
    pooled += c;
    LabelScore s;
    s.counts = c;
    s.precision = safe_div(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fp));
    s.recall = safe_div(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fn));
    s.f1 = harmonic(s.precision, s.recall);
    if (c.tp + c.fp + c.fn > 0) {
      f1_sum += s.f1;
      ++n_labels;
    }
    rep.per_label.emplace(label, s);
  }
  rep.micro_precision = safe_div(static_cast<double>(pooled.tp), static_cast<double>(pooled.tp + pooled.fp));
  rep.micro_recall = safe_div(static_cast<double>(pooled.tp), static_cast<double>(pooled.tp + pooled.fn));
  rep.micro_f1 = harmonic(rep.micro_precision, rep.micro_recall);
  rep.macro_f1 = n_labels ? f1_sum / static_cast<double>(n_labels) : 0.0;
  return rep;
}

json MetricReport::to_json() const {
  json labels = json::object();
  for (const auto& [label, s] : per_label) {
    labels[label] = json{{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1},
                         {"tp", s.counts.tp},        {"fp", s.counts.fp},  {"fn", s.counts.fn}};
  }
  return json{{"micro_precision", micro_precision},
              {"micro_recall", micro_recall},
              {"micro_f1", micro_f1},
              {"macro_f1", macro_f1},
              {"labels", std::move(labels)}};
}

std::string MetricReport::label_table() const {
  std::string out = "label\ttp\tfp\tfn\tprecision\trecall\tf1\n";
  for (const auto& [label, s] : per_label) {
    out += fmt::format("{}\t{}\t{}\t{}\t{:.6f}\t{:.6f}\t{:.6f}\n", label, s.counts.tp, s.counts.fp, s.counts.fn,
                       s.precision, s.recall, s.f1);
  }
  return out;
}

std::vector<Prediction> load_predictions(const std::filesystem::path& path) {
  std::vector<Prediction> out;
  for (auto& e : load_examples(path)) out.push_back({std::move(e.id), std::move(e.entities)});
  return out;
}

void save_predictions(const std::filesystem::path& path, const std::vector<Prediction>& preds) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& p : preds) {
    json ents = json::object();
    for (const auto& [label, values] : p.entities) ents[label] = std::vector<std::string>(values.begin(), values.end());
    out << json{{"id", p.example_id}, {"text", ""}, {"entities", std::move(ents)}}.dump() << '\n';
  }
}

}  // namespace grasp
