#include "grasp/corpus.hpp"

#include "grasp/rng.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_set>

namespace grasp {

using nlohmann::json;

const char* to_string(Provenance p) noexcept {
  return p == Provenance::synthetic ? "synthetic" : "human";
}

Provenance provenance_from_string(const std::string& s) {
  if (s == "synthetic") return Provenance::synthetic;
  if (s == "human") return Provenance::human;
  throw CorpusError("unknown provenance '" + s + "'");
}

std::size_t Example::value_count() const {
  std::size_t n = 0;
  for (const auto& [label, values] : entities) {
    n += values.size();
  }
  return n;
}

LabelSchema::LabelSchema(std::vector<std::string> labels) : labels_(std::move(labels)) {
  if (labels_.empty()) {
    throw CorpusError("label schema is empty");
  }
  std::set<std::string> seen;
  for (const auto& l : labels_) {
    if (l.empty()) throw CorpusError("empty label name in schema");
    if (!seen.insert(l).second) throw CorpusError("duplicate label '" + l + "' in schema");
  }
}

LabelSchema LabelSchema::from_examples(const std::vector<Example>& examples) {
  std::vector<std::string> labels;
  std::set<std::string> seen;
  for (const auto& e : examples) {
    for (const auto& [label, values] : e.entities) {
      if (seen.insert(label).second) labels.push_back(label);
    }
  }
  return LabelSchema(std::move(labels));
}

bool LabelSchema::contains(const std::string& label) const {
  return std::find(labels_.begin(), labels_.end(), label) != labels_.end();
}

json to_json(const Example& e) {
  json ents = json::object();
  for (const auto& [label, values] : e.entities) {
    ents[label] = std::vector<std::string>(values.begin(), values.end());
  }
  return json{{"id", e.id}, {"text", e.text}, {"entities", std::move(ents)},
              {"provenance", to_string(e.provenance)}};
}

Example example_from_json(const json& j) {
  if (!j.is_object()) throw CorpusError("record is not an object");
  Example e;
  if (!j.contains("id") || !j["id"].is_string()) throw CorpusError("missing string field 'id'");
  if (!j.contains("text") || !j["text"].is_string()) throw CorpusError("missing string field 'text'");
  e.id = j["id"].get<std::string>();
  e.text = j["text"].get<std::string>();
  if (e.id.empty()) throw CorpusError("empty id");
  if (auto it = j.find("entities"); it != j.end() && !it->is_null()) {
    if (!it->is_object()) throw CorpusError("'entities' must be an object");
    for (const auto& [label, values] : it->items()) {
      if (label.empty()) throw CorpusError("empty label name");
      if (!values.is_array()) throw CorpusError("entities['" + label + "'] must be a list");
      auto& set = e.entities[label];
      for (const auto& v : values) {
        if (!v.is_string()) throw CorpusError("entities['" + label + "'] holds a non-string value");
        auto s = v.get<std::string>();
        if (s.empty()) throw CorpusError("empty value string for label '" + label + "'");
        set.insert(std::move(s));
      }
      if (set.empty()) e.entities.erase(label);
    }
  }
  if (auto it = j.find("provenance"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw CorpusError("'provenance' must be a string");
    e.provenance = provenance_from_string(it->get<std::string>());
  }
  return e;
}

std::vector<Example> parse_examples(std::istream& in) {
  std::vector<Example> out;
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& err) {
      throw CorpusError(std::string("malformed record: ") + err.what(), lineno);
    }
    Example e;
    try {
      e = example_from_json(j);
    } catch (const CorpusError& err) {
      throw CorpusError(err.what(), lineno);
    }
    if (!ids.insert(e.id).second) {
      throw CorpusError("duplicate id '" + e.id + "'", lineno);
    }
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<Example> load_examples(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open examples file " + path.string());
  return parse_examples(in);
}

void write_examples(std::ostream& out, const std::vector<Example>& examples) {
  for (const auto& e : examples) {
    out << to_json(e).dump() << '\n';
  }
}

void save_examples(const std::filesystem::path& path, const std::vector<Example>& examples) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CorpusError("cannot write " + path.string());
  write_examples(out, examples);
}

DatasetSplit split_dataset(const std::vector<Example>& examples, std::size_t n_validation,
                           std::uint64_t seed) {
  if (n_validation >= examples.size() && !(n_validation == 0 && examples.empty())) {
    throw CorpusError("n_validation (" + std::to_string(n_validation) +
                      ") must be smaller than the number of examples (" +
                      std::to_string(examples.size()) + ")");
  }
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rng.index(i)]);
  }
  std::vector<bool> is_validation(examples.size(), false);
  for (std::size_t i = 0; i < n_validation; ++i) is_validation[order[i]] = true;

  DatasetSplit split;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    (is_validation[i] ? split.validation : split.candidates).push_back(examples[i]);
  }
  return split;
}

namespace {

// Byte offsets of every UTF-8 code point start, plus the end offset.
std::vector<std::size_t> code_point_offsets(const std::string& s) {
  std::vector<std::size_t> offs;
  offs.reserve(s.size() + 1);
  for (std::size_t i = 0; i < s.size(); ++i) {
    if ((static_cast<unsigned char>(s[i]) & 0xC0) != 0x80) offs.push_back(i);
  }
  offs.push_back(s.size());
  return offs;
}

}  // namespace

std::vector<std::string> sample_chunks(const CorpusDocument& doc, std::size_t n, std::uint64_t seed) {
  if (doc.text.empty()) throw CorpusError("document '" + doc.id + "' is empty");
  if (doc.chunk_size == 0) throw CorpusError("chunk size must be positive");
  std::vector<std::string> chunks;
  if (n == 0) return chunks;

  const auto offs = code_point_offsets(doc.text);
  const std::size_t n_chars = offs.size() - 1;
  const std::size_t n_windows = (n_chars + doc.chunk_size - 1) / doc.chunk_size;
  Rng rng(seed);
  chunks.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t w = rng.index(n_windows);
    const std::size_t begin = offs[w * doc.chunk_size];
    const std::size_t end = offs[std::min(n_chars, (w + 1) * doc.chunk_size)];
    chunks.push_back(doc.text.substr(begin, end - begin));
  }
  return chunks;
}

CorpusDocument load_document(const std::filesystem::path& path, std::size_t chunk_size) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorpusError("cannot open corpus file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  CorpusDocument doc{path.filename().string(), ss.str(), chunk_size};
  if (doc.text.empty()) throw CorpusError("corpus file " + path.string() + " is empty");
  if (chunk_size == 0) throw CorpusError("chunk size must be positive");
  return doc;
}

}  // namespace grasp
