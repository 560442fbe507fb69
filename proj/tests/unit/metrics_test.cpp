#include "grasp/metrics.hpp"

#include "fixtures.hpp"
#include "metric_oracle.hpp"

#include <gtest/gtest.h>

#include <tuple>

namespace grasp {
namespace {

using testing::make_example;
using testing::brute_force;

Prediction pred(const std::string& id, EntityMap e) { return {id, std::move(e)}; }

MetricReport score_all(const std::vector<Example>& gold, const std::vector<Prediction>& preds) {
  std::vector<ExtractionCounts> c;
  for (std::size_t i = 0; i < gold.size(); ++i) c.push_back(score_example(gold[i], preds[i]));
  return aggregate(c);
}

EntityMap random_entities(Rng& rng) {
  EntityMap m;
  const auto n_labels = rng.index(6);
  for (std::size_t l = 0; l < n_labels; ++l) {
    auto& vs = m["L" + std::to_string(rng.index(5))];
    for (std::size_t v = 0, n = 1 + rng.index(4); v < n; ++v) vs.insert(std::to_string(rng.index(6)));
  }
  return m;
}

TEST(ScoreExample, ExactMatch) {
  const auto c = score_example(make_example("x", {{"Revenue", {"125,843"}}}), pred("x", {{"Revenue", {"125,843"}}}));
  EXPECT_EQ(c.labels.at("Revenue"), (LabelCounts{1, 0, 0}));
}

TEST(ScoreExample, SetDifferences) {
  const auto c =
      score_example(make_example("x", {{"A", {"5", "7"}}, {"B", {"3"}}}), pred("x", {{"A", {"5", "9"}}, {"B", {}}}));
  EXPECT_EQ(c.labels.at("A"), (LabelCounts{1, 1, 1}));
  EXPECT_EQ(c.labels.at("B"), (LabelCounts{0, 0, 1}));
}

TEST(ScoreExample, HallucinatedValueOnNegative) {
  const auto c = score_example(make_example("x"), pred("x", {{"A", {"1"}}}));
  ASSERT_EQ(c.labels.size(), 1u);
  EXPECT_EQ(c.labels.at("A"), (LabelCounts{0, 1, 0}));
}

TEST(ScoreExample, IdMismatch) {
  EXPECT_THROW(score_example(make_example("x"), pred("y", {})), std::invalid_argument);
}

TEST(ScoreExample, TrimsWhitespaceOnly) {
  const auto c = score_example(make_example("x", {{"A", {"1,000"}}}), pred("x", {{"A", {" 1,000\n", "1000"}}}));
  EXPECT_EQ(c.labels.at("A"), (LabelCounts{1, 1, 0}));
  EXPECT_EQ(normalize_value("  $5 m \t"), "$5 m");
}

TEST(Aggregate, WorkedCase) {
  ExtractionCounts c;
  c.labels["A"] = {1, 1, 2};
  const auto r = aggregate({c});
  EXPECT_EQ(r.micro_precision, 0.5);
  EXPECT_DOUBLE_EQ(r.micro_recall, 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.micro_f1, 0.4);
}

TEST(Aggregate, MacroIsUnweightedMean) {
  ExtractionCounts c;
  c.labels["A"] = {1, 0, 1};  // F1 = 2/3
  c.labels["B"] = {0, 1, 0};  // F1 = 0
  EXPECT_DOUBLE_EQ(aggregate({c}).macro_f1, 1.0 / 3.0);
}

TEST(Aggregate, AllZero) {
  const auto r = aggregate({});
  EXPECT_EQ(r.micro_precision, 0.0);
  EXPECT_EQ(r.micro_recall, 0.0);
  EXPECT_EQ(r.micro_f1, 0.0);
  EXPECT_EQ(r.macro_f1, 0.0);
}

TEST(Metrics, MatchesBruteForceOracleProperty) {
  Rng rng(2024);
  for (int t = 0; t < 1000; ++t) {
    std::vector<Example> gold;
    std::vector<Prediction> preds;
    for (std::size_t i = 0, n = 1 + rng.index(5); i < n; ++i) {
      gold.push_back(make_example("e" + std::to_string(i), random_entities(rng)));
      preds.push_back(pred("e" + std::to_string(i), random_entities(rng)));
    }
    const auto r = score_all(gold, preds);
    const auto o = brute_force(gold, preds);
    EXPECT_NEAR(r.micro_precision, o.mp, 1e-12);
    EXPECT_NEAR(r.micro_recall, o.mr, 1e-12);
    EXPECT_NEAR(r.micro_f1, o.mf, 1e-12);
    EXPECT_NEAR(r.macro_f1, o.macro, 1e-12);
  }
}

TEST(Metrics, SwappingGoldAndPredictionSwapsPrecisionAndRecall) {
  Rng rng(7);
  for (int t = 0; t < 300; ++t) {
    std::vector<Example> gold, gold_swapped;
    std::vector<Prediction> preds, preds_swapped;
    for (std::size_t i = 0, n = 1 + rng.index(4); i < n; ++i) {
      const auto id = "e" + std::to_string(i);
      auto g = random_entities(rng), p = random_entities(rng);
      gold.push_back(make_example(id, g));
      preds.push_back(pred(id, p));
      gold_swapped.push_back(make_example(id, p));
      preds_swapped.push_back(pred(id, g));
    }
    const auto a = score_all(gold, preds), b = score_all(gold_swapped, preds_swapped);
    EXPECT_EQ(a.micro_precision, b.micro_recall);
    EXPECT_EQ(a.micro_recall, b.micro_precision);
  }
}

TEST(Metrics, OrderInsensitive) {
  // Values are sets; label iteration order is irrelevant by construction of
  // EntityMap, so check that insertion order cannot leak through.
  EntityMap a, b;
  a["X"].insert("1");
  a["X"].insert("2");
  a["A"].insert("9");
  b["A"].insert("9");
  b["X"].insert("2");
  b["X"].insert("1");
  const auto gold = make_example("x", {{"X", {"2"}}, {"A", {"8"}}});
  EXPECT_EQ(score_example(gold, pred("x", a)), score_example(gold, pred("x", b)));
}

TEST(Metrics, AddingCorrectValueNeverLowersMicroF1) {
  Rng rng(9);
  for (int t = 0; t < 500; ++t) {
    std::vector<Example> gold;
    std::vector<Prediction> preds;
    for (std::size_t i = 0, n = 1 + rng.index(4); i < n; ++i) {
      gold.push_back(make_example("e" + std::to_string(i), random_entities(rng)));
      preds.push_back(pred("e" + std::to_string(i), random_entities(rng)));
    }
    const auto before = score_all(gold, preds).micro_f1;
    // Add one gold value the prediction is missing, if any.
    bool added = false;
    for (std::size_t i = 0; i < gold.size() && !added; ++i) {
      for (const auto& [l, vs] : gold[i].entities) {
        for (const auto& v : vs) {
          if (!preds[i].entities[l].count(v)) {
            preds[i].entities[l].insert(v);
            added = true;
            break;
          }
        }
        if (added) break;
      }
    }
    EXPECT_GE(score_all(gold, preds).micro_f1, before);
  }
}

TEST(MetricReport, JsonAndTable) {
  ExtractionCounts c;
  c.labels["A"] = {2, 1, 1};
  const auto r = aggregate({c});
  const auto j = r.to_json();
  EXPECT_DOUBLE_EQ(j.at("micro_f1").get<double>(), r.micro_f1);
  EXPECT_NE(r.label_table().find("A\t"), std::string::npos);
}

TEST(Predictions, FileRoundTrip) {
  const auto dir = testing::temp_dir("predictions");
  std::vector<Prediction> p{pred("a", {{"X", {"1"}}}), pred("b", {})};
  save_predictions(dir / "p.jsonl", p);
  const auto back = load_predictions(dir / "p.jsonl");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].entities, p[0].entities);
  EXPECT_EQ(back[1].example_id, "b");
}

}  // namespace
}  // namespace grasp
