#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <functional>
#include <filesystem>
#include <sstream>

#include "nl2vis/dataset/corpus.hpp"
#include "nl2vis/eval/report.hpp"
#include "nl2vis/model.hpp"
#include "support/reference_model.hpp"

namespace ds = nl2vis::dataset;
namespace ev = nl2vis::eval;
namespace m = nl2vis::model;
namespace vz = nl2vis::vega_zero;
namespace fs = std::filesystem;

namespace {

const std::vector<ds::NvPair>& mini() {
  static const auto pairs = ds::load_corpus(fs::path(NL2VIS_DATA_DIR) / "mini_corpus.jsonl").pairs;
  return pairs;
}

vz::TokenSeq toks(const std::string& s) { return vz::tokenize(s); }

m::ModelConfig small_config(int epochs) {
  m::ModelConfig c;
  c.d_model = 32;
  c.n_heads = 2;
  c.n_layers = 1;
  c.ff_dim = 64;
  c.max_len = 128;
  c.epochs = epochs;
  c.learning_rate = 0.002;
  c.cnn = m::ModelConfig::default_cnn(32);
  return c;
}

// Twenty items (ten pairs, both augmentations) and a partly trained model.
struct Scenario {
  std::vector<ds::TrainingItem> items;
  ds::Vocabulary vocab;
  m::TrainResult trained;

  static const Scenario& get() {
    static const Scenario s = [] {
      std::vector<ds::NvPair> pairs;
      for (std::size_t i = 0; i < mini().size() && pairs.size() < 10; i += 6) pairs.push_back(mini()[i]);
      auto items = ds::augment_corpus(pairs);
      auto vocab = ds::Vocabulary::build(items);
      const auto set = m::make_example_set(items, vocab, m::EncoderVariant::native);
      auto trained = m::train(small_config(12), vocab.size(), set, set);
      return Scenario{std::move(items), std::move(vocab), std::move(trained)};
    }();
    return s;
  }
};

const ev::EvalRun& scenario_run() {
  static const ev::EvalRun run = [] {
    const auto& s = Scenario::get();
    return ev::evaluate(s.trained.model, s.vocab, s.items);
  }();
  return run;
}

}  // namespace

TEST(WordClass, FixedMembership) {
  for (auto w : {"mark", "data", "encoding", "aggregate", "transform"})
    EXPECT_EQ(ev::classify(w), ev::WordClass::easy_template) << w;
  for (auto w : {"x", "y", "color", "filter", "group", "bin", "sort", "topk"})
    EXPECT_EQ(ev::classify(w), ev::WordClass::hard_template) << w;
  for (auto w : {"bar", "employees", "count", "desc", "and", "<eos>"})
    EXPECT_EQ(ev::classify(w), ev::WordClass::non_template) << w;
}

TEST(WordClass, ClassCountsSumToLabelLength) {
  for (const auto& p : mini()) {
    const auto label = vz::serialize_tokens(p.label);
    const auto b = ev::template_breakdown({label}, {label});
    EXPECT_EQ(b.template_count.min + b.non_template_count.min, label.size());
    EXPECT_EQ(b.total_count.min, label.size());
  }
}

TEST(TemplateBreakdown, PerfectPredictionsHaveNoMistakes) {
  std::vector<vz::TokenSeq> labels;
  for (const auto& p : mini()) labels.push_back(vz::serialize_tokens(p.label));
  const auto b = ev::template_breakdown(labels, labels);
  for (std::size_t c = 0; c < 3; ++c) {
    EXPECT_EQ(b.incorrect[c].max, 0u);
    EXPECT_DOUBLE_EQ(b.accuracy[c].value(), 1.0);
  }
  EXPECT_EQ(b.items, labels.size());
  EXPECT_EQ(b.excluded, 0u);
}

TEST(TemplateBreakdown, OneWrongHardWord) {
  const auto label = toks("mark bar data t encoding x a y aggregate count a transform sort y desc");
  auto pred = label;
  pred[13] = "x";  // sort [y] -> sort x
  const auto b = ev::template_breakdown({pred}, {label});
  EXPECT_EQ(b.incorrect[0].max, 0u);
  EXPECT_EQ(b.incorrect[1].max, 1u);
  EXPECT_EQ(b.incorrect[2].max, 0u);
  // mark data encoding aggregate transform | x y sort y | bar t a count a desc
  EXPECT_EQ(b.accuracy[0].total, 5u);
  EXPECT_EQ(b.accuracy[1].total, 4u);
  EXPECT_EQ(b.accuracy[1].hits, 3u);
  EXPECT_EQ(b.accuracy[2].total, 6u);
  EXPECT_EQ(b.template_count.mean, 9.0);
}

TEST(TemplateBreakdown, LengthMismatchIsExcluded) {
  const auto a = toks("mark bar data t encoding x a y aggregate none b");
  auto shorter = a;
  shorter.pop_back();
  const auto b = ev::template_breakdown({shorter, a}, {a, a});
  EXPECT_EQ(b.excluded, 1u);
  EXPECT_EQ(b.items, 1u);
  EXPECT_EQ(b.accuracy[2].total, 5u);
}

TEST(ChartAccuracy, AllBarOnUniformChartsIsAQuarter) {
  std::vector<vz::TokenSeq> preds, labels;
  std::vector<bool> given;
  for (int i = 0; i < 40; ++i) {
    const auto chart = vz::to_string(vz::kAllChartTypes[static_cast<std::size_t>(i % 4)]);
    labels.push_back(toks("mark " + std::string(chart) + " data t encoding x a y aggregate none b"));
    preds.push_back(toks("mark bar data t encoding x a y aggregate none b"));
    given.push_back(i % 2 == 0);
  }
  const auto r = ev::chart_type_accuracy(preds, labels, given);
  EXPECT_DOUBLE_EQ(r.overall.value(), 0.25);
  EXPECT_EQ(r.query_only.total + r.query_plus_chart.total, 40u);
  EXPECT_DOUBLE_EQ(ev::chart_type_accuracy(labels, labels, given).overall.value(), 1.0);
}

TEST(Hardness, AllMatchesGiveFullRates) {
  using H = ds::Hardness;
  const auto rows = ev::hardness_report({true, true, true, true}, {H::easy, H::medium, H::hard, H::extra_hard});
  ASSERT_EQ(rows.size(), 4u);
  for (const auto& r : rows) EXPECT_DOUBLE_EQ(r.rate(), 1.0);
}

TEST(Hardness, HandCountedMix) {
  using H = ds::Hardness;
  const std::vector<bool> flags = {true, false, true, true, false, false, true, false, true, false};
  const std::vector<std::optional<H>> levels = {H::easy, H::easy, H::easy, H::medium, H::medium,
                                                H::hard, H::extra_hard, H::extra_hard, std::nullopt,
                                                std::nullopt};
  const auto rows = ev::hardness_report(flags, levels);
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_EQ(rows[0], (ev::HardnessRow{"Easy", 2, 1}));
  EXPECT_EQ(rows[1], (ev::HardnessRow{"Medium", 1, 1}));
  EXPECT_EQ(rows[2], (ev::HardnessRow{"Hard", 0, 1}));
  EXPECT_EQ(rows[3], (ev::HardnessRow{"Extra Hard", 1, 1}));
  EXPECT_EQ(rows[4], (ev::HardnessRow{"Unlabeled", 1, 1}));
  std::size_t total = 0;
  for (const auto& r : rows) total += r.count();
  EXPECT_EQ(total, flags.size());
}

TEST(ExactMatch, IgnoresClauseOrder) {
  EXPECT_TRUE(ev::exact_match("mark bar data t encoding x a y aggregate count a transform sort y desc group x",
                              "mark bar data t encoding x a y aggregate count a transform group x sort y desc"));
  EXPECT_FALSE(ev::exact_match("mark bar data t encoding x a y aggregate count a",
                               "mark line data t encoding x a y aggregate count a"));
  EXPECT_FALSE(ev::exact_match("mark bar data", "mark bar data"));
}

TEST(Evaluate, EmptyItemsAreAnError) {
  const auto& s = Scenario::get();
  EXPECT_THROW(ev::evaluate(s.trained.model, s.vocab, {}), nl2vis::CorpusError);
}

// Token accuracy recounted with the loop-based reference forward pass.
TEST(Evaluate, TokenAccuracyMatchesReferenceRecount) {
  const auto& s = Scenario::get();
  const auto& run = scenario_run();
  ASSERT_EQ(s.items.size(), 20u);
  const nl2vis::testing::ReferenceModel<float> ref(s.trained.model);
  std::size_t hits = 0, total = 0, hits_chart = 0, total_chart = 0;
  for (const auto& item : s.items) {
    const auto ex = ds::encode_example(item, s.vocab);
    const auto memory = ref.encode_native(ex.source_ids, ex.source_segment_ids);
    const std::vector<int> prefix(ex.label_ids.begin(), ex.label_ids.end() - 1);
    const auto logits = ref.decode(memory, prefix);
    for (std::size_t k = 0; k < logits.size(); ++k) {
      auto sorted = logits[k];
      std::sort(sorted.begin(), sorted.end(), std::greater<>());
      ASSERT_GT(sorted[0] - sorted[1], 1e-4) << "near tie would make the recount ambiguous";
      const auto best = std::max_element(logits[k].begin(), logits[k].end()) - logits[k].begin();
      const bool ok = best == ex.label_ids[k + 1];
      hits += ok;
      ++total;
      if (item.chart_given()) {
        hits_chart += ok;
        ++total_chart;
      }
    }
  }
  EXPECT_EQ(run.report.token_accuracy.overall.hits, hits);
  EXPECT_EQ(run.report.token_accuracy.overall.total, total);
  EXPECT_EQ(run.report.token_accuracy.query_plus_chart.hits, hits_chart);
  EXPECT_EQ(run.report.token_accuracy.query_plus_chart.total, total_chart);
  EXPECT_GT(hits, 0u);
  EXPECT_LT(hits, total);
}

// Guided accuracy recounted by comparing parsed ASTs with the stored labels.
TEST(Evaluate, GuidedAccuracyMatchesAstRecount) {
  const auto& s = Scenario::get();
  const auto& run = scenario_run();
  std::size_t hits = 0, hits_query = 0;
  for (std::size_t i = 0; i < s.items.size(); ++i) {
    const auto& guided = run.items[i].guided;
    bool ok = false;
    try {
      ok = !run.items[i].truncated && vz::parse(guided) == s.items[i].label;
    } catch (const nl2vis::Error&) {
    }
    hits += ok;
    if (!s.items[i].chart_given()) hits_query += ok;
  }
  EXPECT_EQ(run.report.guided_exact_match.overall.hits, hits);
  EXPECT_EQ(run.report.guided_exact_match.overall.total, s.items.size());
  EXPECT_EQ(run.report.guided_exact_match.query_only.hits, hits_query);
}

TEST(Evaluate, ChartAccuracyMatchesRecount) {
  const auto& s = Scenario::get();
  const auto& run = scenario_run();
  std::size_t guided = 0, raw = 0;
  for (std::size_t i = 0; i < s.items.size(); ++i) {
    const std::string want(vz::to_string(*s.items[i].label.mark));
    guided += run.items[i].guided.size() > 1 && run.items[i].guided[1] == want;
    raw += run.items[i].teacher_forced[1] == want;
  }
  EXPECT_EQ(run.report.chart_accuracy_guided.overall.hits, guided);
  EXPECT_EQ(run.report.chart_accuracy_raw.overall.hits, raw);
  // Narrowing: every chart-given item carries its chart word.
  EXPECT_EQ(run.report.chart_accuracy_guided.query_plus_chart.hits,
            run.report.chart_accuracy_guided.query_plus_chart.total);
}

TEST(Evaluate, TemplateBreakdownMatchesRecount) {
  const auto& s = Scenario::get();
  const auto& run = scenario_run();
  std::array<std::size_t, 3> hits{}, total{};
  for (std::size_t i = 0; i < s.items.size(); ++i) {
    const auto& label = s.items[i].label_tokens;
    for (std::size_t k = 0; k < label.size(); ++k) {
      const auto& w = label[k];
      std::size_t c = 2;
      if (w == "mark" || w == "data" || w == "encoding" || w == "aggregate" || w == "transform") c = 0;
      else if (w == "x" || w == "y" || w == "color" || w == "filter" || w == "group" || w == "bin" ||
               w == "sort" || w == "topk")
        c = 1;
      ++total[c];
      hits[c] += run.items[i].teacher_forced[k] == w;
    }
  }
  for (std::size_t c = 0; c < 3; ++c) {
    EXPECT_EQ(run.report.classes.accuracy[c].hits, hits[c]) << c;
    EXPECT_EQ(run.report.classes.accuracy[c].total, total[c]) << c;
  }
}

TEST(Evaluate, RepairNeverLosesMatches) {
  const auto& run = scenario_run();
  for (const auto& it : run.items)
    if (it.match) EXPECT_TRUE(it.corrected_match) << it.index;
  EXPECT_GE(run.report.after_correction.hits, run.report.before_correction.hits);
}

TEST(Evaluate, RepairRescuesSlippedPredictions) {
  std::vector<ev::ItemResult> items(2);
  items[0].label = toks("mark bar data customer encoding x state y aggregate count state transform filter cust_name like '%a%'");
  items[0].match = false;
  items[0].corrected = ev::correct_systematic_errors(
      "mark bar data customer encoding x state y aggregate count state transform filter cust_name like '%a'");
  items[0].corrected_match = ev::exact_match(items[0].corrected, vz::join(items[0].label));
  EXPECT_TRUE(items[0].corrected_match);
  items[1].label = items[0].label;
  const auto r = ev::summarize_run(items);
  EXPECT_EQ(r.before_correction.hits, 0u);
  EXPECT_EQ(r.after_correction.hits, 1u);
}

TEST(Evaluate, RatesAreBoundedAndHardnessAddsUp) {
  const auto& run = scenario_run();
  const auto j = ev::to_json(run.report);
  std::function<void(const nlohmann::json&)> walk = [&](const nlohmann::json& n) {
    if (n.is_object()) {
      for (auto it = n.begin(); it != n.end(); ++it) {
        if (it.key() == "rate") {
          EXPECT_GE(it->get<double>(), 0.0);
          EXPECT_LE(it->get<double>(), 1.0);
        }
        walk(*it);
      }
    } else if (n.is_array()) {
      for (const auto& e : n) walk(e);
    }
  };
  walk(j);
  std::size_t total = 0;
  for (const auto& row : j.at("hardness")) {
    EXPECT_EQ(row.at("success").get<std::size_t>() + row.at("failure").get<std::size_t>(),
              row.at("count").get<std::size_t>());
    total += row.at("count").get<std::size_t>();
  }
  EXPECT_EQ(total, run.report.items);
}

TEST(Evaluate, ReportIsAPureFunctionOfModelAndItems) {
  const auto& s = Scenario::get();
  const auto again = ev::evaluate(s.trained.model, s.vocab, s.items);
  EXPECT_EQ(again.report, scenario_run().report);
  EXPECT_EQ(ev::to_json(again.report).dump(), ev::to_json(scenario_run().report).dump());
  EXPECT_EQ(ev::to_text(again.report), ev::to_text(scenario_run().report));
}

TEST(Evaluate, ItemDumpHasOneLinePerItem) {
  const auto& run = scenario_run();
  std::ostringstream out;
  ev::write_items_jsonl(out, run.items);
  std::istringstream in(out.str());
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j.at("index").get<std::size_t>(), n);
    EXPECT_EQ(j.at("classes").size(), run.items[n].label.size());
    ++n;
  }
  EXPECT_EQ(n, run.items.size());
  const auto text = ev::to_text(run.report);
  EXPECT_NE(text.find("Token accuracy"), std::string::npos);
  EXPECT_NE(text.find("Extra Hard"), std::string::npos);
}

TEST(Evaluate, OverfitPairScoresPerfectly) {
  auto pair = ds::augment_pair(mini()[3], 0);
  const std::vector<ds::TrainingItem> items(pair.begin(), pair.end());
  const auto vocab = ds::Vocabulary::build(items);
  const auto set = m::make_example_set(items, vocab, m::EncoderVariant::native);
  m::ModelConfig c;
  c.epochs = 40;
  c.batch_size = 1;
  const auto trained = m::train(c, vocab.size(), set, set);
  const auto run = ev::evaluate(trained.model, vocab, items);
  EXPECT_DOUBLE_EQ(run.report.token_accuracy.overall.value(), 1.0);
  EXPECT_DOUBLE_EQ(run.report.guided_exact_match.overall.value(), 1.0);
  EXPECT_DOUBLE_EQ(run.report.greedy_exact_match->overall.value(), 1.0);
}

TEST(Evaluate, UntrainedModelIsNearChance) {
  const auto items = ds::augment_corpus(mini());
  const auto vocab = ds::Vocabulary::build(items);
  const m::Seq2Seq<float> net(small_config(1), vocab.size(), 4);
  ev::EvalOptions o;
  o.greedy = false;
  const auto run = ev::evaluate(net, vocab, items, nullptr, o);
  EXPECT_LT(run.report.token_accuracy.overall.value(), 0.05);
  EXPECT_LE(run.report.guided_exact_match.overall.hits, 1u);
}
