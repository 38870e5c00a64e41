// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nl2vis/dataset/corpus.hpp"
#include "nl2vis/dataset/nvbench.hpp"
#include "nl2vis/decoder/prepare.hpp"
#include "nl2vis/eval/correction.hpp"
#include "nl2vis/eval/evaluator.hpp"
#include "nl2vis/model.hpp"
#include "nl2vis/vega_zero.hpp"
#include "support/generators.hpp"
#include "support/gradcheck.hpp"
#include "support/reference_model.hpp"

namespace ds = nl2vis::dataset;
namespace dec = nl2vis::decoder;
namespace ev = nl2vis::eval;
namespace m = nl2vis::model;
namespace vz = nl2vis::vega_zero;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream o;
  o.setf(std::ios::fixed);
  o.precision(digits);
  o << v;
  return o.str();
}

fs::path data_dir() { return fs::path(NL2VIS_DATA_DIR); }

const ds::CorpusLoad& mini_load() {
  static const auto load = ds::load_corpus(data_dir() / "mini_corpus.jsonl");
  return load;
}
const std::vector<ds::NvPair>& mini() { return mini_load().pairs; }

const std::vector<ds::TrainingItem>& mini_items() {
  static const auto items = ds::augment_corpus(mini());
  return items;
}

const ds::Vocabulary& mini_vocab() {
  static const auto v = ds::Vocabulary::build(mini_items());
  return v;
}

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

bool schema_valid(const vz::TokenSeq& tokens, const vz::DatabaseSchema& schema) {
  try {
    return vz::validate(vz::parse(tokens), schema).error_count() == 0;
  } catch (const nl2vis::Error&) {
    return false;
  }
}

// parse(serialize(ast)) == ast over generator-random trees.
Outcome grammar_round_trip() {
  std::mt19937 rng(20240601);
  int failures = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto ast = nl2vis::testing::random_ast(rng);
    try {
      if (vz::parse(vz::serialize(ast)) != ast) ++failures;
    } catch (const nl2vis::Error&) {
      ++failures;
    }
  }
  return {failures == 0, "1000 random trees, " + std::to_string(failures) + " failures"};
}

// Every bundled label parses, validates and re-serializes to its normalized text.
Outcome corpus_parse() {
  std::ifstream in(data_dir() / "mini_corpus.jsonl");
  std::size_t records = 0, ok = 0;
  std::vector<std::string> bad;
  for (std::string line; std::getline(in, line);) {
    if (line.empty()) continue;
    ++records;
    const auto j = nlohmann::json::parse(line);
    const std::string text = j.at("label");
    try {
      const auto ast = vz::parse(text);
      const auto it = std::find_if(mini().begin(), mini().end(), [&](const ds::NvPair& p) { return p.id == j.at("id"); });
      const bool valid = it != mini().end() && vz::validate(ast, it->schema).error_count() == 0;
      const std::string canon = vz::serialize(ast);
      const bool stable = valid && canon == vz::normalize(text) && vz::serialize(vz::parse(canon)) == canon &&
                          it->label == ast;
      if (valid && stable) ++ok;
      else bad.push_back(j.at("id"));
    } catch (const nl2vis::Error& e) {
      bad.push_back(j.at("id").get<std::string>() + " (" + e.what() + ")");
    }
  }
  std::string detail = std::to_string(ok) + "/" + std::to_string(records) + " labels";
  if (!bad.empty()) detail += ", first failure " + bad.front();
  return {records > 0 && ok == records && mini_load().rejects.empty(), detail};
}

// Compiled charts of every bundled label satisfy the Vega-Lite v5 schema.
Outcome vegalite_conformance() {
  const auto validator = vz::JsonSchemaValidator::from_file(fs::path(NL2VIS_SCHEMA_DIR) / "vega-lite-v5.json");
  std::size_t ok = 0;
  std::string first;
  for (const auto& p : mini()) {
    const auto doc = vz::compile_to_vegalite(p.label, vz::DataRef::url(p.table + ".csv"), &p.table_schema());
    const auto errors = validator.validate(doc);
    if (errors.empty()) ++ok;
    else if (first.empty()) first = p.id + ": " + errors.front();
  }
  std::string detail = std::to_string(ok) + "/" + std::to_string(mini().size()) + " documents valid";
  if (!first.empty()) detail += ", " + first;
  return {ok == mini().size(), detail};
}

// Analytic against central finite-difference gradients, tiny configuration.
Outcome gradient_check() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  std::string where;
  for (auto v : {m::EncoderVariant::native, m::EncoderVariant::external, m::EncoderVariant::external_cnn,
                 m::EncoderVariant::combined}) {
    const auto r = nl2vis::testing::gradient_check(v);
    if (r.max_rel_error >= worst) {
      worst = r.max_rel_error;
      where = std::string(m::to_string(v)) + "/" + r.worst_tensor;
    }
  }
  const double secs = seconds_since(t0);
  std::ostringstream o;
  o << "max relative error " << std::scientific << worst << " (" << where << "), " << fmt(secs, 1) << " s";
  return {worst <= 1e-4 && secs < 60.0, o.str()};
}

// Native variant on the 128 augmented mini-corpus items, learning rate 0.0005.
Outcome overfit_reproduction(ev::EvalReport* report_out) {
  const auto t0 = Clock::now();
  m::ModelConfig c;
  c.learning_rate = 0.0005;
  c.epochs = NL2VIS_OVERFIT_EPOCHS;
  const auto set = m::make_example_set(mini_items(), mini_vocab(), m::EncoderVariant::native);
  const auto trained = m::train(c, mini_vocab().size(), set, set);
  ev::EvalOptions eo;
  eo.greedy = false;
  const auto run = ev::evaluate(trained.model, mini_vocab(), mini_items(), nullptr, eo);
  const double secs = seconds_since(t0);
  *report_out = run.report;
  const double tok = run.report.token_accuracy.overall.value();
  const double guided = run.report.guided_exact_match.overall.value();
  const std::string detail = std::to_string(mini_items().size()) + " items, " + std::to_string(c.epochs) +
                             " epochs (selected " + std::to_string(trained.selected_epoch) + "), token accuracy " +
                             fmt(tok) + ", guided exact match " + fmt(guided) + ", " + fmt(secs, 1) + " s";
  return {c.epochs <= 200 && tok >= 0.95 && guided >= 0.90 && secs < 300.0, detail};
}

// Randomly initialised models still decode to grammatical, schema-valid queries.
Outcome guided_validity() {
  int decodes = 0, violations = 0;
  std::string first;
  for (std::uint32_t seed = 1; seed <= 4; ++seed) {
    const m::Seq2Seq<float> net(small_config(1), mini_vocab().size(), seed * 7919);
    for (std::size_t i = seed; i < mini_items().size() && decodes < 25 * static_cast<int>(seed); i += 5) {
      const auto& item = mini_items()[i];
      const auto src = dec::prepare_item(item, mini_vocab(), m::EncoderVariant::native);
      const auto r = dec::guided_decode(net, mini_vocab(), src.input());
      ++decodes;
      if (r.truncated || !schema_valid(r.tokens, mini()[item.pair_index].schema)) {
        ++violations;
        if (first.empty()) first = vz::join(r.tokens);
      }
    }
  }
  std::string detail = std::to_string(decodes) + " decodes, " + std::to_string(violations) + " violations";
  if (!first.empty()) detail += ", first: " + first;
  return {decodes == 100 && violations == 0, detail};
}

// Chart-given sources always yield the given chart word.
Outcome chart_narrowing() {
  int given = 0, honoured = 0;
  for (std::uint32_t seed : {11u, 12u, 13u}) {
    const m::Seq2Seq<float> net(small_config(1), mini_vocab().size(), seed);
    for (const auto& item : mini_items()) {
      if (!item.chart_given()) continue;
      const auto src = dec::prepare_item(item, mini_vocab(), m::EncoderVariant::native);
      const auto r = dec::guided_decode(net, mini_vocab(), src.input());
      ++given;
      honoured += r.tokens.size() > 1 && r.tokens[1] == vz::to_string(*item.label.mark);
    }
  }
  return {given > 0 && honoured == given,
          std::to_string(honoured) + "/" + std::to_string(given) + " chart-given decodes emit the given chart"};
}

// The two published repairs, idempotence over labels, and monotone repair on real runs.
Outcome correction_goldens(const std::vector<const ev::EvalReport*>& runs) {
  struct Golden {
    std::string predicted, expected;
  };
  const std::vector<Golden> goldens = {
      {"mark bar data customer encoding x cust_name y aggregate none acc_bal transform filter cust_name like '%a' "
       "sort y desc",
       "mark bar data customer encoding x cust_name y aggregate none acc_bal transform filter cust_name like '%a%' "
       "sort y desc"},
      {"mark bar data employees encoding x hire_date y aggregate count hire_date transform filter salary between "
       "8000 and 12000 and commission_pct!= \"null\" or department_id!= 40 sort y asc bin x by weekday",
       "mark bar data employees encoding x hire_date y aggregate count hire_date transform filter salary between "
       "8000 and 12000 and commission_pct != \"null\" or department_id != 40 sort y asc bin x by weekday"}};
  int golden_ok = 0;
  for (const auto& g : goldens) golden_ok += ev::correct_systematic_errors(g.predicted) == g.expected;

  int idem_ok = 0;
  for (const auto& p : mini()) {
    const std::string text = vz::serialize(p.label);
    const std::string once = ev::correct_systematic_errors(text);
    idem_ok += once == text && ev::correct_systematic_errors(once) == once;
  }

  int monotone = 0;
  std::string counts;
  for (const auto* r : runs) {
    monotone += r->after_correction.hits >= r->before_correction.hits;
    counts += (counts.empty() ? "" : ", ") + std::to_string(r->before_correction.hits) + "->" +
              std::to_string(r->after_correction.hits);
  }
  const bool pass = golden_ok == 2 && idem_ok == static_cast<int>(mini().size()) &&
                    monotone == static_cast<int>(runs.size()) && !runs.empty();
  return {pass, std::to_string(golden_ok) + "/2 published repairs, " + std::to_string(idem_ok) + "/" +
                    std::to_string(mini().size()) + " labels fixed points, exact matches before->after repair: " +
                    counts};
}

// Brute-force recounts of the four metrics on a 20-item set.
Outcome metric_oracles(ev::EvalReport* report_out) {
  std::vector<ds::NvPair> pairs;
  for (std::size_t i = 0; i < mini().size() && pairs.size() < 10; i += 6) pairs.push_back(mini()[i]);
  const auto items = ds::augment_corpus(pairs);
  const auto vocab = ds::Vocabulary::build(items);
  const auto set = m::make_example_set(items, vocab, m::EncoderVariant::native);
  const auto trained = m::train(small_config(12), vocab.size(), set, set);
  const auto run = ev::evaluate(trained.model, vocab, items);
  *report_out = run.report;

  const nl2vis::testing::ReferenceModel<float> ref(trained.model);
  std::size_t tok_hits = 0, tok_total = 0, guided_hits = 0, chart_raw = 0, chart_guided = 0;
  std::array<std::size_t, 3> cls_hits{}, cls_total{};
  bool ties = false;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& item = items[i];
    const auto ex = ds::encode_example(item, vocab);
    const auto memory = ref.encode_native(ex.source_ids, ex.source_segment_ids);
    const std::vector<int> prefix(ex.label_ids.begin(), ex.label_ids.end() - 1);
    const auto logits = ref.decode(memory, prefix);
    std::vector<std::string> argmax_words;
    for (std::size_t k = 0; k < logits.size(); ++k) {
      auto sorted = logits[k];
      std::sort(sorted.begin(), sorted.end(), std::greater<>());
      ties = ties || sorted[0] - sorted[1] <= 1e-4;
      const auto best = static_cast<int>(std::max_element(logits[k].begin(), logits[k].end()) - logits[k].begin());
      tok_hits += best == ex.label_ids[k + 1];
      ++tok_total;
      argmax_words.push_back(vocab.token(best));
    }
    const std::string chart(vz::to_string(*item.label.mark));
    chart_raw += argmax_words.size() > 1 && argmax_words[1] == chart;
    const auto& guided = run.items[i].guided;
    chart_guided += guided.size() > 1 && guided[1] == chart;
    try {
      guided_hits += !run.items[i].truncated && vz::parse(guided) == item.label;
    } catch (const nl2vis::Error&) {
    }
    for (std::size_t k = 0; k < item.label_tokens.size(); ++k) {
      const auto& w = item.label_tokens[k];
      std::size_t c = 2;
      if (w == "mark" || w == "data" || w == "encoding" || w == "aggregate" || w == "transform") c = 0;
      else if (w == "x" || w == "y" || w == "color" || w == "filter" || w == "group" || w == "bin" ||
               w == "sort" || w == "topk")
        c = 1;
      ++cls_total[c];
      cls_hits[c] += k < argmax_words.size() && argmax_words[k] == w;
    }
  }
  const auto& r = run.report;
  bool cls_ok = true;
  for (std::size_t c = 0; c < 3; ++c)
    cls_ok = cls_ok && r.classes.accuracy[c].hits == cls_hits[c] && r.classes.accuracy[c].total == cls_total[c];
  const bool pass = !ties && items.size() == 20 && r.token_accuracy.overall.hits == tok_hits &&
                    r.token_accuracy.overall.total == tok_total && r.guided_exact_match.overall.hits == guided_hits &&
                    r.chart_accuracy_raw.overall.hits == chart_raw &&
                    r.chart_accuracy_guided.overall.hits == chart_guided && cls_ok;
  return {pass, std::to_string(items.size()) + " items; token " + std::to_string(tok_hits) + "/" +
                    std::to_string(tok_total) + ", guided " + std::to_string(guided_hits) + ", chart raw " +
                    std::to_string(chart_raw) + ", chart guided " + std::to_string(chart_guided) +
                    (ties ? ", near-tie logits make the recount ambiguous" : "")};
}

// Same seed twice: byte-identical checkpoints, identical reports.
Outcome determinism() {
  auto once = [] {
    const auto set = m::make_example_set(mini_items(), mini_vocab(), m::EncoderVariant::native);
    auto c = small_config(3);
    c.seed = 42;
    auto trained = m::train(c, mini_vocab().size(), set, set);
    m::Checkpoint ck{mini_vocab(), std::move(trained.model), trained.history, trained.selected_epoch, {}};
    auto report = ev::evaluate(ck.model, ck.vocab, mini_items()).report;
    return std::make_pair(m::checkpoint_bytes(ck), std::move(report));
  };
  const auto a = once();
  const auto b = once();
  const bool bytes = a.first == b.first;
  const bool reports = a.second == b.second;
  return {bytes && reports, std::string("checkpoints ") + (bytes ? "identical" : "differ") + " (" +
                                std::to_string(a.first.size()) + " bytes), reports " +
                                (reports ? "identical" : "differ")};
}

// Split sizes of the single-table nvBench subset, when supplied.
Outcome nvbench_counts() {
  const char* dir = std::getenv("NL2VIS_NVBENCH_DIR");
  if (!dir || !*dir) return {true, "skipped: dataset not supplied (set NL2VIS_NVBENCH_DIR)"};
  const std::size_t vis[3] = {2988, 186, 625};
  const std::size_t items[3] = {25238, 1430, 4920};
  try {
    const auto imp = ds::import_nvbench(dir);
    bool ok = imp.splits.size() == 3;
    std::string detail;
    for (std::size_t s = 0; s < imp.splits.size() && s < 3; ++s) {
      const auto& st = imp.splits[s];
      ok = ok && st.vis_queries == vis[s] && st.items() == items[s];
      detail += (detail.empty() ? "" : "; ") + std::string(ds::to_string(st.split)) + " " +
                std::to_string(st.vis_queries) + " queries/" + std::to_string(st.items()) + " items";
    }
    return {ok, detail + " (expected 2988/186/625 queries, 25238/1430/4920 items)"};
  } catch (const std::exception& e) {
    return {false, std::string("import failed: ") + e.what()};
  }
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](const std::string& name, const std::function<Outcome()>& check) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
  };

  ev::EvalReport overfit_report, oracle_report;
  report("grammar_round_trip", grammar_round_trip);
  report("corpus_parse", corpus_parse);
  report("vegalite_conformance", vegalite_conformance);
  report("gradient_check", gradient_check);
  report("overfit_reproduction", [&] { return overfit_reproduction(&overfit_report); });
  report("guided_validity", guided_validity);
  report("chart_narrowing", chart_narrowing);
  report("metric_oracles", [&] { return metric_oracles(&oracle_report); });
  report("error_correction", [&] {
    std::vector<const ev::EvalReport*> runs;
    if (overfit_report.items) runs.push_back(&overfit_report);
    if (oracle_report.items) runs.push_back(&oracle_report);
    return correction_goldens(runs);
  });
  report("determinism", determinism);
  report("nvbench_import_counts", nvbench_counts);
  std::cout << (failures ? std::to_string(failures) + " criteria failed" : "all criteria passed") << std::endl;
  return failures ? 1 : 0;
}
