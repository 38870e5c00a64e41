#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <thread>

#include <nlohmann/json.hpp>

#include "nl2vis/dataset/corpus.hpp"
#include "nl2vis/model.hpp"
#include "nl2vis/service/manifest.hpp"
#include "nl2vis/service/server.hpp"

namespace ds = nl2vis::dataset;
namespace m = nl2vis::model;
namespace sv = nl2vis::service;
namespace vz = nl2vis::vega_zero;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::vector<ds::NvPair>& mini() {
  static const auto pairs = ds::load_corpus(fs::path(NL2VIS_DATA_DIR) / "mini_corpus.jsonl").pairs;
  return pairs;
}

// One pair memorised in both augmentations.
const m::Checkpoint& overfit() {
  static const m::Checkpoint ck = [] {
    const auto items = ds::augment_corpus({mini().front()});
    auto vocab = ds::Vocabulary::build(items);
    const auto set = m::make_example_set(items, vocab, m::EncoderVariant::native);
    m::ModelConfig c;
    c.epochs = 40;
    c.batch_size = 1;
    auto r = m::train(c, vocab.size(), set, set);
    return m::Checkpoint{std::move(vocab), std::move(r.model), r.history, r.selected_epoch, {}};
  }();
  return ck;
}

std::shared_ptr<const sv::Predictor> predictor() {
  static const auto p = std::make_shared<const sv::Predictor>(overfit(), mini().front().schema);
  return p;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "nl2vis_service_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

struct RunningServer {
  sv::PredictionServer server;
  int port;
  std::thread thread;

  explicit RunningServer(std::shared_ptr<const sv::Predictor> p) : server(std::move(p)) {
    port = server.bind("127.0.0.1", 0);
    thread = std::thread([this] { server.listen(); });
    server.wait_until_ready();
  }
  ~RunningServer() {
    server.stop();
    thread.join();
  }
};

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(NL2VIS_CLI) + " " + args + " > '" + log.string() + "' 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

}  // namespace

TEST(Predictor, ReproducesMemorisedPair) {
  const auto& pair = mini().front();
  const auto label = vz::serialize(pair.label);
  for (bool with_chart : {false, true}) {
    std::optional<vz::ChartType> chart;
    if (with_chart) chart = pair.label.mark;
    const auto p = predictor()->predict({pair.nl, pair.table, chart});
    EXPECT_EQ(p.vega_zero, label);
    EXPECT_TRUE(p.valid);
    EXPECT_FALSE(p.truncated);
    ASSERT_TRUE(p.vega_lite.is_object());
    EXPECT_EQ(p.vega_lite["data"]["url"], pair.table + ".csv");
  }
}

TEST(Predictor, RejectsUnknownTableAndEmptyQuestion) {
  EXPECT_THROW(predictor()->predict({"show a bar chart", "no_such_table", std::nullopt}), nl2vis::RequestError);
  EXPECT_THROW(predictor()->predict({"  \t", mini().front().table, std::nullopt}), nl2vis::RequestError);
}

TEST(Predictor, ExternalVariantNeedsProvider) {
  m::ModelConfig c;
  c.d_model = 16;
  c.n_heads = 2;
  c.ff_dim = 32;
  c.encoder_variant = m::EncoderVariant::external;
  c.external_dim = 8;
  c.cnn = m::ModelConfig::default_cnn(16);
  m::Checkpoint ck{overfit().vocab, m::Seq2Seq<float>(c, overfit().vocab.size()), {}, 0, "fake"};
  EXPECT_THROW(sv::Predictor(ck, mini().front().schema), nl2vis::EncoderError);
}

TEST(Predictor, OutputStaysInGrammarForUnseenQuestions) {
  const auto& pair = mini().front();
  for (const auto* nl : {"what is going on here", "pie of everything", "line chart over time please"}) {
    for (auto chart : vz::kAllChartTypes) {
      const auto p = predictor()->predict({nl, pair.table, chart});
      if (p.truncated) continue;
      const auto ast = vz::parse(p.vega_zero);
      EXPECT_EQ(ast.mark, chart);
      EXPECT_EQ(ast.data, pair.table);
    }
  }
}

TEST(PredictRequest, ParsesAndRejects) {
  const auto r = sv::parse_predict_request(R"({"nl":"a","table":"t","chart":"Bar"})");
  EXPECT_EQ(r.nl, "a");
  EXPECT_EQ(r.table, "t");
  EXPECT_EQ(r.chart, vz::ChartType::bar);
  EXPECT_FALSE(sv::parse_predict_request(R"({"nl":"a","table":"t","chart":null})").chart);
  for (const char* bad : {"not json", "[1]", R"({"table":"t"})", R"({"nl":"a"})", R"({"nl":1,"table":"t"})",
                          R"({"nl":"a","table":"t","chart":"pie"})", R"({"nl":"a","table":"t","chart":3})"})
    EXPECT_THROW(sv::parse_predict_request(bad), nl2vis::RequestError) << bad;
}

TEST(PredictionServer, PredictRoundTrip) {
  RunningServer rs(predictor());
  ASSERT_GT(rs.port, 0);
  httplib::Client cli("127.0.0.1", rs.port);
  const auto& pair = mini().front();
  const json body = {{"nl", pair.nl}, {"table", pair.table}};
  auto res = cli.Post("/predict", body.dump(), "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  const auto j = json::parse(res->body);
  EXPECT_EQ(j.size(), 4u);
  for (const char* k : {"vega_zero", "vega_lite", "valid", "corrected"}) EXPECT_TRUE(j.contains(k)) << k;
  EXPECT_EQ(j["vega_zero"], vz::serialize(pair.label));
  EXPECT_TRUE(j["valid"].get<bool>());
  EXPECT_EQ(j["vega_lite"]["data"]["url"], pair.table + ".csv");
}

TEST(PredictionServer, BadRequestsGet400) {
  RunningServer rs(predictor());
  httplib::Client cli("127.0.0.1", rs.port);
  for (const char* body : {R"({"table":"employees"})", "{", R"({"nl":"x","table":"nope"})",
                           R"({"nl":"x","table":"employees","chart":"donut"})"}) {
    auto res = cli.Post("/predict", body, "application/json");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 400) << body;
    EXPECT_TRUE(json::parse(res->body).contains("error"));
  }
}

TEST(PredictionServer, SchemaListsTablesAndKinds) {
  RunningServer rs(predictor());
  httplib::Client cli("127.0.0.1", rs.port);
  auto res = cli.Get("/schema");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  const auto j = json::parse(res->body);
  const auto& schema = mini().front().schema;
  ASSERT_EQ(j["tables"].size(), schema.tables.size());
  for (std::size_t t = 0; t < schema.tables.size(); ++t) {
    EXPECT_EQ(j["tables"][t]["name"], schema.tables[t].name);
    ASSERT_EQ(j["tables"][t]["columns"].size(), schema.tables[t].columns.size());
    for (std::size_t c = 0; c < schema.tables[t].columns.size(); ++c) {
      EXPECT_EQ(j["tables"][t]["columns"][c]["name"], schema.tables[t].columns[c].name);
      EXPECT_EQ(j["tables"][t]["columns"][c]["kind"], vz::to_string(schema.tables[t].columns[c].kind));
    }
  }
}

TEST(PredictionServer, ConcurrentIdenticalRequestsAgree) {
  RunningServer rs(predictor());
  const std::string body =
      json{{"nl", mini()[3].nl}, {"table", mini().front().table}, {"chart", "line"}}.dump();
  std::vector<std::future<std::string>> futures;
  for (int i = 0; i < 8; ++i)
    futures.push_back(std::async(std::launch::async, [&] {
      httplib::Client cli("127.0.0.1", rs.port);
      std::string last;
      for (int k = 0; k < 3; ++k) {
        auto res = cli.Post("/predict", body, "application/json");
        if (!res || res->status != 200) return std::string("failed");
        last = res->body;
      }
      return last;
    }));
  const auto first = futures.front().get();
  EXPECT_NE(first, "failed");
  for (std::size_t i = 1; i < futures.size(); ++i) EXPECT_EQ(futures[i].get(), first);
}

TEST(Manifest, RecordsStatusAndHash) {
  const auto dir = scratch("manifest");
  {
    std::ofstream(dir / "f.txt") << "abc";
  }
  // FNV-1a 64 of "abc"
  EXPECT_EQ(sv::file_hash(dir / "f.txt"), "e71fa2190541574b");
  sv::RunManifest man(dir / "run.json", "train");
  man.fields()["seed"] = 7;
  man.write();
  EXPECT_EQ(read_json(dir / "run.json")["status"], "running");
  man.finish(2, "boom");
  const auto j = read_json(dir / "run.json");
  EXPECT_EQ(j["status"], "failed");
  EXPECT_EQ(j["exit_code"], 2);
  EXPECT_EQ(j["error"], "boom");
  EXPECT_EQ(j["seed"], 7);
  EXPECT_TRUE(j.contains("finished_at"));
}

TEST(Manifest, LockIsExclusiveAndReleased) {
  const auto dir = scratch("lock");
  {
    sv::LockFile a(dir / "m.ckpt");
    EXPECT_TRUE(fs::exists(dir / "m.ckpt.lock"));
    EXPECT_THROW(sv::LockFile(dir / "m.ckpt"), nl2vis::IoError);
  }
  EXPECT_FALSE(fs::exists(dir / "m.ckpt.lock"));
  EXPECT_NO_THROW(sv::LockFile(dir / "m.ckpt"));
}

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = scratch("cli");
    std::ofstream(dir_ / "small.json")
        << R"({"d_model":16,"n_heads":2,"n_layers":1,"ff_dim":32,"epochs":2,"max_len":128})";
    ASSERT_EQ(run_cli("import " + corpus() + " -o " + (dir_ / "c.jsonl").string(), dir_ / "import.log"), 0);
    ASSERT_EQ(run_cli("train --corpus " + (dir_ / "c.jsonl").string() + " --config " +
                          (dir_ / "small.json").string() + " -o " + ckpt(),
                      dir_ / "train.log"),
              0);
  }
  static std::string corpus() { return (fs::path(NL2VIS_DATA_DIR) / "mini_corpus.jsonl").string(); }
  static std::string schema() { return (fs::path(NL2VIS_DATA_DIR) / "mini_schema.json").string(); }
  static std::string ckpt() { return (dir_ / "m.ckpt").string(); }
  static inline fs::path dir_;
};

TEST_F(Cli, TrainWritesCheckpointHistoryAndManifest) {
  EXPECT_TRUE(fs::exists(ckpt()));
  EXPECT_TRUE(fs::exists(ckpt() + ".history.csv"));
  EXPECT_FALSE(fs::exists(ckpt() + ".lock"));
  const auto man = read_json(ckpt() + ".manifest.json");
  EXPECT_EQ(man["status"], "ok");
  EXPECT_EQ(man["exit_code"], 0);
  EXPECT_EQ(man["corpus_hash"], sv::file_hash(dir_ / "c.jsonl"));
  EXPECT_EQ(man["config"]["d_model"], 16);
  EXPECT_TRUE(man.contains("seed"));
}

TEST_F(Cli, TrainRefusesLockedCheckpoint) {
  const auto target = dir_ / "locked.ckpt";
  sv::LockFile held(target);
  EXPECT_EQ(run_cli("train --corpus " + (dir_ / "c.jsonl").string() + " --config " +
                        (dir_ / "small.json").string() + " -o " + target.string(),
                    dir_ / "locked.log"),
            2);
  EXPECT_FALSE(fs::exists(target));
  EXPECT_EQ(read_json(target.string() + ".manifest.json")["status"], "failed");
}

TEST_F(Cli, EvalWritesReports) {
  const auto out = dir_ / "eval";
  ASSERT_EQ(run_cli("eval --checkpoint " + ckpt() + " --corpus " + corpus() + " --split train -o " + out.string(),
                    dir_ / "eval.log"),
            0);
  const auto report = read_json(out / "report.json");
  EXPECT_EQ(report["items"], 2 * mini().size());
  EXPECT_TRUE(fs::exists(out / "report.txt"));
  std::ifstream preds(out / "predictions.jsonl");
  std::size_t lines = 0;
  for (std::string l; std::getline(preds, l);) ++lines;
  EXPECT_EQ(lines, 2 * mini().size());
  EXPECT_EQ(read_json(out / "manifest.json")["status"], "ok");
}

TEST_F(Cli, ExitCodes) {
  std::ofstream(dir_ / "bad.json") << R"({"d_model":16,"no_such_key":1})";
  EXPECT_EQ(run_cli("train --corpus " + corpus() + " --config " + (dir_ / "bad.json").string() + " -o " +
                        (dir_ / "bad.ckpt").string(),
                    dir_ / "bad.log"),
            2);
  EXPECT_EQ(read_json(dir_ / "bad.ckpt.manifest.json")["exit_code"], 2);
  EXPECT_EQ(run_cli("predict --checkpoint " + ckpt() + " --schema " + schema() + " --table nope --nl 'show it'",
                    dir_ / "p1.log"),
            2);
  EXPECT_EQ(run_cli("predict --checkpoint " + ckpt() + " --schema " + schema() + " --table employees --nl x "
                    "--chart donut",
                    dir_ / "p2.log"),
            2);
  EXPECT_EQ(run_cli("compile 'mark bar data' --manifest " + (dir_ / "c1.json").string(), dir_ / "c1.log"), 2);
  EXPECT_EQ(run_cli("--no-such-flag", dir_ / "u.log"), 2);
  std::ofstream(dir_ / "ext.json") << R"({"d_model":16,"n_heads":2,"ff_dim":32,"encoder_variant":"external","external_dim":8})";
  EXPECT_EQ(run_cli("train --corpus " + corpus() + " --config " + (dir_ / "ext.json").string() +
                        " --bridge nope:x -o " + (dir_ / "br.ckpt").string(),
                    dir_ / "br.log"),
            2);
  EXPECT_EQ(read_json(dir_ / "br.ckpt.manifest.json")["error"].get<std::string>().find("bridge spec"), 0u);
  EXPECT_EQ(run_cli("eval --checkpoint " + corpus() + " --corpus " + corpus() + " -o " + (dir_ / "e2").string(),
                    dir_ / "e2.log"),
            2);
}

TEST_F(Cli, CompilePrintsVegaLite) {
  const auto log = dir_ / "compile.log";
  ASSERT_EQ(run_cli("compile 'mark bar data employees encoding x job_id y aggregate count job_id transform group x'"
                    " --schema " + schema() + " --manifest " + (dir_ / "cm.json").string(),
                    log),
            0);
  std::ifstream in(log);
  const auto j = json::parse(in);
  EXPECT_EQ(j["mark"], "bar");
  EXPECT_EQ(j["data"]["url"], "employees.csv");
  EXPECT_EQ(read_json(dir_ / "cm.json")["command"], "compile");
}
