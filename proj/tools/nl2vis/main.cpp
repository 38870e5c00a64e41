// nl2vis command-line driver: import | train | eval | predict | serve | compile.
// Exit codes: 0 success, 1 internal failure, 2 usage or validation error.

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "nl2vis/dataset/corpus.hpp"
#include "nl2vis/dataset/nvbench.hpp"
#include "nl2vis/eval/report.hpp"
#include "nl2vis/model.hpp"
#include "nl2vis/service/manifest.hpp"
#include "nl2vis/service/predictor.hpp"
#include "nl2vis/service/server.hpp"

namespace fs = std::filesystem;
namespace ds = nl2vis::dataset;
namespace m = nl2vis::model;
namespace vz = nl2vis::vega_zero;
using nlohmann::json;

namespace {

struct UsageError : nl2vis::Error {
  using Error::Error;
};

struct Options {
  std::string config_path;
  std::optional<std::uint32_t> seed;
  std::string variant;
  std::string bridge;
  std::string chart;
  bool vegalite = false;
  std::string manifest;

  std::string input, output, corpus, checkpoint, schema, table, nl, split = "test", query, data_url;
  std::optional<int> epochs;
  int port = 8080;
  std::string host = "127.0.0.1";
  bool no_greedy = false;
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw nl2vis::IoError("cannot read '" + p.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& p, const std::string& body) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw nl2vis::IoError("cannot write '" + p.string() + "'");
  out << body;
}

json parse_json_file(const fs::path& p) {
  try {
    return json::parse(read_file(p));
  } catch (const json::exception& e) {
    throw UsageError("'" + p.string() + "' is not valid JSON: " + e.what());
  }
}

m::ModelConfig load_config(const Options& o) {
  m::ModelConfig c = o.config_path.empty() ? m::ModelConfig{} : m::model_config_from_json(parse_json_file(o.config_path));
  if (o.seed) c.seed = *o.seed;
  if (o.epochs) c.epochs = *o.epochs;
  if (!o.variant.empty()) {
    const auto v = m::encoder_variant_from(o.variant);
    if (!v) throw UsageError("unknown encoder variant '" + o.variant + "'");
    c.encoder_variant = *v;
  }
  c.validate();
  return c;
}

std::optional<vz::ChartType> parse_chart(const std::string& s) {
  if (s.empty()) return std::nullopt;
  const auto c = vz::chart_type_from(vz::to_lower(s));
  if (!c) throw UsageError("unknown chart type '" + s + "'");
  return c;
}

std::shared_ptr<m::EmbeddingProvider> connect_bridge(const Options& o, m::EncoderVariant variant) {
  if (!m::uses_external(variant)) return nullptr;
  if (o.bridge.empty())
    throw UsageError("encoder variant " + std::string(m::to_string(variant)) + " needs --bridge");
  return std::make_shared<m::CachingProvider>(std::shared_ptr<m::EmbeddingProvider>(m::BridgeClient::connect(o.bridge)));
}

void check_bridge_model(const m::Checkpoint& ck, const std::shared_ptr<m::EmbeddingProvider>& p) {
  if (p && !ck.external_model.empty() && p->model_name() != ck.external_model)
    throw UsageError("bridge serves '" + p->model_name() + "' but the checkpoint was trained with '" +
                     ck.external_model + "'");
}

vz::DatabaseSchema load_schema(const fs::path& p) {
  auto s = vz::database_schema_from_json(parse_json_file(p));
  s.check_unique();
  return s;
}

std::vector<ds::TrainingItem> items_for(const std::vector<ds::NvPair>& pairs, std::size_t max_len) {
  ds::SourceOptions so;
  so.max_len = max_len;
  return ds::augment_corpus(pairs, so);
}

int cmd_import(const Options& o, nl2vis::service::RunManifest& man) {
  const fs::path in(o.input);
  if (o.output.empty()) throw UsageError("import needs --out");
  man.fields()["input"] = o.input;
  man.fields()["output"] = o.output;
  std::vector<ds::NvPair> pairs;
  std::vector<ds::Reject> rejects;
  json splits = json::array();
  if (fs::is_directory(in)) {
    auto imp = ds::import_nvbench(in);
    for (const auto& s : imp.splits) {
      splits.push_back({{"split", ds::to_string(s.split)}, {"rows", s.rows}, {"visualization_queries", s.vis_queries},
                        {"pairs", s.pairs}, {"encoded_items", s.items()}, {"rejects", s.rejects}});
      std::cout << ds::to_string(s.split) << ": " << s.vis_queries << " visualization queries, " << s.pairs
                << " pairs, " << s.items() << " encoded items, " << s.rejects << " rejects (" << s.rows
                << " rows)\n";
    }
    pairs = std::move(imp.pairs);
    rejects = std::move(imp.rejects);
  } else {
    auto load = ds::load_corpus(in, ds::corpus_format_for(in));
    for (auto s : {ds::Split::train, ds::Split::validation, ds::Split::test}) {
      const auto n = ds::select_split(load.pairs, s).size();
      splits.push_back({{"split", ds::to_string(s)}, {"pairs", n}, {"encoded_items", 2 * n}});
      std::cout << ds::to_string(s) << ": " << n << " pairs, " << 2 * n << " encoded items\n";
    }
    pairs = std::move(load.pairs);
    rejects = std::move(load.rejects);
  }
  std::ostringstream corpus, rej;
  ds::write_corpus(pairs, corpus);
  ds::write_rejects(rejects, rej);
  write_file(o.output, corpus.str());
  write_file(o.output + ".rejects.jsonl", rej.str());
  std::cout << "wrote " << pairs.size() << " pairs to " << o.output << " (" << rejects.size() << " rejects)\n";
  man.fields()["splits"] = splits;
  man.fields()["corpus_hash"] = nl2vis::service::file_hash(o.output);
  return 0;
}

int cmd_train(const Options& o, nl2vis::service::RunManifest& man) {
  if (o.output.empty()) throw UsageError("train needs --out");
  const auto config = load_config(o);
  man.fields()["config"] = m::to_json(config);
  man.fields()["seed"] = config.seed;
  man.fields()["corpus"] = o.corpus;
  man.fields()["corpus_hash"] = nl2vis::service::file_hash(o.corpus);
  man.fields()["checkpoint"] = o.output;
  man.write();
  nl2vis::service::LockFile lock(o.output);

  const auto load = ds::load_corpus(o.corpus, ds::corpus_format_for(o.corpus));
  const auto train_pairs = ds::select_split(load.pairs, ds::Split::train);
  const auto val_pairs = ds::select_split(load.pairs, ds::Split::validation);
  if (train_pairs.empty()) throw UsageError("corpus has no training pairs");
  const auto train_items = items_for(train_pairs, static_cast<std::size_t>(config.max_len));
  const auto val_items = items_for(val_pairs, static_cast<std::size_t>(config.max_len));
  std::vector<ds::TrainingItem> vocab_items = train_items;
  vocab_items.insert(vocab_items.end(), val_items.begin(), val_items.end());
  const auto vocab = ds::Vocabulary::build(vocab_items);

  auto provider = connect_bridge(o, config.encoder_variant);
  const auto train_set = m::make_example_set(train_items, vocab, config.encoder_variant, provider.get());
  const auto val_set = val_items.empty() ? m::ExampleSet{}
                                         : m::make_example_set(val_items, vocab, config.encoder_variant, provider.get());
  const m::ExampleSet& val = val_items.empty() ? train_set : val_set;
  if (val_items.empty()) std::cerr << "no validation split; selecting on training loss\n";
  std::cerr << train_items.size() << " training items, " << val_items.size() << " validation items, vocabulary "
            << vocab.size() << "\n";

  m::TrainOptions topts;
  topts.on_epoch = [](const m::EpochRecord& r) {
    std::cerr << "epoch " << r.epoch << " train " << r.train_loss << " val " << r.val_loss << "\n";
  };
  auto result = m::train(config, vocab.size(), train_set, val, topts);
  m::Checkpoint ck{vocab, std::move(result.model), result.history, result.selected_epoch,
                   provider ? provider->model_name() : std::string()};
  m::save_checkpoint(ck, o.output);
  write_file(o.output + ".history.csv", m::history_csv(ck.history));
  std::cout << "selected epoch " << ck.selected_epoch << ", checkpoint " << o.output << "\n";
  man.fields()["selected_epoch"] = ck.selected_epoch;
  return 0;
}

int cmd_eval(const Options& o, nl2vis::service::RunManifest& man) {
  if (o.output.empty()) throw UsageError("eval needs --out-dir");
  const auto ck = m::load_checkpoint(o.checkpoint);
  man.fields()["checkpoint"] = o.checkpoint;
  man.fields()["corpus"] = o.corpus;
  man.fields()["corpus_hash"] = nl2vis::service::file_hash(o.corpus);
  man.fields()["split"] = o.split;
  man.fields()["config"] = m::to_json(ck.config());
  man.fields()["seed"] = ck.config().seed;
  man.write();
  const auto load = ds::load_corpus(o.corpus, ds::corpus_format_for(o.corpus));
  std::vector<ds::NvPair> pairs;
  if (o.split == "all") {
    pairs = load.pairs;
  } else {
    const auto s = ds::split_from(o.split);
    if (!s) throw UsageError("unknown split '" + o.split + "'");
    pairs = ds::select_split(load.pairs, *s);
  }
  if (pairs.empty()) throw UsageError("split '" + o.split + "' is empty");
  const auto items = items_for(pairs, static_cast<std::size_t>(ck.config().max_len));
  auto provider = connect_bridge(o, ck.config().encoder_variant);
  check_bridge_model(ck, provider);
  nl2vis::eval::EvalOptions eo;
  eo.greedy = !o.no_greedy;
  const auto run = nl2vis::eval::evaluate(ck.model, ck.vocab, items, provider.get(), eo);
  const fs::path dir(o.output);
  write_file(dir / "report.json", nl2vis::eval::to_json(run.report).dump(2) + "\n");
  const std::string text = nl2vis::eval::to_text(run.report);
  write_file(dir / "report.txt", text);
  std::ostringstream items_out;
  nl2vis::eval::write_items_jsonl(items_out, run.items);
  write_file(dir / "predictions.jsonl", items_out.str());
  std::cout << text;
  return 0;
}

int cmd_predict(const Options& o, nl2vis::service::RunManifest& man) {
  auto ck = m::load_checkpoint(o.checkpoint);
  man.fields()["checkpoint"] = o.checkpoint;
  man.fields()["seed"] = ck.config().seed;
  man.fields()["config"] = m::to_json(ck.config());
  auto provider = connect_bridge(o, ck.config().encoder_variant);
  check_bridge_model(ck, provider);
  const nl2vis::service::Predictor predictor(std::move(ck), load_schema(o.schema), provider);
  const auto p = predictor.predict({o.nl, o.table, parse_chart(o.chart)});
  std::cout << p.vega_zero << "\n";
  if (o.vegalite) std::cout << p.vega_lite.dump(2) << "\n";
  if (p.corrected) std::cerr << "note: systematic slip repaired\n";
  if (!p.valid) {
    std::cerr << (p.truncated ? "prediction truncated at the length limit\n" : "prediction does not validate\n");
    return 1;
  }
  return 0;
}

nl2vis::service::PredictionServer* g_server = nullptr;

int cmd_serve(const Options& o, nl2vis::service::RunManifest& man) {
  auto ck = m::load_checkpoint(o.checkpoint);
  man.fields()["checkpoint"] = o.checkpoint;
  man.fields()["seed"] = ck.config().seed;
  man.fields()["config"] = m::to_json(ck.config());
  auto provider = connect_bridge(o, ck.config().encoder_variant);
  check_bridge_model(ck, provider);
  auto predictor = std::make_shared<const nl2vis::service::Predictor>(std::move(ck), load_schema(o.schema), provider);
  nl2vis::service::PredictionServer server(predictor);
  const int port = server.bind(o.host, o.port);
  if (port < 0) throw UsageError("cannot bind " + o.host + ":" + std::to_string(o.port));
  man.fields()["port"] = port;
  man.write();
  g_server = &server;
  std::signal(SIGINT, [](int) { if (g_server) g_server->stop(); });
  std::signal(SIGTERM, [](int) { if (g_server) g_server->stop(); });
  std::cout << "listening on http://" << o.host << ":" << port << std::endl;
  server.listen();
  g_server = nullptr;
  return 0;
}

int cmd_compile(const Options& o, nl2vis::service::RunManifest& man) {
  man.fields()["query"] = o.query;
  const auto ast = vz::parse(o.query);
  std::optional<vz::DatabaseSchema> schema;
  const vz::TableSchema* table = nullptr;
  if (!o.schema.empty()) {
    schema = load_schema(o.schema);
    const auto report = vz::validate(ast, *schema);
    for (const auto& issue : report.issues)
      std::cerr << (issue.severity == vz::Severity::error ? "error: " : "warning: ") << issue.message << "\n";
    if (report.error_count()) return 2;
    table = schema->find_table(ast.data);
  }
  const std::string url = o.data_url.empty() ? ast.data + ".csv" : o.data_url;
  std::cout << vz::compile_to_vegalite(ast, vz::DataRef::url(url), table).dump(2) << "\n";
  return 0;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const UsageError*>(&e) || dynamic_cast<const nl2vis::ConfigError*>(&e) ||
      dynamic_cast<const nl2vis::RequestError*>(&e) || dynamic_cast<const nl2vis::CorpusError*>(&e) ||
      dynamic_cast<const nl2vis::IoError*>(&e) || dynamic_cast<const nl2vis::ParseError*>(&e) ||
      dynamic_cast<const nl2vis::LexError*>(&e) || dynamic_cast<const nl2vis::CheckpointError*>(&e) ||
      dynamic_cast<const nl2vis::EncoderError*>(&e) || dynamic_cast<const nl2vis::EncodingError*>(&e) ||
      dynamic_cast<const nl2vis::BridgeError*>(&e) || dynamic_cast<const nl2vis::CompileError*>(&e) ||
      dynamic_cast<const nl2vis::UnsupportedConstruct*>(&e))
    return 2;
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nl2vis: natural language to visualization queries"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--manifest", o.manifest, "Run manifest path");
  };
  auto model_opts = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "Model configuration JSON");
    sub->add_option("--seed", o.seed, "Random seed");
    sub->add_option("--variant", o.variant, "Encoder variant: native, external, external_cnn, combined");
  };

  auto* imp = app.add_subcommand("import", "Convert a corpus file or an nvBench directory to JSONL");
  imp->add_option("input", o.input, "Corpus file or nvBench directory")->required();
  imp->add_option("--out,-o", o.output, "Output JSONL")->required();
  common(imp);

  auto* train = app.add_subcommand("train", "Train a model");
  train->add_option("--corpus", o.corpus, "Corpus (JSONL or CSV)")->required()->check(CLI::ExistingFile);
  train->add_option("--out,-o", o.output, "Checkpoint path")->required();
  train->add_option("--epochs", o.epochs, "Override epoch count");
  train->add_option("--bridge", o.bridge, "Embedding bridge: stdio:<cmd> or tcp:<host>:<port>");
  model_opts(train);
  common(train);

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval->add_option("--checkpoint", o.checkpoint, "Checkpoint")->required()->check(CLI::ExistingFile);
  eval->add_option("--corpus", o.corpus, "Corpus")->required()->check(CLI::ExistingFile);
  eval->add_option("--split", o.split, "train, validation, test or all");
  eval->add_option("--out-dir,-o", o.output, "Report directory")->required();
  eval->add_option("--bridge", o.bridge, "Embedding bridge");
  eval->add_flag("--no-greedy", o.no_greedy, "Skip the unconstrained baseline");
  common(eval);

  auto* predict = app.add_subcommand("predict", "Translate one question");
  predict->add_option("--checkpoint", o.checkpoint, "Checkpoint")->required()->check(CLI::ExistingFile);
  predict->add_option("--schema", o.schema, "Database schema JSON")->required()->check(CLI::ExistingFile);
  predict->add_option("--table", o.table, "Table name")->required();
  predict->add_option("--nl", o.nl, "Question")->required();
  predict->add_option("--chart", o.chart, "Chart type to pin: arc, bar, line, point");
  predict->add_flag("--vegalite", o.vegalite, "Also print the compiled Vega-Lite document");
  predict->add_option("--bridge", o.bridge, "Embedding bridge");
  common(predict);

  auto* serve = app.add_subcommand("serve", "Serve POST /predict and GET /schema");
  serve->add_option("--checkpoint", o.checkpoint, "Checkpoint")->required()->check(CLI::ExistingFile);
  serve->add_option("--schema", o.schema, "Database schema JSON")->required()->check(CLI::ExistingFile);
  serve->add_option("--port", o.port, "Port (0 picks a free one)");
  serve->add_option("--host", o.host, "Bind address");
  serve->add_option("--bridge", o.bridge, "Embedding bridge");
  common(serve);

  auto* compile = app.add_subcommand("compile", "Compile a vega-zero query to Vega-Lite");
  compile->add_option("query", o.query, "vega-zero text")->required();
  compile->add_option("--schema", o.schema, "Schema for validation and field types")->check(CLI::ExistingFile);
  compile->add_option("--data", o.data_url, "Data URL (default <table>.csv)");
  common(compile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  fs::path manifest_path = o.manifest;
  if (manifest_path.empty()) {
    if (name == "import" || name == "train") manifest_path = o.output + ".manifest.json";
    else if (name == "eval") manifest_path = fs::path(o.output) / "manifest.json";
    else if (name == "compile") manifest_path = "nl2vis-compile.manifest.json";
    else manifest_path = o.checkpoint + "." + name + ".manifest.json";
  }
  nl2vis::service::RunManifest man(manifest_path, name);
  int rc = 1;
  std::string error;
  try {
    man.write();
    if (name == "import") rc = cmd_import(o, man);
    else if (name == "train") rc = cmd_train(o, man);
    else if (name == "eval") rc = cmd_eval(o, man);
    else if (name == "predict") rc = cmd_predict(o, man);
    else if (name == "serve") rc = cmd_serve(o, man);
    else rc = cmd_compile(o, man);
  } catch (const std::exception& e) {
    rc = exit_code_for(e);
    error = e.what();
    std::cerr << "error: " << e.what() << "\n";
  }
  try {
    man.finish(rc, error);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (rc == 0) rc = 1;
  }
  return rc;
}
