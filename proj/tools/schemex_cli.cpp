// Command-line front end: train, eval, extract, dump-queries, make-oracle, convert-conll04.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "schemex/schemex.hpp"

namespace sx = schemex;

namespace {

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;
};

sx::Config resolve_config(const CommonOptions& o) {
  sx::Config c = o.config_path.empty() ? sx::Config{} : sx::load_config(o.config_path);
  for (const auto& kv : o.overrides) sx::apply_assignment(c, kv);
  sx::validate_config(c);
  return c;
}

std::string vocab_path(const sx::Config& c) {
  if (!c.vocab.empty()) return c.vocab;
  if (!c.checkpoint.empty()) return c.checkpoint + ".vocab";
  return {};
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw sx::Error(sx::Errc::Io, "input not found: '" + path + "'");
  std::vector<std::string> out;
  std::string line;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(line);
  }
  return out;
}

// Vocab from the config if present, else one built from `texts` and the schema labels.
sx::Vocab vocab_for(const sx::Config& c, const sx::Schema& schema, const std::vector<std::string>& texts) {
  const std::string p = vocab_path(c);
  if (!p.empty() && std::filesystem::exists(p)) return sx::Vocab::load(p);
  std::vector<std::string> corpus = texts;
  if (corpus.empty()) corpus.emplace_back();
  return sx::build_vocab(corpus, sx::all_labels(schema));
}

sx::Model<float> load_model(const sx::Config& c, const sx::Vocab& vocab) {
  if (c.checkpoint.empty()) throw sx::Error(sx::Errc::BadCheckpoint, "no checkpoint given");
  auto m = sx::load_checkpoint<float>(c.checkpoint);
  sx::ModelDims want = sx::model_dims(c, vocab.size());
  if (!(m.dims == want))
    throw sx::Error(sx::Errc::CheckpointMismatch,
                    "checkpoint '" + c.checkpoint + "' dims do not match the config and vocab");
  return m;
}

void print_report(std::ostream& out, const std::string& task, const sx::MetricReport& r) {
  out << std::left << std::setw(12) << "task" << std::right << std::setw(8) << "gold" << std::setw(8) << "pred"
      << std::setw(8) << "match" << std::setw(10) << "P" << std::setw(10) << "R" << std::setw(10) << "F1" << "\n";
  out << std::left << std::setw(12) << task << std::right << std::setw(8) << r.gold << std::setw(8) << r.predicted
      << std::setw(8) << r.matched << std::fixed << std::setprecision(4) << std::setw(10) << r.precision
      << std::setw(10) << r.recall << std::setw(10) << r.f1 << "\n";
}

int cmd_train(const CommonOptions& o, const std::string& log_path) {
  sx::Config c = resolve_config(o);
  const sx::Schema schema = sx::load_schema(c);
  if (c.data.empty()) throw sx::Error(sx::Errc::Io, "dataset not found: no 'data' path in config");
  const auto data = sx::load_dataset(c.data, schema);
  if (c.checkpoint.empty()) throw sx::Error(sx::Errc::BadConfig, "config: 'checkpoint' path is required for train");

  std::vector<std::string> corpus;
  for (const auto& ex : data) corpus.push_back(ex.text);
  const sx::Vocab vocab = sx::build_vocab(corpus, sx::all_labels(schema));
  vocab.save(vocab_path(c));

  std::ofstream log_file;
  if (!log_path.empty()) log_file.open(log_path);
  auto on_epoch = [&](const sx::EpochLog& e) {
    std::ostringstream line;
    line << "epoch " << e.epoch << " loss " << std::setprecision(6) << e.loss;
    if (e.evaluated) line << " train_path_f1 " << std::setprecision(4) << e.train_paths.f1;
    std::cout << line.str() << std::endl;
    if (log_file) log_file << line.str() << "\n";
  };
  auto result = sx::train(data, schema, vocab, sx::train_config(c, vocab.size()), on_epoch);
  sx::save_checkpoint(c.checkpoint, result.model);
  std::cout << "wrote " << c.checkpoint << " and " << vocab_path(c) << "\n";
  return 0;
}

int cmd_eval(const CommonOptions& o, const std::string& task_name, const std::string& report_path) {
  sx::Config c = resolve_config(o);
  const sx::Task task = sx::parse_task(task_name);
  const sx::Schema schema = sx::load_schema(c);
  if (c.data.empty()) throw sx::Error(sx::Errc::Io, "dataset not found: no 'data' path in config");
  const auto data = sx::load_dataset(c.data, schema);
  const std::string vp = vocab_path(c);
  if (vp.empty() || !std::filesystem::exists(vp)) throw sx::Error(sx::Errc::Io, "vocab not found: '" + vp + "'");
  const sx::Vocab vocab = sx::Vocab::load(vp);
  const auto model = load_model(c, vocab);

  const auto pred = sx::predict_all(model, schema, vocab, data, sx::engine_config(c), c.jobs);
  const auto report = sx::evaluate_paths(sx::gold_all(data), pred, sx::metric_for_task(task), &schema);
  print_report(std::cout, task_name, report);
  if (!report_path.empty()) {
    nlohmann::ordered_json j;
    j["task"] = task_name;
    j["gold"] = report.gold;
    j["predicted"] = report.predicted;
    j["matched"] = report.matched;
    j["precision"] = report.precision;
    j["recall"] = report.recall;
    j["f1"] = report.f1;
    std::ofstream f(report_path);
    if (!f) throw sx::Error(sx::Errc::Io, "cannot write report '" + report_path + "'");
    f << j.dump() << "\n";
  }
  return 0;
}

int cmd_extract(const CommonOptions& o, const std::vector<std::string>& texts_arg, const std::string& input,
                const std::string& output, bool dump_queries, const std::string& oracle_scores) {
  sx::Config c = resolve_config(o);
  const sx::Schema schema = sx::load_schema(c);
  std::vector<std::string> texts = texts_arg;
  if (!input.empty()) {
    auto lines = read_lines(input);
    texts.insert(texts.end(), lines.begin(), lines.end());
  }
  const sx::Vocab vocab = oracle_scores.empty() ? sx::Vocab::load(vocab_path(c)) : vocab_for(c, schema, texts);

  std::unique_ptr<sx::Scorer> scorer;
  sx::Model<float> model;
  if (!oracle_scores.empty()) {
    scorer = std::make_unique<sx::ReplayScorer>(sx::load_score_grid(oracle_scores));
  } else {
    model = load_model(c, vocab);
    scorer = std::make_unique<sx::ModelScorer<float>>(model);
  }

  std::ofstream file;
  if (!output.empty()) {
    file.open(output);
    if (!file) throw sx::Error(sx::Errc::Io, "cannot write '" + output + "'");
  }
  std::ostream& out = output.empty() ? std::cout : file;
  sx::QueryObserver observe;
  if (dump_queries) observe = [](const sx::Query& q) { std::cerr << sx::render_query(q) << "\n"; };
  const auto cfg = sx::engine_config(c);
  for (const auto& t : texts) out << sx::extraction_record(t, sx::extract(schema, vocab, *scorer, t, cfg, observe)) << "\n";
  if (auto* replay = dynamic_cast<sx::ReplayScorer*>(scorer.get()); replay && replay->remaining() != 0)
    throw sx::Error(sx::Errc::BadScoreFile, "score grid: " + std::to_string(replay->remaining()) + " unused matrices");
  return 0;
}

int cmd_dump_queries(const CommonOptions& o, const std::vector<std::string>& texts, const std::string& data_path) {
  sx::Config c = resolve_config(o);
  const sx::Schema schema = sx::load_schema(c);
  std::vector<sx::Example> examples;
  if (!data_path.empty()) examples = sx::load_dataset(data_path, schema);
  for (const auto& t : texts) examples.push_back(sx::Example{t, {}, sx::Mode::Extract});
  std::vector<std::string> corpus;
  for (const auto& ex : examples) corpus.push_back(ex.text);
  const sx::Vocab vocab = vocab_for(c, schema, corpus);
  const auto cfg = sx::engine_config(c);
  for (const auto& ex : examples)
    for (const auto& sq : sx::supervision(schema, vocab, ex.paths, ex.text, cfg))
      std::cout << sx::render_query(sq.query) << "\n";
  return 0;
}

int cmd_make_oracle(const CommonOptions& o, const std::string& data_path, const std::string& out_path,
                    const std::string& texts_path) {
  sx::Config c = resolve_config(o);
  const sx::Schema schema = sx::load_schema(c);
  const auto data = sx::load_dataset(data_path.empty() ? c.data : data_path, schema);
  std::vector<std::string> corpus;
  for (const auto& ex : data) corpus.push_back(ex.text);
  const sx::Vocab vocab = vocab_for(c, schema, corpus);
  const auto cfg = sx::engine_config(c);
  std::vector<sx::ScoreMatrix> all;
  for (const auto& ex : data) {
    sx::OracleScorer oracle(sx::maximal_paths(ex.paths));
    sx::RecordingScorer rec(oracle);
    sx::extract(schema, vocab, rec, ex.text, cfg);
    all.insert(all.end(), rec.recorded().begin(), rec.recorded().end());
  }
  sx::save_score_grid(out_path, all);
  if (!texts_path.empty()) {
    std::ofstream f(texts_path);
    for (const auto& ex : data) f << ex.text << "\n";
  }
  std::cout << "wrote " << all.size() << " score matrices to " << out_path << "\n";
  return 0;
}

int cmd_convert_conll04(const std::string& in_path, const std::string& out_path) {
  std::ifstream f(in_path);
  if (!f) throw sx::Error(sx::Errc::Io, "input not found: '" + in_path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  std::vector<nlohmann::json> records;
  const std::string body = ss.str();
  const auto first = body.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && body[first] == '[') {
    for (auto& r : nlohmann::json::parse(body)) records.push_back(r);
  } else {
    std::istringstream lines(body);
    std::string line;
    while (std::getline(lines, line))
      if (line.find_first_not_of(" \t\r") != std::string::npos) records.push_back(nlohmann::json::parse(line));
  }
  std::ofstream out(out_path);
  if (!out) throw sx::Error(sx::Errc::Io, "cannot write '" + out_path + "'");
  for (const auto& r : records) out << sx::dump_record(sx::convert_conll04(r)) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Schema-guided recursive information extraction"};
  app.require_subcommand(1);

  CommonOptions common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", common.config_path, "key=value config file");
    sub->add_option("--set", common.overrides, "override a config entry, e.g. --set epochs=10")->take_all();
    sub->add_option_function<std::size_t>(
        "--jobs", [&](std::size_t n) { common.overrides.push_back("jobs=" + std::to_string(n)); },
        "worker threads for evaluation");
  };

  auto* train = app.add_subcommand("train", "train a model and write checkpoint + vocab");
  add_common(train);
  std::string log_path;
  train->add_option_function<std::uint64_t>(
      "--seed", [&](std::uint64_t s) { common.overrides.push_back("seed=" + std::to_string(s)); }, "random seed");
  train->add_option_function<std::size_t>(
      "--epochs", [&](std::size_t e) { common.overrides.push_back("epochs=" + std::to_string(e)); }, "epoch count");
  train->add_option("--log", log_path, "also write the per-epoch log here");

  auto* eval = app.add_subcommand("eval", "score a checkpoint on a dataset");
  add_common(eval);
  std::string task, report_path;
  eval->add_option("--task", task, std::string("metric: ") + std::string(sx::kTaskNames))->required();
  eval->add_option_function<std::string>(
      "--checkpoint", [&](const std::string& p) { common.overrides.push_back("checkpoint=" + p); }, "checkpoint file");
  eval->add_option_function<std::string>(
      "--data", [&](const std::string& p) { common.overrides.push_back("data=" + p); }, "dataset file");
  eval->add_option("--report", report_path, "write the metric report as JSON");

  auto* extract = app.add_subcommand("extract", "run extraction and print one JSON record per text");
  add_common(extract);
  std::vector<std::string> texts;
  std::string input, output, oracle_scores;
  bool dump = false;
  extract->add_option("--text", texts, "input text (repeatable)");
  extract->add_option("--input", input, "file with one text per line");
  extract->add_option("--output", output, "write records here instead of stdout");
  extract->add_option_function<std::string>(
      "--checkpoint", [&](const std::string& p) { common.overrides.push_back("checkpoint=" + p); }, "checkpoint file");
  extract->add_flag("--dump-queries", dump, "print every query rendering to stderr");
  extract->add_option("--oracle-scores", oracle_scores, "replay score matrices from a grid file instead of the model");

  auto* dumpq = app.add_subcommand("dump-queries", "print teacher-forced query renderings");
  add_common(dumpq);
  std::string dump_data;
  dumpq->add_option("--text", texts, "input text (repeatable); level-1 queries only");
  dumpq->add_option("--data", dump_data, "dataset file; gold paths drive deeper levels");

  auto* oracle = app.add_subcommand("make-oracle", "write gold-derived score matrices for --oracle-scores");
  add_common(oracle);
  std::string oracle_data, oracle_out, oracle_texts;
  oracle->add_option("--data", oracle_data, "dataset file (defaults to config 'data')");
  oracle->add_option("--out", oracle_out, "grid file to write")->required();
  oracle->add_option("--texts", oracle_texts, "also write the record texts, one per line");

  auto* conv = app.add_subcommand("convert-conll04", "convert CoNLL04-shaped JSON to dataset records");
  std::string conv_in, conv_out;
  conv->add_option("--input", conv_in, "JSON array or JSON-lines file")->required();
  conv->add_option("--output", conv_out, "dataset file to write")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) return cmd_train(common, log_path);
    if (*eval) return cmd_eval(common, task, report_path);
    if (*extract) return cmd_extract(common, texts, input, output, dump, oracle_scores);
    if (*dumpq) return cmd_dump_queries(common, texts, dump_data);
    if (*oracle) return cmd_make_oracle(common, oracle_data, oracle_out, oracle_texts);
    if (*conv) return cmd_convert_conll04(conv_in, conv_out);
  } catch (const sx::Error& e) {
    std::cerr << "error [" << e.code_name() << "]: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error [internal]: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
