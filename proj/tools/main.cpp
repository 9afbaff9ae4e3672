// tbm: command-line front end for the advisory pipeline.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tbm/advisor.hpp"
#include "tbm/errors.hpp"
#include "tbm/ingest.hpp"
#include "tbm/mlp.hpp"
#include "tbm/optimality.hpp"
#include "tbm/pipeline.hpp"
#include "tbm/service.hpp"
#include "tbm/sim.hpp"
#include "tbm/validate.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kCorpusFile = "corpus.csv";

void write_json(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw tbm::Error(tbm::ErrorCode::Io, "cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
  if (!out) throw tbm::Error(tbm::ErrorCode::Io, "failed writing '" + path.string() + "'");
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw tbm::Error(tbm::ErrorCode::Io, "cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw tbm::Error(tbm::ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

fs::path corpus_path(const fs::path& dir) { return dir / kCorpusFile; }

// ---- subcommands -----------------------------------------------------------

struct IngestArgs {
  std::vector<std::string> inputs;
  std::string out;
  double transient = 60.0;
  double bandwidth = 30.0;
  bool fit_plausibility = false;
};

int run_ingest(const IngestArgs& a) {
  std::vector<std::vector<tbm::SensorRecord>> drives;
  std::size_t dropped = 0;
  for (const auto& path : a.inputs) {
    auto loaded = tbm::ingest::load_csv(path);
    dropped += loaded.dropped_rows;
    drives.push_back(std::move(loaded.records));
  }
  tbm::pipeline::IngestConfig cfg;
  cfg.cleanse.transient_seconds = a.transient;
  cfg.smooth.bandwidth_seconds = a.bandwidth;
  if (a.fit_plausibility) {
    std::vector<tbm::SensorRecord> all;
    for (const auto& d : drives) all.insert(all.end(), d.begin(), d.end());
    cfg.cleanse.plausibility = tbm::ingest::fit_plausibility(all);
  }
  const auto result = tbm::pipeline::ingest_drives(drives, cfg);

  const fs::path out(a.out);
  fs::create_directories(out);
  tbm::ingest::write_corpus(corpus_path(out), result.corpus);

  json stats = json::object();
  for (const auto& [gc, s] : result.stats) stats[std::string(tbm::to_string(gc))] = s;
  write_json(out / "feature_stats.json",
             {{"schema_version", tbm::kSchemaVersion}, {"classes", stats}});
  json report = result.report;
  report["dropped_rows"] = dropped;
  json actions = json::array();
  for (const auto& s : result.actions) actions.push_back(s);
  write_json(out / "cleansing_report.json",
             {{"schema_version", tbm::kSchemaVersion}, {"cleansing", report}, {"actions", actions}});
  std::cout << json{{"samples", result.corpus.size()}, {"cleansing", report}}.dump(2) << '\n';
  return 0;
}

struct FitArgs {
  std::string corpus;
  std::string out;
  double w1 = 0.8;
  double w2 = 3.0;
  double ub = 150.0;
};

int run_fit(const FitArgs& a) {
  const auto corpus = tbm::ingest::load_corpus(corpus_path(a.corpus));
  const auto records = tbm::ingest::records_of(corpus);
  const auto cfg = tbm::optimality::fit_config(records, a.w1, a.w2, a.ub);
  json j = cfg;
  j["schema_version"] = tbm::kSchemaVersion;
  const fs::path out = a.out.empty() ? fs::path(a.corpus) / "optimality.json" : fs::path(a.out);
  write_json(out, j);
  std::cout << j.dump(2) << '\n';
  return 0;
}

struct TrainArgs {
  std::string corpus;
  std::vector<std::string> classes;
  std::string grid;
  std::string optimality;
  std::string out;
  std::uint64_t seed = 0;
  std::size_t epochs = 0;  // 0 keeps the default
};

int run_train(const TrainArgs& a) {
  const auto corpus = tbm::ingest::load_corpus(corpus_path(a.corpus));
  const fs::path opt_path =
      a.optimality.empty() ? fs::path(a.corpus) / "optimality.json" : fs::path(a.optimality);
  const auto opt = read_json(opt_path).get<tbm::OptimalityConfig>();

  std::vector<tbm::GroundClass> classes;
  if (a.classes.empty()) {
    for (const auto& [gc, _] : opt.classes) classes.push_back(gc);
  } else {
    for (const auto& c : a.classes) classes.push_back(tbm::parse_ground_class(c));
  }

  tbm::pipeline::TrainOptions opts;
  opts.config.seed = a.seed;
  if (a.epochs > 0) opts.config.epochs = a.epochs;
  if (!a.grid.empty()) {
    opts.grid = tbm::mlp::load_grid(a.grid);
    if (a.epochs > 0) opts.grid->base.epochs = a.epochs;
  }

  const fs::path out(a.out);
  fs::create_directories(out);
  json opt_json = opt;
  opt_json["schema_version"] = tbm::kSchemaVersion;
  write_json(tbm::advisor::optimality_file(out), opt_json);

  json summary = json::object();
  for (tbm::GroundClass gc : classes) {
    const auto rows = tbm::pipeline::class_corpus(corpus, gc);
    if (rows.empty()) {
      throw tbm::Error(tbm::ErrorCode::InsufficientData,
                       "corpus has no samples of " + std::string(tbm::to_string(gc)));
    }
    const auto result = tbm::pipeline::train_class(rows, opt.at(gc), opts);
    tbm::mlp::save_model(tbm::advisor::model_file(out, gc), result.model);
    tbm::ingest::write_corpus(tbm::advisor::neighbor_file(out, gc), rows);
    json s = {{"samples", rows.size()},
              {"train", result.train.size()},
              {"validation", result.validation.size()},
              {"test", result.test.size()},
              {"test_rmse", result.test_rmse},
              {"score_range", result.score_range}};
    if (result.grid) s["grid"] = *result.grid;
    summary[std::string(tbm::to_string(gc))] = s;
  }
  std::cout << summary.dump(2) << '\n';
  return 0;
}

int run_recommend(const std::string& models, const std::string& input) {
  const auto registry = tbm::advisor::load_registry(models);
  const json body = read_json(input);
  try {
    const auto gc = tbm::parse_ground_class(body.at("ground_class").get<std::string>());
    const auto cop = body.at("cop").get<tbm::CopVector>();
    const auto cxp = body.at("cxp").get<tbm::CxpVector>();
    std::cout << json(tbm::advisor::recommend(registry, gc, cop, cxp)).dump(2) << '\n';
  } catch (const json::exception& e) {
    throw tbm::Error(tbm::ErrorCode::ParseError, input + ": " + e.what());
  }
  return 0;
}

struct ValidateArgs {
  std::string models;
  std::string corpus;
  std::string out;
  bool baseline = false;
  bool literal = false;
};

int run_validate(const ValidateArgs& a) {
  const auto registry = tbm::advisor::load_registry(a.models);
  const auto corpus = tbm::ingest::load_corpus(corpus_path(a.corpus));
  tbm::pipeline::ValidationOptions opts;
  opts.baseline = a.baseline;
  if (a.literal) opts.config.mode = tbm::validate::ImprovementMode::Literal;
  const auto report = tbm::pipeline::validate_registry(registry, corpus, opts);
  if (!a.out.empty()) write_json(a.out, report);
  std::cout << tbm::validate::format_table(report);
  return 0;
}

int run_simulate(const std::string& spec_path, const std::string& out,
                 std::optional<std::uint64_t> seed) {
  auto spec = tbm::sim::load_spec(spec_path);
  if (seed) spec.seed = *seed;
  const auto drive = tbm::sim::generate_drive(spec);
  const fs::path path(out);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  tbm::ingest::write_csv(path, drive.records);
  std::cout << json{{"samples", drive.records.size()}, {"seed", spec.seed}}.dump() << '\n';
  return 0;
}

struct ServeArgs {
  std::string models;
  std::string sim;
  std::string host = "127.0.0.1";
  int port = 8080;
  int tick_ms = 1000;
};

int run_serve(const ServeArgs& a) {
  tbm::service::ServiceConfig cfg;
  cfg.model_dir = a.models;
  if (!a.sim.empty()) cfg.sim_spec = tbm::sim::load_spec(a.sim);
  cfg.tick_interval = std::chrono::milliseconds(a.tick_ms);
  tbm::service::Service svc(cfg);
  svc.load();
  std::cerr << "listening on " << a.host << ':' << a.port << '\n';
  if (!svc.listen(a.host, a.port)) {
    throw tbm::Error(tbm::ErrorCode::Io, "cannot bind " + a.host + ":" + std::to_string(a.port));
  }
  return 0;
}

void report_error(const std::string& code, const std::string& message) {
  std::cerr << json{{"schema_version", tbm::kSchemaVersion},
                    {"error", {{"code", code}, {"message", message}}}}
                   .dump()
            << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tunnel boring machine control advisor"};
  app.require_subcommand(1);

  IngestArgs ingest_args;
  auto* ingest = app.add_subcommand("ingest", "Cleanse, detect actions and smooth drive logs");
  ingest->add_option("inputs", ingest_args.inputs, "Drive CSV files")->required()->check(CLI::ExistingFile);
  ingest->add_option("--out", ingest_args.out, "Corpus directory")->required();
  ingest->add_option("--transient", ingest_args.transient, "Transient trim in seconds");
  ingest->add_option("--bandwidth", ingest_args.bandwidth, "Smoothing kernel std in seconds");
  ingest->add_flag("--fit-plausibility", ingest_args.fit_plausibility,
                   "Drop samples outside the [p0.1, p99.9] range of each channel");

  FitArgs fit_args;
  auto* fit = app.add_subcommand("fit-optimality", "Fit per-class optimality parameters");
  fit->add_option("--corpus", fit_args.corpus, "Corpus directory")->required();
  fit->add_option("--w1", fit_args.w1, "Penalty slope below the margin bound");
  fit->add_option("--w2", fit_args.w2, "Penalty slope above the margin bound");
  fit->add_option("--ub", fit_args.ub, "Working-pressure shutdown threshold (bar)");
  fit->add_option("--out", fit_args.out, "Output file (default <corpus>/optimality.json)");

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Train per-class models");
  train->add_option("--corpus", train_args.corpus, "Corpus directory")->required();
  train->add_option("--gc", train_args.classes, "Ground class (repeatable; default all)");
  train->add_option("--grid", train_args.grid, "Grid-search spec JSON")->check(CLI::ExistingFile);
  train->add_option("--optimality", train_args.optimality, "Optimality config JSON");
  train->add_option("--seed", train_args.seed, "Random seed");
  train->add_option("--epochs", train_args.epochs, "Override the epoch count");
  train->add_option("--out", train_args.out, "Model directory")->required();

  std::string rec_models, rec_input;
  auto* recommend = app.add_subcommand("recommend", "Recommend CoP changes for one sample");
  recommend->add_option("--models", rec_models, "Model directory")->required();
  recommend->add_option("--input", rec_input, "Sample JSON {ground_class, cop, cxp}")->required();

  ValidateArgs val_args;
  auto* val = app.add_subcommand("validate", "Synchronized and contextual validation");
  val->add_option("--models", val_args.models, "Model directory")->required();
  val->add_option("--corpus", val_args.corpus, "Corpus directory")->required();
  val->add_option("--out", val_args.out, "Report JSON path");
  val->add_flag("--baseline", val_args.baseline, "Also validate the neighbour baseline");
  val->add_flag("--literal", val_args.literal, "Count a positive score, not a positive change");

  std::string sim_spec, sim_out;
  std::optional<std::uint64_t> sim_seed;
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic drive");
  simulate->add_option("--spec", sim_spec, "Drive spec JSON")->required()->check(CLI::ExistingFile);
  simulate->add_option("--out", sim_out, "Output CSV")->required();
  simulate->add_option("--seed", sim_seed, "Override the spec seed");

  ServeArgs serve_args;
  auto* serve = app.add_subcommand("serve", "Run the advisory HTTP service");
  serve->add_option("--models", serve_args.models, "Model directory")->required();
  serve->add_option("--sim", serve_args.sim, "Drive spec for simulator sessions");
  serve->add_option("--host", serve_args.host, "Bind address");
  serve->add_option("--port", serve_args.port, "Port");
  serve->add_option("--tick-ms", serve_args.tick_ms, "Live stream tick interval");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*ingest) return run_ingest(ingest_args);
    if (*fit) return run_fit(fit_args);
    if (*train) return run_train(train_args);
    if (*recommend) return run_recommend(rec_models, rec_input);
    if (*val) return run_validate(val_args);
    if (*simulate) return run_simulate(sim_spec, sim_out, sim_seed);
    if (*serve) return run_serve(serve_args);
  } catch (const tbm::Error& e) {
    report_error(std::string(tbm::to_string(e.code())), e.what());
    return tbm::exit_code(e.code());
  } catch (const std::exception& e) {
    report_error("Internal", e.what());
    return 1;
  }
  return 0;
}
