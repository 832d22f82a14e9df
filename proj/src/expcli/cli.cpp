// Copyright 2026 The biasbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "biasbench/expcli/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <filesystem>
#include <optional>

#include "biasbench/data/manifest.hpp"
#include "biasbench/error.hpp"
#include "biasbench/expcli/config.hpp"
#include "biasbench/expcli/figures.hpp"
#include "biasbench/expcli/reports.hpp"
#include "biasbench/expcli/store.hpp"
#include "biasbench/json_util.hpp"

namespace biasbench::expcli {

namespace fs = std::filesystem;

namespace {

// Raised when a trial (not the user's input) failed.
class TrialFailure : public std::runtime_error {
 public:
  TrialFailure(const std::string& what, Json detail) : std::runtime_error(what), detail(std::move(detail)) {}
  Json detail;
};

struct Options {
  std::string store;
  bool quiet = false;

  // generate
  std::string spec;
  std::string out;
  std::string format = "png";

  // train / sweep
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> parallel;

  // report / export-figures
  std::string like;
  std::string csv;
  double alpha = 0.0;
  std::string checkpoint = "final";
  std::vector<std::string> methods;
  std::vector<std::string> ids;
  std::string dataset;
  std::vector<double> alphas = {-1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0};
  std::string baseline = "StdM";
};

TrialStore OpenStore(const Options& o) { return TrialStore(o.store.empty() ? TrialStore::DefaultRoot() : fs::path(o.store)); }

sweep::SelectionPolicy Policy(const Options& o) {
  sweep::SelectionPolicy p;
  p.alpha = o.alpha;
  p.checkpoint = o.checkpoint == "best" ? sweep::CheckpointChoice::kBest : sweep::CheckpointChoice::kFinal;
  return p;
}

Json Summary(const TrialRecord& r, bool cached) {
  Json j = {{"id", r.id}, {"method", r.method()}, {"seed", r.config.seed}, {"status", train::TrialStatusName(r.status)},
            {"cached", cached}};
  if (r.final_test) j["test_unbiased"] = r.final_test->AccAt(0.0);
  if (r.final_test) j["test_accuracy"] = r.final_test->accuracy();
  if (!r.diagnostic.empty()) j["diagnostic"] = r.diagnostic;
  return j;
}

int DoGenerate(const Options& o, std::ostream& out) {
  const Json spec = ReadJsonFile(o.spec);
  if (spec.contains("path")) throw ValidationError("generate needs a generator spec, not a dataset path");
  const auto source = DatasetSourceFromJson(spec, fs::path(o.spec).parent_path());
  const auto format = data::ParseStorageFormat(o.format);
  const fs::path dir(o.out);
  if (fs::exists(dir) && !fs::is_empty(dir)) throw ValidationError("output directory " + dir.string() + " is not empty");
  const bool created = !fs::exists(dir);
  try {
    const auto ds = Materialize(source);
    data::SaveDataset(ds, dir, ds.input == data::InputKind::kVector ? data::StorageFormat::kInline : format);
    Json counts = Json::object();
    for (const auto s : data::kAllSplits) counts[std::string(data::SplitName(s))] = ds.split(s).size();
    out << Json{{"out", dir.string()}, {"kind", ds.kind}, {"counts", counts}}.dump() << "\n";
  } catch (...) {
    // Leave no partial dataset behind.
    std::error_code ec;
    if (created) {
      fs::remove_all(dir, ec);
    } else {
      for (const auto& e : fs::directory_iterator(dir, ec)) fs::remove_all(e.path(), ec);
    }
    throw;
  }
  return kExitOk;
}

int DoTrain(const Options& o, std::ostream& out) {
  auto config = LoadExperimentConfig(o.config);
  if (o.seed) config.train.seed = *o.seed;
  config.train.Validate();
  auto store = OpenStore(o);
  const auto identity = DatasetIdentity(config.dataset);
  const auto id = TrialId(identity, config.train);
  if (auto cached = store.Find(id)) {
    out << Summary(*cached, true).dump() << "\n";
    if (!cached->ok()) throw TrialFailure("trial " + id + " " + std::string(train::TrialStatusName(cached->status)), Summary(*cached, true));
    return kExitOk;
  }
  const auto ds = Materialize(config.dataset);
  StoreRunner runner(store, ds, !o.quiet);
  const auto record = runner(config.train);
  store.RebuildIndex();
  out << Summary(record, false).dump() << "\n";
  if (!record.ok()) throw TrialFailure("trial " + id + " " + std::string(train::TrialStatusName(record.status)), Summary(record, false));
  return kExitOk;
}

int DoSweep(const Options& o, std::ostream& out) {
  auto config = LoadExperimentConfig(o.config);
  if (o.parallel) config.sweep.parallelism = *o.parallel;
  config.sweep.Validate();
  auto store = OpenStore(o);
  const auto ds = Materialize(config.dataset);
  StoreRunner runner(store, ds, !o.quiet);
  std::vector<TrialRecord> records;
  try {
    records = sweep::RunSweep(config.sweep, std::ref(runner));
  } catch (const NumericError& e) {
    store.RebuildIndex();
    throw TrialFailure(e.what(), Json{{"executed", runner.executed()}, {"cached", runner.cached()}});
  }
  store.RebuildIndex();
  const auto& winner = sweep::SelectModel(records, config.sweep.policy);
  std::size_t failed = std::count_if(records.begin(), records.end(), [](const auto& r) { return !r.ok(); });
  out << Json{{"trials", records.size()},
              {"executed", runner.executed()},
              {"cached", runner.cached()},
              {"failed", failed},
              {"winner", Summary(winner, false)}}
             .dump()
      << "\n";
  return kExitOk;
}

int DoReport(const Options& o, std::ostream& out) {
  const auto kind = ParseReportKind(o.like);
  for (const auto& m : o.methods) methods::ParseMethodTag(m);
  const auto store = OpenStore(o);
  FigureSelector sel{o.methods, {}, o.dataset};
  const auto trials = ApplySelector(store.LoadAll(), sel, nullptr);
  const auto table = BuildReportTable(kind, trials, Policy(o));
  if (!o.csv.empty()) WriteFileAtomic(o.csv, RenderCsv(table));
  out << RenderText(table);
  return kExitOk;
}

int DoExportFigures(const Options& o, std::ostream& out) {
  const auto store = OpenStore(o);
  FigureOptions fo{Policy(o), o.alphas, o.baseline};
  methods::ParseMethodTag(o.baseline);
  const FigureSelector sel{o.methods, o.ids, o.dataset};
  const auto result = ExportFigures(store.LoadAll(), sel, fo, o.out);
  if (!result.missing_ids.empty()) {
    throw NotFoundError("trials not in store: " + [&] {
      std::string s;
      for (const auto& id : result.missing_ids) s += (s.empty() ? "" : ", ") + id;
      return s;
    }());
  }
  Json written = Json::array();
  for (const auto& p : result.written) written.push_back(p.string());
  out << Json{{"selected", result.selected}, {"written", written}}.dump() << "\n";
  return kExitOk;
}

int DoList(const Options& o, std::ostream& out) {
  const auto store = OpenStore(o);
  for (const auto& r : store.LoadAll()) {
    Json j = Summary(r, false);
    j.erase("cached");
    j["dataset"] = DatasetLabel(r.dataset);
    j["lr"] = r.config.lr;
    j["weight_decay"] = r.config.weight_decay;
    j["method_config"] = methods::ToJson(r.config.method);
    out << j.dump() << "\n";
  }
  return kExitOk;
}

void ErrorRecord(std::ostream& err, const std::string& kind, const std::string& message, const std::string& verb,
                 const Json& detail = nullptr) {
  Json e = {{"kind", kind}, {"message", message}, {"verb", verb}};
  if (!detail.is_null()) e["detail"] = detail;
  err << Json{{"error", e}}.dump() << "\n";
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Bias-mitigation benchmark: dataset generation, training, sweeps and reports", "biasbench"};
  app.require_subcommand(1);
  const auto add_store = [&](CLI::App* cmd) {
    cmd->add_option("--store", o.store, "Trial store root (default: $BIASBENCH_STORE or ./biasbench_store)");
  };

  auto* gen = app.add_subcommand("generate", "Generate a dataset directory from a generator spec");
  gen->add_option("--spec", o.spec, "Generator spec JSON (biased_mnist BiasSpec or {\"kind\":\"group_task\",...})")
      ->required()
      ->check(CLI::ExistingFile);
  gen->add_option("--out", o.out, "Output directory (created; must be empty if it exists)")->required();
  gen->add_option("--format", o.format, "Image storage: png or packed")->check(CLI::IsMember({"png", "packed"}));

  auto* tr = app.add_subcommand("train", "Train one trial; a cached trial is returned without retraining");
  tr->add_option("--config", o.config, "Experiment config JSON")->required()->check(CLI::ExistingFile);
  tr->add_option("--seed", o.seed, "Override train.seed");
  tr->add_flag("--quiet", o.quiet, "Suppress per-epoch progress on stderr");
  add_store(tr);

  auto* sw = app.add_subcommand("sweep", "Run the two-stage hyperparameter sweep of a config");
  sw->add_option("--config", o.config, "Experiment config JSON")->required()->check(CLI::ExistingFile);
  sw->add_option("--parallel", o.parallel, "Concurrent trials (overrides sweep.parallelism)")
      ->check(CLI::PositiveNumber);
  sw->add_flag("--quiet", o.quiet, "Suppress per-epoch progress on stderr");
  add_store(sw);

  const auto add_selection = [&](CLI::App* cmd) {
    cmd->add_option("--alpha", o.alpha, "Validation Acc(alpha) used for model selection (default 0)");
    cmd->add_option("--checkpoint", o.checkpoint, "Checkpoint to report: final or best")
        ->check(CLI::IsMember({"final", "best"}));
    cmd->add_option("--method", o.methods, "Restrict to these methods (repeatable)");
    cmd->add_option("--dataset", o.dataset, "Restrict to datasets whose label starts with this prefix");
    add_store(cmd);
  };

  auto* rep = app.add_subcommand("report", "Print a results table built from the trial store");
  rep->add_option("--like", o.like, "Table: overall, per-group or per-factor")
      ->required()
      ->check(CLI::IsMember({"overall", "per-group", "per-factor"}));
  rep->add_option("--csv", o.csv, "Also write the table at full precision to this CSV file");
  add_selection(rep);

  auto* fig = app.add_subcommand("export-figures", "Write figure data (CSV) and plots (SVG) from the trial store");
  fig->add_option("--out", o.out, "Output directory")->required();
  fig->add_option("--id", o.ids, "Restrict to these trial ids (repeatable); all must exist");
  fig->add_option("--alphas", o.alphas, "Alpha grid for selection-sensitivity and Acc(alpha) plots");
  fig->add_option("--baseline", o.baseline, "Baseline method for IOSM (default StdM)");
  add_selection(fig);

  auto* ls = app.add_subcommand("list", "List the trials in the store, one JSON line each");
  add_store(ls);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  std::string verb;
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    for (auto* sub : app.get_subcommands()) verb = sub->get_name();
    ErrorRecord(err, "usage", e.what(), verb);
    return kExitUserError;
  }
  verb = app.get_subcommands().front()->get_name();

  try {
    if (verb == "generate") return DoGenerate(o, out);
    if (verb == "train") return DoTrain(o, out);
    if (verb == "sweep") return DoSweep(o, out);
    if (verb == "report") return DoReport(o, out);
    if (verb == "export-figures") return DoExportFigures(o, out);
    return DoList(o, out);
  } catch (const TrialFailure& e) {
    ErrorRecord(err, "trial_failure", e.what(), verb, e.detail);
    return kExitTrialFailure;
  } catch (const Error& e) {
    ErrorRecord(err, KindName(e.kind()), e.what(), verb);
    return kExitUserError;
  } catch (const nlohmann::json::exception& e) {
    ErrorRecord(err, "validation", e.what(), verb);
    return kExitUserError;
  } catch (const fs::filesystem_error& e) {
    ErrorRecord(err, "io", e.what(), verb);
    return kExitUserError;
  }
}

}  // namespace biasbench::expcli
