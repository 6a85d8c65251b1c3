#include "dagfm/cli/commands.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "dagfm/cli/checkpoint.hpp"
#include "dagfm/cli/config.hpp"
#include "dagfm/data/movielens.hpp"
#include "dagfm/distill/pipeline.hpp"
#include "dagfm/metrics/efficiency.hpp"
#include "dagfm/metrics/evaluation.hpp"
#include "dagfm/model_factory.hpp"
#include "dagfm/numcore/errors.hpp"
#include "dagfm/oracle/suffix_oracle.hpp"

namespace dagfm {

namespace fs = std::filesystem;

namespace {

// Flag values; unset optionals leave the config untouched.
struct Flags {
  std::string config;
  std::string data;
  std::string checkpoint;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> min_freq;
  std::string split;
  std::string teacher;
  std::string fn;
  std::optional<double> alpha;
  std::optional<double> beta;
  std::size_t m = 4;
  std::size_t d = 3;
  std::size_t depth = 3;
  std::size_t iterations = kDefaultLatencyIterations;
};

RunConfig resolve_config(const Flags& f) {
  RunConfig cfg = f.config.empty() ? parse_run_config("") : load_run_config(f.config);
  if (!f.data.empty()) cfg.data_path = f.data;
  if (!f.out.empty()) cfg.out_dir = f.out;
  if (f.seed) cfg.plan.seed = *f.seed;
  if (f.min_freq) cfg.min_freq = *f.min_freq;
  if (!f.split.empty()) cfg.split = parse_split(f.split);
  if (!f.teacher.empty()) {
    const ModelKind kind = parse_model_kind(f.teacher);
    if (kind != ModelKind::cin && kind != ModelKind::crossnet) throw ConfigError("--teacher must be cin or crossnet");
    cfg.plan.teacher.kind = kind;
  }
  if (!f.fn.empty()) cfg.plan.student.fn = parse_interaction_fn(f.fn);
  if (f.alpha) cfg.plan.alpha = *f.alpha;
  if (f.beta) cfg.plan.beta = *f.beta;
  if (cfg.data_path.empty()) throw ConfigError("no data: pass --data or set data.path");
  return cfg;
}

DatasetSplit load_split(const RunConfig& cfg, const FieldSchema& schema) {
  return split_dataset(load_dataset(cfg.data_path, schema), cfg.split, cfg.split_seed);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

nlohmann::json stage_summary(const TrainReport& report, const Model& model, const Dataset& test) {
  nlohmann::json j{{"stage", report.stage},
                   {"best_epoch", report.best_epoch},
                   {"best_val_auc", report.best().val_auc},
                   {"epochs_run", report.epochs.size() - 1},
                   {"wall_seconds", report.wall_seconds},
                   {"diverged", report.diverged}};
  if (report.diverged) j["divergence"] = report.divergence_message;
  if (!test.empty()) {
    const EvalResult ev = evaluate(model, test);
    j["test_auc"] = ev.auc;
    j["test_logloss"] = ev.logloss;
  }
  return j;
}

fs::path default_checkpoint(const Flags& f, const RunConfig& cfg, const std::string& fallback) {
  if (!f.checkpoint.empty()) return f.checkpoint;
  return fs::path(cfg.out_dir) / fallback;
}

int cmd_train_teacher(const Flags& f, std::ostream& out) {
  RunConfig cfg = resolve_config(f);
  const FieldSchema schema = build_vocab(cfg.data_path, cfg.min_freq);
  cfg.plan.teacher.vocab_rows = schema.vocab_rows();
  cfg.plan.student.vocab_rows = schema.vocab_rows();
  cfg.plan.validate();
  fs::create_directories(cfg.out_dir);
  schema.save(fs::path(cfg.out_dir) / "schema.json");
  const DatasetSplit data = load_split(cfg, schema);
  auto teacher = make_model(cfg.plan.teacher, cfg.plan.seed);
  TrainReport report = train_teacher(*teacher, data, cfg.plan.teacher_stage, cfg.plan.seed);
  report.checkpoint = (fs::path(cfg.out_dir) / "teacher.ckpt").string();
  save_checkpoint(*teacher, report.checkpoint, &schema);
  write_text(fs::path(cfg.out_dir) / "teacher_report.jsonl", report.to_jsonl());
  out << stage_summary(report, *teacher, data.test).dump(2) << "\n";
  return report.diverged ? kExitFailure : kExitOk;
}

int cmd_distill(const Flags& f, std::ostream& out) {
  RunConfig cfg = resolve_config(f);
  fs::path teacher_path = f.checkpoint;
  if (teacher_path.empty()) {
    teacher_path = cfg.plan.teacher_checkpoint.empty() ? fs::path(cfg.out_dir) / "teacher.ckpt"
                                                       : fs::path(cfg.plan.teacher_checkpoint);
  }
  LoadedCheckpoint teacher = load_checkpoint(teacher_path);
  if (!teacher.schema) throw FormatError("teacher checkpoint carries no schema");
  const DatasetSplit data = load_split(cfg, *teacher.schema);
  cfg.plan.teacher = teacher.model->spec();
  cfg.plan.student.vocab_rows = teacher.schema->vocab_rows();
  cfg.plan.validate();
  fs::create_directories(cfg.out_dir);
  auto student = make_model(cfg.plan.student, cfg.plan.seed + 2);
  TrainReport report = distill_student(*teacher.model, *student, data, cfg.plan);
  report.checkpoint = (fs::path(cfg.out_dir) / "student_distilled.ckpt").string();
  save_checkpoint(*student, report.checkpoint, &*teacher.schema);
  write_text(fs::path(cfg.out_dir) / "distill_report.jsonl", report.to_jsonl());
  nlohmann::json summary = stage_summary(report, *student, data.test);
  if (!data.test.empty()) {
    summary["test_kd_loss"] =
        kd_loss(predict_logits(*teacher.model, data.test), predict_logits(*student, data.test), cfg.plan.kd_space);
  }
  out << summary.dump(2) << "\n";
  return report.diverged ? kExitFailure : kExitOk;
}

int cmd_finetune(const Flags& f, std::ostream& out) {
  RunConfig cfg = resolve_config(f);
  LoadedCheckpoint student = load_checkpoint(default_checkpoint(f, cfg, "student_distilled.ckpt"));
  if (!student.schema) throw FormatError("student checkpoint carries no schema");
  cfg.plan.teacher.vocab_rows = student.schema->vocab_rows();
  cfg.plan.student = student.model->spec();
  cfg.plan.validate();
  const DatasetSplit data = load_split(cfg, *student.schema);
  fs::create_directories(cfg.out_dir);
  TrainReport report = finetune_student(*student.model, data, cfg.plan.finetune_stage, cfg.plan.seed + 3);
  report.checkpoint = (fs::path(cfg.out_dir) / "student_finetuned.ckpt").string();
  save_checkpoint(*student.model, report.checkpoint, &*student.schema);
  write_text(fs::path(cfg.out_dir) / "finetune_report.jsonl", report.to_jsonl());
  out << stage_summary(report, *student.model, data.test).dump(2) << "\n";
  return report.diverged ? kExitFailure : kExitOk;
}

nlohmann::json efficiency_json(const Model& model, std::span<const FieldIndex> row, std::size_t iterations) {
  const ParamCount params = count_params(model.spec());
  const FlopCount flops = count_flops(model.spec());
  return {{"params", {{"excluding_embeddings", params.interaction}, {"including_embeddings", params.total()}}},
          {"flops", flops.total()},
          {"latency_us", to_json(bench_latency(model, row, iterations))}};
}

int cmd_eval(const Flags& f, std::ostream& out, bool require_data) {
  if (f.checkpoint.empty()) throw ConfigError("--checkpoint is required");
  LoadedCheckpoint ckpt = load_checkpoint(f.checkpoint);
  const Model& model = *ckpt.model;
  nlohmann::json report;
  std::vector<FieldIndex> row(model.spec().num_fields(), 0);
  if (!f.data.empty()) {
    if (!ckpt.schema) throw FormatError("checkpoint carries no schema; cannot encode " + f.data);
    const Dataset data = load_dataset(f.data, *ckpt.schema);
    const EvalResult ev = evaluate(model, data);
    report["auc"] = ev.auc;
    report["logloss"] = ev.logloss;
    report["instances"] = data.size();
    if (!data.empty()) row.assign(data.row(0).begin(), data.row(0).end());
  } else if (require_data) {
    throw ConfigError("--data is required");
  } else {
    report["auc"] = nullptr;
    report["logloss"] = nullptr;
  }
  report.update(efficiency_json(model, row, f.iterations));
  out << report.dump(2) << "\n";
  return kExitOk;
}

int cmd_oracle(const Flags& f, std::ostream& out) {
  const InteractionFn fn = parse_interaction_fn(f.fn.empty() ? "inner" : f.fn);
  const oracle::DpReport report = oracle::assert_dp_equivalence(fn, f.m, f.d, f.depth, f.seed.value_or(42));
  out << oracle::format_report(report);
  return report.pass ? kExitOk : kExitFailure;
}

int cmd_convert(const Flags& f, std::ostream& out) {
  if (f.data.empty() || f.out.empty()) throw ConfigError("convert-movielens needs --data <dir> and --out <csv>");
  const MovieLensSummary s = convert_movielens(f.data, f.out);
  out << nlohmann::json{{"rows", s.rows}, {"positives", s.positives}, {"csv", f.out}}.dump(2) << "\n";
  return kExitOk;
}

}  // namespace

int run_command(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"DAGFM feature-interaction lab: teachers, distillation, oracle and efficiency tools"};
  app.require_subcommand(1);
  Flags f;

  auto add_run_flags = [&](CLI::App* sub) {
    sub->add_option("--config", f.config, "run configuration file");
    sub->add_option("--data", f.data, "CSV dataset");
    sub->add_option("--out", f.out, "output directory");
    sub->add_option("--seed", f.seed, "training seed");
    sub->add_option("--min-freq", f.min_freq, "vocabulary frequency threshold");
    sub->add_option("--split", f.split, "train,validation,test ratios");
  };

  CLI::App* train = app.add_subcommand("train-teacher", "train a CIN or CrossNet teacher");
  add_run_flags(train);
  train->add_option("--teacher", f.teacher, "teacher kind")->check(CLI::IsMember({"cin", "crossnet"}));

  CLI::App* distill = app.add_subcommand("distill", "distill a DAGFM student from a teacher checkpoint");
  add_run_flags(distill);
  distill->add_option("--checkpoint", f.checkpoint, "teacher checkpoint");
  distill->add_option("--fn", f.fn, "student interaction function")
      ->check(CLI::IsMember({"basic-inner", "inner", "kernel", "outer"}));
  distill->add_option("--alpha", f.alpha, "KD loss weight");
  distill->add_option("--beta", f.beta, "CTR loss weight");

  CLI::App* finetune = app.add_subcommand("finetune", "fine-tune a distilled student");
  add_run_flags(finetune);
  finetune->add_option("--checkpoint", f.checkpoint, "distilled student checkpoint");

  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint on a CSV file");
  eval->add_option("--checkpoint", f.checkpoint, "model checkpoint")->required();
  eval->add_option("--data", f.data, "CSV dataset")->required();
  eval->add_option("--iterations", f.iterations, "latency iterations");

  CLI::App* bench = app.add_subcommand("bench", "parameter, FLOPs and latency report for a checkpoint");
  bench->add_option("--checkpoint", f.checkpoint, "model checkpoint")->required();
  bench->add_option("--data", f.data, "optional CSV dataset for AUC/logloss");
  bench->add_option("--iterations", f.iterations, "latency iterations");

  CLI::App* oracle_cmd = app.add_subcommand("oracle-check", "check DAG propagation against the suffix-set oracle");
  oracle_cmd->add_option("--m", f.m, "number of fields");
  oracle_cmd->add_option("--d", f.d, "embedding size");
  oracle_cmd->add_option("--depth", f.depth, "propagation layers");
  oracle_cmd->add_option("--fn", f.fn, "interaction function")
      ->check(CLI::IsMember({"basic-inner", "inner", "kernel", "outer"}));
  oracle_cmd->add_option("--seed", f.seed, "embedding seed");

  CLI::App* convert = app.add_subcommand("convert-movielens", "convert MovieLens-1M .dat files to CSV");
  convert->add_option("--data", f.data, "directory holding ratings.dat, users.dat, movies.dat")->required();
  convert->add_option("--out", f.out, "output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (train->parsed()) return cmd_train_teacher(f, out);
    if (distill->parsed()) return cmd_distill(f, out);
    if (finetune->parsed()) return cmd_finetune(f, out);
    if (eval->parsed()) return cmd_eval(f, out, true);
    if (bench->parsed()) return cmd_eval(f, out, false);
    if (oracle_cmd->parsed()) return cmd_oracle(f, out);
    if (convert->parsed()) return cmd_convert(f, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace dagfm
