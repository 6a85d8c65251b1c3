#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "dagfm/cli/checkpoint.hpp"
#include "dagfm/cli/commands.hpp"
#include "dagfm/cli/config.hpp"
#include "dagfm/data/synthetic.hpp"
#include "dagfm/model_factory.hpp"
#include "dagfm/numcore/errors.hpp"
#include "doctest.h"
#include "json.hpp"
#include "test_util.hpp"

using namespace dagfm;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "dagfm");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_command(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

// Rewrites the JSON header of a serialized checkpoint.
std::string edit_header(const std::string& bytes, const std::function<void(nlohmann::json&)>& edit) {
  std::uint64_t len = 0;
  for (int b = 7; b >= 0; --b) len = (len << 8) | static_cast<unsigned char>(bytes[8 + b]);
  nlohmann::json header = nlohmann::json::parse(bytes.substr(16, len));
  edit(header);
  const std::string text = header.dump();
  std::string out = bytes.substr(0, 8);
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((text.size() >> (8 * b)) & 0xff));
  return out + text + bytes.substr(16 + len);
}

}  // namespace

TEST_CASE("config text parsing") {
  const ConfigEntries e = parse_config_text("# comment\n[data]\npath = a.csv\n; other\n\n[train.teacher]\nlr=0.01\n");
  CHECK(e.at("data.path") == "a.csv");
  CHECK(e.at("train.teacher.lr") == "0.01");
  const ConfigEntries inline_comments = parse_config_text("[teacher]  # models\nkind = cin ; or crossnet\npath = a;b\n");
  CHECK(inline_comments.at("teacher.kind") == "cin");
  CHECK(inline_comments.at("teacher.path") == "a;b");
  CHECK_THROWS_AS(parse_config_text("path = a.csv\n"), ParseError);
  CHECK_THROWS_AS(parse_config_text("[data]\npath = a\npath = b\n"), ParseError);
  CHECK_THROWS_AS(parse_config_text("[data]\njust words\n"), ParseError);
  const auto& keys = config_keys();
  CHECK(std::is_sorted(keys.begin(), keys.end()));
  CHECK(std::find(keys.begin(), keys.end(), "distill.kd_space") != keys.end());
}

TEST_CASE("run config resolution") {
  const RunConfig cfg = parse_run_config(
      "[data]\npath = x.csv\nsplit = 0.7,0.2,0.1\n[teacher]\nkind = cin\ndepth = 2\ncin_layers = 8,6\n"
      "[student]\nfn = kernel\nembed_dim = 4\n[distill]\nalpha = 10\nbeta = 100\nkd_space = probability\n"
      "[train.distill]\nepochs = 7\npatience = 0\n[run]\nseed = 9\nout = runs/a\n");
  CHECK(cfg.data_path == "x.csv");
  CHECK(cfg.split == SplitRatios{0.7, 0.2, 0.1});
  CHECK(cfg.plan.teacher.kind == ModelKind::cin);
  CHECK(cfg.plan.teacher.cin_layers == std::vector<std::size_t>{8, 6});
  CHECK(cfg.plan.student.kind == ModelKind::dagfm);
  CHECK(cfg.plan.student.fn == InteractionFn::kernel);
  CHECK(cfg.plan.student.depth == 2);
  CHECK(cfg.plan.alpha == 10.0);
  CHECK(cfg.plan.kd_space == KdSpace::probability);
  CHECK(cfg.plan.distill_stage.epochs == 7);
  CHECK(cfg.plan.distill_stage.patience == 0);
  CHECK(cfg.plan.teacher_stage.patience == 3);
  CHECK(cfg.plan.seed == 9);
  CHECK(cfg.out_dir == "runs/a");

  const RunConfig defaults = parse_run_config("");
  CHECK(defaults.plan.teacher.kind == ModelKind::crossnet);
  CHECK(defaults.plan.student.fn == InteractionFn::outer);

  try {
    parse_run_config("[teacher]\nwidth = 3\n");
    FAIL("unknown key accepted");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("teacher.width") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_run_config("[distill]\nalpha = abc\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("[distill]\nalpha = 0\nbeta = 0\n"), ConfigError);
  CHECK_THROWS_AS(parse_split("0.5,0.5"), ConfigError);
}

TEST_CASE("checkpoint round trip is byte-identical") {
  std::mt19937_64 rng(1);
  for (ModelKind kind : {ModelKind::dagfm, ModelKind::dagfm_plus, ModelKind::cin, ModelKind::crossnet,
                         ModelKind::fwfm, ModelKind::fmfm, ModelKind::tiny_mlp}) {
    ModelSpec s = testutil::spec_of(kind, 3, 2, 2, InteractionFn::outer, 4);
    if (kind == ModelKind::dagfm_plus || kind == ModelKind::tiny_mlp) s.mlp_hidden = {3};
    if (kind == ModelKind::cin) s.cin_layers = {2, 3};
    if (kind == ModelKind::dagfm) s.removed_edges = {{0, 2}};
    auto model = make_model(s, 2);
    testutil::randomize(model->params(), rng, 1.0);
    model->params().set_trainable(model->embeddings().handle(1), false);
    const std::string first = serialize_checkpoint(*model);
    const LoadedCheckpoint loaded = parse_checkpoint(first);
    CHECK(loaded.model->spec() == s);
    CHECK(serialize_checkpoint(*loaded.model) == first);
    CHECK_FALSE(loaded.model->params().trainable(loaded.model->embeddings().handle(1)));
    const auto row = testutil::random_rows(s, 1, rng)[0];
    CHECK(loaded.model->logit(row) == model->logit(row));
  }
}

TEST_CASE("checkpoint files and schema") {
  const fs::path dir = testutil::scratch_dir("ckpt");
  FieldSchema schema;
  PlantedRuleConfig cfg;
  cfg.instances = 50;
  cfg.num_fields = 3;
  cfg.vocab_per_field = 4;
  const PlantedDataset planted = make_planted_dataset(cfg);
  auto model = make_model(testutil::spec_of(ModelKind::crossnet, 3, 2, 1, InteractionFn::inner, 5), 3);
  save_checkpoint(*model, dir / "m.ckpt", &planted.schema);
  const LoadedCheckpoint loaded = load_checkpoint(dir / "m.ckpt");
  REQUIRE(loaded.schema.has_value());
  CHECK(loaded.schema->to_json() == planted.schema.to_json());
  save_checkpoint(*loaded.model, dir / "again.ckpt", &*loaded.schema);
  CHECK(read_bytes(dir / "m.ckpt") == read_bytes(dir / "again.ckpt"));
  CHECK_THROWS_AS(load_checkpoint(dir / "missing.ckpt"), Error);
}

TEST_CASE("damaged checkpoints are format errors") {
  auto model = make_model(testutil::spec_of(ModelKind::dagfm, 3, 2, 1, InteractionFn::kernel, 4), 4);
  const std::string bytes = serialize_checkpoint(*model);

  try {
    parse_checkpoint(edit_header(bytes, [](nlohmann::json& h) { h["format_version"] = 2; }));
    FAIL("wrong version accepted");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("version") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_checkpoint(bytes.substr(0, bytes.size() - 8)), FormatError);
  CHECK_THROWS_AS(parse_checkpoint(bytes + "x"), FormatError);
  CHECK_THROWS_AS(parse_checkpoint(bytes.substr(0, 12)), FormatError);
  std::string magic = bytes;
  magic[0] = 'X';
  CHECK_THROWS_AS(parse_checkpoint(magic), FormatError);
  std::string corrupt = bytes;
  corrupt[17] = '#';
  CHECK_THROWS_AS(parse_checkpoint(corrupt), FormatError);
  CHECK_THROWS_AS(parse_checkpoint(edit_header(bytes, [](nlohmann::json& h) { h["params"][0]["shape"] = {5, 2}; })),
                  FormatError);
  CHECK_THROWS_AS(parse_checkpoint(edit_header(bytes, [](nlohmann::json& h) { h["params"][1]["name"] = "other"; })),
                  FormatError);
  CHECK_THROWS_AS(parse_checkpoint(edit_header(bytes, [](nlohmann::json& h) { h["params"].erase(0); })),
                  FormatError);
}

TEST_CASE("loaded teacher exposes embedding tables by name") {
  std::mt19937_64 rng(5);
  auto teacher = make_model(testutil::spec_of(ModelKind::cin, 3, 2, 1, InteractionFn::inner, 4), 5);
  testutil::randomize(teacher->params(), rng, 1.0);
  const LoadedCheckpoint loaded = parse_checkpoint(serialize_checkpoint(*teacher));
  for (std::size_t f = 0; f < 3; ++f) {
    const std::string name = "embedding." + std::to_string(f);
    CHECK(loaded.model->params().value(loaded.model->params().at(name)).data()[0] ==
          teacher->params().value(teacher->params().at(name)).data()[0]);
  }
  auto student = make_model(testutil::spec_of(ModelKind::dagfm, 3, 2, 1, InteractionFn::outer, 4), 6);
  share_embeddings(*loaded.model, *student);
  const auto a = student->params().value(student->embeddings().handle(2)).data();
  const auto b = teacher->params().value(teacher->embeddings().handle(2)).data();
  CHECK(std::equal(a.begin(), a.end(), b.begin(), b.end()));
}

TEST_CASE("oracle-check and usage errors") {
  const Run ok = run({"oracle-check", "--m", "4", "--d", "3", "--depth", "3", "--fn", "inner"});
  CHECK(ok.code == kExitOk);
  CHECK(ok.out.find("PASS") != std::string::npos);
  CHECK(run({"oracle-check", "--fn", "outer"}).code == kExitOk);

  const Run bad = run({"oracle-check", "--frobnicate"});
  CHECK(bad.code == kExitUsage);
  CHECK(bad.err.find("oracle-check") != std::string::npos);
  CHECK(run({"oracle-check", "--fn", "dot"}).code == kExitUsage);
  CHECK(run({}).code == kExitUsage);
  CHECK(run({"eval"}).code == kExitUsage);
  CHECK(run({"oracle-check", "--m", "9"}).code == kExitFailure);
}

TEST_CASE("end to end: train, distill, fine-tune, eval") {
  const fs::path dir = testutil::scratch_dir("cli");
  PlantedRuleConfig pc;
  pc.instances = 1500;
  pc.num_fields = 4;
  pc.vocab_per_field = 6;
  const PlantedDataset planted = make_planted_dataset(pc);
  write_csv(dir / "data.csv", planted.schema, planted.data);
  write_file(dir / "run.cfg",
             "[data]\npath = " + (dir / "data.csv").string() +
                 "\n[teacher]\nkind = crossnet\nembed_dim = 4\ndepth = 2\n"
                 "[student]\nembed_dim = 4\n[run]\nout = " + (dir / "out").string() +
                 "\n[train.teacher]\nepochs = 2\nbatch_size = 64\n"
                 "[train.distill]\nepochs = 2\nbatch_size = 64\n[train.finetune]\nepochs = 1\nbatch_size = 64\n");

  const std::string cfg = (dir / "run.cfg").string();
  const Run t = run({"train-teacher", "--config", cfg});
  INFO(t.err);
  REQUIRE(t.code == kExitOk);
  CHECK(fs::exists(dir / "out" / "teacher.ckpt"));
  CHECK(fs::exists(dir / "out" / "schema.json"));
  CHECK(nlohmann::json::parse(t.out).contains("test_auc"));

  const Run d = run({"distill", "--config", cfg, "--alpha", "2", "--fn", "inner"});
  INFO(d.err);
  REQUIRE(d.code == kExitOk);
  CHECK(nlohmann::json::parse(d.out).contains("test_kd_loss"));
  CHECK(load_checkpoint(dir / "out" / "student_distilled.ckpt").model->spec().fn == InteractionFn::inner);

  const Run f = run({"finetune", "--config", cfg});
  INFO(f.err);
  REQUIRE(f.code == kExitOk);
  CHECK(fs::exists(dir / "out" / "finetune_report.jsonl"));

  const Run e = run({"eval", "--checkpoint", (dir / "out" / "student_finetuned.ckpt").string(), "--data",
                     (dir / "data.csv").string(), "--iterations", "20"});
  INFO(e.err);
  REQUIRE(e.code == kExitOk);
  const auto j = nlohmann::json::parse(e.out);
  CHECK(j["auc"].get<double>() > 0.5);
  CHECK(j["logloss"].get<double>() > 0.0);
  CHECK(j["params"]["including_embeddings"].get<std::size_t>() > j["params"]["excluding_embeddings"].get<std::size_t>());
  CHECK(j["flops"].get<std::size_t>() > 0);
  CHECK(j["latency_us"]["iterations"] == 20);

  const Run b = run({"bench", "--checkpoint", (dir / "out" / "teacher.ckpt").string(), "--iterations", "10"});
  CHECK(b.code == kExitOk);
  CHECK(nlohmann::json::parse(b.out)["auc"].is_null());

  // Student embedding size differs from the teacher's.
  write_file(dir / "bad.cfg", "[data]\npath = " + (dir / "data.csv").string() + "\n[student]\nembed_dim = 8\n[run]\nout = " +
                                  (dir / "out").string() + "\n");
  const Run mismatch = run({"distill", "--config", (dir / "bad.cfg").string()});
  CHECK(mismatch.code == kExitFailure);
  CHECK(mismatch.err.find("embedding") != std::string::npos);

  CHECK(run({"distill", "--config", cfg, "--checkpoint", (dir / "missing.ckpt").string()}).code == kExitFailure);
}
