#include <gtest/gtest.h>
#include <sys/wait.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "eventaware/corpus.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

const char* kSpec = R"({
  "events": ["earthquake", "flood", "fire"],
  "labels": ["injured_or_dead", "infrastructure_damage", "caution_and_advice"],
  "num_examples": 150,
  "ambiguous_rate": 0.5,
  "label_priors": {
    "earthquake": {"injured_or_dead": 0.6, "infrastructure_damage": 0.2, "caution_and_advice": 0.2},
    "flood": {"injured_or_dead": 0.2, "infrastructure_damage": 0.6, "caution_and_advice": 0.2},
    "fire": {"injured_or_dead": 0.2, "infrastructure_damage": 0.2, "caution_and_advice": 0.6}
  },
  "unambiguous_triggers": {"wounded": "injured_or_dead", "bridge": "infrastructure_damage",
                           "warning": "caution_and_advice"},
  "ambiguous_triggers": {
    "shaking": {"earthquake": "injured_or_dead", "flood": "infrastructure_damage",
                "fire": "caution_and_advice"}
  },
  "templates": ["{filler} {trigger} {filler}", "{trigger} near {filler}"],
  "fillers": ["city", "today", "people", "news", "the"],
  "split": {"train": 0.6, "dev": 0.2, "test": 0.2}
})";

const std::string kTiny =
    " --d-model 16 --heads 2 --layers 1 --d-ff 32 --max-len 24 --batch-size 16";

struct Outcome {
  int code = -1;
  std::string err;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("eventaware_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    write(dir_ / "spec.json", kSpec);
  }
  void TearDown() override { fs::remove_all(dir_); }

  Outcome run(const std::string& args) const {
    const auto err_path = dir_ / "stderr.txt";
    const std::string cmd = std::string(EVENTAWARE_CLI) + " " + args + " > " + (dir_ / "stdout.txt").string() +
                            " 2> " + err_path.string();
    const int status = std::system(cmd.c_str());
    Outcome r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.err = read(err_path);
    return r;
  }

  // gen-synth into <name>/ and return that directory.
  fs::path synth(const std::string& name, int seed = 3) const {
    const auto out = dir_ / name;
    EXPECT_EQ(run("gen-synth --spec " + (dir_ / "spec.json").string() + " --seed " + std::to_string(seed) +
                  " --out " + out.string())
                  .code,
              0);
    return out;
  }

  std::string data_flags(const fs::path& d) const {
    return " --corpus " + (d / "corpus.tsv").string() + " --splits " + (d / "splits.tsv").string();
  }

  static void write(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }
  static std::string read(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }
  static json load(const fs::path& p) { return json::parse(read(p)); }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, GenSynthIsByteDeterministic) {
  const auto a = synth("a"), b = synth("b"), c = synth("c", 4);
  EXPECT_EQ(read(a / "corpus.tsv"), read(b / "corpus.tsv"));
  EXPECT_EQ(read(a / "splits.tsv"), read(b / "splits.tsv"));
  EXPECT_EQ(load(a / "gen_synth.json")["payload"], load(b / "gen_synth.json")["payload"]);
  EXPECT_NE(read(a / "corpus.tsv"), read(c / "corpus.tsv"));
  const auto payload = load(a / "gen_synth.json")["payload"];
  EXPECT_EQ(payload["num_examples"].get<int>(), 150);
  EXPECT_EQ(eventaware::load_corpus(a / "corpus.tsv").size(), 150u);
}

TEST_F(Cli, InvalidSpecExitsTwo) {
  write(dir_ / "bad.json", R"({"events": ["fire"]})");
  const auto r = run("gen-synth --spec " + (dir_ / "bad.json").string() + " --out " + (dir_ / "o").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("error"), std::string::npos);
}

TEST_F(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("train --no-such-flag").code, 2);
  EXPECT_EQ(run("train --corpus " + (dir_ / "missing.tsv").string() + " --splits x --out " +
                (dir_ / "o").string())
                .code,
            2);
}

TEST_F(Cli, ConfigFileSuppliesDefaultsAndFlagsOverride) {
  const auto d = synth("data");
  write(dir_ / "cfg.json", R"({"d_model": 16, "n_heads": 2, "n_layers": 1, "d_ff": 32,
                               "max_len": 24, "max_epochs": 2, "batch_size": 16, "patience": 7})");
  const auto out = dir_ / "run";
  ASSERT_EQ(run("--config " + (dir_ / "cfg.json").string() + " train" + data_flags(d) +
                " --patience 1 --out " + out.string())
                .code,
            0);
  const auto cfg = load(out / "history.json")["payload"]["config"];
  EXPECT_EQ(cfg["model"]["d_model"].get<int>(), 16);
  EXPECT_EQ(cfg["train"]["max_epochs"].get<int>(), 2);
  EXPECT_EQ(cfg["train"]["patience"].get<int>(), 1);

  write(dir_ / "typo.json", R"({"d_modle": 16})");
  EXPECT_EQ(run("--config " + (dir_ / "typo.json").string() + " train" + data_flags(d)).code, 2);
}

TEST_F(Cli, TrainThenEvalRoundTrip) {
  const auto d = synth("data");
  const auto out = dir_ / "run";
  ASSERT_EQ(run("train" + data_flags(d) + kTiny + " --epochs 3 --encoding event --out " + out.string()).code, 0);
  for (const char* f : {"model.bin", "model.bin.json", "vocab.txt", "history.json"})
    EXPECT_TRUE(fs::exists(out / f)) << f;
  const auto ev = dir_ / "eval";
  ASSERT_EQ(run("eval --checkpoint " + (out / "model.bin").string() + data_flags(d) + " --out " + ev.string()).code,
            0);
  const auto m = load(ev / "metrics.json");
  EXPECT_EQ(m["schema"], "eventaware.metrics");
  EXPECT_EQ(m["schema_version"], 1);
  EXPECT_EQ(m["payload"]["split"], "test");
  EXPECT_EQ(m["payload"]["encoding"], "event_aware");
  EXPECT_EQ(m["payload"]["per_event_accuracy"].size(), 3u);
  const double acc = m["payload"]["accuracy"].get<double>();
  EXPECT_GE(acc, 0.0);
  EXPECT_LE(acc, 1.0);
}

TEST_F(Cli, OverfitToyEvaluatesPerfectlyOnTrain) {
  write(dir_ / "toy.tsv",
        "id\tevent\tlabel\ttext\n"
        "1\tfire\tcaution\tflames spreading now\n"
        "2\tfire\tdamage\troof destroyed\n"
        "3\tflood\tcaution\tstay indoors water rising\n"
        "4\tflood\tdamage\tbridge washed away\n"
        "5\tfire\tcaution\tflames spreading now\n"
        "6\tfire\tdamage\troof destroyed\n"
        "7\tflood\tcaution\tstay indoors water rising\n"
        "8\tflood\tdamage\tbridge washed away\n");
  // dev repeats the training texts, so the selected epoch is the best fit
  write(dir_ / "toy_splits.tsv",
        "id\tsplit\n1\ttrain\n2\ttrain\n3\ttrain\n4\ttrain\n5\tdev\n6\tdev\n7\tdev\n8\tdev\n");
  const auto out = dir_ / "toy";
  const std::string data =
      " --corpus " + (dir_ / "toy.tsv").string() + " --splits " + (dir_ / "toy_splits.tsv").string();
  ASSERT_EQ(run("train" + data +
                " --d-model 16 --heads 2 --layers 1 --d-ff 32 --max-len 16 --epochs 60 --patience 100"
                " --batch-size 4 --lr 0.01 --dropout 0 --out " + out.string())
                .code,
            0);
  ASSERT_EQ(run("eval --checkpoint " + (out / "model.bin").string() + data + " --split train --out " +
                (dir_ / "ev").string())
                .code,
            0);
  EXPECT_DOUBLE_EQ(load(dir_ / "ev" / "metrics.json")["payload"]["accuracy"].get<double>(), 1.0);
}

TEST_F(Cli, EvalErrors) {
  const auto d = synth("data");
  const auto out = dir_ / "run";
  ASSERT_EQ(run("train" + data_flags(d) + kTiny + " --epochs 1 --out " + out.string()).code, 0);
  const std::string ckpt = " --checkpoint " + (out / "model.bin").string();

  write(dir_ / "empty.tsv", "id\tevent\tlabel\ttext\n");
  auto r = run("eval" + ckpt + " --corpus " + (dir_ / "empty.tsv").string() + " --out " + (dir_ / "e").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("empty_evaluation"), std::string::npos);

  write(dir_ / "other_vocab.txt", "[PAD]\n[UNK]\n[CLS]\n[SEP]\nzzz\n");
  r = run("eval" + ckpt + data_flags(d) + " --vocab " + (dir_ / "other_vocab.txt").string() + " --out " +
          (dir_ / "e").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("compatibility"), std::string::npos);
}

TEST_F(Cli, AnalyzeModes) {
  const auto d = synth("data");
  const auto ea = dir_ / "ea", va = dir_ / "va";
  ASSERT_EQ(run("train" + data_flags(d) + kTiny + " --epochs 3 --encoding event --out " + ea.string()).code, 0);
  ASSERT_EQ(run("train" + data_flags(d) + kTiny + " --epochs 3 --encoding vanilla --out " + va.string()).code, 0);

  ASSERT_EQ(run("analyze --mode distributions" + data_flags(d) + " --out " + (dir_ / "dist").string()).code, 0);
  const auto dist = load(dir_ / "dist" / "analysis_distributions.json")["payload"]["distributions"];
  const auto corpus = eventaware::load_corpus(d / "corpus.tsv");
  for (const auto& event : corpus.event_vocab) {
    std::vector<eventaware::Example> own;
    for (const auto& ex : corpus.examples)
      if (ex.event_type == event) own.push_back(ex);
    const auto expected = eventaware::label_distribution(own, corpus.label_vocab);
    for (std::size_t i = 0; i < expected.labels.size(); ++i)
      EXPECT_DOUBLE_EQ(dist[event]["labels"][expected.labels[i]].get<double>(), expected.probs[i]);
    EXPECT_EQ(dist[event]["count"].get<std::size_t>(), own.size());
  }

  ASSERT_EQ(run("analyze --mode kl --checkpoint " + (ea / "model.bin").string() + data_flags(d) + " --out " +
                (dir_ / "kl").string())
                .code,
            0);
  const auto kl = load(dir_ / "kl" / "analysis_kl.json")["payload"]["kl"];
  EXPECT_TRUE(kl.contains("inequality_holds"));
  EXPECT_EQ(kl["per_event"].size(), 3u);

  const auto r = run("analyze --mode kl --checkpoint " + (va / "model.bin").string() + data_flags(d) +
                     " --out " + (dir_ / "klv").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("mode"), std::string::npos);

  ASSERT_EQ(run("analyze --mode attention --threshold 1.0 --checkpoint " + (ea / "model.bin").string() +
                data_flags(d) + " --out " + (dir_ / "att").string())
                .code,
            0);
  const auto att = load(dir_ / "att" / "analysis_attention.json")["payload"];
  for (const auto& [event, tokens] : att["counts"]["per_event"].items()) EXPECT_TRUE(tokens.empty()) << event;
  for (const auto& [event, list] : att["tfidf"].items()) EXPECT_TRUE(list.empty()) << event;
  for (const auto& [event, c] : att["clusters"].items()) EXPECT_TRUE(c["tokens"].empty()) << event;
}

TEST_F(Cli, LoetoStructureAndAggregate) {
  const auto d = synth("data");
  const auto out = dir_ / "loeto";
  ASSERT_EQ(run("loeto --corpus " + (d / "corpus.tsv").string() + kTiny + " --epochs 2 --out " + out.string()).code,
            0);
  std::size_t folds = 0;
  std::size_t total = 0;
  double hits_vanilla = 0, hits_event = 0;
  for (const auto& entry : fs::directory_iterator(out)) {
    if (!entry.is_directory()) continue;
    ++folds;
    const auto f = load(entry.path() / "report.json")["payload"];
    const auto n = f["sizes"]["test"].get<std::size_t>();
    total += n;
    hits_vanilla += f["vanilla"]["metrics"]["accuracy"].get<double>() * static_cast<double>(n);
    hits_event += f["event_aware"]["metrics"]["accuracy"].get<double>() * static_cast<double>(n);
  }
  EXPECT_EQ(folds, 3u);
  const auto agg = load(out / "aggregate.json")["payload"];
  ASSERT_EQ(agg["per_event"].size(), 3u);
  EXPECT_NEAR(agg["models"]["vanilla"]["accuracy"].get<double>(), hits_vanilla / static_cast<double>(total), 1e-12);
  EXPECT_NEAR(agg["models"]["event_aware"]["accuracy"].get<double>(), hits_event / static_cast<double>(total),
              1e-12);
  for (const auto& row : agg["per_event"])
    EXPECT_DOUBLE_EQ(row["delta"].get<double>(),
                     row["event_aware_accuracy"].get<double>() - row["vanilla_accuracy"].get<double>());
}

TEST_F(Cli, TrainPayloadIsDeterministic) {
  const auto d = synth("data");
  ASSERT_EQ(run("train" + data_flags(d) + kTiny + " --epochs 2 --seed 5 --out " + (dir_ / "r1").string()).code, 0);
  ASSERT_EQ(run("train" + data_flags(d) + kTiny + " --epochs 2 --seed 5 --out " + (dir_ / "r2").string()).code, 0);
  EXPECT_EQ(load(dir_ / "r1" / "history.json")["payload"], load(dir_ / "r2" / "history.json")["payload"]);
  EXPECT_EQ(read(dir_ / "r1" / "model.bin"), read(dir_ / "r2" / "model.bin"));
}
