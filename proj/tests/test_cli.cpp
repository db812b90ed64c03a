#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include <json.hpp>

#include "gldgcn/cli.hpp"
#include "support/oracles.hpp"

using namespace gldgcn;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "gldgcn");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Result r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

std::vector<std::string> karate_train(const fs::path& out, int epochs = 40) {
  return {"train", "--dataset", "karate", "--epochs", std::to_string(epochs), "--out", out.string(), "--seed", "1"};
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("gradcheck passes on the synthetic instance") {
    Result r = run({"gradcheck"});
    CHECK(r.code == kExitOk);
    CHECK(r.out.find("graph_learner: max relative error") != std::string::npos);
    CHECK(r.out.find("convolution: max relative error") != std::string::npos);
    CHECK(r.out.find("gradient check passed") != std::string::npos);
  }

  TEST_CASE("gradcheck reports a sabotaged group") {
    for (std::string group : {"graph_learner", "convolution"}) {
      Result r = run({"gradcheck", "--sabotage", group});
      CAPTURE(group);
      CHECK(r.code == kExitGradcheck);
      CHECK(r.err.find(group) != std::string::npos);
    }
  }

  TEST_CASE("gradcheck without the graph-learning term skips the learner") {
    Result r = run({"gradcheck", "--lambda2", "0", "--learn_graph", "false"});
    CHECK(r.code == kExitOk);
    CHECK(r.out.find("graph_learner: no-grad, skipped") != std::string::npos);
  }

  TEST_CASE("configuration and data errors map to exit codes") {
    CHECK(run({"train", "--no-such-flag", "1"}).code == kExitConfig);
    CHECK(run({}).code == kExitConfig);
    CHECK(run({"train", "--dropout", "1.5"}).code == kExitConfig);
    CHECK(run({"train", "--supervise", "x"}).code == kExitConfig);
    CHECK(run({"train", "--dataset", "definitely_missing_dataset"}).code == kExitData);

    auto out = oracle::temp_dir("cli_partition_err");
    Result r = run({"partition", "--dataset", "karate", "--cluster_c", "35", "--out", out.string()});
    CHECK(r.code == kExitConfig);
  }

  TEST_CASE("ppmi on a graph without edges fails with a data error") {
    auto dir = oracle::temp_dir("cli_edgeless");
    write(dir / "features.csv", "1,0\n0,1\n1,1\n");
    write(dir / "labels.txt", "0\n1\n0\n");
    write(dir / "edges.tsv", "");
    write(dir / "train.txt", "0\n1\n");
    Result r = run({"ppmi", "--dataset", dir.string(), "--out", (dir / "out").string()});
    CHECK(r.code == kExitData);
    CHECK(r.err.find("all-zero F") != std::string::npos);
  }

  TEST_CASE("train writes history, summary and checkpoint; eval reads them back") {
    auto out = oracle::temp_dir("cli_train");
    Result r = run(karate_train(out));
    REQUIRE(r.code == kExitOk);
    CHECK(r.out.find("effective config:") != std::string::npos);
    auto summary = nlohmann::json::parse(slurp(out / "summary.json"));
    for (const char* key :
         {"command", "dataset", "nodes", "edges", "edge_lines", "features", "classes", "train_nodes", "val_nodes",
          "test_nodes", "seed", "threads", "simd", "mode", "partition_edge_cut", "epochs_run", "converged", "batches",
          "skipped_batches", "best_epoch", "best_val_acc", "train_acc", "val_acc", "test_acc", "final_val_acc",
          "final_test_acc", "config", "wall_time_sec"}) {
      CAPTURE(key);
      CHECK(summary.contains(key));
    }
    CHECK(summary["nodes"] == 34);
    CHECK(summary["edges"] == 78);
    CHECK(summary["mode"] == "full");
    CHECK(summary["train_acc"] == 1.0);

    const std::string history = slurp(out / "history.csv");
    CHECK(history.rfind("epoch,train_loss,l0,lreg,lgl,val_acc\n", 0) == 0);
    CHECK(std::count(history.begin(), history.end(), '\n') == 1 + summary["epochs_run"].get<int>());

    Result e = run({"eval", "--checkpoint", (out / "checkpoint.txt").string()});
    REQUIRE(e.code == kExitOk);
    auto ej = nlohmann::json::parse(e.out);
    CHECK(ej["test_acc"] == summary["test_acc"]);
  }

  TEST_CASE("repeated runs are byte-identical apart from the wall time") {
    auto a = oracle::temp_dir("cli_det_a");
    auto b = oracle::temp_dir("cli_det_b");
    REQUIRE(run(karate_train(a, 60)).code == kExitOk);
    REQUIRE(run(karate_train(b, 60)).code == kExitOk);
    CHECK(slurp(a / "history.csv") == slurp(b / "history.csv"));
    // the checkpoint echoes the config, whose out directory differs
    auto without_out = [](std::string text) {
      const auto at = text.find("\nconfig out=");
      if (at != std::string::npos) text.erase(at, text.find('\n', at + 1) - at);
      return text;
    };
    CHECK(without_out(slurp(a / "checkpoint.txt")) == without_out(slurp(b / "checkpoint.txt")));
    auto sa = nlohmann::ordered_json::parse(slurp(a / "summary.json"));
    auto sb = nlohmann::ordered_json::parse(slurp(b / "summary.json"));
    sa.erase("wall_time_sec");
    sb.erase("wall_time_sec");
    sa["config"].erase("out");
    sb["config"].erase("out");
    CHECK(sa.dump() == sb.dump());
  }

  TEST_CASE("cluster training through the command line") {
    auto out = oracle::temp_dir("cli_cluster");
    auto args = karate_train(out, 20);
    for (std::string a : {"--cluster", "c=4", "q=2"}) args.push_back(a);
    Result r = run(args);
    REQUIRE(r.code == kExitOk);
    auto summary = nlohmann::json::parse(slurp(out / "summary.json"));
    CHECK(summary["mode"] == "cluster");
    CHECK(summary["partition_edge_cut"].is_number());
    CHECK(run({"train", "--cluster", "c=4", "z=1"}).code == kExitConfig);
  }

  TEST_CASE("ppmi and partition caches are deterministic") {
    auto out = oracle::temp_dir("cli_cache");
    std::vector<std::string> ppmi{"ppmi",     "--dataset", "karate", "--walk_q", "3",    "--walk_w",
                                  "3",        "--walk_gamma", "10",  "--seed",   "1",    "--out",
                                  out.string()};
    Result first = run(ppmi);
    REQUIRE(first.code == kExitOk);
    CHECK(nlohmann::json::parse(first.out)["cache_hit"] == false);
    const std::string cached = slurp(out / "ppmi.tsv");
    Result second = run(ppmi);
    CHECK(nlohmann::json::parse(second.out)["cache_hit"] == true);
    fs::remove(out / "ppmi.tsv");
    REQUIRE(run(ppmi).code == kExitOk);
    CHECK(slurp(out / "ppmi.tsv") == cached);

    Result part = run({"partition", "--dataset", "karate", "--cluster_c", "4", "--out", out.string()});
    REQUIRE(part.code == kExitOk);
    auto j = nlohmann::json::parse(part.out);
    CHECK(j["clusters"] == 4);
    CHECK(j["edge_cut"].get<double>() < j["random_baseline_cut"].get<double>());
  }

  TEST_CASE("flags override the config file, which overrides dataset defaults") {
    auto dir = oracle::temp_dir("cli_config");
    write(dir / "run.cfg", "# test config\nepochs = 3\nhidden_gcn = 7\nlr2 = 0.02\n");
    Result r = run({"train", "--config", (dir / "run.cfg").string(), "--hidden_gcn", "5", "--out",
                    (dir / "out").string(), "--dataset", "karate"});
    REQUIRE(r.code == kExitOk);
    CHECK(r.out.find("  epochs = 3\n") != std::string::npos);
    CHECK(r.out.find("  hidden_gcn = 5\n") != std::string::npos);
    CHECK(r.out.find("  lr2 = 0.02\n") != std::string::npos);
    CHECK(r.out.find("  hidden_gl = 0\n") != std::string::npos);

    write(dir / "bad.cfg", "epochs 3\n");
    CHECK(run({"train", "--config", (dir / "bad.cfg").string()}).code == kExitConfig);
    write(dir / "bad.cfg", "unknown_key = 3\n");
    CHECK(run({"train", "--config", (dir / "bad.cfg").string()}).code == kExitConfig);
  }

  TEST_CASE("the installed binary reports exit codes to the shell") {
    const std::string bin = GLDGCN_CLI_PATH;
    auto status = [](const std::string& cmd) {
      const int s = std::system((cmd + " >/dev/null 2>&1").c_str());
      return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
    };
    CHECK(status(bin + " --help") == kExitOk);
    CHECK(status(bin + " gradcheck") == kExitOk);
    CHECK(status(bin + " gradcheck --sabotage convolution") == kExitGradcheck);
    CHECK(status(bin + " train --dataset nowhere_to_be_found") == kExitData);
  }
}
