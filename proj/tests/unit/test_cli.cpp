#include <doctest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "splicegan/checkpoint.hpp"
#include "splicegan/manifest.hpp"
#include "splicegan/training.hpp"

using namespace splicegan;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;
};

const char* cli_binary() { return std::getenv("SPLICEGAN_BIN"); }

RunResult run_cli(const std::string& args) {
  const std::string command = std::string(cli_binary()) + " " + args + " 2>&1";
  std::array<char, 4096> buffer{};
  RunResult result;
  FILE* pipe = popen(command.c_str(), "r");
  REQUIRE(pipe != nullptr);
  size_t n = 0;
  while ((n = fread(buffer.data(), 1, buffer.size(), pipe)) > 0)
    result.output.append(buffer.data(), n);
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

fs::path fresh_dir(const char* tag) {
  const fs::path dir = fs::temp_directory_path() / (std::string("splicegan_cli_") + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("cli help exits cleanly for every subcommand") {
  if (!cli_binary()) return;  // library-only build
  for (const char* sub : {"", "synth", "train", "infer", "eval", "plot"}) {
    const RunResult r = run_cli(std::string(sub) + " --help");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("Usage") != std::string::npos);
  }
}

TEST_CASE("cli synth writes a deterministic corpus and prints class counts") {
  if (!cli_binary()) return;
  const fs::path dir = fresh_dir("synth");
  const std::string out = (dir / "corpus").string();
  const RunResult r = run_cli("synth --out " + out + " --seed 7 --scale 0.05 --workers 2");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("small=8") != std::string::npos);
  CHECK(r.output.find("medium=2") != std::string::npos);
  CHECK(r.output.find("large=2") != std::string::npos);
  CHECK(r.output.find("pristine=6") != std::string::npos);
  REQUIRE(fs::exists(out + "/manifest.json"));
  const DatasetManifest manifest = load_manifest(out + "/manifest.json");
  CHECK(manifest.pairs.size() == 18);

  SUBCASE("rerunning with the same seed changes no file content") {
    auto mtime = fs::last_write_time(out + "/manifest.json");
    std::ifstream in(out + "/manifest.json", std::ios::binary);
    const std::string before((std::istreambuf_iterator<char>(in)), {});
    const RunResult again = run_cli("synth --out " + out + " --seed 7 --scale 0.05");
    CHECK(again.exit_code == 0);
    std::ifstream in2(out + "/manifest.json", std::ios::binary);
    const std::string after((std::istreambuf_iterator<char>(in2)), {});
    CHECK(before == after);
    (void)mtime;
  }
  SUBCASE("an unwritable output directory exits with code 2") {
    const RunResult bad = run_cli("synth --out /proc/definitely/not/writable --seed 1 --scale 0.05");
    CHECK(bad.exit_code == 2);
  }
}

TEST_CASE("cli infer and eval emit masks, scores, curves and plots") {
  if (!cli_binary()) return;
  const fs::path dir = fresh_dir("infer_eval");
  const std::string corpus = (dir / "corpus").string();
  REQUIRE(run_cli("synth --out " + corpus + " --seed 11 --scale 0.05 --workers 2").exit_code == 0);

  // An untrained tiny checkpoint is enough to exercise the artifact plumbing.
  TrainConfig config;
  config.preset = "tiny";
  config.seed = 3;
  const TrainState state = init_train_state(config);
  const std::string ckpt = (dir / "init.spgc").string();
  save_checkpoint(ckpt, make_checkpoint(state, false, std::nullopt));

  SUBCASE("infer writes per-image artifacts") {
    const std::string out = (dir / "infer_out").string();
    const RunResult r = run_cli("infer --checkpoint " + ckpt + " --manifest " + corpus +
                                "/manifest.json --split test --out " + out + " --workers 2");
    CHECK(r.exit_code == 0);
    const DatasetManifest manifest = load_manifest(corpus + "/manifest.json");
    for (const PairRecord* rec : manifest.split_records(Split::test)) {
      CHECK(fs::exists(fs::path(out) / (rec->id + "_mask.png")));
      CHECK(fs::exists(fs::path(out) / (rec->id + "_mask_bin.png")));
      const fs::path record = fs::path(out) / (rec->id + ".json");
      REQUIRE(fs::exists(record));
      std::ifstream in(record);
      nlohmann::json doc;
      in >> doc;
      CHECK(doc.contains("id"));
      CHECK(doc.contains("score"));
      CHECK(doc.contains("threshold"));
      CHECK(doc.contains("label"));
    }
  }
  SUBCASE("eval writes curves, summary and plots") {
    const std::string out = (dir / "eval_out").string();
    const RunResult r = run_cli("eval --checkpoint " + ckpt + " --manifest " + corpus +
                                "/manifest.json --split test --out " + out + " --workers 2");
    CHECK(r.exit_code == 0);
    for (const char* name :
         {"detection_roc.csv", "detection_pr.csv", "detection_scores.csv",
          "localization_roc.csv", "localization_pr.csv", "summary.json",
          "detection_roc.svg", "localization_roc.svg", "detection_pr.svg",
          "localization_pr.svg"})
      CHECK(fs::exists(fs::path(out) / name));
    std::ifstream in(fs::path(out) / "summary.json");
    nlohmann::json summary;
    in >> summary;
    CHECK(summary.contains("auc_detection"));
    CHECK(summary.contains("ap_detection"));
    CHECK(summary.contains("auc_localization"));
    CHECK(summary.contains("ap_localization"));
    CHECK(summary.contains("loss_mode"));
  }
  SUBCASE("missing checkpoint exits with code 4") {
    const RunResult r = run_cli("infer --checkpoint " + (dir / "nope.spgc").string() +
                                " --manifest " + corpus + "/manifest.json --split test --out " +
                                (dir / "x").string());
    CHECK(r.exit_code == 4);
  }
}

TEST_CASE("cli plot renders csv curves into an svg") {
  if (!cli_binary()) return;
  const fs::path dir = fresh_dir("plot");
  const std::string csv = (dir / "roc.csv").string();
  {
    std::ofstream out(csv);
    out << "threshold,fpr,tpr\ninf,0,0\n0.5,0.25,0.75\n0,1,1\n";
  }
  const std::string svg = (dir / "roc.svg").string();
  const RunResult r = run_cli("plot --roc " + csv + " --labels demo --out " + svg);
  CHECK(r.exit_code == 0);
  REQUIRE(fs::exists(svg));
  std::ifstream in(svg);
  const std::string body((std::istreambuf_iterator<char>(in)), {});
  CHECK(body.find("<svg") != std::string::npos);
  CHECK(body.find("polyline") != std::string::npos);
}
