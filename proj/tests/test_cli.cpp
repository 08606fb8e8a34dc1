#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include <json.hpp>

#include "latentpatch/core/error.hpp"
#include "latentpatch/core/png_io.hpp"
#include "latentpatch/harness/harness.hpp"
#include "support/reference.hpp"

using namespace lp;
namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " " + std::string(LP_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(slurp(p));
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string c;
    while (std::getline(ls, c, ',')) cells.push_back(c);
    rows.push_back(cells);
  }
  return rows;
}

// Small enough to run in seconds.
const std::string kTiny = "--iters 3 --pop 6 --batch 2 --seed 11";

struct Corpus {
  ref::TempDir tmp{"cli"};
  fs::path dir = tmp.path / "corpus";
  Corpus() { REQUIRE(run_cli("corpus --count 6 --seed 3 --out " + dir.string()) == 0); }
};

}  // namespace

TEST_CASE("cli usage errors exit with 2") {
  ref::TempDir tmp("cli_usage");
  CHECK(run_cli("") == 2);
  CHECK(run_cli("--help") == 0);
  CHECK(run_cli("corpus") == 2);
  CHECK(run_cli("attack --pop 1 --out " + (tmp.path / "a").string()) == 2);
  CHECK(run_cli("attack --lambda-cls 0.1,0.2 --out " + (tmp.path / "a").string()) == 2);
  CHECK(run_cli("compare --methods ours,bogus --out " + (tmp.path / "c").string()) == 2);
  CHECK(run_cli("attack --det-mode sideways --out " + (tmp.path / "a").string()) == 2);
  CHECK(run_cli("eval --corpus " + (tmp.path / "missing").string()) == 2);

  const fs::path cfg = tmp.path / "run.ini";
  std::ofstream(cfg) << "pop = 6\nnot_a_flag = 3\n";
  CHECK(run_cli("attack --config " + cfg.string() + " --out " + (tmp.path / "a").string()) == 2);
}

TEST_CASE("config files set flags") {
  Corpus c;
  const fs::path cfg = c.tmp.path / "run.ini";
  std::ofstream(cfg) << "iters = 2\npop = 4\nbatch = 2\n";
  const fs::path out = c.tmp.path / "cfg_run";
  REQUIRE(run_cli("attack --config " + cfg.string() + " --corpus " + c.dir.string() + " --out " + out.string()) == 0);
  const auto saved = nlohmann::json::parse(slurp(out / "config.json"));
  CHECK(saved["es"]["population"] == 4);
  CHECK(read_csv(out / "metrics.csv").size() == 3);
}

TEST_CASE("oracle failures exit with 3 and internal errors with 4") {
  Corpus c;
  CHECK(run_cli("attack " + kTiny + " --http-attempts 1 --detector-endpoint http://127.0.0.1:1 --corpus " +
                c.dir.string() + " --out " + (c.tmp.path / "x").string()) == 3);
  std::ostringstream err;
  try {
    throw InvariantViolation("bound broken");
  } catch (...) {
    CHECK(report_error(err) == kExitInternal);
  }
  try {
    throw std::runtime_error("boom");
  } catch (...) {
    CHECK(report_error(err) == kExitInternal);
  }
  try {
    throw OracleUnavailable("down");
  } catch (...) {
    CHECK(report_error(err) == kExitOracle);
  }
  try {
    throw ValidationError("bad file");
  } catch (...) {
    CHECK(report_error(err) == kExitUsage);
  }
}

TEST_CASE("attack writes the documented artifacts") {
  Corpus c;
  const fs::path out = c.tmp.path / "run";
  REQUIRE(run_cli("attack " + kTiny + " --corpus " + c.dir.string() + " --out " + out.string()) == 0);
  for (const char* f : {"metrics.csv", "best_patch.png", "loss.svg", "config.json", "checkpoint.json",
                        "report.json", "eval.csv"})
    CHECK(fs::exists(out / f));

  const auto rows = read_csv(out / "metrics.csv");
  REQUIRE(rows.size() == 4);
  CHECK(rows[0] == std::vector<std::string>{"epoch", "total_loss", "det_loss", "tv_loss", "cls_loss", "lr",
                                            "best_loss", "detector_queries"});
  // batch 2, pop 6: placement pass plus 7 evaluations per scene per epoch
  for (int t = 1; t <= 3; ++t) {
    REQUIRE(rows[t].size() == 8);
    CHECK(std::stoi(rows[t][0]) == t);
    CHECK(std::stoull(rows[t][7]) == 2 + 14ull * t);
    CHECK(std::stod(rows[t][6]) <= std::stod(rows[t][1]) + 1e-12);
  }
  const auto patch = read_png(out / "best_patch.png");
  CHECK(patch.width() == 64);
  const auto report = nlohmann::json::parse(slurp(out / "report.json"));
  CHECK(report["ap_clean"] == 1.0);
  CHECK(report["detector_queries"] == 4);

  // eval on the saved patch reproduces the attack's AP
  const fs::path ev = c.tmp.path / "ev";
  REQUIRE(run_cli("eval --corpus " + c.dir.string() + " --patch " + (out / "best_patch.png").string() + " --out " +
                  ev.string()) == 0);
  CHECK(nlohmann::json::parse(slurp(ev / "report.json"))["ap_person"] == report["ap_person"]);
}

TEST_CASE("metrics are identical across runs and thread counts") {
  Corpus c;
  const std::string base = "attack " + kTiny + " --corpus " + c.dir.string() + " --out ";
  REQUIRE(run_cli(base + (c.tmp.path / "t1").string(), "LATENTPATCH_THREADS=1") == 0);
  REQUIRE(run_cli(base + (c.tmp.path / "t4").string(), "LATENTPATCH_THREADS=4") == 0);
  REQUIRE(run_cli(base + (c.tmp.path / "t4b").string(), "LATENTPATCH_THREADS=4") == 0);
  const auto m1 = slurp(c.tmp.path / "t1" / "metrics.csv");
  CHECK(m1 == slurp(c.tmp.path / "t4" / "metrics.csv"));
  CHECK(m1 == slurp(c.tmp.path / "t4b" / "metrics.csv"));
  CHECK(slurp(c.tmp.path / "t1" / "best_patch.png") == slurp(c.tmp.path / "t4" / "best_patch.png"));
}

TEST_CASE("resume continues to the same trajectory") {
  Corpus c;
  const std::string base = "attack --pop 6 --batch 2 --seed 11 --checkpoint-every 2 --corpus " + c.dir.string();
  const fs::path full = c.tmp.path / "full", part = c.tmp.path / "part";
  REQUIRE(run_cli(base + " --iters 6 --out " + full.string()) == 0);
  REQUIRE(run_cli(base + " --iters 3 --out " + part.string()) == 0);
  REQUIRE(run_cli(base + " --iters 6 --resume --out " + part.string()) == 0);
  CHECK(slurp(full / "metrics.csv") == slurp(part / "metrics.csv"));
  CHECK(slurp(full / "best_patch.png") == slurp(part / "best_patch.png"));
  // a different setup refuses the checkpoint
  CHECK(run_cli(base + " --iters 6 --lr 0.5 --resume --out " + part.string()) == 2);
}

TEST_CASE("compare runs every method on the same query budget") {
  Corpus c;
  const fs::path out = c.tmp.path / "cmp";
  REQUIRE(run_cli("compare " + kTiny + " --budget 44 --methods ours,latent_rs,pixel_rs,square,pixel_nes --corpus " +
                  c.dir.string() + " --out " + out.string()) == 0);
  const auto rows = read_csv(out / "compare.csv");
  REQUIRE(rows.size() == 6);
  CHECK(rows[0] == std::vector<std::string>{"attack", "lambda_cls", "pop", "queries", "map"});
  CHECK(rows[1][0] == "ours");
  const std::string ours_queries = rows[1][3];
  CHECK(ours_queries == std::to_string(2 + 3 * 14));
  for (std::size_t r = 1; r < rows.size(); ++r) {
    CAPTURE(rows[r][0]);
    CHECK(rows[r][3] == ours_queries);
    CHECK(fs::exists(out / rows[r][0] / "metrics.csv"));
    const fs::path ev = c.tmp.path / ("ev_" + rows[r][0]);
    REQUIRE(run_cli("eval --corpus " + c.dir.string() + " --patch " + (out / rows[r][0] / "best_patch.png").string() +
                    " --out " + ev.string()) == 0);
    const double ap = nlohmann::json::parse(slurp(ev / "report.json"))["ap_person"];
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", 100.0 * ap);
    CHECK(rows[r][4] == buf);
  }
  CHECK(fs::exists(out / "compare.txt"));
}

TEST_CASE("ablate emits one row per grid cell and a single cell matches attack") {
  Corpus c;
  const fs::path out = c.tmp.path / "abl";
  REQUIRE(run_cli("ablate --iters 2 --batch 2 --seed 11 --pops 4,6 --lambda-cls 0.1,0.2 --det-modes "
                  "obj_times_cls,obj_only --corpus " + c.dir.string() + " --out " + out.string()) == 0);
  const auto rows = read_csv(out / "ablation.csv");
  REQUIRE(rows.size() == 9);
  CHECK(rows[0] == std::vector<std::string>{"attack", "lambda_cls", "pop", "det_mode", "queries", "map"});

  const fs::path one = c.tmp.path / "one", att = c.tmp.path / "att";
  REQUIRE(run_cli("ablate --iters 2 --batch 2 --seed 11 --pops 6 --lambda-cls 0.2 --corpus " + c.dir.string() +
                  " --out " + one.string()) == 0);
  REQUIRE(read_csv(one / "ablation.csv").size() == 2);
  REQUIRE(run_cli("attack --iters 2 --batch 2 --seed 11 --pop 6 --lambda-cls 0.2 --corpus " + c.dir.string() +
                  " --out " + att.string()) == 0);
  CHECK(slurp(one / "pop6_cls0.2_obj_times_cls" / "metrics.csv") == slurp(att / "metrics.csv"));
}
