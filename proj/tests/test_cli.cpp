#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + DPL_CLI_PATH + "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Workspace {
  fs::path dir;
  Workspace() : dir(fs::temp_directory_path() / "dpl_test_cli") {
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::ofstream cfg(dir / "small.json");
    cfg << R"({"schema": "dpl-config/1", "seed": 3,
               "rotation_uncertainty": {"samples": 2000},
               "scenario": {"city": {"blocks_x": 2, "blocks_y": 1, "point_density": 0.5},
                            "trajectory": {"timesteps": 12}}})";
  }
  ~Workspace() { fs::remove_all(dir); }
  std::string path(const std::string& name) const { return "\"" + (dir / name).string() + "\""; }
};

}  // namespace

TEST_CASE("cli exit codes") {
  Workspace ws;
  CHECK(run_cli("--version") == 0);
  CHECK(run_cli("") == 2);
  CHECK(run_cli("frobnicate") == 2);
  CHECK(run_cli("run") == 2);
  CHECK(run_cli("metrics --records " + ws.path("absent.csv") + " --out " + ws.path("m")) == 3);
  {
    std::ofstream bad(ws.dir / "bad.json");
    bad << R"({"schema": "dpl-config/1", "bogus": 1})";
  }
  CHECK(run_cli("gen-scenario --config " + ws.path("bad.json") + " --out " + ws.path("s")) == 2);
  CHECK(run_cli("gen-scenario --config " + ws.path("small.json") + " --out " + ws.path("s")) == 0);
  CHECK(run_cli("run --scenario " + ws.path("s/scenario.json") + " --config " + ws.path("small.json") +
                " --variant NOPE --out " + ws.path("r")) == 2);
}

TEST_CASE("cli run") {
  Workspace ws;
  REQUIRE(run_cli("gen-scenario --config " + ws.path("small.json") + " --out " + ws.path("s")) == 0);
  const std::string base = "run --scenario " + ws.path("s/scenario.json") + " --config " + ws.path("small.json");
  REQUIRE(run_cli(base + " --threads 1 --out " + ws.path("r1")) == 0);
  REQUIRE(run_cli(base + " --threads 3 --out " + ws.path("r3")) == 0);
  for (const char* f : {"records.csv", "timesteps.csv", "report.json", "diagram.json"}) {
    CHECK(fs::exists(ws.dir / "r1" / f));
    CHECK(slurp(ws.dir / "r1" / f) == slurp(ws.dir / "r3" / f));
  }
  const auto manifest = nlohmann::json::parse(slurp(ws.dir / "r1" / "manifest.json"));
  CHECK(manifest["status"] == "complete");
  CHECK(manifest["seed"] == 3);
  CHECK(manifest["variant"] == "VAR_EO");

  CHECK(run_cli("metrics --records " + ws.path("r1/records.csv") + " --out " + ws.path("m")) == 0);
  CHECK(slurp(ws.dir / "m" / "report.json") == slurp(ws.dir / "r1" / "report.json"));
  CHECK(run_cli("diagram --records " + ws.path("r1/records.csv") + " --bins 20 --out " + ws.path("d")) == 0);
  CHECK(slurp(ws.dir / "d" / "diagram.json") == slurp(ws.dir / "r1" / "diagram.json"));
  CHECK(run_cli("diagram --records " + ws.path("r1/records.csv") + " --bins 1 --out " + ws.path("d")) == 2);

  const std::string env = "DPL_OUT_DIR=" + ws.path("env") + " ";
  const std::string cmd = env + "\"" + DPL_CLI_PATH + "\" metrics --records " + ws.path("r1/records.csv") +
                          " >/dev/null 2>&1";
  CHECK(std::system(cmd.c_str()) == 0);
  CHECK(fs::exists(ws.dir / "env" / "report.json"));
}

TEST_CASE("cli local map") {
  Workspace ws;
  {
    std::ofstream xyz(ws.dir / "wall.xyz");
    for (int i = -10; i <= 10; ++i)
      for (int k = 0; k <= 10; ++k) xyz << 0.2 * i << " 10 " << 0.2 * k << "\n";
  }
  CHECK(run_cli("local-map --map " + ws.path("wall.xyz") + " --pose 0 0 1 1 0 0 0 --intrinsics 50 50 32 24 64 48 --out " +
                ws.path("depth.csv")) == 0);
  const std::string csv = slurp(ws.dir / "depth.csv");
  CHECK(csv.find("10") != std::string::npos);
  CHECK(run_cli("local-map --map " + ws.path("wall.xyz") + " --pose 0 0 1 1 0 0 --intrinsics 50 50 32 24 64 48 --out " +
                ws.path("depth.csv")) == 2);
}

TEST_CASE("cli calibrate") {
  Workspace ws;
  {
    std::ofstream csv(ws.dir / "calib.csv");
    csv << "pred_x,pred_y,pred_z,true_x,true_y,true_z,sigma_x,sigma_y,sigma_z,eta21,eta31,eta32,"
           "pred_qw,pred_qx,pred_qy,pred_qz,true_qw,true_qx,true_qy,true_qz\n"
        << "0,0,0,0,0,0,1,1,1,0,0,0,1,0,0,0,1,0,0,0\n"
        << "0.5,0,0,0,0,0,1,1,1,0,0,0,1,0,0,0,1,0,0,0\n";
  }
  REQUIRE(run_cli("calibrate --input " + ws.path("calib.csv") + " --out " + ws.path("c")) == 0);
  const auto j = nlohmann::json::parse(slurp(ws.dir / "c" / "calibration.json"));
  CHECK(j["rows"] == 2);
  CHECK(j["mean_huber"].get<double>() == doctest::Approx(0.0625));
  CHECK(j["mean_angular"].get<double>() == 0.0);
  CHECK(slurp(ws.dir / "c" / "rotation_residuals.jsonl").find("\"q\"") != std::string::npos);
  {
    std::ofstream bad(ws.dir / "bad.csv");
    bad << "pred_x\n1\n";
  }
  CHECK(run_cli("calibrate --input " + ws.path("bad.csv") + " --out " + ws.path("c")) == 3);
}
