#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "kamdnlw/cli.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Sandbox {
  fs::path root;
  Sandbox() {
    root = fs::temp_directory_path() / ("kamdnlw_cli_" + std::to_string(std::rand()) + "_" +
                                        std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::remove_all(root);
    fs::create_directories(root);
  }
  ~Sandbox() { fs::remove_all(root); }

  std::string file(const std::string& name, const std::string& body) const {
    std::ofstream(root / name) << body;
    return (root / name).string();
  }
  std::string dir(const std::string& name) const { return (root / name).string(); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

int run(std::vector<std::string> args, std::string* out_text = nullptr) {
  args.insert(args.begin(), "kamdnlw");
  std::ostringstream out, err;
  const int code = kamdnlw::cli::run(args, out, err);
  if (out_text) *out_text = out.str() + err.str();
  return code;
}

const char* kQP = R"({"model": {"sites": [1], "xi": [1e-3], "truncation": {"j_max": 16}, "grid_N": 128}})";

}  // namespace

TEST_CASE("qp-solve writes a converged solution with provenance") {
  Sandbox box;
  const auto cfg = box.file("qp.json", kQP);
  const auto out = box.dir("qp");
  REQUIRE(run({"qp-solve", "--config", cfg, "--out", out, "--threads", "2"}) == 0);
  const auto sol = json::parse(slurp(fs::path(out) / "qp_solution.json"));
  CHECK(sol.at("residual").get<double>() < 1e-10);
  const auto prov = json::parse(slurp(fs::path(out) / "provenance.json"));
  const std::string hash = prov.at("config_hash");
  CHECK(hash.size() == 8);
  CHECK(sol.at("config_hash") == hash);
  CHECK(prov.at("config").at("newton").at("L") == 6);  // defaults are recorded
  CHECK(prov.at("versions").contains("eigen"));
  const auto csv = slurp(fs::path(out) / "newton_history.csv");
  CHECK(csv.rfind("# kamdnlw qp-solve config_hash=" + hash + " seed=1", 0) == 0);
}

TEST_CASE("blow-up run flags before t = 1") {
  Sandbox box;
  const auto cfg = box.file("b.json", R"({"nonexistence": {"perturbation": 0.0}})");
  const auto out = box.dir("b");
  REQUIRE(run({"nonexistence", "blowup", "--config", cfg, "--out", out}) == 0);
  std::ifstream in(fs::path(out) / "trajectory.csv");
  std::string line, last;
  std::getline(in, line);
  CHECK(line[0] == '#');
  std::getline(in, line);
  CHECK(line == "t,energy,M,H,mean,meanvel,flag");
  while (std::getline(in, line)) last = line;
  CHECK(last.substr(last.size() - 2) == ",1");
  CHECK(std::stod(last.substr(0, last.find(','))) < 1.0);
}

TEST_CASE("validation errors exit 2 without artifacts") {
  Sandbox box;
  const auto out = box.dir("never");
  CHECK(run({"qp-solve", "--config", box.file("a.json", "{not json"), "--out", out}) == 2);
  CHECK(run({"qp-solve", "--config", box.file("b.json", R"({"model": {"mass": -1}})"), "--out", out}) == 2);
  CHECK(run({"birkhoff", "--config", box.file("c.json", R"({"modle": {}})"), "--out", out}) == 2);
  CHECK(run({"qp-solve", "--config", box.file("d.json", R"({"newton": {"tol": "small"}})"), "--out", out}) == 2);
  CHECK(run({"qp-solve", "--config", box.file("e.json", R"({"newton": {"L": 6, "damping": 1}})"), "--out", out}) == 2);
  CHECK(run({"qp-solve", "--config", (box.root / "missing.json").string(), "--out", out}) == 2);
  CHECK(run({"simulate", "--config", box.file("f.json", R"({"simulate": {"dt": 1.0}})"), "--out", out}) == 2);
  CHECK(run({"nonexistence", "Q", "--out", out}) == 2);
  CHECK(run({"frobnicate", "--out", out}) == 2);
  CHECK(run({"qp-solve", "--threads", "-3", "--out", out}) == 2);
  CHECK_FALSE(fs::exists(out));

  std::string msg;
  run({"qp-solve", "--config", box.file("g.json", R"({"model": {"xi": [1e-3, 1e-3]}})"), "--out", out}, &msg);
  CHECK(msg.find("one amplitude per tangential site") != std::string::npos);
  CHECK(run({"--help"}) == 0);
}

TEST_CASE("numerical failure exits 3") {
  Sandbox box;
  const auto cfg = box.file("n.json", R"({"model": {"sites": [1], "xi": [1e-3], "truncation": {"j_max": 16},
                                           "grid_N": 128}, "newton": {"tol": 1e-30}})");
  const auto out = box.dir("n");
  CHECK(run({"qp-solve", "--config", cfg, "--out", out}) == 3);
  CHECK_FALSE(fs::exists(out));
}

TEST_CASE("outputs are deterministic") {
  Sandbox box;
  const auto cfg = box.file("m.json", R"({"model": {"sites": [1], "xi": [1e-3], "truncation": {"j_max": 16},
                                           "grid_N": 128}, "melnikov": {"samples": 200, "scales": [1e-2, 1e-3]},
                                           "simulate": {"initial": "random", "T": 1.0}})");
  REQUIRE(run({"melnikov-scan", "--config", cfg, "--out", box.dir("a"), "--threads", "1"}) == 0);
  REQUIRE(run({"melnikov-scan", "--config", cfg, "--out", box.dir("b"), "--threads", "3"}) == 0);
  CHECK(slurp(box.root / "a" / "density.csv") == slurp(box.root / "b" / "density.csv"));

  REQUIRE(run({"simulate", "--config", cfg, "--out", box.dir("c"), "--seed", "7"}) == 0);
  REQUIRE(run({"simulate", "--config", cfg, "--out", box.dir("d"), "--seed", "7"}) == 0);
  REQUIRE(run({"simulate", "--config", cfg, "--out", box.dir("e"), "--seed", "8"}) == 0);
  const auto c = slurp(box.root / "c" / "trajectory.csv");
  CHECK(c == slurp(box.root / "d" / "trajectory.csv"));
  CHECK(c != slurp(box.root / "e" / "trajectory.csv"));
  CHECK(c.rfind("# kamdnlw simulate config_hash=", 0) == 0);
}

TEST_CASE("thread count from the environment") {
  Sandbox box;
  const auto cfg = box.file("q.json", kQP);
  ::setenv("KAMDNLW_THREADS", "2", 1);
  REQUIRE(run({"qp-solve", "--config", cfg, "--out", box.dir("t")}) == 0);
  CHECK(json::parse(slurp(box.root / "t" / "provenance.json")).at("threads") == 2);
  ::setenv("KAMDNLW_THREADS", "many", 1);
  CHECK(run({"qp-solve", "--config", cfg, "--out", box.dir("u")}) == 2);
  ::unsetenv("KAMDNLW_THREADS");
}

TEST_CASE("config hash") {
  CHECK(kamdnlw::cli::config_hash("123456789") == "cbf43926");
}
