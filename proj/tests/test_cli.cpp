#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct Sandbox {
  fs::path dir;
  Sandbox() {
    dir = fs::temp_directory_path() / ("bwproc_cli_" + std::to_string(std::rand()) + "_" +
                                       std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(dir);
    std::ofstream(dir / "subjects.csv") << "id,w,x,delta\nA,0,2,1\nB,0,3,0\nC,0,1.5,1\nD,0.5,2.5,1\n";
    std::ofstream(dir / "events.csv") << "id,time,mark\nA,1.5,5\nC,0.5,2\nD,1.8,3\nD,2.2,1\n";
  }
  ~Sandbox() { fs::remove_all(dir); }
  int run(const std::string& args) const {
    const std::string cmd = "cd '" + dir.string() + "' && '" BWPROC_CLI "' " + args + " > stdout.txt 2> stderr.txt";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  }
  std::string read(const std::string& name) const {
    std::ifstream f(dir / name);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
  }
};

const std::string kData = "--subjects subjects.csv --events events.csv ";

}  // namespace

TEST_CASE("mean writes the pointwise table and a sidecar") {
  Sandbox sb;
  REQUIRE(sb.run("mean " + kData + "--t1 1 --t2 4 --tau0 1 --grid 1 --out mean.csv") == 0);
  const auto csv = sb.read("mean.csv");
  CHECK(csv.rfind("u,mu,se,ci_lo,ci_hi", 0) == 0);
  const auto side = nlohmann::json::parse(sb.read("mean.csv.json"));
  CHECK(side["n"] == 4);
  CHECK(side.contains("config_hash"));
}

TEST_CASE("every subcommand runs") {
  Sandbox sb;
  const std::string w = "--t1 1 --t2 4 --tau0 1 ";
  CHECK(sb.run("survival " + kData) == 0);
  CHECK(sb.run("bands " + kData + w + "--band-reps 300 --seed 7 --out b.csv") == 0);
  CHECK(nlohmann::json::parse(sb.read("b.csv.json")).contains("b_star"));
  CHECK(sb.run("bands " + kData + w + "--band-reps 300 --seed 7 --band-kind log") == 0);
  CHECK(sb.run("quantile " + kData + w + "--q 0.25,0.5") == 0);
  CHECK(sb.run("dist " + kData + w + "--u 1") == 0);
  CHECK(sb.run("rate " + kData + w + "--kernel box --bandwidth 0.3") == 0);
  CHECK(sb.run("forward-mean " + kData + "--times 0,1,2,3") == 0);
  CHECK(sb.run("mean " + kData + w + "--prevalent-shift --format json") == 0);
  CHECK(nlohmann::json::parse(sb.read("stdout.txt")).is_array());
  CHECK(sb.run("simulate cohort --n 50 --seed 3 --subjects-out s.csv --events-out e.csv") == 0);
  CHECK(sb.run("simulate oracle --big-n 2000 --seed 3") == 0);
  CHECK(sb.run("simulate table1 --n 80 --reps 5 --band-reps 20 --seed 3") == 0);
}

TEST_CASE("errors exit nonzero with the module message") {
  Sandbox sb;
  CHECK(sb.run("mean " + kData + "--t1 0.5 --t2 4 --tau0 1") != 0);
  CHECK(sb.read("stderr.txt").find("tau0") != std::string::npos);
  CHECK(sb.run("mean " + kData + "--t1 3.5 --t2 4 --tau0 1") != 0);
  CHECK(sb.read("stderr.txt").find("no identifiable failure mass") != std::string::npos);
  std::ofstream(sb.dir / "bad.csv") << "id,w,x,delta\nA,0,2,2\n";
  CHECK(sb.run("survival --subjects bad.csv --events events.csv") != 0);
  CHECK(sb.read("stderr.txt").find("delta must be 0 or 1") != std::string::npos);
}

TEST_CASE("seeded output is reproducible") {
  Sandbox sb;
  const std::string args = "bands " + kData + "--t1 1 --t2 4 --tau0 1 --alpha 0.05 --band-reps 1000 --seed 7";
  REQUIRE(sb.run(args + " --out a.csv") == 0);
  REQUIRE(sb.run(args + " --out b.csv --threads 3") == 0);
  CHECK(sb.read("a.csv") == sb.read("b.csv"));
}
