#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

fs::path scratch() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("cvxspec-cli-" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

Run cli(const std::string& args) {
  const auto out = scratch() / "stdout", err = scratch() / "stderr";
  const std::string cmd = std::string(CVXSPEC_CLI) + " " + args + " >" + out.string() + " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

std::string path(const std::string& name) { return (scratch() / name).string(); }

}  // namespace

TEST_CASE("construct") {
  auto r = cli("construct --base quad --seq auto --depth 2");
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  REQUIRE(j["terms"].size() == 2);
  CHECK(j["terms"][0]["level"] == 3);
  CHECK(j["terms"][1]["level"] == 6);
  CHECK(j["base"]["quadratic"][0] == "1*2^0");

  r = cli("construct --depth 0 --base zero");
  REQUIRE(r.code == 0);
  CHECK(nlohmann::json::parse(r.out)["terms"].empty());

  r = cli("construct --seq 3,4");
  CHECK(r.code == 1);
  CHECK(r.err.find("l_k > 2^k violated at k=2") != std::string::npos);

  r = cli("construct --seq 3,x");
  CHECK(r.code == 1);
  CHECK(cli("construct --format yaml").code == 1);

  r = cli("construct --format csv --phi 5 --seq 3");
  REQUIRE(r.code == 0);
  CHECK(r.out == "kind,weight,level,axis\nfbar,1*2^0,3,0\nphi,1*2^0,5,0\n");
}

TEST_CASE("spectrum") {
  REQUIRE(cli("construct --base quad --dim 2 --depth 0 --out " + path("quad.json")).code == 0);
  auto r = cli("spectrum --input " + path("quad.json") + " --n 12");
  CHECK(r.code == 0);
  CHECK(r.out.rfind("h,value,kind,bin_width,min_scale,max_scale\n", 0) == 0);
  CHECK(r.out.find("-inf") != std::string::npos);
  CHECK(r.err.find("upper bound PASS") != std::string::npos);

  REQUIRE(cli("construct --seq auto --depth 2 --h 1.5 --out " + path("gen.json")).code == 0);
  r = cli("spectrum --format json --input " + path("gen.json") + " --n 18");
  CHECK(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["upper_bound"]["pass"] == true);
  int near = 0;
  for (const auto& b : j["bins"]) {
    if (!b["value"].is_number() || b["h"].get<double>() < 1.0) continue;
    CHECK(std::abs(b["value"].get<double>() - (b["h"].get<double>() - 1.0)) <= 0.3);
    ++near;
  }
  CHECK(near >= 2);

  r = cli("spectrum --input " + path("missing.json"));
  CHECK(r.code == 2);
  CHECK(r.err.find(path("missing.json")) != std::string::npos);
  CHECK(cli("spectrum --input " + path("gen.json") + " --n 9").code == 2);
}

TEST_CASE("verify") {
  auto r = cli("verify --format json");
  CHECK(r.code == 0);
  auto j = nlohmann::json::parse(r.out);
  CHECK(j["all_as_expected"] == true);
  CHECK(j["checks"].size() == 5);

  r = cli("verify --only exponent-shift");
  CHECK(r.code == 0);
  CHECK(r.out == "name,control,passed,as_expected,detail\n" + r.out.substr(r.out.find('\n') + 1));
  CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 2);

  r = cli("verify --negative-controls --format json");
  CHECK(r.code == 0);
  j = nlohmann::json::parse(r.out);
  int controls = 0;
  for (const auto& c : j["checks"]) {
    if (!c["control"].get<bool>()) continue;
    ++controls;
    CHECK(c["passed"] == false);
  }
  CHECK(controls >= 3);
  CHECK(cli("verify --only nothing").code == 1);
}

TEST_CASE("cantor") {
  auto r = cli("cantor --h 1 --seq 3 --points 0");
  REQUIRE(r.code == 0);
  CHECK(r.out == "generation,N_k,log2_delta_k,slope\n1,512,-13,0.6923076923076923\n");

  r = cli("cantor --h 1.5 --seq auto --depth 2 --format json --points 2");
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  const auto& c = j["covering_counts"];
  REQUIRE(c.size() == 2);
  CHECK(c[0]["slope"].get<double>() < c[1]["slope"].get<double>());
  CHECK(c[1]["slope"].get<double>() < 0.5);
  CHECK(j["local_dimension"].size() == 2);

  r = cli("cantor --h 2");
  CHECK(r.code == 1);
  CHECK(r.err.find("h must lie in [1,2)") != std::string::npos);

  r = cli("cantor --h 1.05 --seq 3,6 --points 0");
  CHECK(r.code == 1);
}

TEST_CASE("outputs are atomic, deterministic and configurable") {
  const auto a = path("a.csv"), b = path("b.csv");
  REQUIRE(cli("cantor --h 1.5 --depth 2 --points 3 --seed 7 --out " + a).code == 0);
  REQUIRE(cli("cantor --h 1.5 --depth 2 --points 3 --seed 7 --out " + b).code == 0);
  CHECK(slurp(a) == slurp(b));
  for (const auto& e : fs::directory_iterator(scratch())) CHECK(e.path().string().find(".tmp.") == std::string::npos);

  {
    std::ofstream cfg(path("cfg.json"));
    cfg << R"({"h": 1.75, "seq": "auto", "depth": 2, "points": 0})";
  }
  auto r = cli("cantor --config " + path("cfg.json"));
  REQUIRE(r.code == 0);
  CHECK(r.out.find("1,512,-17,") != std::string::npos);
  r = cli("cantor --config " + path("cfg.json") + " --h 1.5");
  REQUIRE(r.code == 0);
  CHECK(r.out.find("1,512,-25,") != std::string::npos);
  CHECK(cli("cantor --config " + path("absent.json")).code == 2);

  CHECK(cli("verify --out " + path("nodir/x.csv")).code == 2);
  fs::remove_all(scratch());
}
