#include "catch_amalgamated.hpp"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "rhobound/scenario.hpp"

namespace fs = std::filesystem;
namespace sc = rhobound::scenario;

namespace {

const std::string kCli = RHOBOUND_CLI_PATH;
const fs::path kScenarios = RHOBOUND_SCENARIO_DIR;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("rhobound_test_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run_cli(const std::string& args, const fs::path& log = {}) {
  std::string cmd = "'" + kCli + "' " + args;
  cmd += log.empty() ? " > /dev/null 2>&1" : " > '" + log.string() + "' 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path write_scenario(const fs::path& dir, const std::string& name, const std::string& text) {
  const fs::path p = dir / name;
  std::ofstream(p) << text;
  return p;
}

}  // namespace

TEST_CASE("list-checks prints every check", "[cli]") {
  const auto dir = scratch("list");
  REQUIRE(run_cli("list-checks", dir / "out.txt") == 0);
  const auto text = slurp(dir / "out.txt");
  for (const auto& name : sc::check_names()) CHECK(text.find(name + "\n") != std::string::npos);
}

TEST_CASE("hydrogen scenario passes and writes reports", "[cli]") {
  const auto dir = scratch("hydrogen");
  REQUIRE(run_cli("run '" + (kScenarios / "hydrogen.json").string() + "' --out '" + dir.string() + "'") == 0);
  const auto report = nlohmann::json::parse(slurp(dir / "report.json"));
  REQUIRE(report.is_array());
  bool saw_spectrum = false;
  for (const auto& r : report) {
    CHECK(r["satisfied"].get<bool>());
    if (r["check"] == "spectrum") {
      saw_spectrum = true;
      CHECK(r["lhs"].get<double>() > -0.25);
      CHECK(r["lhs"].get<double>() <= -0.249);
    }
  }
  CHECK(saw_spectrum);
  const auto csv = slurp(dir / "summary.csv");
  CHECK(csv.rfind("check,applicable,satisfied,lhs,rhs,margin,instances,violations\n", 0) == 0);
}

TEST_CASE("exit codes", "[cli]") {
  const auto dir = scratch("exit");
  SECTION("malformed JSON") {
    const auto p = write_scenario(dir, "bad.json", "{ \"name\": \"x\", ");
    CHECK(run_cli("run '" + p.string() + "' --out '" + dir.string() + "'") == 2);
  }
  SECTION("unknown check") {
    const auto p = write_scenario(dir, "unknown.json", R"({"name":"x","seed":1,"checks":["nonsense"]})");
    CHECK(run_cli("run '" + p.string() + "' --out '" + dir.string() + "'") == 2);
  }
  SECTION("random trials without a seed") {
    const auto p = write_scenario(dir, "noseed.json", R"({"name":"x","checks":[{"name":"lemma31","trials":3}]})");
    CHECK(run_cli("run '" + p.string() + "' --out '" + dir.string() + "'") == 2);
  }
  SECTION("missing file") {
    CHECK(run_cli("run '" + (dir / "absent.json").string() + "'") == 2);
  }
  SECTION("bad arguments") {
    CHECK(run_cli("frobnicate") == 2);
    CHECK(run_cli("run") == 2);
  }
  SECTION("violated expectation") {
    const auto p = write_scenario(dir, "violated.json", R"({
      "name": "tight", "frame": {"nuclei": [{"position": [0,0,0], "charge": 1}]},
      "basis": ["even-tempered:n=4,alpha0=0.1,beta=3"],
      "checks": [{"name": "spectrum", "expect": [-0.25, -0.2499]}]})");
    CHECK(run_cli("run '" + p.string() + "' --out '" + dir.string() + "'") == 1);
  }
  SECTION("quadrature cap") {
    const auto p = write_scenario(dir, "cap.json", R"({
      "name": "cap", "seed": 3, "frame": {"nuclei": [{"position": [0,0,0], "charge": 2}], "a": 1.0},
      "basis": ["even-tempered:n=4,alpha0=0.1,beta=3"],
      "state": {"determinants": [{"coeff": 1, "orbitals": [0, 1]}]},
      "regions": [{"ball": {"center": [0,0,0], "radius": 1}}],
      "tolerances": {"overlap": 1e-12, "node_cap": 500},
      "checks": ["lemma31"]})");
    CHECK(run_cli("run '" + p.string() + "' --out '" + dir.string() + "'") == 3);
  }
}

TEST_CASE("reports do not depend on the thread count", "[cli][determinism]") {
  const auto d1 = scratch("det1"), d8 = scratch("det8"), again = scratch("det1b");
  const auto scenario = (kScenarios / "determinism.json").string();
  REQUIRE(run_cli("run '" + scenario + "' --threads 1 --out '" + d1.string() + "'") == 0);
  REQUIRE(run_cli("run '" + scenario + "' --threads 8 --out '" + d8.string() + "'") == 0);
  REQUIRE(run_cli("run '" + scenario + "' --threads 1 --out '" + again.string() + "'") == 0);
  const auto a = slurp(d1 / "report.json");
  CHECK(!a.empty());
  CHECK(a == slurp(d8 / "report.json"));
  CHECK(a == slurp(again / "report.json"));
  CHECK(slurp(d1 / "summary.csv") == slurp(d8 / "summary.csv"));
}

TEST_CASE("sweeps", "[cli][sweep]") {
  const auto dir = scratch("sweep");
  const auto scenario = (kScenarios / "theorem_scaling.json").string();
  SECTION("diameter sweep has slope one half") {
    REQUIRE(run_cli("sweep '" + scenario + "' --param d_omega --from 1 --to 64 --steps 7 --out '" + dir.string() + "'") == 0);
    const auto meta = nlohmann::json::parse(slurp(dir / "sweep.json"));
    CHECK(meta["rows"] == 7);
    CHECK(std::abs(meta["loglog_slope"].get<double>() - 0.5) < 0.02);
    const auto csv = slurp(dir / "sweep.csv");
    CHECK(csv.rfind("d_omega,lhs,rhs,margin\n", 0) == 0);
  }
  SECTION("a single step gives one row") {
    REQUIRE(run_cli("sweep '" + scenario + "' --param a --from 0.5 --to 0.5 --steps 1 --out '" + dir.string() + "'") == 0);
    const auto meta = nlohmann::json::parse(slurp(dir / "sweep.json"));
    CHECK(meta["rows"] == 1);
    CHECK_FALSE(meta.contains("loglog_slope"));
  }
  SECTION("electron sweep with coupled nuclei") {
    REQUIRE(run_cli("sweep '" + scenario + "' --param N --from 100 --to 10000 --steps 9 --spacing geometric --couple-nuclei --out '" +
                    dir.string() + "'") == 0);
    const auto meta = nlohmann::json::parse(slurp(dir / "sweep.json"));
    CHECK(std::abs(meta["loglog_slope"].get<double>() - 5.0 / 6.0) < 0.05);
  }
  SECTION("errors") {
    CHECK(run_cli("sweep '" + scenario + "' --param Z --from 1 --to 2 --steps 3") == 2);
    CHECK(run_cli("sweep '" + scenario + "' --param d_omega --from 1 --to 2 --steps 0") == 2);
    CHECK(run_cli("sweep '" + scenario + "' --param d_omega --from 1 --to 2 --steps 3 --spacing cubic") == 2);
    CHECK(run_cli("sweep '" + scenario + "' --param d_omega --from -1 --to 2 --steps 3 --spacing geometric") == 2);
  }
}

TEST_CASE("scenario parsing", "[cli][parse]") {
  using nlohmann::ordered_json;
  SECTION("regions") {
    const auto r = sc::detail::region(ordered_json::parse(R"({"union":[{"center":[0,0,0],"radius":1},{"center":[3,0,0],"radius":1}]})"));
    CHECK(r.kind() == "union");
    CHECK(rhobound::diameter(r) == 5.0);
    CHECK_THROWS_AS(sc::detail::region(ordered_json::parse(R"({"torus":{}})")), sc::ParseError);
    CHECK_THROWS(sc::detail::region(ordered_json::parse(R"({"ball":{"center":[0,0],"radius":1}})")));
  }
  SECTION("random states") {
    const auto s = sc::detail::random_state("seed=5,N=3,dets=4", std::nullopt);
    CHECK(s.kind == sc::StateSpec::Kind::random);
    CHECK(s.seed == 5);
    CHECK(s.electrons == 3);
    CHECK(s.dets == 4);
    CHECK_THROWS_AS(sc::detail::random_state("N=3", std::nullopt), sc::ParseError);
    CHECK(sc::detail::random_state("N=3", 9).seed == 9);
  }
  SECTION("bundled scenarios load") {
    for (const auto& entry : fs::directory_iterator(kScenarios)) {
      INFO(entry.path());
      CHECK_NOTHROW(sc::load(entry.path().string()));
    }
  }
}
