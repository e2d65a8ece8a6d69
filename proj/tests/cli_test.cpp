// Drives the installed CLI binary end to end: exit codes, output schemas,
// and byte reproducibility under a fixed seed.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <map>
#include <string>

#include <json.hpp>

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("precopt_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

int run(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

const std::string kCli = PRECOPT_CLI;

}  // namespace

TEST_CASE("optimize: byte-identical reruns and schema") {
  TempDir tmp;
  const fs::path cfg = tmp.path / "cfg.json";
  write_file(cfg, R"({
    "channel": {"eigenvalues_sq": [1.0, 0.4]},
    "constellation": {"builtin": "bpsk", "dims": 2},
    "rho": 2.0,
    "integration": {"method": "monte-carlo", "samples": 4000},
    "seed": 7
  })");
  const fs::path out1 = tmp.path / "a.json", out2 = tmp.path / "b.json";
  REQUIRE(run(kCli + " optimize --config " + cfg.string() + " --out " + out1.string()) == 0);
  REQUIRE(run(kCli + " optimize --config " + cfg.string() + " --out " + out2.string()) == 0);
  CHECK(slurp(out1) == slurp(out2));

  const json parsed = json::parse(slurp(out1));
  CHECK(parsed.contains("precoder"));
  CHECK(parsed.contains("mi"));
  CHECK(parsed.contains("kkt"));
  CHECK(parsed["mi"].contains("nats"));
  CHECK(parsed["mi"].contains("bits"));
  CHECK(parsed["kkt"]["converged"].get<bool>());
  CHECK(parsed["seed"].get<int>() == 7);

  SUBCASE("seed flag overrides and changes monte carlo output") {
    const fs::path out3 = tmp.path / "c.json";
    REQUIRE(run(kCli + " optimize --config " + cfg.string() + " --seed 8 --out " +
                out3.string()) == 0);
    CHECK(slurp(out3) != slurp(out1));
  }
}

TEST_CASE("optimize: gaussian closed-form path reports zero stderr") {
  TempDir tmp;
  const fs::path cfg = tmp.path / "cfg.json";
  write_file(cfg, R"({
    "channel": {"H": [[1.0, 0.2], [0.0, 0.7]]},
    "gaussian": true,
    "rho": 1.5,
    "seed": 1
  })");
  const fs::path out = tmp.path / "g.json";
  REQUIRE(run(kCli + " optimize --config " + cfg.string() + " --out " + out.string()) == 0);
  const json parsed = json::parse(slurp(out));
  CHECK(parsed["mi"]["stderr"].get<double>() == 0.0);
  CHECK(parsed["mi"]["method"].get<std::string>() == "gaussian-closed-form");
}

TEST_CASE("sweep: csv schema and determinism") {
  TempDir tmp;
  const fs::path cfg = tmp.path / "cfg.json";
  write_file(cfg, R"({
    "channel": {"eigenvalues_sq": [1.0, 0.5]},
    "constellation": {"builtin": "bpsk", "dims": 2},
    "snr_grid_db": [-10, 0],
    "integration": {"method": "gauss-hermite", "nodes_per_dim": 12},
    "seed": 3
  })");
  const fs::path out1 = tmp.path / "s1.csv", out2 = tmp.path / "s2.csv";
  REQUIRE(run(kCli + " sweep --config " + cfg.string() + " --out " + out1.string()) == 0);
  REQUIRE(run(kCli + " sweep --config " + cfg.string() + " --out " + out2.string()) == 0);
  const std::string csv = slurp(out1);
  CHECK(csv == slurp(out2));
  CHECK(csv.rfind("snr_db,strategy,mi_nats,mi_stderr,dmin,iterations\n", 0) == 0);
  // one row per strategy per grid point plus the header
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 2 * 4);
  CHECK(csv.find("no-precoding") != std::string::npos);
  CHECK(csv.find("waterfilling") != std::string::npos);
  CHECK(csv.find("kkt-alloc-fixed-V") != std::string::npos);
  CHECK(csv.find("full") != std::string::npos);

  // parse rows: strategy -> (snr -> mi, stderr)
  std::map<std::string, std::map<double, std::pair<double, double>>> table;
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);  // header
  while (std::getline(lines, line)) {
    std::istringstream cells(line);
    std::string snr, strategy, mi, se;
    std::getline(cells, snr, ',');
    std::getline(cells, strategy, ',');
    std::getline(cells, mi, ',');
    std::getline(cells, se, ',');
    table[strategy][std::stod(snr)] = {std::stod(mi), std::stod(se)};
  }
  for (const double snr : {-10.0, 0.0}) {
    const auto [mi_none, se_none] = table["no-precoding"][snr];
    const auto [mi_kkt, se_kkt] = table["kkt-alloc-fixed-V"][snr];
    const auto [mi_full, se_full] = table["full"][snr];
    // dominance by construction at every grid point
    CHECK(mi_full >= mi_kkt - 3.0 * (se_full + se_kkt) - 1e-9);
    CHECK(mi_kkt >= mi_none - 3.0 * (se_kkt + se_none) - 1e-9);
  }
  for (const auto& [strategy, rows] : table) {
    // nondecreasing in SNR
    const auto low = rows.at(-10.0), high = rows.at(0.0);
    CHECK(high.first >= low.first - 3.0 * (low.second + high.second) - 1e-9);
  }
}

TEST_CASE("reduce: oracle agreement on the shipped instance") {
  TempDir tmp;
  const fs::path cfg = tmp.path / "cfg.json";
  write_file(cfg, R"({
    "reduction": "minnorm-to-minpower",
    "instance": {"weights": [[1.0, 0.0], [0.70710678118654752, 0.70710678118654752]]},
    "seed": 1
  })");
  const fs::path out = tmp.path / "r.json";
  REQUIRE(run(kCli + " reduce --config " + cfg.string() + " --out " + out.string()) == 0);
  const json parsed = json::parse(slurp(out));
  CHECK(parsed["agreement_delta"].get<double>() <= 1e-6);
  CHECK(parsed["reduced"]["t_star"].get<double>() == doctest::Approx(1.1715729).epsilon(1e-5));
  CHECK_FALSE(parsed["reduced"]["heuristic"].get<bool>());
}

TEST_CASE("mindist: distance programs from an instance file") {
  TempDir tmp;
  const fs::path cfg = tmp.path / "cfg.json";
  write_file(cfg, R"({
    "program": "maxmindist",
    "instance": {
      "diffs": [[2,0],[-2,0],[0,2],[0,-2],[2,2],[-2,-2],[2,-2],[-2,2]],
      "H": [[1.0, 0.0], [0.0, 1.0]],
      "rho": 2.0
    },
    "seed": 1
  })");
  const fs::path out = tmp.path / "m.json";
  REQUIRE(run(kCli + " mindist --config " + cfg.string() + " --out " + out.string()) == 0);
  const json parsed = json::parse(slurp(out));
  CHECK(parsed["maxmindist"]["value"].get<double>() > 0.0);
  CHECK(parsed["maxmindist"]["power"].get<double>() == doctest::Approx(2.0));
}

TEST_CASE("exit codes") {
  TempDir tmp;
  SUBCASE("malformed json is a config error") {
    const fs::path cfg = tmp.path / "bad.json";
    write_file(cfg, "{ not json");
    CHECK(run(kCli + " optimize --config " + cfg.string() + " 2>/dev/null") == 1);
  }
  SUBCASE("missing required keys is a config error") {
    const fs::path cfg = tmp.path / "empty.json";
    write_file(cfg, "{}");
    CHECK(run(kCli + " optimize --config " + cfg.string() + " 2>/dev/null") == 1);
  }
  SUBCASE("dimension caps exit with the capability code") {
    const fs::path cfg = tmp.path / "cap.json";
    json j;
    j["reduction"] = "minnorm-to-minpower";
    json rows = json::array();
    for (int i = 0; i < 13; ++i) {
      json row = json::array();
      for (int k = 0; k < 13; ++k) row.push_back(i == k ? 1.0 : 0.0);
      rows.push_back(row);
    }
    j["instance"]["weights"] = rows;
    write_file(cfg, j.dump());
    CHECK(run(kCli + " reduce --config " + cfg.string() + " 2>/dev/null") == 3);
  }
}

TEST_CASE("verify subcommand runs a reduced-budget suite") {
  TempDir tmp;
  const fs::path out = tmp.path / "v.json";
  REQUIRE(run(kCli + " verify --scale 0.08 --out " + out.string() + " > /dev/null") == 0);
  const json parsed = json::parse(slurp(out));
  CHECK(parsed.size() == 15);
  for (const auto& entry : parsed) CHECK(entry["pass"].get<bool>());
}
