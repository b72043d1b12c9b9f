#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "twist/cli.hpp"

using namespace twist::cli;

namespace {

int line_of_error(const std::string& text) {
  try {
    parse_config(text, "t.yaml");
  } catch (const ConfigError& e) {
    return e.line;
  }
  return -1;
}

}  // namespace

TEST_CASE("config parsing") {
  auto c = parse_config("model:\n  kind: scaling\n  mu: 3\nsuites: [jlo-lemmas, hochschild]\nseed: 7\n");
  CHECK(c.model.kind == "scaling");
  CHECK(c.model.mu == 3.0);
  CHECK(c.suites == std::vector<std::string>{"jlo-lemmas", "hochschild"});
  CHECK(c.seed == 7);

  CHECK(parse_config("").suites.empty());
  CHECK(line_of_error("model:\n  kind: scaling\n  mu: 0.5\n") == 3);
  CHECK(line_of_error("suites:\n  - hochschild\n  - bogus\n") == 3);
  CHECK(line_of_error("seed: 1\nmodle: {}\n") == 2);
  CHECK(line_of_error("tolerances:\n  homotopy: -1\n") == 2);
  CHECK(line_of_error("tolerances:\n  homotopy:\n    no-such-check: 1e-3\n") == 3);
  CHECK(line_of_error("jloCutoff: 200\n") == 1);
  try {
    parse_config("model:\n  kind: scaling\n  mu: 0.5\n", "x.yaml");
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.path == "/model/mu");
    CHECK(std::string(e.what()).rfind("x.yaml:3:", 0) == 0);
  }

  auto t = parse_config("tolerances:\n  homotopy: 1e-3\n  transgression:\n    transgression.decay: 0.5\n");
  CHECK(t.suiteTolerance.at("homotopy") == 1e-3);
  CHECK(t.checkTolerance.at("transgression.decay") == 0.5);
}

TEST_CASE("catalog") {
  const auto& cat = catalog();
  REQUIRE(!cat.empty());
  std::set<std::string> names, suites(suite_names().begin(), suite_names().end()), seenSuites;
  bool selberg = false, transgression = false;
  for (const auto& c : cat) {
    CHECK(names.insert(c.name).second);
    CHECK(suites.count(c.suite) == 1);
    seenSuites.insert(c.suite);
    CHECK(!c.anchor.empty());
    CHECK(c.tolerance >= 0);
    CHECK(static_cast<bool>(c.run));
    if (c.provenance == Provenance::DERIVED) CHECK(!c.oracle.empty());
    selberg = selberg || c.anchor == "de facto enforces the Selberg Principle";
    transgression = transgression || c.anchor == "transgression formula";
  }
  CHECK(seenSuites == suites);
  CHECK(selberg);
  CHECK(transgression);
}

TEST_CASE("empty suite list") {
  auto r = run_suites(parse_config("suites: []\n"), 2);
  CHECK(r.allPass);
  CHECK(r.json["checks"].empty());
}

TEST_CASE("index-pairing report") {
  auto r = run_suites(parse_config("model:\n  kind: circle\nsuites: [index-pairing]\n"), 2);
  CHECK(r.allPass);
  bool found = false;
  for (const auto& e : r.json["checks"]) {
    CHECK(e.contains("provenance"));
    if (e["provenance"] == "DERIVED") CHECK(e.contains("oracle"));
    if (e["name"] == "fredholm_index(e^{iθ})") {
      found = true;
      CHECK(e["value"] == -1);
      CHECK(e["pass"] == true);
    }
  }
  CHECK(found);
}

TEST_CASE("determinism across thread counts") {
  auto cfg = parse_config("model:\n  kind: circle\n  cutoff: 32\nsuites: [symbolic-identities, jlo-lemmas, residue-cocycle]\n"
                          "seed: 99\njloCutoff: 12\n");
  auto a = run_suites(cfg, 1), b = run_suites(cfg, 4);
  CHECK(a.json.dump() == b.json.dump());
  cfg.seed = 100;
  CHECK(run_suites(cfg, 4).json.dump() != a.json.dump());
}

TEST_CASE("scaling model skips circle-only checks") {
  auto r = run_suites(parse_config("model:\n  kind: scaling\nsuites: [index-pairing, jlo-lemmas]\n"), 2);
  CHECK(!r.json["skipped"].empty());
  CHECK(r.allPass);
}

TEST_CASE("report files") {
  auto dir = std::filesystem::temp_directory_path() / "twist_cli_test";
  std::filesystem::remove_all(dir);
  auto cfg = parse_config("suites: [hochschild]\noutput:\n  dir: " + dir.string() + "\n");
  auto files = write_report(cfg, run_suites(cfg, 1));
  REQUIRE(files.size() == 2);
  std::ifstream rep(files[0]);
  auto j = nlohmann::json::parse(rep);
  CHECK(j["summary"]["total"] == 3);
  std::ifstream csv(files[1]);
  std::string header;
  std::getline(csv, header);
  CHECK(header.rfind("name,suite,provenance", 0) == 0);
  CHECK_THROWS_AS(parse_scan_kind("x"), std::invalid_argument);
  std::filesystem::remove_all(dir);
}
