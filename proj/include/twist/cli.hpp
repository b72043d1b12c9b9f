#pragma once
// Batch driver: configuration, check catalog, suite runner, scans and report output.

#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "twist/models.hpp"

namespace twist::cli {

const std::vector<std::string>& suite_names();

struct SuiteConfig {
  models::ModelConfig model;
  nlohmann::json modelJson = nlohmann::json::object();
  std::vector<std::string> suites;
  std::map<std::string, double> suiteTolerance;  // suite -> tolerance for every check in it
  std::map<std::string, double> checkTolerance;  // check name -> tolerance
  std::uint64_t seed = 12345;
  int jloCutoff = 16;            // circle size for multi-input bracket checks
  std::string outputDir = ".";
  std::string reportName = "report.json";
  std::string source;            // config path, for messages
};

// Error in a configuration file: JSON-pointer style path plus 1-based line (0 if unknown).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& source, int line, const std::string& path, const std::string& msg);
  std::string source, path;
  int line;
};

SuiteConfig parse_config(const std::string& text, const std::string& source = "<string>");
SuiteConfig load_config(const std::string& path);

enum class Provenance { PAPER, TRIVIAL, DERIVED };
std::string to_string(Provenance p);

struct CheckContext {
  const SuiteConfig& config;
  std::uint64_t seed;  // per-check seed derived from the config seed and the check name
  double tolerance;
};

struct CheckResult {
  nlohmann::json value, expected;
  double residual = 0;   // compared with the tolerance
  std::string detail;
};

struct CheckSpec {
  std::string name;
  std::string suite;
  std::string anchor;
  Provenance provenance = Provenance::DERIVED;
  std::string oracle;          // required for DERIVED
  double tolerance = 0;        // default; 0 means exact
  std::vector<std::string> kinds;  // model kinds it applies to; empty = every kind
  std::function<CheckResult(const CheckContext&)> run;
};

const std::vector<CheckSpec>& catalog();

struct Report {
  nlohmann::json json;
  bool allPass = true;
};

// Runs every applicable check of the configured suites on `threads` workers. Entries are
// assembled in catalog order, so the report does not depend on the thread count.
Report run_suites(const SuiteConfig& cfg, int threads);
// report.json and checks.csv in the output directory; returns the written paths.
std::vector<std::string> write_report(const SuiteConfig& cfg, const Report& r);

enum class ScanKind { Epsilon, T, U };
ScanKind parse_scan_kind(const std::string& s);
// CSV table with a header row; returns the written path.
std::string run_scan(const SuiteConfig& cfg, ScanKind kind);

int threads_from_env();

}  // namespace twist::cli
