#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

#include "twist/cli.hpp"
#include "twist/jlo.hpp"
#include "twist/residue.hpp"

namespace twist::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::uint64_t check_seed(std::uint64_t seed, const std::string& name) {
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  for (unsigned char ch : name) h = (h ^ ch) * 1099511628211ull;
  return h ^ seed;
}

bool applies(const CheckSpec& c, const std::string& kind) {
  return c.kinds.empty() || std::find(c.kinds.begin(), c.kinds.end(), kind) != c.kinds.end();
}

double tolerance_for(const SuiteConfig& cfg, const CheckSpec& c) {
  if (auto it = cfg.checkTolerance.find(c.name); it != cfg.checkTolerance.end()) return it->second;
  if (auto it = cfg.suiteTolerance.find(c.suite); it != cfg.suiteTolerance.end()) return it->second;
  return c.tolerance;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::string csv_value(const json& j) { return csv_field(j.is_string() ? j.get<std::string>() : j.dump()); }

// restores the JLO thread count on scope exit
struct JloThreads {
  int saved = jlo::threads();
  explicit JloThreads(int n) { jlo::set_threads(n); }
  ~JloThreads() { jlo::set_threads(saved); }
};

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

int threads_from_env() {
  if (const char* s = std::getenv("TWIST_THREADS")) {
    char* end = nullptr;
    long n = std::strtol(s, &end, 10);
    if (end != s && *end == '\0' && n > 0) return static_cast<int>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

Report run_suites(const SuiteConfig& cfg, int threads) {
  std::vector<const CheckSpec*> todo;
  json skipped = json::array();
  for (const auto& suite : cfg.suites)
    for (const auto& c : catalog()) {
      if (c.suite != suite) continue;
      if (applies(c, cfg.model.kind)) {
        todo.push_back(&c);
      } else {
        skipped.push_back({{"name", c.name}, {"suite", c.suite}, {"reason", "not applicable to model kind " + cfg.model.kind}});
      }
    }

  std::vector<json> entries(todo.size());
  auto run_one = [&](size_t i) {
    const CheckSpec& c = *todo[i];
    double tol = tolerance_for(cfg, c);
    CheckContext ctx{cfg, check_seed(cfg.seed, c.name), tol};
    json e = {{"name", c.name}, {"suite", c.suite}, {"anchor", c.anchor}, {"provenance", to_string(c.provenance)},
              {"tolerance", tol}};
    if (c.provenance == Provenance::DERIVED) e["oracle"] = c.oracle;
    try {
      CheckResult r = c.run(ctx);
      e["value"] = r.value;
      e["expected"] = r.expected;
      e["residual"] = r.residual;
      e["pass"] = std::isfinite(r.residual) && r.residual <= tol;
      e["detail"] = r.detail;
    } catch (const std::exception& ex) {
      e["value"] = nullptr;
      e["expected"] = nullptr;
      e["residual"] = nullptr;
      e["pass"] = false;
      e["detail"] = std::string("error: ") + ex.what();
    }
    entries[i] = std::move(e);
  };

  {
    // one check per worker; the bracket evaluator runs single-threaded so results do not
    // depend on the worker count
    JloThreads single(1);
    std::atomic<size_t> next{0};
    auto worker = [&] {
      for (size_t i; (i = next++) < todo.size();) run_one(i);
    };
    int n = std::max(1, std::min<int>(threads, static_cast<int>(todo.size())));
    std::vector<std::thread> pool;
    for (int k = 1; k < n; ++k) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
  }

  Report r;
  json checks = json::array();
  int passed = 0;
  for (auto& e : entries) {
    if (e["pass"].get<bool>()) ++passed;
    checks.push_back(std::move(e));
  }
  r.allPass = passed == static_cast<int>(checks.size());
  r.json = {{"schema", "twist-report/1"},
            {"config", cfg.source},
            {"seed", cfg.seed},
            {"model", cfg.modelJson},
            {"suites", cfg.suites},
            {"checks", checks},
            {"skipped", skipped},
            {"summary", {{"total", checks.size()}, {"passed", passed}, {"failed", checks.size() - passed}}}};
  return r;
}

std::vector<std::string> write_report(const SuiteConfig& cfg, const Report& r) {
  fs::create_directories(cfg.outputDir);
  std::string rp = (fs::path(cfg.outputDir) / cfg.reportName).string();
  std::ofstream(rp) << r.json.dump(2) << "\n";
  std::string cp = (fs::path(cfg.outputDir) / "checks.csv").string();
  std::ofstream csv(cp);
  csv << "name,suite,provenance,value,expected,residual,tolerance,pass,anchor\n";
  for (const auto& e : r.json["checks"])
    csv << csv_field(e["name"]) << ',' << e["suite"].get<std::string>() << ',' << e["provenance"].get<std::string>()
        << ',' << csv_value(e["value"]) << ',' << csv_value(e["expected"]) << ','
        << (e["residual"].is_null() ? "" : num(e["residual"].get<double>())) << ','
        << num(e["tolerance"].get<double>()) << ',' << (e["pass"].get<bool>() ? "true" : "false") << ','
        << csv_field(e["anchor"]) << "\n";
  return {rp, cp};
}

ScanKind parse_scan_kind(const std::string& s) {
  if (s == "epsilon") return ScanKind::Epsilon;
  if (s == "t") return ScanKind::T;
  if (s == "u") return ScanKind::U;
  throw std::invalid_argument("unknown scan kind '" + s + "' (expected epsilon, t or u)");
}

std::string run_scan(const SuiteConfig& cfg, ScanKind kind) {
  using models::cplx;
  const auto& mc = cfg.model;
  const bool isCircle = mc.kind != "scaling";
  fs::create_directories(cfg.outputDir);
  const char* tag = kind == ScanKind::Epsilon ? "epsilon" : kind == ScanKind::T ? "t" : "u";
  std::string path = (fs::path(cfg.outputDir) / (std::string("scan_") + tag + ".csv")).string();
  std::ofstream out(path);

  if (kind == ScanKind::Epsilon) {
    // eps^{1/2} <u*, [D, sigma^{-1}(u)]>_{eps^{1/2} D}; scaling models use f U, g U^{-1}
    models::ModelTriple m;
    std::vector<jlo::Element> a;
    if (isCircle) {
      m = models::build_circle(mc.cutoff, mc.innerFraction);
      jlo::Element us{models::shift(m, -1), 1, 0}, u{models::shift(m, 1), 1, 0};
      a = {us, jlo::twisted_commutator(m, m.D, jlo::sigma(m, u, -1))};
    } else {
      m = models::build_scaling(mc.windowLo, mc.windowHi, mc.mu, mc.collar);
      models::Mat f = models::scaling_function(m, {{0, 1.0}, {1, 0.5}});
      auto u = jlo::scaling_element(m, f, 1);
      a = {jlo::scaling_element(m, f, -1), jlo::twisted_commutator(m, m.D, jlo::sigma(m, u, -1))};
    }
    double N = isCircle ? mc.cutoff : std::max(std::abs(mc.windowLo), std::abs(mc.windowHi));
    out << "eps,re,im,error_bound\n";
    for (int i = 0; i <= 40; ++i) {
      double eps = 1.0 / (N * N) * std::pow(10.0, i / 10.0);
      auto v = jlo::eval_bracket_epsilon(m, a, eps, 1);
      out << num(eps) << ',' << num(v.value.real()) << ',' << num(v.value.imag()) << ',' << num(v.errorBound) << "\n";
    }
  } else if (kind == ScanKind::T) {
    if (!isCircle) throw std::invalid_argument("t scan needs a circle model");
    auto m = models::build_circle(cfg.jloCutoff);
    std::vector<jlo::Element> a{{models::shift(m, -1), 1, 0}, {models::shift(m, 1), 1, 0}};
    out << "t,re,im\n";
    for (int i = 0; i <= 30; ++i) {
      double t = 0.1 * std::pow(10.0, i / 15.0);
      cplx v = jlo::J(m, jlo::Family::Scale, t, a);
      out << num(t) << ',' << num(v.real()) << ',' << num(v.imag()) << "\n";
    }
  } else {
    if (!isCircle) throw std::invalid_argument("u scan needs a circle model");
    auto m = models::build_circle(mc.cutoff, mc.innerFraction);
    std::vector<double> grid;
    for (int i = 0; i <= 20; ++i) grid.push_back(i / 20.0);
    auto s = residue::homotopy_pairing_scan(m, grid, {{models::shift(m, -1), 1, 0}, {models::shift(m, 1), 1, 0}});
    out << "u,re,im\n";
    for (const auto& r : s.rows) out << num(r.u) << ',' << num(r.value.real()) << ',' << num(r.value.imag()) << "\n";
  }
  return path;
}

}  // namespace twist::cli
