#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include "twist/cli.hpp"

using namespace twist;

namespace {

int verify(const std::string& path) {
  cli::SuiteConfig cfg = cli::load_config(path);
  models::build_model(cfg.model);  // model errors surface before any check runs
  cli::Report r = cli::run_suites(cfg, cli::threads_from_env());
  auto files = cli::write_report(cfg, r);
  auto has = [&](const std::string& s) { return std::find(cfg.suites.begin(), cfg.suites.end(), s) != cfg.suites.end(); };
  const bool isCircle = cfg.model.kind != "scaling";
  if (has("constant-term")) files.push_back(cli::run_scan(cfg, cli::ScanKind::Epsilon));
  if (has("transgression") && isCircle) files.push_back(cli::run_scan(cfg, cli::ScanKind::T));
  if (has("homotopy") && isCircle) files.push_back(cli::run_scan(cfg, cli::ScanKind::U));

  for (const auto& e : r.json["checks"])
    std::printf("%-4s %-45s %s\n", e["pass"].get<bool>() ? "ok" : "FAIL", e["name"].get<std::string>().c_str(),
                e["residual"].is_null() ? e["detail"].get<std::string>().c_str() : e["residual"].dump().c_str());
  const auto& s = r.json["summary"];
  std::printf("%d/%d checks pass\n", s["passed"].get<int>(), s["total"].get<int>());
  for (const auto& f : files) std::printf("wrote %s\n", f.c_str());
  return r.allPass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Twisted spectral triple verification driver"};
  app.require_subcommand(1);
  std::string config, scanKind;

  auto* v = app.add_subcommand("verify", "run the configured suites and write report.json and CSV tables");
  v->add_option("config", config, "YAML config")->required();
  auto* l = app.add_subcommand("list-checks", "print the check catalog");
  auto* s = app.add_subcommand("scan", "write a scan table");
  s->add_option("kind", scanKind, "epsilon, t or u")->required()->check(CLI::IsMember({"epsilon", "t", "u"}));
  s->add_option("config", config, "YAML config")->required();
  auto* x = app.add_subcommand("export-model", "write the model matrices as .npy files");
  x->add_option("config", config, "YAML config")->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (v->parsed()) return verify(config);
    if (l->parsed()) {
      for (const auto& c : cli::catalog())
        std::printf("%-20s %-45s %-8s \"%s\"\n", c.suite.c_str(), c.name.c_str(), cli::to_string(c.provenance).c_str(),
                    c.anchor.c_str());
      return 0;
    }
    cli::SuiteConfig cfg = cli::load_config(config);
    if (s->parsed()) {
      std::printf("wrote %s\n", cli::run_scan(cfg, cli::parse_scan_kind(scanKind)).c_str());
      return 0;
    }
    if (x->parsed()) {
      auto prefix = (std::filesystem::path(cfg.outputDir) / cfg.model.kind).string();
      std::filesystem::create_directories(cfg.outputDir);
      for (const auto& f : models::export_model(models::build_model(cfg.model), prefix)) std::printf("wrote %s\n", f.c_str());
      return 0;
    }
  } catch (const cli::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
