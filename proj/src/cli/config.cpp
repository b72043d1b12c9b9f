#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <fstream>
#include <sstream>

#include "twist/cli.hpp"

namespace twist::cli {

namespace {

int line_of(const YAML::Node& n) { return n.Mark().is_null() ? 0 : n.Mark().line + 1; }

nlohmann::json to_json(const YAML::Node& n, const std::string& source, const std::string& path) {
  switch (n.Type()) {
    case YAML::NodeType::Null:
      return nullptr;
    case YAML::NodeType::Scalar: {
      const std::string& s = n.Scalar();
      if (n.Tag() == "!") return s;  // quoted
      long long i;
      double d;
      bool b;
      if (YAML::convert<long long>::decode(n, i)) return i;
      if (YAML::convert<double>::decode(n, d)) return d;
      if (YAML::convert<bool>::decode(n, b)) return b;
      return s;
    }
    case YAML::NodeType::Sequence: {
      nlohmann::json a = nlohmann::json::array();
      for (size_t i = 0; i < n.size(); ++i) a.push_back(to_json(n[i], source, path + "/" + std::to_string(i)));
      return a;
    }
    case YAML::NodeType::Map: {
      nlohmann::json o = nlohmann::json::object();
      for (auto it = n.begin(); it != n.end(); ++it) {
        std::string k = it->first.as<std::string>();
        o[k] = to_json(it->second, source, path + "/" + k);
      }
      return o;
    }
    default:
      throw ConfigError(source, line_of(n), path, "undefined node");
  }
}

// Line of the node addressed by a path such as /model/mu; falls back to the deepest parent found.
int line_for_path(const YAML::Node& root, const std::string& path) {
  YAML::Node cur = root;
  int line = line_of(root);
  std::stringstream ss(path);
  std::string part;
  while (std::getline(ss, part, '/')) {
    if (part.empty()) continue;
    if (!cur.IsMap()) break;
    YAML::Node next;
    for (auto it = cur.begin(); it != cur.end(); ++it)
      if (it->first.as<std::string>() == part) {
        next = it->second;
        line = line_of(it->first);
      }
    if (!next.IsDefined()) break;
    cur = next;
  }
  return line;
}

template <class T>
T scalar_as(const YAML::Node& n, const std::string& source, const std::string& path, const char* what) {
  T v;
  if (!n.IsScalar() || !YAML::convert<T>::decode(n, v))
    throw ConfigError(source, line_of(n), path, std::string("expected ") + what);
  return v;
}

}  // namespace

ConfigError::ConfigError(const std::string& src, int ln, const std::string& p, const std::string& msg)
    : std::runtime_error(src + ":" + std::to_string(ln) + ": " + p + ": " + msg), source(src), path(p), line(ln) {}

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = {"symbolic-identities", "hochschild",   "ansatz-obstruction",
                                                 "jlo-lemmas",          "constant-term", "residue-cocycle",
                                                 "index-pairing",       "transgression", "homotopy"};
  return names;
}

SuiteConfig parse_config(const std::string& text, const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(source, e.mark.is_null() ? 0 : e.mark.line + 1, "", e.msg);
  }
  SuiteConfig cfg;
  cfg.source = source;
  if (root.IsNull()) return cfg;
  if (!root.IsMap()) throw ConfigError(source, line_of(root), "", "top level must be a mapping");

  static const std::vector<std::string> known = {"model", "suites", "tolerances", "seed", "jloCutoff", "output"};
  for (auto it = root.begin(); it != root.end(); ++it) {
    std::string k = it->first.as<std::string>();
    if (std::find(known.begin(), known.end(), k) == known.end())
      throw ConfigError(source, line_of(it->first), "/" + k, "unknown key");
  }

  if (root["model"]) {
    const YAML::Node& m = root["model"];
    if (!m.IsMap()) throw ConfigError(source, line_of(m), "/model", "expected a mapping");
    cfg.modelJson = to_json(m, source, "/model");
    try {
      cfg.model = models::parse_model_config(cfg.modelJson);
    } catch (const std::invalid_argument& e) {
      std::string msg = e.what();
      std::string path = msg.substr(0, msg.find(':'));
      std::string rest = msg.find(": ") == std::string::npos ? msg : msg.substr(msg.find(": ") + 2);
      throw ConfigError(source, line_for_path(root, path), path, rest);
    }
  }

  if (root["suites"]) {
    const YAML::Node& s = root["suites"];
    if (!s.IsSequence()) throw ConfigError(source, line_of(s), "/suites", "expected a list of suite names");
    for (size_t i = 0; i < s.size(); ++i) {
      std::string path = "/suites/" + std::to_string(i);
      std::string name = scalar_as<std::string>(s[i], source, path, "a suite name");
      const auto& all = suite_names();
      if (std::find(all.begin(), all.end(), name) == all.end())
        throw ConfigError(source, line_of(s[i]), path, "unknown suite '" + name + "'");
      if (std::find(cfg.suites.begin(), cfg.suites.end(), name) == cfg.suites.end()) cfg.suites.push_back(name);
    }
  }

  if (root["tolerances"]) {
    const YAML::Node& t = root["tolerances"];
    if (!t.IsMap()) throw ConfigError(source, line_of(t), "/tolerances", "expected a mapping");
    for (auto it = t.begin(); it != t.end(); ++it) {
      std::string k = it->first.as<std::string>();
      std::string path = "/tolerances/" + k;
      const auto& all = suite_names();
      if (std::find(all.begin(), all.end(), k) == all.end())
        throw ConfigError(source, line_of(it->first), path, "unknown suite '" + k + "'");
      auto positive = [&](const YAML::Node& n, const std::string& p) {
        double v = scalar_as<double>(n, source, p, "a number");
        if (!(v > 0)) throw ConfigError(source, line_of(n), p, "tolerance must be positive");
        return v;
      };
      if (it->second.IsScalar()) {
        cfg.suiteTolerance[k] = positive(it->second, path);
      } else if (it->second.IsMap()) {
        for (auto jt = it->second.begin(); jt != it->second.end(); ++jt) {
          std::string name = jt->first.as<std::string>();
          std::string p = path + "/" + name;
          bool found = false;
          for (const auto& c : catalog()) found = found || (c.name == name && c.suite == k);
          if (!found) throw ConfigError(source, line_of(jt->first), p, "no check '" + name + "' in suite " + k);
          cfg.checkTolerance[name] = positive(jt->second, p);
        }
      } else {
        throw ConfigError(source, line_of(it->second), path, "expected a number or a mapping of check names");
      }
    }
  }

  if (root["seed"]) cfg.seed = scalar_as<std::uint64_t>(root["seed"], source, "/seed", "a non-negative integer");
  if (root["jloCutoff"]) {
    cfg.jloCutoff = scalar_as<int>(root["jloCutoff"], source, "/jloCutoff", "an integer");
    if (cfg.jloCutoff < 4 || cfg.jloCutoff > 64)
      throw ConfigError(source, line_of(root["jloCutoff"]), "/jloCutoff", "must lie in [4, 64]");
  }
  if (root["output"]) {
    const YAML::Node& o = root["output"];
    if (!o.IsMap()) throw ConfigError(source, line_of(o), "/output", "expected a mapping");
    for (auto it = o.begin(); it != o.end(); ++it) {
      std::string k = it->first.as<std::string>();
      if (k == "dir") {
        cfg.outputDir = scalar_as<std::string>(it->second, source, "/output/dir", "a path");
      } else if (k == "report") {
        cfg.reportName = scalar_as<std::string>(it->second, source, "/output/report", "a file name");
      } else {
        throw ConfigError(source, line_of(it->first), "/output/" + k, "unknown key");
      }
    }
  }
  return cfg;
}

SuiteConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, 0, "", "cannot open file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

}  // namespace twist::cli
