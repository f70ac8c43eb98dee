#include "run_config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace powerset::cli {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string scalar_text(const nlohmann::json& v, const std::string& key, const std::string& origin) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number()) {
    std::ostringstream out;
    out.precision(17);
    out << v.get<double>();
    return out.str();
  }
  throw std::invalid_argument(origin + ": value of '" + key + "' must be a scalar or a list of scalars");
}

ConfigEntries parse_json(const std::string& text, const std::string& origin) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(origin + ": " + e.what());
  }
  if (!doc.is_object()) throw std::invalid_argument(origin + ": top level must be an object");
  ConfigEntries out;
  for (const auto& [key, v] : doc.items()) {
    if (v.is_array()) {
      std::string joined;
      for (const auto& e : v) joined += (joined.empty() ? "" : ",") + scalar_text(e, key, origin);
      out.emplace_back(key, joined);
    } else {
      out.emplace_back(key, scalar_text(v, key, origin));
    }
  }
  return out;
}

ConfigEntries parse_key_values(const std::string& text, const std::string& origin) {
  ConfigEntries out;
  std::istringstream in(text);
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(origin + ":" + std::to_string(n) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw std::invalid_argument(origin + ":" + std::to_string(n) + ": empty key");
    out.emplace_back(key, trim(line.substr(eq + 1)));
  }
  return out;
}

}  // namespace

ConfigEntries parse_run_config(const std::string& text, const std::string& origin) {
  const std::string body = trim(text);
  if (!body.empty() && body.front() == '{') return parse_json(body, origin);
  return parse_key_values(text, origin);
}

ConfigEntries load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_run_config(text.str(), path.string());
}

std::vector<std::string> expand_config_arguments(const std::vector<std::string>& args) {
  if (args.size() < 2) return args;
  std::vector<std::string> injected;
  for (std::size_t k = 2; k < args.size(); ++k) {
    std::string path;
    if (args[k] == "--config" && k + 1 < args.size()) {
      path = args[k + 1];
    } else if (args[k].rfind("--config=", 0) == 0) {
      path = args[k].substr(9);
    } else {
      continue;
    }
    for (const auto& [key, value] : load_run_config(path)) {
      if (key == "config") throw std::invalid_argument(path + ": nested config is not supported");
      injected.push_back("--" + key + "=" + value);
    }
  }
  std::vector<std::string> out(args.begin(), args.begin() + 2);
  out.insert(out.end(), injected.begin(), injected.end());
  out.insert(out.end(), args.begin() + 2, args.end());
  return out;
}

}  // namespace powerset::cli
