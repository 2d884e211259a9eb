#pragma once

// Run configuration: a flat `key = value` text format ('#' starts a comment,
// lists are comma separated). Unknown keys and malformed values are rejected
// with the offending line number.

#include <cctype>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "docr/policy.hpp"

namespace docr {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  int d = 2;
  std::int64_t T = 10000;
  double c = 1.0;
  double alpha = 1.0;
  double lambda = 1.0;
  double sigma = 0.05;
  double w_max = 1.0;
  PolicyKind policy = PolicyKind::kDoublyOptimistic;
  double p = 0.5;
  std::size_t epochs = 10;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  std::string output_dir = "out";
  // regret
  std::vector<std::size_t> k_grid;  // empty: automatic grid
  int kmeans_restarts = 5;
  std::size_t checkpoints = 20;
  std::int64_t checkpoint_start = 100;
  std::vector<std::int64_t> checkpoint_extras;
  double tail_fraction = 0.5;
  // tradeoff
  std::vector<double> c_values = {0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 5.0, 7.5, 10.0, 20.0, 50.0, 100.0};
  std::vector<double> p_values = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  // oracle
  std::string instance;
  std::vector<std::string> methods = {"kmeans", "covering"};

  void validate() const {
    auto fail = [](const std::string& m) { throw ConfigError(m); };
    if (d < 2) fail("d must be >= 2");
    if (T < 1) fail("T must be >= 1");
    if (!(c > 0.0)) fail("c must be > 0");
    if (!(alpha > 0.0)) fail("alpha must be > 0");
    if (!(lambda > 0.0)) fail("lambda must be > 0");
    if (!(sigma >= 0.0)) fail("sigma must be >= 0");
    if (!(w_max > 0.0)) fail("w_max must be > 0");
    if (!(p >= 0.0 && p <= 1.0)) fail("p must lie in [0,1]");
    if (epochs < 1) fail("epochs must be >= 1");
    if (jobs < 1) fail("jobs must be >= 1");
    if (kmeans_restarts < 1) fail("kmeans_restarts must be >= 1");
    if (checkpoints < 1) fail("checkpoints must be >= 1");
    if (checkpoint_start < 1) fail("checkpoint_start must be >= 1");
    if (!(tail_fraction > 0.0 && tail_fraction <= 1.0)) fail("tail_fraction must lie in (0,1]");
    for (double v : c_values)
      if (!(v > 0.0)) fail("c_values must be > 0");
    for (double v : p_values)
      if (!(v >= 0.0 && v <= 1.0)) fail("p_values must lie in [0,1]");
    for (std::size_t k : k_grid)
      if (k < 1) fail("k_grid entries must be >= 1");
    for (const auto& m : methods)
      if (m != "kmeans" && m != "covering" && m != "bruteforce_h" && m != "exhaustive_o")
        fail("unknown oracle method '" + m + "'");
  }

  nlohmann::json to_json() const {
    return {{"d", d}, {"T", T}, {"c", c}, {"alpha", alpha}, {"lambda", lambda},
            {"sigma", sigma}, {"w_max", w_max}, {"policy", to_string(policy)}, {"p", p},
            {"epochs", epochs}, {"seed", seed}, {"k_grid", k_grid},
            {"kmeans_restarts", kmeans_restarts}, {"checkpoints", checkpoints},
            {"checkpoint_start", checkpoint_start}, {"checkpoint_extras", checkpoint_extras},
            {"tail_fraction", tail_fraction}, {"c_values", c_values}, {"p_values", p_values}};
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
T parse_number(const std::string& s) {
  std::size_t pos = 0;
  T v{};
  try {
    if constexpr (std::is_same_v<T, double>) {
      v = std::stod(s, &pos);
    } else if constexpr (std::is_unsigned_v<T>) {
      if (!s.empty() && s[0] == '-') throw std::invalid_argument("negative");
      v = static_cast<T>(std::stoull(s, &pos));
    } else {
      v = static_cast<T>(std::stoll(s, &pos));
    }
  } catch (const std::exception&) {
    throw std::invalid_argument("'" + s + "' is not a valid number");
  }
  if (pos != s.size()) throw std::invalid_argument("'" + s + "' is not a valid number");
  return v;
}

template <typename T>
std::vector<T> parse_list(const std::string& s) {
  std::vector<T> out;
  for (const auto& item : split_list(s)) out.push_back(parse_number<T>(item));
  return out;
}

}  // namespace detail

/// Sets one field from its textual value. Throws std::invalid_argument on an
/// unknown key or a malformed value.
inline void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
  using detail::parse_list;
  using detail::parse_number;
  static const std::map<std::string, std::function<void(RunConfig&, const std::string&)>> setters = {
      {"d", [](RunConfig& c, const std::string& v) { c.d = parse_number<int>(v); }},
      {"T", [](RunConfig& c, const std::string& v) { c.T = parse_number<std::int64_t>(v); }},
      {"c", [](RunConfig& c, const std::string& v) { c.c = parse_number<double>(v); }},
      {"alpha", [](RunConfig& c, const std::string& v) { c.alpha = parse_number<double>(v); }},
      {"lambda", [](RunConfig& c, const std::string& v) { c.lambda = parse_number<double>(v); }},
      {"sigma", [](RunConfig& c, const std::string& v) { c.sigma = parse_number<double>(v); }},
      {"w_max", [](RunConfig& c, const std::string& v) { c.w_max = parse_number<double>(v); }},
      {"policy", [](RunConfig& c, const std::string& v) { c.policy = policy_from_string(v); }},
      {"p", [](RunConfig& c, const std::string& v) { c.p = parse_number<double>(v); }},
      {"epochs", [](RunConfig& c, const std::string& v) { c.epochs = parse_number<std::size_t>(v); }},
      {"seed", [](RunConfig& c, const std::string& v) { c.seed = parse_number<std::uint64_t>(v); }},
      {"jobs", [](RunConfig& c, const std::string& v) { c.jobs = parse_number<std::size_t>(v); }},
      {"out", [](RunConfig& c, const std::string& v) { c.output_dir = v; }},
      {"k_grid", [](RunConfig& c, const std::string& v) { c.k_grid = parse_list<std::size_t>(v); }},
      {"kmeans_restarts", [](RunConfig& c, const std::string& v) { c.kmeans_restarts = parse_number<int>(v); }},
      {"checkpoints", [](RunConfig& c, const std::string& v) { c.checkpoints = parse_number<std::size_t>(v); }},
      {"checkpoint_start",
       [](RunConfig& c, const std::string& v) { c.checkpoint_start = parse_number<std::int64_t>(v); }},
      {"checkpoint_extras",
       [](RunConfig& c, const std::string& v) { c.checkpoint_extras = parse_list<std::int64_t>(v); }},
      {"tail_fraction", [](RunConfig& c, const std::string& v) { c.tail_fraction = parse_number<double>(v); }},
      {"c_values", [](RunConfig& c, const std::string& v) { c.c_values = parse_list<double>(v); }},
      {"p_values", [](RunConfig& c, const std::string& v) { c.p_values = parse_list<double>(v); }},
      {"instance", [](RunConfig& c, const std::string& v) { c.instance = v; }},
      {"methods", [](RunConfig& c, const std::string& v) { c.methods = detail::split_list(v); }},
  };
  const auto it = setters.find(key);
  if (it == setters.end()) throw std::invalid_argument("unknown key '" + key + "'");
  it->second(cfg, value);
}

/// Parses config text on top of `base`. `source` names the input in errors.
inline RunConfig parse_config(std::istream& in, RunConfig base = {}, const std::string& source = "config") {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(source + ":" + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    try {
      set_config_value(base, key, value);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return base;
}

inline RunConfig load_config(const std::string& path, RunConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in, std::move(base), path);
}

}  // namespace docr
