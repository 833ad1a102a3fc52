#include "macsav/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace macsav {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(int line, const std::string& msg) {
  throw ConfigError("config line " + std::to_string(line) + ": " + msg, line);
}

struct Entry {
  std::string value;
  int line;
};

template <class T>
T parse_number(const Entry& e, const std::string& key) {
  T v{};
  const char* first = e.value.data();
  const char* last = first + e.value.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last) fail(e.line, key + ": malformed number '" + e.value + "'");
  return v;
}

double parse_positive(const Entry& e, const std::string& key) {
  const double v = parse_number<double>(e, key);
  if (!std::isfinite(v) || !(v > 0.0)) fail(e.line, key + " must be positive, got " + e.value);
  return v;
}

}  // namespace

RunConfig parse_config(std::string_view text) {
  static const char* const known[] = {"epsilon",    "nu",         "lambda",         "tau",
                                      "n_cells",    "t_end",      "init_case",      "seed",
                                      "output_dir", "diag_every", "snapshot_every", "startup"};
  std::map<std::string, Entry> entries;

  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail(line_no, "expected 'key = value'");
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) fail(line_no, "missing key");
    if (std::find(std::begin(known), std::end(known), key) == std::end(known)) fail(line_no, "unknown key '" + key + "'");
    if (value.empty()) fail(line_no, key + ": missing value");
    if (auto it = entries.find(key); it != entries.end())
      fail(line_no, "duplicate key '" + key + "' (first set on line " + std::to_string(it->second.line) + ")");
    entries.emplace(key, Entry{value, line_no});
  }

  for (const char* req : {"epsilon", "nu", "lambda", "tau", "n_cells", "t_end"})
    if (!entries.count(req)) throw ConfigError(std::string("config: missing required key '") + req + "'", 0);

  RunConfig c;
  c.epsilon = parse_positive(entries.at("epsilon"), "epsilon");
  c.nu = parse_positive(entries.at("nu"), "nu");
  c.lambda = parse_positive(entries.at("lambda"), "lambda");
  c.tau = parse_positive(entries.at("tau"), "tau");
  {
    const Entry& e = entries.at("n_cells");
    c.n_cells = parse_number<int>(e, "n_cells");
    if (c.n_cells < 2) fail(e.line, "n_cells must be >= 2, got " + e.value);
  }
  {
    const Entry& e = entries.at("t_end");
    c.t_end = parse_number<double>(e, "t_end");
    if (!std::isfinite(c.t_end) || c.t_end < 0.0) fail(e.line, "t_end must be >= 0, got " + e.value);
  }

  if (auto it = entries.find("init_case"); it != entries.end()) {
    const std::string& v = it->second.value;
    static constexpr std::string_view snap_prefix = "from_snapshot:";
    if (v == "default_smooth") {
      c.init_case = InitCase::default_smooth;
    } else if (v == "equilibrium") {
      c.init_case = InitCase::equilibrium;
    } else if (v == "random") {
      c.init_case = InitCase::random;
    } else if (v.starts_with(snap_prefix)) {
      c.init_case = InitCase::from_snapshot;
      c.snapshot_path = std::string(trim(std::string_view(v).substr(snap_prefix.size())));
      if (c.snapshot_path.empty()) fail(it->second.line, "init_case: from_snapshot needs a path");
    } else {
      fail(it->second.line, "init_case: unknown value '" + v + "'");
    }
  }
  if (auto it = entries.find("seed"); it != entries.end()) c.seed = parse_number<std::uint64_t>(it->second, "seed");
  if (auto it = entries.find("output_dir"); it != entries.end()) c.output_dir = it->second.value;
  if (auto it = entries.find("diag_every"); it != entries.end()) {
    c.diag_every = parse_number<long>(it->second, "diag_every");
    if (c.diag_every < 1) fail(it->second.line, "diag_every must be >= 1");
  }
  if (auto it = entries.find("snapshot_every"); it != entries.end()) {
    c.snapshot_every = parse_number<long>(it->second, "snapshot_every");
    if (c.snapshot_every < 0) fail(it->second.line, "snapshot_every must be >= 0");
  }
  if (auto it = entries.find("startup"); it != entries.end()) {
    const std::string& v = it->second.value;
    if (v == "first_order_step")
      c.startup = Startup::first_order_step;
    else if (v == "copy_level")
      c.startup = Startup::copy_level;
    else
      fail(it->second.line, "startup: unknown value '" + v + "'");
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string(), 0);
  std::ostringstream ss;
  ss << in.rdbuf();
  RunConfig c = parse_config(ss.str());
  if (c.init_case == InitCase::from_snapshot && std::filesystem::path(c.snapshot_path).is_relative())
    c.snapshot_path = (path.parent_path() / c.snapshot_path).string();
  return c;
}

}  // namespace macsav
