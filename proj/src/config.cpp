#include "mcbf/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace mcbf {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& key, const std::string& why) {
  throw ConfigError(key + ": " + why);
}

void check_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) bad(path.empty() ? "config" : path, "expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      bad(path.empty() ? key : path + "." + key, "unknown key");
    }
  }
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

double as_real(const json& v, const std::string& key) {
  if (!v.is_number()) bad(key, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) bad(key, "must be finite");
  return x;
}

std::uint64_t as_count(const json& v, const std::string& key) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer()) bad(key, "must be nonnegative");
  if (v.is_number_float()) {
    const double x = v.get<double>();
    if (x >= 0.0 && x == std::floor(x) && x < 0x1p63) return static_cast<std::uint64_t>(x);
  }
  bad(key, "expected a nonnegative integer");
}

bool as_bool(const json& v, const std::string& key) {
  if (!v.is_boolean()) bad(key, "expected true or false");
  return v.get<bool>();
}

template <class F>
auto list_of(const json& v, const std::string& key, F&& item) {
  using T = decltype(item(v, key));
  std::vector<T> out;
  if (!v.is_array()) {
    out.push_back(item(v, key));
    return out;
  }
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(item(v[i], key + "[" + std::to_string(i) + "]"));
  }
  return out;
}

InnerSolver as_solver(const json& v, const std::string& key) {
  if (!v.is_string()) bad(key, "expected a solver name");
  const auto s = parse_inner_solver(v.get<std::string>());
  if (!s) bad(key, "unknown solver '" + v.get<std::string>() + "'");
  return *s;
}

std::vector<GridPoint> cartesian(const std::vector<std::size_t>& ns,
                                 const std::vector<std::size_t>& ks,
                                 const std::vector<double>& gammas) {
  std::vector<GridPoint> grid;
  for (std::size_t n : ns) {
    for (std::size_t k : ks) {
      for (double g : gammas) grid.push_back({n, k, g});
    }
  }
  return grid;
}

template <class T, class F>
std::vector<T> distinct(const std::vector<GridPoint>& grid, F&& field) {
  std::vector<T> out;
  for (const auto& p : grid) {
    const T x = field(p);
    if (std::find(out.begin(), out.end(), x) == out.end()) out.push_back(x);
  }
  return out;
}

void parse_grid(const json& root, ExperimentConfig& cfg) {
  const bool has_grid = root.contains("grid");
  const bool has_sweep = root.contains("sweep");
  if (has_grid && has_sweep) bad("grid", "give either grid or sweep, not both");
  auto size_item = [](const json& v, const std::string& key) {
    return static_cast<std::size_t>(as_count(v, key));
  };
  if (has_grid) {
    const json& g = root.at("grid");
    if (!g.is_array()) bad("grid", "expected a list of {n, k, gamma_db} objects");
    cfg.grid.clear();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const std::string path = "grid[" + std::to_string(i) + "]";
      check_keys(g[i], path, {"n", "k", "gamma_db"});
      for (const char* key : {"n", "k", "gamma_db"}) {
        if (!g[i].contains(key)) bad(join(path, key), "missing");
      }
      cfg.grid.push_back({size_item(g[i]["n"], join(path, "n")),
                          size_item(g[i]["k"], join(path, "k")),
                          as_real(g[i]["gamma_db"], join(path, "gamma_db"))});
    }
  }
  if (has_sweep) {
    const json& s = root.at("sweep");
    check_keys(s, "sweep", {"n", "k", "gamma_db"});
    for (const char* key : {"n", "k", "gamma_db"}) {
      if (!s.contains(key)) bad(join("sweep", key), "missing");
    }
    cfg.grid = cartesian(list_of(s["n"], "sweep.n", size_item),
                         list_of(s["k"], "sweep.k", size_item),
                         list_of(s["gamma_db"], "sweep.gamma_db", as_real));
  }
}

std::vector<std::uint64_t> parse_seeds(const json& v) {
  if (v.is_string()) {
    try {
      return parse_seed_list(v.get<std::string>());
    } catch (const ConfigError& e) {
      bad("seeds", e.what());
    }
  }
  if (v.is_object()) {
    check_keys(v, "seeds", {"first", "count"});
    if (!v.contains("count")) bad("seeds.count", "missing");
    const std::uint64_t first = v.contains("first") ? as_count(v["first"], "seeds.first") : 0;
    const std::uint64_t count = as_count(v["count"], "seeds.count");
    if (count > 1'000'000) bad("seeds.count", "at most 1000000 seeds");
    std::vector<std::uint64_t> out(count);
    for (std::uint64_t i = 0; i < count; ++i) out[i] = first + i;
    return out;
  }
  return list_of(v, "seeds", as_count);
}

GramMode parse_gram_mode(const json& v, const std::string& key) {
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "auto") return GramMode::automatic;
    if (s == "precompute") return GramMode::precompute;
    if (s == "matrix_free") return GramMode::matrix_free;
  }
  bad(key, "expected \"auto\", \"precompute\" or \"matrix_free\"");
}

}  // namespace

ExperimentConfig default_config() {
  ExperimentConfig cfg;
  cfg.grid = {{200, 50, 10.0}};
  cfg.seeds = {0};
  cfg.solvers = {InnerSolver::arcd};
  return cfg;
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open config file");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path.string());
}

ExperimentConfig parse_config_text(std::string_view text, const std::string& source) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(source + ": malformed JSON (" + e.what() + ")");
  }
  ExperimentConfig cfg = default_config();
  check_keys(root, "", {"grid", "sweep", "seeds", "solvers", "channel", "mm", "inner", "admm",
                        "output", "threads"});
  parse_grid(root, cfg);
  if (root.contains("seeds")) cfg.seeds = parse_seeds(root["seeds"]);
  if (root.contains("solvers")) cfg.solvers = list_of(root["solvers"], "solvers", as_solver);

  if (root.contains("channel")) {
    const json& c = root["channel"];
    check_keys(c, "channel", {"pathloss_db", "noise_dbm"});
    if (c.contains("pathloss_db")) cfg.pathloss_db = as_real(c["pathloss_db"], "channel.pathloss_db");
    if (c.contains("noise_dbm")) cfg.noise_dbm = as_real(c["noise_dbm"], "channel.noise_dbm");
  }
  if (root.contains("mm")) {
    const json& m = root["mm"];
    check_keys(m, "mm", {"max_iters", "rel_tol", "gram_mode", "gram_budget"});
    if (m.contains("max_iters")) cfg.mm.mm_max_iters = as_count(m["max_iters"], "mm.max_iters");
    if (m.contains("rel_tol")) cfg.mm.mm_rel_tol = as_real(m["rel_tol"], "mm.rel_tol");
    if (m.contains("gram_mode")) cfg.mm.gram_mode = parse_gram_mode(m["gram_mode"], "mm.gram_mode");
    if (m.contains("gram_budget")) cfg.mm.gram_budget = as_count(m["gram_budget"], "mm.gram_budget");
  }
  if (root.contains("inner")) {
    const json& i = root["inner"];
    check_keys(i, "inner", {"tol", "max_iters", "batch_frac", "cache_refresh_period", "threads"});
    if (i.contains("tol")) cfg.mm.inner.tol = as_real(i["tol"], "inner.tol");
    if (i.contains("max_iters")) cfg.mm.inner.max_iters = as_count(i["max_iters"], "inner.max_iters");
    if (i.contains("batch_frac")) cfg.batch_frac = as_real(i["batch_frac"], "inner.batch_frac");
    if (i.contains("cache_refresh_period")) {
      cfg.mm.inner.cache_refresh_period =
          as_count(i["cache_refresh_period"], "inner.cache_refresh_period");
    }
    if (i.contains("threads")) {
      const auto t = as_count(i["threads"], "inner.threads");
      if (t < 1 || t > 1024) bad("inner.threads", "must be in [1, 1024]");
      cfg.mm.inner.threads = cfg.mm.admm.threads = static_cast<unsigned>(t);
    }
  }
  if (root.contains("admm")) {
    const json& a = root["admm"];
    check_keys(a, "admm", {"tol", "max_iters", "penalty"});
    if (a.contains("tol")) cfg.mm.admm.tol = as_real(a["tol"], "admm.tol");
    if (a.contains("max_iters")) cfg.mm.admm.max_iters = as_count(a["max_iters"], "admm.max_iters");
    if (a.contains("penalty")) cfg.mm.admm.penalty = as_real(a["penalty"], "admm.penalty");
  }
  if (root.contains("output")) {
    const json& o = root["output"];
    check_keys(o, "output", {"dir", "traces", "timing"});
    if (o.contains("dir")) {
      if (!o["dir"].is_string()) bad("output.dir", "expected a path string");
      cfg.out_dir = o["dir"].get<std::string>();
    }
    if (o.contains("traces")) cfg.traces = as_bool(o["traces"], "output.traces");
    if (o.contains("timing")) cfg.timing = as_bool(o["timing"], "output.timing");
  }
  if (root.contains("threads")) {
    const auto t = as_count(root["threads"], "threads");
    if (t < 1 || t > 1024) bad("threads", "must be in [1, 1024]");
    cfg.threads = static_cast<unsigned>(t);
  }
  validate(cfg);
  return cfg;
}

void apply_overrides(ExperimentConfig& cfg, const ConfigOverrides& o) {
  if (o.solvers) cfg.solvers = *o.solvers;
  if (o.n || o.k || o.gamma_db) {
    const auto ns = o.n ? *o.n : distinct<std::size_t>(cfg.grid, [](const GridPoint& p) { return p.n; });
    const auto ks = o.k ? *o.k : distinct<std::size_t>(cfg.grid, [](const GridPoint& p) { return p.k; });
    const auto gs = o.gamma_db ? *o.gamma_db
                               : distinct<double>(cfg.grid, [](const GridPoint& p) { return p.gamma_db; });
    cfg.grid = cartesian(ns, ks, gs);
  }
  if (o.seeds) cfg.seeds = *o.seeds;
  if (o.out_dir) cfg.out_dir = *o.out_dir;
  if (o.mm_iters) cfg.mm.mm_max_iters = *o.mm_iters;
  if (o.inner_tol) cfg.mm.inner.tol = *o.inner_tol;
  if (o.batch_frac) cfg.batch_frac = *o.batch_frac;
  if (o.threads) cfg.threads = *o.threads;
  if (o.timing) cfg.timing = *o.timing;
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.grid.empty()) bad("grid", "must not be empty");
  for (std::size_t i = 0; i < cfg.grid.size(); ++i) {
    const auto& p = cfg.grid[i];
    const std::string path = "grid[" + std::to_string(i) + "]";
    if (p.n < 1) bad(path + ".n", "must be at least 1");
    if (p.k < 1) bad(path + ".k", "must be at least 1");
    if (!std::isfinite(p.gamma_db)) bad(path + ".gamma_db", "must be finite");
    if (p.n * p.k > (std::size_t{1} << 31)) bad(path, "N * K too large");
  }
  if (cfg.seeds.empty()) bad("seeds", "must not be empty");
  if (cfg.solvers.empty()) bad("solvers", "must not be empty");
  if (std::set<InnerSolver>(cfg.solvers.begin(), cfg.solvers.end()).size() != cfg.solvers.size()) {
    bad("solvers", "duplicate solver");
  }
  if (std::find(cfg.solvers.begin(), cfg.solvers.end(), InnerSolver::oracle) != cfg.solvers.end()) {
    for (const auto& p : cfg.grid) {
      if (p.k > kOracleMaxUsers) {
        bad("solvers", "oracle requires K ≤ 14 (grid has K = " + std::to_string(p.k) +
                           "; use \"reference\" for larger K)");
      }
    }
  }
  if (!std::isfinite(cfg.pathloss_db)) bad("channel.pathloss_db", "must be finite");
  if (!std::isfinite(cfg.noise_dbm)) bad("channel.noise_dbm", "must be finite");
  if (cfg.mm.mm_max_iters < 1) bad("mm.max_iters", "must be at least 1");
  if (!(cfg.mm.mm_rel_tol >= 0.0)) bad("mm.rel_tol", "must be nonnegative");
  if (cfg.mm.gram_budget < 1) bad("mm.gram_budget", "must be positive");
  if (!(cfg.mm.inner.tol > 0.0)) bad("inner.tol", "must be positive");
  if (cfg.mm.inner.max_iters < 1) bad("inner.max_iters", "must be at least 1");
  if (!(cfg.batch_frac > 0.0 && cfg.batch_frac <= 1.0)) bad("inner.batch_frac", "must be in (0, 1]");
  if (cfg.mm.inner.cache_refresh_period < 1) bad("inner.cache_refresh_period", "must be at least 1");
  if (!(cfg.mm.admm.tol > 0.0)) bad("admm.tol", "must be positive");
  if (cfg.mm.admm.max_iters < 1) bad("admm.max_iters", "must be at least 1");
  if (!(cfg.mm.admm.penalty >= 0.0)) bad("admm.penalty", "must be nonnegative (0 = 2/sqrt(N))");
  if (cfg.threads < 1) bad("threads", "must be at least 1");
  if (cfg.out_dir.empty()) bad("output.dir", "must not be empty");
}

std::vector<std::uint64_t> parse_seed_list(std::string_view text) {
  std::vector<std::uint64_t> out;
  auto number = [&](std::string_view s) {
    std::uint64_t x = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
      throw ConfigError("bad seed '" + std::string(s) + "'");
    }
    return x;
  };
  while (!text.empty()) {
    const auto comma = text.find(',');
    const std::string_view item = text.substr(0, comma);
    const auto dash = item.find('-');
    if (dash == std::string_view::npos) {
      out.push_back(number(item));
    } else {
      const std::uint64_t lo = number(item.substr(0, dash));
      const std::uint64_t hi = number(item.substr(dash + 1));
      if (hi < lo || hi - lo >= 1'000'000) throw ConfigError("bad seed range '" + std::string(item) + "'");
      for (std::uint64_t s = lo; s <= hi; ++s) out.push_back(s);
    }
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
    if (text.empty()) throw ConfigError("trailing comma in seed list");
  }
  if (out.empty()) throw ConfigError("empty seed list");
  return out;
}

std::vector<InnerSolver> parse_solver_list(std::string_view text) {
  std::vector<InnerSolver> out;
  while (true) {
    const auto comma = text.find(',');
    const std::string_view item = text.substr(0, comma);
    const auto s = parse_inner_solver(item);
    if (!s) throw ConfigError("unknown solver '" + std::string(item) + "'");
    out.push_back(*s);
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return out;
}

}  // namespace mcbf
