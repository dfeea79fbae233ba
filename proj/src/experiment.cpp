#include "mcbf/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <condition_variable>
#include <fstream>
#include <istream>
#include <limits>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

namespace mcbf {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Job {
  GridPoint point;
  std::uint64_t seed;
  InnerSolver solver;
};

std::vector<Job> enumerate_jobs(const ExperimentConfig& cfg) {
  std::vector<Job> jobs;
  for (const auto& p : cfg.grid) {
    for (std::uint64_t seed : cfg.seeds) {
      for (InnerSolver s : cfg.solvers) jobs.push_back({p, seed, s});
    }
  }
  return jobs;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string::npos) return out;
    start = pos + 1;
  }
}

double parse_real(const std::string& s, std::size_t line, const char* column) {
  double x = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    fail(ErrorCode::invalid_argument,
         "rows.csv line " + std::to_string(line) + ": bad " + column + " '" + s + "'");
  }
  return x;
}

std::uint64_t parse_uint(const std::string& s, std::size_t line, const char* column) {
  std::uint64_t x = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    fail(ErrorCode::invalid_argument,
         "rows.csv line " + std::to_string(line) + ": bad " + column + " '" + s + "'");
  }
  return x;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) fail(ErrorCode::invalid_argument, "cannot write " + path.string());
}

void write_traces(const ExperimentConfig& cfg, const Job& job, const RunOutcome& outcome) {
  const auto dir = cfg.out_dir / trace_dir(job.point);
  std::filesystem::create_directories(dir);
  const std::string suffix = outcome.row.solver + "_" + std::to_string(job.seed) + ".csv";
  std::ofstream inner(dir / ("trace_" + suffix), std::ios::binary);
  write_inner_trace(inner, outcome.report);
  std::ofstream power(dir / ("power_" + suffix), std::ios::binary);
  write_power_trace(power, outcome.report);
}

}  // namespace

ChannelParams channel_params(const ExperimentConfig& cfg, const GridPoint& point) {
  ChannelParams p;
  p.n_antennas = point.n;
  p.n_users = point.k;
  p.gamma_db = point.gamma_db;
  p.pathloss_db = cfg.pathloss_db;
  p.noise_dbm = cfg.noise_dbm;
  return p;
}

MmOptions mm_options(const ExperimentConfig& cfg, const GridPoint& point, InnerSolver solver) {
  MmOptions o = cfg.mm;
  o.inner_solver = solver;
  o.inner.batch_size = default_batch_size(point.k, cfg.batch_frac);
  return o;
}

RunOutcome run_one(const ExperimentConfig& cfg, const GridPoint& point, std::uint64_t seed,
                   InnerSolver solver) {
  RunOutcome out;
  out.row.solver = to_string(solver);
  out.row.n = point.n;
  out.row.k = point.k;
  out.row.gamma_db = point.gamma_db;
  out.row.seed = seed;
  try {
    out.instance =
        std::make_shared<const ProblemInstance>(generate_instance(channel_params(cfg, point), seed));
    out.report = mm_solve(*out.instance, mm_options(cfg, point, solver), seed);
    if (out.report.aborted) out.error = out.report.diagnostic;
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  out.row.mm_iters = out.report.mm_iterations;
  out.row.inner_iters = out.report.total_inner_iterations;
  out.row.wall_s = cfg.timing ? out.report.wall_seconds : 0.0;
  finalize_row(out);
  return out;
}

void finalize_row(RunOutcome& out) {
  ResultRow& row = out.row;
  const Beamformer& v = out.report.beamformer;
  if (!out.instance || v.size() != out.instance->n_antennas()) {
    row.power_mw = row.power_dbm = row.min_margin = kNaN;
    row.converged = false;
    return;
  }
  const FeasibilityReport check = is_feasible(*out.instance, v, kFeasibilitySlack);
  row.power_mw = v.power();
  row.power_dbm = row.power_mw > 0.0 ? linear_to_db(row.power_mw) : kNaN;
  row.min_margin = check.min_margin;
  row.converged = out.error.empty() && !out.report.aborted && check.feasible;
}

std::vector<ResultRow> run_experiments(const ExperimentConfig& cfg,
                                       const std::function<void(const RunOutcome&)>& on_row) {
  validate(cfg);
  const std::vector<Job> jobs = enumerate_jobs(cfg);
  std::filesystem::create_directories(cfg.out_dir);
  std::ofstream rows_file(cfg.out_dir / "rows.csv", std::ios::binary);
  if (!rows_file) fail(ErrorCode::invalid_argument, "cannot write " + (cfg.out_dir / "rows.csv").string());
  rows_file << kRowsHeader << '\n';

  std::vector<std::optional<RunOutcome>> slots(jobs.size());
  std::mutex mutex;
  std::condition_variable ready;
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};

  auto worker = [&] {
    while (!stop) {
      const std::size_t i = next++;
      if (i >= jobs.size()) return;
      RunOutcome out = run_one(cfg, jobs[i].point, jobs[i].seed, jobs[i].solver);
      {
        std::lock_guard lock(mutex);
        slots[i] = std::move(out);
      }
      ready.notify_all();
    }
  };
  const std::size_t n_workers = std::min<std::size_t>(cfg.threads, jobs.size());
  std::vector<std::jthread> workers;
  for (std::size_t w = 0; w < n_workers; ++w) workers.emplace_back(worker);

  std::vector<ResultRow> rows;
  try {
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      RunOutcome out;
      {
        std::unique_lock lock(mutex);
        ready.wait(lock, [&] { return slots[i].has_value(); });
        out = std::move(*slots[i]);
        slots[i].reset();
      }
      finalize_row(out);
      write_row(rows_file, out.row);
      rows_file.flush();
      if (cfg.traces) write_traces(cfg, jobs[i], out);
      if (on_row) on_row(out);
      rows.push_back(out.row);
    }
  } catch (...) {
    stop = true;
    throw;
  }
  workers.clear();

  const SummaryTables tables = emit_summary(rows);
  write_file(cfg.out_dir / "summary.csv", tables.summary_csv);
  write_file(cfg.out_dir / "plotdata.csv", tables.plot_csv);
  return rows;
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

void write_row(std::ostream& out, const ResultRow& r) {
  out << r.solver << ',' << r.n << ',' << r.k << ',' << format_double(r.gamma_db) << ',' << r.seed
      << ',' << format_double(r.power_mw) << ',' << format_double(r.power_dbm) << ','
      << r.mm_iters << ',' << r.inner_iters << ',' << format_double(r.wall_s) << ','
      << format_double(r.min_margin) << ',' << (r.converged ? "true" : "false") << '\n';
}

void write_rows_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  out << kRowsHeader << '\n';
  for (const auto& r : rows) write_row(out, r);
}

std::vector<ResultRow> parse_rows_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kRowsHeader) {
    fail(ErrorCode::invalid_argument, "rows.csv: missing or unexpected header");
  }
  std::vector<ResultRow> rows;
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 12) {
      fail(ErrorCode::invalid_argument,
           "rows.csv line " + std::to_string(number) + ": expected 12 fields");
    }
    ResultRow r;
    r.solver = f[0];
    r.n = parse_uint(f[1], number, "n");
    r.k = parse_uint(f[2], number, "k");
    r.gamma_db = parse_real(f[3], number, "gamma_db");
    r.seed = parse_uint(f[4], number, "seed");
    r.power_mw = parse_real(f[5], number, "power_mw");
    r.power_dbm = parse_real(f[6], number, "power_dbm");
    r.mm_iters = parse_uint(f[7], number, "mm_iters");
    r.inner_iters = parse_uint(f[8], number, "inner_iters");
    r.wall_s = parse_real(f[9], number, "wall_s");
    r.min_margin = parse_real(f[10], number, "min_margin");
    if (f[11] != "true" && f[11] != "false") {
      fail(ErrorCode::invalid_argument,
           "rows.csv line " + std::to_string(number) + ": bad converged '" + f[11] + "'");
    }
    r.converged = f[11] == "true";
    rows.push_back(std::move(r));
  }
  return rows;
}

SummaryTables emit_summary(const std::vector<ResultRow>& rows) {
  if (rows.empty()) fail(ErrorCode::invalid_argument, "emit_summary: no rows");

  struct Group {
    const ResultRow* key;
    std::vector<const ResultRow*> members;
  };
  std::vector<Group> groups;
  for (const auto& r : rows) {
    auto it = std::find_if(groups.begin(), groups.end(), [&](const Group& g) {
      return g.key->n == r.n && g.key->k == r.k && g.key->gamma_db == r.gamma_db &&
             g.key->solver == r.solver;
    });
    if (it == groups.end()) {
      groups.push_back({&r, {}});
      it = groups.end() - 1;
    }
    it->members.push_back(&r);
  }

  std::ostringstream summary, plot;
  summary << "n,k,gamma_db,solver,runs,converged,mean_power_mw,std_power_mw,mean_power_dbm,"
             "min_power_dbm,max_power_dbm,mean_wall_s,mean_mm_iters,mean_inner_iters\n";
  plot << "k,solver,mean_power_dbm,mean_time_s\n";
  for (const auto& g : groups) {
    std::size_t count = 0;
    double sum_mw = 0.0, sum_t = 0.0, sum_mm = 0.0, sum_inner = 0.0;
    double lo = kNaN, hi = kNaN;
    for (const ResultRow* r : g.members) {
      if (!r->converged) continue;
      ++count;
      sum_mw += r->power_mw;
      sum_t += r->wall_s;
      sum_mm += static_cast<double>(r->mm_iters);
      sum_inner += static_cast<double>(r->inner_iters);
      lo = count == 1 ? r->power_dbm : std::min(lo, r->power_dbm);
      hi = count == 1 ? r->power_dbm : std::max(hi, r->power_dbm);
    }
    const double c = static_cast<double>(count);
    const double mean_mw = count ? sum_mw / c : kNaN;
    double var = 0.0;
    for (const ResultRow* r : g.members) {
      if (r->converged) var += (r->power_mw - mean_mw) * (r->power_mw - mean_mw);
    }
    const double std_mw = count > 1 ? std::sqrt(var / (c - 1.0)) : count ? 0.0 : kNaN;
    const double mean_dbm = count ? linear_to_db(mean_mw) : kNaN;
    const double mean_t = count ? sum_t / c : kNaN;
    const auto& k = *g.key;
    summary << k.n << ',' << k.k << ',' << format_double(k.gamma_db) << ',' << k.solver << ','
            << g.members.size() << ',' << count << ',' << format_double(mean_mw) << ','
            << format_double(std_mw) << ',' << format_double(mean_dbm) << ','
            << format_double(lo) << ',' << format_double(hi) << ',' << format_double(mean_t)
            << ',' << format_double(count ? sum_mm / c : kNaN) << ','
            << format_double(count ? sum_inner / c : kNaN) << '\n';
    plot << k.k << ',' << k.solver << ',' << format_double(mean_dbm) << ','
         << format_double(mean_t) << '\n';
  }
  return {summary.str(), plot.str()};
}

std::vector<std::size_t> trace_indices(std::size_t length, std::size_t max_points) {
  std::vector<std::size_t> idx;
  if (length <= max_points || max_points < 2) {
    idx.resize(length);
    for (std::size_t i = 0; i < length; ++i) idx[i] = i;
    return idx;
  }
  // Geometric spacing in (i + 1); duplicates from the dense head collapse.
  const double ratio = std::log(static_cast<double>(length)) / static_cast<double>(max_points - 1);
  for (std::size_t j = 0; j < max_points; ++j) {
    auto i = static_cast<std::size_t>(std::llround(std::exp(ratio * static_cast<double>(j)))) - 1;
    i = std::min(i, length - 1);
    if (idx.empty() || i > idx.back()) idx.push_back(i);
  }
  if (idx.back() != length - 1) idx.push_back(length - 1);
  return idx;
}

void write_inner_trace(std::ostream& out, const MmReport& report) {
  std::vector<std::pair<std::size_t, double>> points;
  std::size_t offset = 0;
  for (const auto& r : report.inner_reports) {
    for (std::size_t j = 0; j < r.objective_trace.size(); ++j) {
      points.emplace_back(offset + j, r.objective_trace[j]);
    }
    offset += r.iterations;
  }
  out << "iter,objective\n";
  for (std::size_t i : trace_indices(points.size())) {
    out << points[i].first << ',' << format_double(points[i].second) << '\n';
  }
}

void write_power_trace(std::ostream& out, const MmReport& report) {
  out << "iter,objective\n";
  for (std::size_t i = 0; i < report.power_trace.size(); ++i) {
    out << i << ',' << format_double(report.power_trace[i]) << '\n';
  }
}

std::filesystem::path trace_dir(const GridPoint& p) {
  return std::filesystem::path("traces") /
         ("n" + std::to_string(p.n) + "_k" + std::to_string(p.k) + "_g" + format_double(p.gamma_db));
}

}  // namespace mcbf
