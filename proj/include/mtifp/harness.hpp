#pragma once

// Convergence sweeps against stored fine-resolution references.
//
// A sweep fixes one discretization parameter and refines the other: h on the
// spatial axis (rates in base 2), tau on the temporal axis (rates in base 4).
// Errors are H^2 norms at T of (coarse run - reference), with the coarse
// spectral solution zero-padded onto the reference grid.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "mtifp/errors.hpp"
#include "mtifp/oracle.hpp"
#include "mtifp/solver.hpp"
#include "mtifp/spectral.hpp"

namespace mtifp {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr const char* kReportHeader = "# mti-fp report v1";

enum class Axis { spatial, temporal };

inline const char* to_string(Axis a) { return a == Axis::spatial ? "spatial" : "temporal"; }

/// Refinement factor between neighbouring columns.
inline double refinement_factor(Axis a) { return a == Axis::spatial ? 2.0 : 4.0; }

inline double error_norm(const FieldHat& run, const FieldHat& reference) {
  const auto& g = run.grid();
  const auto& r = reference.grid();
  if (g.a() != r.a() || g.b() != r.b()) {
    throw ShapeError("error_norm: run and reference live on different intervals");
  }
  if (r.size() % g.size() != 0) {
    throw ShapeError("error_norm: N = " + std::to_string(g.size()) +
                     " does not divide the reference N = " + std::to_string(r.size()));
  }
  FieldHat diff = resample(run, r.size());
  diff -= reference;
  return sobolev_norm(diff, 2);
}

inline double error_norm(const SolverState& run, const SolverState& reference) {
  return error_norm(run.u, reference.u);
}

/// log(e_coarse / e_fine) / log(factor); the first entry has no predecessor.
inline std::vector<double> convergence_rates(const std::vector<double>& errors, double factor) {
  std::vector<double> rates(errors.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t k = 1; k < errors.size(); ++k) {
    rates[k] = std::log(errors[k - 1] / errors[k]) / std::log(factor);
  }
  return rates;
}

struct ReportRow {
  double eps = 0.0;
  std::vector<double> errors;
  std::vector<double> rates;
};

struct ConvergenceReport {
  Axis axis = Axis::temporal;
  std::vector<double> resolutions;
  std::vector<ReportRow> rows;
  /// eps is NaN here
  ReportRow uniform;
  std::vector<std::pair<std::string, std::string>> metadata;
  /// "eps=..,resolution=..: message" for cells that failed; their error is NaN
  std::vector<std::string> failures;

  std::string meta(const std::string& key) const {
    for (const auto& [k, v] : metadata) {
      if (k == key) return v;
    }
    return {};
  }
};

/// Columnwise max over rows. A failed cell (NaN) poisons its column.
inline ReportRow uniform_row(const std::vector<ReportRow>& rows, std::size_t columns,
                             double factor) {
  ReportRow u;
  u.eps = std::numeric_limits<double>::quiet_NaN();
  u.errors.assign(columns, rows.empty() ? std::numeric_limits<double>::quiet_NaN() : 0.0);
  for (const auto& row : rows) {
    for (std::size_t k = 0; k < columns; ++k) {
      const double e = row.errors.at(k);
      if (std::isnan(e) || std::isnan(u.errors[k])) {
        u.errors[k] = std::numeric_limits<double>::quiet_NaN();
      } else {
        u.errors[k] = std::max(u.errors[k], e);
      }
    }
  }
  u.rates = convergence_rates(u.errors, factor);
  return u;
}

// ---------------------------------------------------------------------------
// Sweep specification and presets

struct SweepSpec {
  std::string name = "custom";
  Axis axis = Axis::temporal;
  std::vector<double> eps_values;
  /// h on the spatial axis, tau on the temporal axis, coarse to fine
  std::vector<double> resolutions;
  double fixed_tau = 5e-6;
  double fixed_h = 0.125;
  int reference_n = 1024;
  double reference_tau = 5e-6;
};

inline std::vector<double> table_eps_values() {
  std::vector<double> out;
  for (int k : {0, 1, 2, 3, 4, 5, 7, 9, 11, 13}) out.push_back(std::ldexp(0.5, -k));
  return out;
}

inline std::vector<std::string> preset_names() {
  return {"table1", "table1-lite", "table2", "table2-lite"};
}

inline SweepSpec preset(const std::string& name) {
  SweepSpec s;
  s.name = name;
  if (name == "table1" || name == "table1-lite") {
    s.axis = Axis::spatial;
    s.resolutions = {1.0, 0.5, 0.25, 0.125};
    if (name == "table1") {
      s.eps_values = table_eps_values();
      s.fixed_tau = 5e-6;
    } else {
      s.eps_values = {0.5, std::ldexp(0.5, -9)};
      s.fixed_tau = 1e-5;
    }
    return s;
  }
  if (name == "table2" || name == "table2-lite") {
    s.axis = Axis::temporal;
    s.fixed_h = 0.125;
    const int last = name == "table2" ? 12 : 10;
    for (int k = 0; k <= last; k += 2) s.resolutions.push_back(std::ldexp(0.2, -k));
    if (name == "table2") {
      s.eps_values = table_eps_values();
    } else {
      s.eps_values = {0.5, std::ldexp(0.5, -4), std::ldexp(0.5, -9), std::ldexp(0.5, -13)};
    }
    return s;
  }
  throw ConfigError("unknown preset '" + name + "'");
}

inline int grid_points(const GridSpec& grid, double h) {
  const double n = (grid.b - grid.a) / h;
  const double r = std::round(n);
  if (!(h > 0.0) || std::abs(n - r) > 1e-9 * n) {
    throw ConfigError("h = " + shortest(h) + " does not divide the interval");
  }
  return static_cast<int>(r);
}

inline void validate(const SweepSpec& s, const SolverConfig& base) {
  if (s.eps_values.empty()) throw ConfigError("sweep.eps: at least one value required");
  if (s.resolutions.empty()) throw ConfigError("sweep.resolutions: at least one value required");
  for (double e : s.eps_values) check_eps(e);
  if (s.reference_n < 4 || s.reference_n % 2 != 0) {
    throw ConfigError("sweep.reference_n: must be even and >= 4");
  }
  (void)step_count(base.t_final, s.reference_tau);
  auto check_n = [&](int n, const std::string& where) {
    if (n < 4 || n % 2 != 0) throw ConfigError(where + ": grid size must be even and >= 4");
    if (s.reference_n % n != 0) {
      throw ConfigError(where + ": N = " + std::to_string(n) +
                        " does not divide the reference N = " + std::to_string(s.reference_n));
    }
  };
  if (s.axis == Axis::spatial) {
    (void)step_count(base.t_final, s.fixed_tau);
    for (double h : s.resolutions) check_n(grid_points(base.grid, h), "sweep.resolutions");
  } else {
    check_n(grid_points(base.grid, s.fixed_h), "sweep.fixed_h");
    for (double tau : s.resolutions) {
      try {
        (void)step_count(base.t_final, tau);
      } catch (const ConfigError& e) {
        throw ConfigError(std::string("sweep.resolutions: ") + e.what());
      }
    }
  }
}

/// Reference scenario for one eps under the base configuration.
inline ReferenceSpec reference_spec(const SweepSpec& s, const SolverConfig& base, double eps) {
  ReferenceSpec r;
  r.eps = eps;
  r.grid = {base.grid.a, base.grid.b, s.reference_n};
  r.tau = s.reference_tau;
  r.t_final = base.t_final;
  r.lambda = base.lambda;
  r.data = base.data;
  r.phi2_convention = base.phi2_convention;
  return r;
}

/// Scenarios other than the default one are kept in their own subdirectory so
/// the per-(eps, N) file names never collide.
inline ReferenceStore scenario_store(const ReferenceStore& store, const ReferenceSpec& r) {
  const ReferenceSpec d;
  std::string tag;
  auto add = [&](const std::string& s) { tag += (tag.empty() ? "" : "_") + s; };
  if (r.grid.a != d.grid.a || r.grid.b != d.grid.b) {
    add("x" + shortest(r.grid.a) + ":" + shortest(r.grid.b));
  }
  if (r.tau != d.tau) add("tau" + shortest(r.tau));
  if (r.t_final != d.t_final) add("T" + shortest(r.t_final));
  if (r.lambda != d.lambda) add("lambda" + shortest(r.lambda));
  if (r.data != d.data) add("data" + std::to_string(static_cast<int>(r.data)));
  if (r.phi2_convention != d.phi2_convention) add("literal");
  if (tag.empty()) return store;
  return ReferenceStore(store.directory() / tag);
}

// ---------------------------------------------------------------------------
// Execution

/// Runs job(0..count-1) on at most `threads` workers (the caller is one).
inline void parallel_for(std::size_t count, int threads,
                         const std::function<void(std::size_t)>& job) {
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  std::atomic<std::size_t> next{0};
  auto drain = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < count;) job(i);
  };
  std::vector<std::jthread> pool;
  for (std::size_t t = 1; t < std::min(workers, count); ++t) pool.emplace_back(drain);
  drain();
}

inline int default_threads() {
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

inline const char* to_string(InitialData d) {
  switch (d) {
    case InitialData::gaussian_pair: return "gaussian_pair";
    case InitialData::real_gaussian: return "real_gaussian";
    case InitialData::zero: return "zero";
    case InitialData::tabulated: return "tabulated";
  }
  return "?";
}

inline const char* to_string(Phi2Convention c) {
  return c == Phi2Convention::eps_independent ? "eps_independent" : "paper_section5_literal";
}

inline const char* to_string(VelocityFilter f) {
  return f == VelocityFilter::sin ? "sin" : "unfiltered";
}

inline std::vector<std::pair<std::string, std::string>> sweep_metadata(const SweepSpec& s,
                                                                      const SolverConfig& base) {
  std::vector<std::pair<std::string, std::string>> m;
  m.emplace_back("scenario", s.name);
  m.emplace_back("axis", to_string(s.axis));
  m.emplace_back("rate_base", shortest(refinement_factor(s.axis)));
  if (s.axis == Axis::spatial) {
    m.emplace_back("tau", shortest(s.fixed_tau));
  } else {
    m.emplace_back("h", shortest(s.fixed_h));
  }
  m.emplace_back("interval", shortest(base.grid.a) + ":" + shortest(base.grid.b));
  m.emplace_back("t_final", shortest(base.t_final));
  m.emplace_back("lambda", shortest(base.lambda));
  m.emplace_back("data", to_string(base.data));
  m.emplace_back("phi2_convention", to_string(base.phi2_convention));
  m.emplace_back("filter", to_string(base.filter));
  m.emplace_back("dealias", base.dealias ? "true" : "false");
  m.emplace_back("real_fast_path", base.real_fast_path ? "true" : "false");
  m.emplace_back("reference", "mti-fp N=" + std::to_string(s.reference_n) +
                                  " tau=" + shortest(s.reference_tau));
  m.emplace_back("norm", "H2 weight 1+mu^2+mu^4; coarse zero-padded to reference grid");
  m.emplace_back("version", std::string("mtifp ") + kVersion);
  return m;
}

/// Wall-clock bookkeeping kept out of the report itself.
struct SweepTiming {
  std::string started;
  std::string finished;
  double seconds = 0.0;
  std::vector<double> reference_seconds;
  /// rows x columns
  std::vector<std::vector<double>> cell_seconds;
};

inline std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

inline SolverConfig cell_config(const SweepSpec& s, const SolverConfig& base, double eps,
                                double resolution) {
  SolverConfig c = base;
  c.eps = eps;
  if (s.axis == Axis::spatial) {
    c.grid.n = grid_points(base.grid, resolution);
    c.tau = s.fixed_tau;
  } else {
    c.grid.n = grid_points(base.grid, s.fixed_h);
    c.tau = resolution;
  }
  return c;
}

inline ConvergenceReport run_sweep(const SweepSpec& spec, const SolverConfig& base,
                                   const ReferenceStore& store, int threads = 1,
                                   SweepTiming* timing = nullptr) {
  validate(spec, base);
  using Clock = std::chrono::steady_clock;
  const auto t0 = Clock::now();
  SweepTiming local;
  local.started = utc_timestamp();

  const std::size_t rows = spec.eps_values.size();
  const std::size_t cols = spec.resolutions.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();

  std::vector<std::optional<SolverState>> refs(rows);
  std::vector<std::string> ref_errors(rows);
  local.reference_seconds.assign(rows, 0.0);
  parallel_for(rows, threads, [&](std::size_t i) {
    const auto s0 = Clock::now();
    try {
      const auto rs = reference_spec(spec, base, spec.eps_values[i]);
      refs[i] = reference_solution(rs, scenario_store(store, rs));
    } catch (const std::exception& e) {
      ref_errors[i] = e.what();
    }
    local.reference_seconds[i] = std::chrono::duration<double>(Clock::now() - s0).count();
  });

  std::vector<std::vector<double>> errors(rows, std::vector<double>(cols, nan));
  std::vector<std::vector<std::string>> messages(rows, std::vector<std::string>(cols));
  local.cell_seconds.assign(rows, std::vector<double>(cols, 0.0));
  parallel_for(rows * cols, threads, [&](std::size_t job) {
    const std::size_t i = job / cols;
    const std::size_t k = job % cols;
    if (!refs[i]) {
      messages[i][k] = "reference unavailable: " + ref_errors[i];
      return;
    }
    const auto s0 = Clock::now();
    try {
      const auto run = propagate(cell_config(spec, base, spec.eps_values[i], spec.resolutions[k]));
      errors[i][k] = error_norm(run, *refs[i]);
    } catch (const std::exception& e) {
      messages[i][k] = e.what();
    }
    local.cell_seconds[i][k] = std::chrono::duration<double>(Clock::now() - s0).count();
  });

  ConvergenceReport report;
  report.axis = spec.axis;
  report.resolutions = spec.resolutions;
  report.metadata = sweep_metadata(spec, base);
  const double factor = refinement_factor(spec.axis);
  for (std::size_t i = 0; i < rows; ++i) {
    ReportRow row;
    row.eps = spec.eps_values[i];
    row.errors = errors[i];
    row.rates = convergence_rates(row.errors, factor);
    report.rows.push_back(std::move(row));
    for (std::size_t k = 0; k < cols; ++k) {
      if (!messages[i][k].empty()) {
        report.failures.push_back("eps=" + shortest(spec.eps_values[i]) + ",resolution=" +
                                  shortest(spec.resolutions[k]) + ": " + messages[i][k]);
      }
    }
  }
  report.uniform = uniform_row(report.rows, cols, factor);

  local.finished = utc_timestamp();
  local.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  if (timing != nullptr) *timing = std::move(local);
  return report;
}

inline ConvergenceReport run_spatial_sweep(const SweepSpec& spec, const SolverConfig& base,
                                           const ReferenceStore& store, int threads = 1,
                                           SweepTiming* timing = nullptr) {
  if (spec.axis != Axis::spatial) throw ConfigError("run_spatial_sweep: sweep axis is temporal");
  return run_sweep(spec, base, store, threads, timing);
}

inline ConvergenceReport run_temporal_sweep(const SweepSpec& spec, const SolverConfig& base,
                                            const ReferenceStore& store, int threads = 1,
                                            SweepTiming* timing = nullptr) {
  if (spec.axis != Axis::temporal) throw ConfigError("run_temporal_sweep: sweep axis is spatial");
  return run_sweep(spec, base, store, threads, timing);
}

// ---------------------------------------------------------------------------
// CSV

inline std::string format_csv(const ConvergenceReport& r) {
  std::ostringstream os;
  os << kReportHeader << '\n';
  for (const auto& [k, v] : r.metadata) os << "# " << k << ',' << v << '\n';
  os << "eps,resolution,error,rate\n";
  auto emit = [&](const std::string& label, const ReportRow& row) {
    for (std::size_t k = 0; k < r.resolutions.size(); ++k) {
      os << label << ',' << shortest(r.resolutions[k]) << ',' << shortest(row.errors[k]) << ','
         << shortest(row.rates[k]) << '\n';
    }
  };
  for (const auto& row : r.rows) emit(shortest(row.eps), row);
  emit("max", r.uniform);
  return os.str();
}

namespace detail {

inline double parse_double(const std::string& s, std::size_t line) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ConfigError("report line " + std::to_string(line) + ": bad number '" + s + "'");
  }
  return v;
}

inline std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace detail

inline ConvergenceReport parse_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  std::size_t no = 1;
  if (!std::getline(is, line) || line != kReportHeader) {
    throw ConfigError("report: missing '" + std::string(kReportHeader) + "' header");
  }
  ConvergenceReport r;
  bool header_seen = false;
  std::vector<std::pair<std::string, std::vector<std::array<double, 3>>>> groups;
  while (std::getline(is, line)) {
    ++no;
    if (line.empty()) continue;
    if (!header_seen) {
      if (line.rfind("# ", 0) == 0) {
        const auto comma = line.find(',');
        if (comma == std::string::npos) {
          throw ConfigError("report line " + std::to_string(no) + ": metadata needs key,value");
        }
        r.metadata.emplace_back(line.substr(2, comma - 2), line.substr(comma + 1));
        continue;
      }
      if (line != "eps,resolution,error,rate") {
        throw ConfigError("report line " + std::to_string(no) + ": expected column header");
      }
      header_seen = true;
      continue;
    }
    const auto cells = detail::split_commas(line);
    if (cells.size() != 4) {
      throw ConfigError("report line " + std::to_string(no) + ": expected 4 columns");
    }
    if (groups.empty() || groups.back().first != cells[0]) groups.emplace_back(cells[0], std::vector<std::array<double, 3>>{});
    groups.back().second.push_back({detail::parse_double(cells[1], no),
                                    detail::parse_double(cells[2], no),
                                    detail::parse_double(cells[3], no)});
  }
  if (!header_seen) throw ConfigError("report: no data section");
  const std::string axis = r.meta("axis");
  if (axis == "spatial") {
    r.axis = Axis::spatial;
  } else if (axis == "temporal") {
    r.axis = Axis::temporal;
  } else {
    throw ConfigError("report: metadata 'axis' must be spatial or temporal");
  }
  bool have_uniform = false;
  for (const auto& [label, cells] : groups) {
    std::vector<double> res;
    ReportRow row;
    for (const auto& c : cells) {
      res.push_back(c[0]);
      row.errors.push_back(c[1]);
      row.rates.push_back(c[2]);
    }
    if (r.resolutions.empty()) r.resolutions = res;
    if (res.size() != r.resolutions.size() ||
        !std::equal(res.begin(), res.end(), r.resolutions.begin())) {
      throw ConfigError("report: row '" + label + "' has different resolutions");
    }
    if (label == "max") {
      row.eps = std::numeric_limits<double>::quiet_NaN();
      r.uniform = std::move(row);
      have_uniform = true;
    } else {
      row.eps = detail::parse_double(label, 0);
      r.rows.push_back(std::move(row));
    }
  }
  if (!have_uniform) throw ConfigError("report: missing 'max' row");
  return r;
}

/// Timestamps and timings, written next to the CSV.
inline std::string format_sidecar(const ConvergenceReport& r, const SweepTiming& t) {
  nlohmann::json j;
  j["version"] = kVersion;
  j["started"] = t.started;
  j["finished"] = t.finished;
  j["seconds"] = t.seconds;
  j["reference_seconds"] = t.reference_seconds;
  j["cell_seconds"] = t.cell_seconds;
  j["failures"] = r.failures;
  return j.dump(2) + "\n";
}

/// Plain-text table in the usual layout, one error line and one rate line per eps.
inline std::string format_table(const ConvergenceReport& r) {
  std::ostringstream os;
  auto num = [](double v, const char* fmt) {
    char buf[32];
    std::snprintf(buf, sizeof buf, fmt, v);
    return std::string(buf);
  };
  os << std::left << std::setw(14) << (r.axis == Axis::spatial ? "eps \\ h" : "eps \\ tau");
  for (double res : r.resolutions) os << std::setw(11) << num(res, "%.4g");
  os << '\n';
  auto emit = [&](const std::string& label, const ReportRow& row) {
    os << std::setw(14) << label;
    for (double e : row.errors) os << std::setw(11) << num(e, "%.2E");
    os << '\n' << std::setw(14) << "  rate";
    for (double q : row.rates) os << std::setw(11) << (std::isnan(q) ? "---" : num(q, "%.2f"));
    os << '\n';
  };
  for (const auto& row : r.rows) emit(num(row.eps, "%.6g"), row);
  emit("max over eps", r.uniform);
  for (const auto& f : r.failures) os << "failed: " << f << '\n';
  return os.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw StoreError("cannot write " + path.string());
  out << text;
  if (!out) throw StoreError("write failed for " + path.string());
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StoreError("cannot read " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// ---------------------------------------------------------------------------
// Traces

struct TraceSpec {
  std::vector<double> eps_values{1.0, 0.5, 0.25, 0.125};
  GridSpec grid{-16.0, 16.0, 256};
  double tau = 1e-4;
  double t_final = 1.0;
  double lambda = 1.0;
  InitialData data = InitialData::real_gaussian;
  double x = 0.0;
  /// steps between space-time snapshots; 0 disables them
  std::int64_t snapshot_stride = 0;
};

struct Trace {
  double eps = 0.0;
  std::vector<double> t;
  std::vector<Complex> u;
};

/// Point evaluation of the trigonometric interpolant with precomputed phases.
class PointSampler {
 public:
  PointSampler(const SpectralGrid& grid, double x) : grid_(grid) {
    for (int l = grid.min_mode(); l <= grid.max_mode(); ++l) {
      phases_.push_back(std::polar(1.0, grid.mu(l) * (x - grid.a())));
    }
  }

  Complex operator()(const FieldHat& f) const {
    Complex sum;
    std::size_t i = 0;
    for (int l = grid_.min_mode(); l <= grid_.max_mode(); ++l) sum += f[l] * phases_[i++];
    return sum;
  }

 private:
  SpectralGrid grid_;
  std::vector<Complex> phases_;
};

inline std::string trace_file_name(double eps) { return "trace_eps" + shortest(eps) + ".csv"; }

inline std::string plot_script() {
  return R"(#!/usr/bin/env python3
# u(x=0, t) for each eps, one panel per trace file.
import glob
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

files = sorted(glob.glob("trace_eps*.csv"), key=lambda f: -float(f[9:-4]))
fig, axes = plt.subplots(len(files), 1, figsize=(7, 2.2 * len(files)), sharex=True, squeeze=False)
for ax, name in zip(axes[:, 0], files):
    d = np.loadtxt(name, delimiter=",", skiprows=1)
    ax.plot(d[:, 0], d[:, 1], lw=0.8, label="Re u")
    ax.plot(d[:, 0], d[:, 2], lw=0.8, label="Im u")
    ax.set_ylabel("eps = " + name[9:-4])
axes[0, 0].legend(loc="upper right")
axes[-1, 0].set_xlabel("t")
fig.tight_layout()
fig.savefig(sys.argv[1] if len(sys.argv) > 1 else "traces.png", dpi=150)
)";
}

inline Trace record_trace(const TraceSpec& spec, double eps,
                          const std::function<void(std::int64_t, const SolverState&)>& snapshot = {}) {
  SolverConfig c;
  c.grid = spec.grid;
  c.eps = eps;
  c.tau = spec.tau;
  c.t_final = spec.t_final;
  c.lambda = spec.lambda;
  c.data = spec.data;
  c.real_fast_path = spec.data == InitialData::real_gaussian;
  Trace tr;
  tr.eps = eps;
  const PointSampler sample(c.grid.make(), spec.x);
  std::vector<Observer> obs;
  obs.push_back({1, [&](std::int64_t, double t, const SolverState& s) {
                   tr.t.push_back(t);
                   tr.u.push_back(sample(s.u));
                 }});
  if (spec.snapshot_stride > 0 && snapshot) {
    obs.push_back({spec.snapshot_stride,
                   [&](std::int64_t n, double, const SolverState& s) { snapshot(n, s); }});
  }
  (void)propagate(c, obs);
  return tr;
}

/// Writes trace_eps<eps>.csv (t,re_u,im_u) per eps, optional snapshot files
/// and plot_traces.py into `dir`.
inline std::vector<Trace> emit_traces(const TraceSpec& spec, const std::filesystem::path& dir) {
  std::vector<Trace> out;
  for (double eps : spec.eps_values) {
    std::ostringstream snaps;
    if (spec.snapshot_stride > 0) snaps << "t,x,re_u,im_u\n";
    auto snapshot = [&](std::int64_t n, const SolverState& s) {
      const auto u = from_spectral(s.u);
      const auto x = s.u.grid().nodes();
      const std::string t = shortest(static_cast<double>(n) * spec.tau);
      for (std::size_t j = 0; j < u.size(); ++j) {
        snaps << t << ',' << shortest(x[j]) << ',' << shortest(u[j].real()) << ','
              << shortest(u[j].imag()) << '\n';
      }
    };
    Trace tr = record_trace(spec, eps, snapshot);
    std::ostringstream os;
    os << "t,re_u,im_u\n";
    for (std::size_t i = 0; i < tr.t.size(); ++i) {
      os << shortest(tr.t[i]) << ',' << shortest(tr.u[i].real()) << ','
         << shortest(tr.u[i].imag()) << '\n';
    }
    write_text(dir / trace_file_name(eps), os.str());
    if (spec.snapshot_stride > 0) {
      write_text(dir / ("snapshots_eps" + shortest(eps) + ".csv"), snaps.str());
    }
    out.push_back(std::move(tr));
  }
  write_text(dir / "plot_traces.py", plot_script());
  return out;
}

/// Mean period from sign changes of Re u (two per period).
inline double dominant_period(const Trace& tr) {
  std::vector<double> crossings;
  for (std::size_t i = 1; i < tr.u.size(); ++i) {
    const double a = tr.u[i - 1].real();
    const double b = tr.u[i].real();
    if ((a < 0.0) != (b < 0.0)) {
      crossings.push_back(tr.t[i - 1] + (tr.t[i] - tr.t[i - 1]) * a / (a - b));
    }
  }
  if (crossings.size() < 3) return std::numeric_limits<double>::quiet_NaN();
  return 2.0 * (crossings.back() - crossings.front()) / static_cast<double>(crossings.size() - 1);
}

// ---------------------------------------------------------------------------
// Configuration files

struct ExperimentConfig {
  SolverConfig solver;
  std::optional<SweepSpec> sweep;
  int threads = 1;

  /// Every effective setting, for report metadata.
  std::vector<std::pair<std::string, std::string>> metadata() const {
    std::vector<std::pair<std::string, std::string>> m;
    m.emplace_back("solver.eps", shortest(solver.eps));
    m.emplace_back("solver.tau", shortest(solver.tau));
    m.emplace_back("solver.t_final", shortest(solver.t_final));
    m.emplace_back("solver.lambda", shortest(solver.lambda));
    m.emplace_back("solver.grid", shortest(solver.grid.a) + ":" + shortest(solver.grid.b) + ":" +
                                      std::to_string(solver.grid.n));
    m.emplace_back("solver.data", to_string(solver.data));
    m.emplace_back("solver.phi2_convention", to_string(solver.phi2_convention));
    m.emplace_back("solver.real_fast_path", solver.real_fast_path ? "true" : "false");
    m.emplace_back("solver.filter", to_string(solver.filter));
    m.emplace_back("solver.dealias", solver.dealias ? "true" : "false");
    m.emplace_back("threads", std::to_string(threads));
    return m;
  }
};

namespace detail {

using Json = nlohmann::json;

inline void reject_unknown(const Json& obj, const std::string& path,
                           std::initializer_list<const char*> known) {
  if (!obj.is_object()) throw ConfigError(path + ": expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; })) {
      throw ConfigError((path.empty() ? "" : path + ".") + key + ": unknown key");
    }
  }
}

template <typename T>
T get(const Json& obj, const std::string& path, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError((path.empty() ? "" : path + ".") + key + ": " + e.what());
  }
}

template <typename T>
T pick(const Json& obj, const std::string& path, const char* key,
       std::initializer_list<std::pair<const char*, T>> choices, T fallback) {
  if (!obj.contains(key)) return fallback;
  const auto name = get<std::string>(obj, path, key, "");
  for (const auto& [n, v] : choices) {
    if (name == n) return v;
  }
  throw ConfigError((path.empty() ? "" : path + ".") + key + ": unknown value '" + name + "'");
}

}  // namespace detail

inline ExperimentConfig parse_config(const std::string& text) {
  using detail::Json;
  Json root;
  try {
    root = Json::parse(text);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  detail::reject_unknown(root, "", {"preset", "solver", "sweep", "threads"});

  ExperimentConfig cfg;
  cfg.threads = detail::get<int>(root, "", "threads", 1);
  if (cfg.threads < 1) throw ConfigError("threads: must be >= 1");
  if (root.contains("preset")) cfg.sweep = preset(detail::get<std::string>(root, "", "preset", ""));

  if (root.contains("solver")) {
    const Json& s = root.at("solver");
    detail::reject_unknown(s, "solver",
                           {"eps", "tau", "t_final", "lambda", "grid", "data", "phi2_convention",
                            "real_fast_path", "filter", "dealias"});
    auto& c = cfg.solver;
    c.eps = detail::get<double>(s, "solver", "eps", c.eps);
    c.tau = detail::get<double>(s, "solver", "tau", c.tau);
    c.t_final = detail::get<double>(s, "solver", "t_final", c.t_final);
    c.lambda = detail::get<double>(s, "solver", "lambda", c.lambda);
    if (s.contains("grid")) {
      const Json& g = s.at("grid");
      detail::reject_unknown(g, "solver.grid", {"a", "b", "n"});
      c.grid.a = detail::get<double>(g, "solver.grid", "a", c.grid.a);
      c.grid.b = detail::get<double>(g, "solver.grid", "b", c.grid.b);
      c.grid.n = detail::get<int>(g, "solver.grid", "n", c.grid.n);
    }
    c.data = detail::pick<InitialData>(s, "solver", "data",
                                       {{"gaussian_pair", InitialData::gaussian_pair},
                                        {"real_gaussian", InitialData::real_gaussian},
                                        {"zero", InitialData::zero}},
                                       c.data);
    c.phi2_convention = detail::pick<Phi2Convention>(
        s, "solver", "phi2_convention",
        {{"eps_independent", Phi2Convention::eps_independent},
         {"paper_section5_literal", Phi2Convention::paper_section5_literal}},
        c.phi2_convention);
    c.real_fast_path = detail::get<bool>(s, "solver", "real_fast_path", c.real_fast_path);
    c.filter = detail::pick<VelocityFilter>(
        s, "solver", "filter",
        {{"sin", VelocityFilter::sin}, {"unfiltered", VelocityFilter::unfiltered}}, c.filter);
    c.dealias = detail::get<bool>(s, "solver", "dealias", c.dealias);
  }
  try {
    validate(cfg.solver);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("solver: ") + e.what());
  }

  if (root.contains("sweep")) {
    const Json& w = root.at("sweep");
    detail::reject_unknown(w, "sweep",
                           {"name", "axis", "eps", "resolutions", "fixed_tau", "fixed_h",
                            "reference_n", "reference_tau"});
    SweepSpec s = cfg.sweep.value_or(SweepSpec{});
    s.name = detail::get<std::string>(w, "sweep", "name", s.name);
    s.axis = detail::pick<Axis>(w, "sweep", "axis",
                                {{"spatial", Axis::spatial}, {"temporal", Axis::temporal}}, s.axis);
    s.eps_values = detail::get<std::vector<double>>(w, "sweep", "eps", s.eps_values);
    s.resolutions = detail::get<std::vector<double>>(w, "sweep", "resolutions", s.resolutions);
    s.fixed_tau = detail::get<double>(w, "sweep", "fixed_tau", s.fixed_tau);
    s.fixed_h = detail::get<double>(w, "sweep", "fixed_h", s.fixed_h);
    s.reference_n = detail::get<int>(w, "sweep", "reference_n", s.reference_n);
    s.reference_tau = detail::get<double>(w, "sweep", "reference_tau", s.reference_tau);
    cfg.sweep = s;
  }
  if (cfg.sweep) validate(*cfg.sweep, cfg.solver);
  return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_text(path));
}

}  // namespace mtifp
