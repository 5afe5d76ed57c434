#include "ozemu/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <ostream>
#include <thread>

#include "ozemu/error.hpp"
#include "ozemu/matgen.hpp"
#include "ozemu/matrix_market.hpp"
#include "ozemu/rng.hpp"

namespace ozemu {
namespace {

// Runs fn(0..count-1) on up to `workers` threads. The first exception is
// rethrown after all workers finish.
template <class Fn>
void parallel_for(std::size_t count, unsigned workers, Fn&& fn) {
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

std::string shortest(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string printf_double(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

std::string_view truncation_name(const GemmBackend& be) {
  if (be.is_native()) return "none";
  return be.truncation.kind == TruncationKind::Full ? "full" : "band";
}

std::string_view scaling_name(const GemmBackend& be) {
  if (be.is_native()) return "none";
  return be.scaling == ScalingMode::Global ? "global" : "pervector";
}

// Columns shared by every experiment row that identify the backend.
std::vector<std::string> backend_fields(const GemmBackend& be) {
  if (be.is_native()) return {"native", "0", "0", "none", "0", "none"};
  return {be.describe(),
          std::to_string(be.splits),
          std::to_string(be.slice_bits),
          std::string(truncation_name(be)),
          std::to_string(be.effective_threshold()),
          std::string(scaling_name(be))};
}

const std::vector<std::string> kBackendHeader{"backend", "splits", "slice_bits", "truncation", "threshold", "scaling"};

std::vector<std::string> matrix_fields(const MatrixSpec& m) {
  return {std::string(to_string(m.kind)), std::to_string(m.n), std::to_string(m.d), std::to_string(m.b),
          shortest(m.alpha), m.randomize ? "1" : "0", std::to_string(m.seed)};
}

const std::vector<std::string> kMatrixHeader{"matrix", "n", "d", "b", "alpha", "randomize", "seed"};

template <class T>
void append(std::vector<T>& dst, const std::vector<T>& src) {
  dst.insert(dst.end(), src.begin(), src.end());
}

GemmBackend with_splits(const GemmBackend& base, int k) {
  GemmBackend be = base;
  be.kind = BackendKind::EmulatedInt8;
  be.splits = k;
  return be;
}

ExperimentRow run_solve(const DenseMatrix& a, const std::vector<double>& rhs, std::size_t lu_block,
                        const GemmBackend& backend) {
  ExperimentRow row;
  row.n = a.rows();
  row.lu_block = lu_block;
  row.backend = backend;
  try {
    row.report = solve_system(a, rhs, lu_block, backend).second;
  } catch (const Error& e) {
    row.status = std::string(to_string(e.code()));
    row.report.n = a.rows();
    row.report.backend = backend.is_native() ? "native" : backend.describe();
    row.report.lu_block = lu_block;
    row.report.scaled_residual = std::numeric_limits<double>::quiet_NaN();
    row.report.passed = false;
  }
  return row;
}

void require_nonempty(bool ok, const char* what) {
  if (!ok) throw Error(Errc::InvalidParams, std::string(what) + " must not be empty");
}

void write_csv_field(std::ostream& out, const std::string& f) {
  if (f.find_first_of(",\"\n") == std::string::npos) {
    out << f;
    return;
  }
  out << '"';
  for (char c : f) {
    if (c == '"') out << '"';
    out << c;
  }
  out << '"';
}

}  // namespace

std::string_view to_string(Experiment e) {
  switch (e) {
    case Experiment::SweepSplits: return "sweep-splits";
    case Experiment::SearchParams: return "search-params";
    case Experiment::Bench: return "bench";
    case Experiment::Gen: return "gen";
    case Experiment::Gemm: return "gemm";
    case Experiment::Solve: return "solve";
  }
  return "?";
}

std::string_view to_string(MatrixKind k) {
  switch (k) {
    case MatrixKind::ParaWilk: return "parawilk";
    case MatrixKind::Wilkinson: return "wilkinson";
    case MatrixKind::Turing: return "turing";
    case MatrixKind::Uniform: return "uniform";
    case MatrixKind::Identity: return "identity";
    case MatrixKind::File: return "file";
  }
  return "?";
}

std::string_view to_string(RhsKind k) { return k == RhsKind::Ones ? "ones" : "uniform"; }

bool MatrixSpec::is_random() const {
  return kind == MatrixKind::Uniform || (kind == MatrixKind::ParaWilk && randomize);
}

DenseMatrix MatrixSpec::build() const {
  switch (kind) {
    case MatrixKind::ParaWilk: {
      const ParaWilkParams p{n, d, b, alpha, randomize, seed};
      return randomize ? parawilk_randomized(p) : parawilk(p);
    }
    case MatrixKind::Wilkinson: return wilkinson(n);
    case MatrixKind::Turing: return turing(n, d);
    case MatrixKind::Uniform: return hpl_uniform(n, seed);
    case MatrixKind::Identity:
      if (n < 1) throw Error(Errc::InvalidDim, "dimension must be at least 1");
      return DenseMatrix::identity(n);
    case MatrixKind::File: return load_matrix_market(path);
  }
  throw Error(Errc::InvalidParams, "unknown matrix kind");
}

unsigned worker_count(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("OZEMU_THREADS")) {
    unsigned v = 0;
    const auto* end = env + std::char_traits<char>::length(env);
    const auto res = std::from_chars(env, end, v);
    if (res.ec == std::errc{} && res.ptr == end && v > 0) return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<double> make_rhs(const DenseMatrix& a, RhsKind kind, std::uint64_t seed) {
  if (kind == RhsKind::Ones) return rhs_for_ones(a);
  Rng rng(seed, 1);
  std::vector<double> b(a.rows());
  for (double& v : b) v = rng.uniform() - 0.5;
  return b;
}

std::size_t effective_lu_block(std::size_t lu_block, std::size_t n) { return std::clamp<std::size_t>(lu_block, 1, n); }

std::vector<ExperimentRow> sweep_splits(const ExperimentConfig& config) {
  require_nonempty(!config.splits.empty(), "splits range");
  require_nonempty(!config.lu_blocks.empty(), "lu_block");
  const DenseMatrix a = config.matrix.build();
  const std::vector<double> rhs = make_rhs(a, config.rhs, config.seed);
  const std::size_t lu_block = effective_lu_block(config.lu_blocks.front(), a.rows());

  std::vector<GemmBackend> backends;
  for (int k : config.splits) backends.push_back(with_splits(config.backend, k));
  backends.push_back(GemmBackend::native());

  std::vector<ExperimentRow> rows(backends.size());
  parallel_for(backends.size(), worker_count(config.threads),
               [&](std::size_t i) { rows[i] = run_solve(a, rhs, lu_block, backends[i]); });
  return rows;
}

std::vector<SearchResult> search_params(const ExperimentConfig& config) {
  require_nonempty(!config.n_values.empty(), "n range");
  require_nonempty(!config.splits.empty(), "splits");
  const GemmBackend backend = with_splits(config.backend, config.splits.front());
  backend.validate();
  const unsigned workers = worker_count(config.threads);

  std::vector<SearchResult> results;
  for (std::size_t n : config.n_values) {
    const std::size_t d_max = config.d_max ? config.d_max : std::min<std::size_t>(20, n / 8);
    const std::size_t b_max = config.b_max ? config.b_max : std::min<std::size_t>(32, n / 4);
    if (d_max < 1 || b_max < 2) throw Error(Errc::InvalidParams, "n too small for the (d, b) scan");
    const std::size_t lu_block = effective_lu_block(config.lu_blocks.empty() ? 64 : config.lu_blocks.front(), n);

    std::vector<std::pair<std::size_t, std::size_t>> cells;
    for (std::size_t d = 1; d <= d_max; ++d) {
      for (std::size_t b = 2; b <= b_max; ++b) cells.emplace_back(d, b);
    }

    SearchResult res;
    res.n = n;
    res.splits = backend.splits;
    // Cells are evaluated in batches of `workers`; within a batch the first
    // failing cell in scan order wins.
    std::vector<double> residuals(cells.size());
    for (std::size_t start = 0; start < cells.size() && !res.found; start += workers) {
      const std::size_t stop = std::min(cells.size(), start + workers);
      parallel_for(stop - start, workers, [&](std::size_t off) {
        MatrixSpec spec = config.matrix;
        spec.kind = MatrixKind::ParaWilk;
        spec.n = n;
        std::tie(spec.d, spec.b) = cells[start + off];
        const DenseMatrix a = spec.build();
        const ExperimentRow row = run_solve(a, make_rhs(a, config.rhs, config.seed), lu_block, backend);
        residuals[start + off] = row.status == "ok" ? row.report.scaled_residual : HUGE_VAL;
      });
      for (std::size_t i = start; i < stop; ++i) {
        if (!(residuals[i] < kResidualThreshold)) {
          res.found = true;
          std::tie(res.d, res.b) = cells[i];
          res.residual = residuals[i];
          res.cells_scanned = i + 1;
          break;
        }
      }
    }
    if (!res.found) {
      res.cells_scanned = cells.size();
      res.residual = std::numeric_limits<double>::quiet_NaN();
      res.status = std::string(to_string(Errc::ExhaustedSearch));
    }
    results.push_back(res);
  }
  return results;
}

std::uint64_t schur_update_macs(std::size_t n, std::size_t lu_block) {
  std::uint64_t total = 0;
  for (std::size_t k0 = 0; k0 < n; k0 += lu_block) {
    const std::uint64_t kb = std::min(lu_block, n - k0);
    const std::uint64_t rest = n - k0 - kb;
    total += rest * rest * kb;
  }
  return total;
}

std::vector<BenchCell> plan_bench(const ExperimentConfig& config) {
  require_nonempty(!config.n_values.empty(), "n range");
  require_nonempty(!config.lu_blocks.empty(), "lu_block range");
  std::vector<BenchCell> cells;
  for (std::size_t n : config.n_values) {
    for (std::size_t lb : config.lu_blocks) {
      BenchCell c{n, lb, false, {}};
      if (lb == 0 || lb > n) {
        c.skipped = true;
        c.reason = "lu_block exceeds n";
      } else if (n % lb != 0) {
        c.skipped = true;
        c.reason = "lu_block does not divide n";
      }
      cells.push_back(c);
    }
  }
  return cells;
}

std::vector<BenchRow> bench(const ExperimentConfig& config) {
  std::vector<GemmBackend> backends{GemmBackend::native()};
  for (int k : config.splits) backends.push_back(with_splits(config.backend, k));
  for (const auto& be : backends) be.validate();

  // Timed runs are sequential so that measurements do not compete for cores.
  std::vector<BenchRow> rows;
  for (const BenchCell& cell : plan_bench(config)) {
    if (cell.skipped) {
      BenchRow row;
      row.n = cell.n;
      row.lu_block = cell.lu_block;
      row.status = "skipped: " + cell.reason;
      rows.push_back(row);
      continue;
    }
    MatrixSpec spec = config.matrix;
    spec.n = cell.n;
    const DenseMatrix a = spec.build();
    const std::vector<double> rhs = make_rhs(a, config.rhs, config.seed);
    const double nominal = 2.0 * std::pow(static_cast<double>(cell.n), 3) / 3.0;
    for (const GemmBackend& be : backends) {
      const ExperimentRow run = run_solve(a, rhs, cell.lu_block, be);
      BenchRow row;
      row.n = cell.n;
      row.lu_block = cell.lu_block;
      row.backend = be;
      row.retained_pairs = be.is_native() ? 0 : retained_pairs(be.splits, be.truncation).size();
      row.f64_flops = 2 * run.report.flops.f64_ops;
      row.int_macs = run.report.flops.emulated_int_ops;
      row.schur_macs = schur_update_macs(cell.n, cell.lu_block);
      row.model_int_macs = row.retained_pairs * row.schur_macs;
      row.seconds = run.report.seconds;
      row.gflops = row.seconds > 0 ? nominal / row.seconds * 1e-9 : 0.0;
      row.scaled_residual = run.report.scaled_residual;
      row.passed = run.report.passed;
      row.status = run.status;
      rows.push_back(row);
    }
  }
  return rows;
}

std::string format_residual(double r) { return printf_double("%.10g", r); }

std::vector<long long> parse_int_list(const std::string& text) {
  auto parse_one = [&](std::string_view s) {
    long long v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
      throw Error(Errc::InvalidParams, "not an integer list: '" + text + "'");
    }
    return v;
  };
  std::vector<long long> out;
  if (text.find(':') != std::string::npos) {
    std::vector<long long> parts;
    std::string_view rest = text;
    while (true) {
      const auto pos = rest.find(':');
      parts.push_back(parse_one(rest.substr(0, pos)));
      if (pos == std::string_view::npos) break;
      rest.remove_prefix(pos + 1);
    }
    if (parts.size() < 2 || parts.size() > 3) throw Error(Errc::InvalidParams, "range must be a:b or a:b:step");
    const long long step = parts.size() == 3 ? parts[2] : 1;
    if (step <= 0 || parts[1] < parts[0]) throw Error(Errc::InvalidParams, "empty range '" + text + "'");
    for (long long v = parts[0]; v <= parts[1]; v += step) out.push_back(v);
  } else {
    std::string_view rest = text;
    while (true) {
      const auto pos = rest.find(',');
      out.push_back(parse_one(rest.substr(0, pos)));
      if (pos == std::string_view::npos) break;
      rest.remove_prefix(pos + 1);
    }
  }
  return out;
}

void Table::write(std::ostream& out, OutputFormat format) const {
  if (format == OutputFormat::Csv) {
    out << "# " << kCsvSchema << ' ' << title << '\n';
    auto line = [&](const std::vector<std::string>& fields) {
      for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out << ',';
        write_csv_field(out, fields[i]);
      }
      out << '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
    return;
  }

  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < r.size() && c < width.size(); ++c) width[c] = std::max(width[c], r[c].size());
  }
  auto line = [&](const std::vector<std::string>& fields) {
    for (std::size_t c = 0; c < fields.size(); ++c) {
      if (c) out << "  ";
      out << fields[c];
      if (c + 1 < fields.size()) out << std::string(width[c] - fields[c].size(), ' ');
    }
    out << '\n';
  };
  out << title << '\n';
  line(header);
  std::size_t total = 0;
  for (std::size_t w : width) total += w + 2;
  out << std::string(total > 2 ? total - 2 : 0, '-') << '\n';
  for (const auto& r : rows) line(r);
}

Table sweep_table(const ExperimentConfig& config, const std::vector<ExperimentRow>& rows) {
  Table t;
  t.title = "experiment=" + std::string(to_string(config.experiment));
  t.header = {"experiment"};
  append(t.header, kMatrixHeader);
  append(t.header, {"rhs", "lu_block"});
  append(t.header, kBackendHeader);
  append(t.header, {"residual", "passed", "growth", "flops", "int_macs", "status", "seconds"});
  for (const ExperimentRow& r : rows) {
    MatrixSpec m = config.matrix;
    m.n = r.n;
    std::vector<std::string> f{std::string(to_string(config.experiment))};
    append(f, matrix_fields(m));
    append(f, {std::string(to_string(config.rhs)), std::to_string(r.lu_block)});
    append(f, backend_fields(r.backend));
    const auto& fl = r.report.flops;
    append(f, {format_residual(r.report.scaled_residual), r.report.passed ? "1" : "0",
               format_residual(r.report.growth), std::to_string(2 * (fl.f64_ops + fl.emulated_int_ops)),
               std::to_string(fl.emulated_int_ops), r.status, printf_double("%.6f", r.report.seconds)});
    t.rows.push_back(std::move(f));
  }
  return t;
}

Table search_table(const ExperimentConfig& config, const std::vector<SearchResult>& results) {
  Table t;
  t.title = "experiment=search-params";
  t.header = {"experiment", "matrix", "n", "alpha", "randomize", "seed", "rhs", "lu_block"};
  append(t.header, kBackendHeader);
  append(t.header, {"d_max", "b_max", "d", "b", "residual", "cells", "status"});
  const GemmBackend backend = with_splits(config.backend, config.splits.empty() ? 0 : config.splits.front());
  for (const SearchResult& r : results) {
    const std::size_t d_max = config.d_max ? config.d_max : std::min<std::size_t>(20, r.n / 8);
    const std::size_t b_max = config.b_max ? config.b_max : std::min<std::size_t>(32, r.n / 4);
    const std::size_t lu_block = effective_lu_block(config.lu_blocks.empty() ? 64 : config.lu_blocks.front(), r.n);
    std::vector<std::string> f{"search-params",
                               "parawilk",
                               std::to_string(r.n),
                               shortest(config.matrix.alpha),
                               config.matrix.randomize ? "1" : "0",
                               std::to_string(config.matrix.seed),
                               std::string(to_string(config.rhs)),
                               std::to_string(lu_block)};
    append(f, backend_fields(backend));
    append(f, {std::to_string(d_max), std::to_string(b_max), r.found ? std::to_string(r.d) : "",
               r.found ? std::to_string(r.b) : "", r.found ? format_residual(r.residual) : "",
               std::to_string(r.cells_scanned), r.status});
    t.rows.push_back(std::move(f));
  }
  return t;
}

Table bench_table(const ExperimentConfig& config, const std::vector<BenchRow>& rows) {
  Table t;
  t.title = "experiment=bench";
  t.header = {"experiment"};
  append(t.header, kMatrixHeader);
  append(t.header, {"rhs", "lu_block"});
  append(t.header, kBackendHeader);
  append(t.header, {"retained_pairs", "f64_flops", "int_macs", "schur_macs", "model_int_macs", "residual", "passed",
                    "status", "seconds", "gflops"});
  for (const BenchRow& r : rows) {
    MatrixSpec m = config.matrix;
    m.n = r.n;
    std::vector<std::string> f{"bench"};
    append(f, matrix_fields(m));
    append(f, {std::string(to_string(config.rhs)), std::to_string(r.lu_block)});
    if (r.status.starts_with("skipped")) {
      append(f, {"", "", "", "", "", "", "", "", "", "", "", "", "", r.status, "", ""});
    } else {
      append(f, backend_fields(r.backend));
      append(f, {std::to_string(r.retained_pairs), std::to_string(r.f64_flops), std::to_string(r.int_macs),
                 std::to_string(r.schur_macs), std::to_string(r.model_int_macs), format_residual(r.scaled_residual),
                 r.passed ? "1" : "0", r.status, printf_double("%.6f", r.seconds), printf_double("%.4f", r.gflops)});
    }
    t.rows.push_back(std::move(f));
  }
  return t;
}

}  // namespace ozemu
