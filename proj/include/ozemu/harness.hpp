#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string_view>
#include <string>
#include <vector>

#include "ozemu/dense_matrix.hpp"
#include "ozemu/gemm.hpp"
#include "ozemu/lu.hpp"

namespace ozemu {

enum class Experiment { SweepSplits, SearchParams, Bench, Gen, Gemm, Solve };
enum class MatrixKind { ParaWilk, Wilkinson, Turing, Uniform, Identity, File };
enum class RhsKind { Ones, Uniform };
enum class OutputFormat { Csv, Pretty };

/// Version tag written as the first (comment) line of every CSV.
inline constexpr const char* kCsvSchema = "ozemu-csv v1";

std::string_view to_string(Experiment e);
std::string_view to_string(MatrixKind k);
std::string_view to_string(RhsKind k);

struct MatrixSpec {
  MatrixKind kind = MatrixKind::ParaWilk;
  std::size_t n = 256;
  std::size_t d = 4;
  std::size_t b = 15;
  double alpha = 0.5;
  bool randomize = true;
  std::uint64_t seed = 0;
  std::string path;  // MatrixKind::File

  /// True when the matrix depends on `seed`.
  bool is_random() const;
  DenseMatrix build() const;
};

struct ExperimentConfig {
  Experiment experiment = Experiment::Solve;
  MatrixSpec matrix;
  std::vector<std::size_t> n_values;  // search-params, bench
  std::vector<int> splits;            // sweep-splits range, bench list, or the single search value
  std::vector<std::size_t> lu_blocks{64};
  /// Template for emulated runs; `splits` is overridden per row. A Band
  /// truncation with threshold 0 means Band(k + 1) for each k.
  GemmBackend backend = GemmBackend::emulated(7);
  RhsKind rhs = RhsKind::Ones;
  std::uint64_t seed = 0;
  /// 0 selects min(20, n/8) / min(32, n/4).
  std::size_t d_max = 0;
  std::size_t b_max = 0;
  unsigned threads = 0;  // 0: OZEMU_THREADS or hardware concurrency
  OutputFormat format = OutputFormat::Csv;
  std::string output = "-";
  bool strict = false;
};

/// Worker count: `requested` if nonzero, else OZEMU_THREADS, else hardware
/// concurrency; at least 1.
unsigned worker_count(unsigned requested);

/// Right-hand side for an experiment; Uniform draws from stream 1 of `seed`.
std::vector<double> make_rhs(const DenseMatrix& a, RhsKind kind, std::uint64_t seed);

/// lu_block clipped to n.
std::size_t effective_lu_block(std::size_t lu_block, std::size_t n);

/// One solved configuration, self-describing.
struct ExperimentRow {
  std::size_t n = 0;
  std::size_t lu_block = 0;
  GemmBackend backend;
  SolveReport report;
  std::string status = "ok";  ///< "ok" or the error class
};

std::vector<ExperimentRow> sweep_splits(const ExperimentConfig& config);

struct SearchResult {
  std::size_t n = 0;
  int splits = 0;
  bool found = false;  ///< false: ExhaustedSearch
  std::size_t d = 0;
  std::size_t b = 0;
  double residual = 0.0;
  std::size_t cells_scanned = 0;
  std::string status = "found";
};

/// Scan order: d = 1..d_max outer, b = 2..b_max inner; stops at the first
/// cell whose scaled residual is >= 16 (a failed solve counts as +inf).
std::vector<SearchResult> search_params(const ExperimentConfig& config);

struct BenchCell {
  std::size_t n = 0;
  std::size_t lu_block = 0;
  bool skipped = false;
  std::string reason;
};

/// (n, lu_block) grid; cells whose lu_block does not divide n are skipped.
std::vector<BenchCell> plan_bench(const ExperimentConfig& config);

struct BenchRow {
  std::size_t n = 0;
  std::size_t lu_block = 0;
  GemmBackend backend;
  std::size_t retained_pairs = 0;
  std::uint64_t f64_flops = 0;       ///< measured, 2 per multiply-add
  std::uint64_t int_macs = 0;        ///< measured integer multiply-adds
  std::uint64_t schur_macs = 0;      ///< trailing-update multiply-adds of the blocked LU
  std::uint64_t model_int_macs = 0;  ///< retained_pairs * schur_macs
  double seconds = 0.0;
  double gflops = 0.0;  ///< nominal 2n^3/3 over wall time
  double scaled_residual = 0.0;
  bool passed = false;
  std::string status = "ok";  ///< "ok", "skipped: <reason>" or the error class
};

/// Skipped cells appear as rows with a "skipped" status and no measurements.
std::vector<BenchRow> bench(const ExperimentConfig& config);

/// Multiply-adds of the trailing updates of a blocked LU of order n.
std::uint64_t schur_update_macs(std::size_t n, std::size_t lu_block);

/// Simple string table rendered as CSV or aligned text.
struct Table {
  std::string title;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void write(std::ostream& out, OutputFormat format) const;
};

Table sweep_table(const ExperimentConfig& config, const std::vector<ExperimentRow>& rows);
Table search_table(const ExperimentConfig& config, const std::vector<SearchResult>& results);
Table bench_table(const ExperimentConfig& config, const std::vector<BenchRow>& rows);

/// Residual text with ten significant digits ("%.10g").
std::string format_residual(double r);

/// Parses "a:b[:step]" or "a,b,c" into a non-empty list.
std::vector<long long> parse_int_list(const std::string& text);

/// CLI entry point. Exit codes: 0 success, 1 when --strict is given and any
/// residual check failed, 2 usage error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ozemu
