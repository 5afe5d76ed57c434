#include <algorithm>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <ostream>

#include <CLI11.hpp>

#include "ozemu/error.hpp"
#include "ozemu/harness.hpp"
#include "ozemu/matgen.hpp"
#include "ozemu/matrix_market.hpp"
#include "ozemu/rng.hpp"

namespace ozemu {
namespace {

struct MatrixOpts {
  std::size_t n = 256;
  std::string kind = "parawilk";
  std::size_t d = 4;
  std::size_t b = 15;
  double alpha = 0.5;
  bool randomize = false;
  std::string input;
};

struct BackendOpts {
  std::string kind = "native";
  int splits = 7;
  int slice_bits = kDefaultSliceBits;
  std::string truncation = "band";
  int threshold = 0;
  std::string scaling = "pervector";
  bool faithful = false;
};

struct CommonOpts {
  std::uint64_t seed = 0;
  std::string out = "-";
  std::string format = "csv";
  std::string rhs = "ones";
  std::size_t lu_block = 64;
  unsigned threads = 0;
  bool strict = false;
};

const std::map<std::string, MatrixKind> kMatrixKinds{
    {"parawilk", MatrixKind::ParaWilk}, {"wilkinson", MatrixKind::Wilkinson}, {"turing", MatrixKind::Turing},
    {"uniform", MatrixKind::Uniform},   {"identity", MatrixKind::Identity},   {"file", MatrixKind::File},
};

std::vector<std::string> keys(const std::map<std::string, MatrixKind>& m) {
  std::vector<std::string> k;
  for (const auto& [name, _] : m) k.push_back(name);
  return k;
}

void add_matrix_options(CLI::App* sub, MatrixOpts& m, bool with_n = true) {
  if (with_n) sub->add_option("--n", m.n, "Matrix order")->capture_default_str();
  sub->add_option("--matrix", m.kind, "Matrix family")->check(CLI::IsMember(keys(kMatrixKinds)))->capture_default_str();
  sub->add_option("--d", m.d, "Number of -1 subdiagonals (parawilk, turing)")->capture_default_str();
  sub->add_option("--b", m.b, "Spacing of alpha-columns (parawilk)")->capture_default_str();
  sub->add_option("--alpha", m.alpha, "Value above the diagonal in alpha-columns (parawilk)")->capture_default_str();
  sub->add_flag("--randomize", m.randomize, "Fill structural zeros with 2u^2 (parawilk)");
  sub->add_option("--input", m.input, "MatrixMarket file for --matrix file");
}

void add_backend_options(CLI::App* sub, BackendOpts& be, bool with_kind_and_splits = true) {
  if (with_kind_and_splits) {
    sub->add_option("--backend", be.kind, "GEMM backend")
        ->check(CLI::IsMember({"native", "int8"}))
        ->capture_default_str();
    sub->add_option("--splits", be.splits, "Number of slices k")->capture_default_str();
  }
  sub->add_option("--slice-bits", be.slice_bits, "Bits per slice q")->capture_default_str();
  sub->add_option("--truncation", be.truncation, "Slice-pair policy")
      ->check(CLI::IsMember({"band", "full"}))
      ->capture_default_str();
  sub->add_option("--threshold", be.threshold, "Band threshold t (0: k + 1)")->capture_default_str();
  sub->add_option("--scaling", be.scaling, "Exponent scaling")
      ->check(CLI::IsMember({"pervector", "global"}))
      ->capture_default_str();
  sub->add_flag("--hardware-faithful", be.faithful, "Reject inner dimensions that could overflow 32-bit accumulators");
}

void add_output_options(CLI::App* sub, CommonOpts& c) {
  sub->add_option("--out", c.out, "Output path, - for stdout")->capture_default_str();
  sub->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"csv", "pretty"}))->capture_default_str();
}

void add_seed(CLI::App* sub, CommonOpts& c) {
  sub->add_option("--seed", c.seed, "RNG seed (all randomness derives from it)")->required();
}

void add_solver_options(CLI::App* sub, CommonOpts& c) {
  sub->add_option("--lu-block", c.lu_block, "LU panel width (clipped to n)")->capture_default_str();
  sub->add_option("--rhs", c.rhs, "Right-hand side: A*ones or U(-1/2,1/2)")
      ->check(CLI::IsMember({"ones", "uniform"}))
      ->capture_default_str();
  sub->add_option("--threads", c.threads, "Worker threads (0: OZEMU_THREADS or all cores)");
  sub->add_flag("--strict", c.strict, "Exit 1 if any residual check fails");
}

MatrixSpec to_spec(const MatrixOpts& m, std::uint64_t seed) {
  MatrixSpec s;
  s.kind = kMatrixKinds.at(m.kind);
  s.n = m.n;
  s.d = m.d;
  s.b = m.b;
  s.alpha = m.alpha;
  s.randomize = m.randomize;
  s.seed = seed;
  s.path = m.input;
  if (s.kind == MatrixKind::File && s.path.empty()) throw Error(Errc::InvalidParams, "--matrix file needs --input");
  return s;
}

GemmBackend to_backend(const BackendOpts& o) {
  GemmBackend be;
  be.kind = o.kind == "int8" ? BackendKind::EmulatedInt8 : BackendKind::NativeF64;
  be.splits = o.splits;
  be.slice_bits = o.slice_bits;
  be.truncation = o.truncation == "full" ? Truncation::full() : Truncation::band(o.threshold);
  be.scaling = o.scaling == "global" ? ScalingMode::Global : ScalingMode::PerVector;
  be.hardware_faithful = o.faithful;
  return be;
}

ExperimentConfig base_config(Experiment e, const MatrixOpts& m, const BackendOpts& be, const CommonOpts& c) {
  ExperimentConfig cfg;
  cfg.experiment = e;
  cfg.matrix = to_spec(m, c.seed);
  cfg.backend = to_backend(be);
  cfg.lu_blocks = {c.lu_block};
  cfg.rhs = c.rhs == "uniform" ? RhsKind::Uniform : RhsKind::Ones;
  cfg.seed = c.seed;
  cfg.threads = c.threads;
  cfg.format = c.format == "pretty" ? OutputFormat::Pretty : OutputFormat::Csv;
  cfg.output = c.out;
  cfg.strict = c.strict;
  return cfg;
}

template <class T>
std::vector<T> to_unsigned_list(const std::string& text, const char* what) {
  std::vector<T> out;
  for (long long v : parse_int_list(text)) {
    if (v <= 0) throw Error(Errc::InvalidParams, std::string(what) + " values must be positive");
    out.push_back(static_cast<T>(v));
  }
  return out;
}

// Opens the output before any work starts so an unwritable path is a usage
// error rather than a late failure.
class Output {
 public:
  Output(const std::string& path, std::ostream& stdout_stream) : stream_(&stdout_stream) {
    if (path == "-") return;
    file_ = std::make_unique<std::ofstream>(path);
    if (!*file_) throw Error(Errc::Io, "cannot open '" + path + "' for writing");
    stream_ = file_.get();
  }
  std::ostream& get() { return *stream_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_;
};

int strict_exit(bool strict, bool all_passed) { return strict && !all_passed ? 1 : 0; }

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Emulated FP64 GEMM and LU via integer mantissa slices"};
  app.name("ozemu");
  app.require_subcommand(1);

  MatrixOpts mat;
  BackendOpts be;
  CommonOpts common;
  std::string splits_text = "3:9";
  std::string n_text = "256";
  std::string lu_blocks_text = "64,128,256";
  std::size_t d_max = 0;
  std::size_t b_max = 0;
  int trials = 1;
  std::string input_b;
  bool dry_run = false;

  auto* gen = app.add_subcommand("gen", "Write a generated matrix in MatrixMarket format");
  add_matrix_options(gen, mat);
  gen->add_option("--seed", common.seed, "RNG seed (required for random matrices)");
  gen->add_option("--out", common.out, "Output path, - for stdout")->capture_default_str();

  auto* gemm_cmd = app.add_subcommand("gemm", "Error profile of one GEMM backend against the exact product");
  add_matrix_options(gemm_cmd, mat);
  add_backend_options(gemm_cmd, be);
  add_seed(gemm_cmd, common);
  add_output_options(gemm_cmd, common);
  gemm_cmd->add_option("--trials", trials, "Trials (t >= 1 rescales by random powers of two)")->capture_default_str();
  gemm_cmd->add_option("--input-b", input_b, "MatrixMarket file for B (default: U(-1/2,1/2))");

  auto* solve = app.add_subcommand("solve", "Solve one system and report the scaled residual");
  add_matrix_options(solve, mat);
  add_backend_options(solve, be);
  add_seed(solve, common);
  add_output_options(solve, common);
  add_solver_options(solve, common);

  auto* sweep = app.add_subcommand("sweep-splits", "Scaled residual for each split count plus a native row");
  add_matrix_options(sweep, mat);
  add_backend_options(sweep, be, false);
  sweep->add_option("--splits", splits_text, "Split counts, a:b[:step] or a,b,c")->capture_default_str();
  add_seed(sweep, common);
  add_output_options(sweep, common);
  add_solver_options(sweep, common);

  auto* search = app.add_subcommand("search-params", "First failing ParaWilk (d, b) per n");
  add_matrix_options(search, mat, false);
  add_backend_options(search, be, false);
  search->add_option("--n", n_text, "Orders, a:b[:step] or a,b,c")->capture_default_str();
  search->add_option("--splits", be.splits, "Number of slices k")->capture_default_str();
  search->add_option("--d-max", d_max, "Largest d scanned (0: min(20, n/8))");
  search->add_option("--b-max", b_max, "Largest b scanned (0: min(32, n/4))");
  add_seed(search, common);
  add_output_options(search, common);
  add_solver_options(search, common);

  auto* bench_cmd = app.add_subcommand("bench", "Timings and operation counts over n and lu_block");
  add_matrix_options(bench_cmd, mat, false);
  add_backend_options(bench_cmd, be, false);
  bench_cmd->add_option("--n", n_text, "Orders, a:b[:step] or a,b,c")->capture_default_str();
  bench_cmd->add_option("--lu-blocks", lu_blocks_text, "Panel widths")->capture_default_str();
  bench_cmd->add_option("--splits", splits_text, "Emulated split counts")->capture_default_str();
  bench_cmd->add_flag("--dry-run", dry_run, "Only list the (n, lu_block) cells");
  add_seed(bench_cmd, common);
  add_output_options(bench_cmd, common);
  bench_cmd->add_option("--rhs", common.rhs, "Right-hand side")->check(CLI::IsMember({"ones", "uniform"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return 0;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  try {
    if (gen->parsed()) {
      if (gen->count("--seed") == 0 && to_spec(mat, 0).is_random()) {
        err << "gen: --seed is required for random matrices\n";
        return 2;
      }
      const MatrixSpec spec = to_spec(mat, common.seed);
      const DenseMatrix a = spec.build();
      Output o(common.out, out);
      write_matrix_market(o.get(), a, "ozemu gen matrix=" + mat.kind + " n=" + std::to_string(spec.n));
      return 0;
    }

    if (gemm_cmd->parsed()) {
      ExperimentConfig cfg = base_config(Experiment::Gemm, mat, be, common);
      const DenseMatrix a = cfg.matrix.build();
      const DenseMatrix b = input_b.empty() ? hpl_uniform(a.cols(), Rng(cfg.seed, 2).next()) : load_matrix_market(input_b);
      Output o(cfg.output, out);
      const ErrorProfile p = gemm_error_profile(cfg.backend, a, b, trials, cfg.seed);
      Table t;
      t.title = "experiment=gemm";
      t.header = {"experiment", "matrix", "m", "k", "n", "seed", "backend", "trials", "elements", "max_relative",
                  "median_relative", "mean_relative", "max_componentwise", "median_componentwise"};
      auto g = [](double v) { return format_residual(v); };
      t.rows.push_back({"gemm", mat.kind, std::to_string(a.rows()), std::to_string(a.cols()), std::to_string(b.cols()),
                        std::to_string(cfg.seed), cfg.backend.is_native() ? "native" : cfg.backend.describe(),
                        std::to_string(trials), std::to_string(p.elements), g(p.max_relative), g(p.median_relative),
                        g(p.mean_relative), g(p.max_componentwise), g(p.median_componentwise)});
      t.write(o.get(), cfg.format);
      return 0;
    }

    if (solve->parsed()) {
      ExperimentConfig cfg = base_config(Experiment::Solve, mat, be, common);
      const DenseMatrix a = cfg.matrix.build();
      Output o(cfg.output, out);
      ExperimentRow row;
      row.n = a.rows();
      row.lu_block = effective_lu_block(common.lu_block, a.rows());
      row.backend = cfg.backend;
      try {
        row.report = solve_system(a, make_rhs(a, cfg.rhs, cfg.seed), row.lu_block, cfg.backend).second;
      } catch (const Error& e) {
        if (e.code() != Errc::SingularPivot) throw;
        row.status = std::string(to_string(e.code()));
        row.report.scaled_residual = std::numeric_limits<double>::quiet_NaN();
      }
      sweep_table(cfg, {row}).write(o.get(), cfg.format);
      return strict_exit(cfg.strict, row.report.passed);
    }

    if (sweep->parsed()) {
      ExperimentConfig cfg = base_config(Experiment::SweepSplits, mat, be, common);
      for (long long k : parse_int_list(splits_text)) cfg.splits.push_back(static_cast<int>(k));
      for (int k : cfg.splits) {
        GemmBackend probe = cfg.backend;
        probe.kind = BackendKind::EmulatedInt8;
        probe.splits = k;
        probe.validate();
      }
      Output o(cfg.output, out);
      const auto rows = sweep_splits(cfg);
      sweep_table(cfg, rows).write(o.get(), cfg.format);
      const bool all = std::ranges::all_of(rows, [](const ExperimentRow& r) { return r.report.passed; });
      return strict_exit(cfg.strict, all);
    }

    if (search->parsed()) {
      ExperimentConfig cfg = base_config(Experiment::SearchParams, mat, be, common);
      cfg.n_values = to_unsigned_list<std::size_t>(n_text, "--n");
      cfg.splits = {be.splits};
      cfg.d_max = d_max;
      cfg.b_max = b_max;
      Output o(cfg.output, out);
      search_table(cfg, search_params(cfg)).write(o.get(), cfg.format);
      return 0;
    }

    if (bench_cmd->parsed()) {
      ExperimentConfig cfg = base_config(Experiment::Bench, mat, be, common);
      cfg.n_values = to_unsigned_list<std::size_t>(n_text, "--n");
      cfg.lu_blocks = to_unsigned_list<std::size_t>(lu_blocks_text, "--lu-blocks");
      cfg.splits = to_unsigned_list<int>(splits_text, "--splits");
      Output o(cfg.output, out);
      if (dry_run) {
        Table t;
        t.title = "experiment=bench-plan";
        t.header = {"n", "lu_block", "status"};
        for (const BenchCell& c : plan_bench(cfg)) {
          t.rows.push_back({std::to_string(c.n), std::to_string(c.lu_block), c.skipped ? "skipped: " + c.reason : "run"});
        }
        t.write(o.get(), cfg.format);
        return 0;
      }
      const auto rows = bench(cfg);
      bench_table(cfg, rows).write(o.get(), cfg.format);
      const bool all = std::ranges::all_of(
          rows, [](const BenchRow& r) { return r.status.starts_with("skipped") || r.passed; });
      return strict_exit(cfg.strict, all);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}

}  // namespace ozemu
