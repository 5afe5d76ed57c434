#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "oracle.hpp"
#include "ozemu/harness.hpp"
#include "ozemu/matgen.hpp"
#include "ozemu/matrix_market.hpp"

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "ozemu");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = ozemu::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (!line.starts_with("#")) rows.push_back(oracle::split_csv_line(line));
  }
  return rows;
}

std::string column(const std::vector<std::vector<std::string>>& rows, std::size_t row, const std::string& name) {
  const auto& h = rows.at(0);
  for (std::size_t c = 0; c < h.size(); ++c) {
    if (h[c] == name) return rows.at(row).at(c);
  }
  FAIL("missing column " << name);
  return {};
}

}  // namespace

TEST_CASE("help and usage errors") {
  CHECK(run({"--help"}).code == 0);
  CHECK(run({}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"solve", "--n", "abc", "--seed", "1"}).code == 2);
  CHECK(run({"solve", "--backend", "fp16", "--seed", "1"}).code == 2);
}

TEST_CASE("seed is mandatory for experiments") {
  for (const char* cmd : {"solve", "gemm", "sweep-splits", "search-params", "bench"}) {
    const Result r = run({cmd, "--n", "16"});
    CHECK_MESSAGE(r.code == 2, cmd);
    CHECK(r.err.find("seed") != std::string::npos);
  }
  CHECK(run({"gen", "--n", "5", "--matrix", "uniform"}).code == 2);
  CHECK(run({"gen", "--n", "5", "--matrix", "wilkinson"}).code == 0);
}

TEST_CASE("gen writes a MatrixMarket array") {
  const Result r = run({"gen", "--n", "3", "--matrix", "wilkinson", "--out", "-"});
  REQUIRE(r.code == 0);
  CHECK(r.out.starts_with("%%MatrixMarket matrix array real general\n"));
  std::istringstream in(r.out);
  CHECK(ozemu::read_matrix_market(in) == ozemu::wilkinson(3));
}

TEST_CASE("gen to a file round-trips through --input") {
  const auto path = std::filesystem::temp_directory_path() / "ozemu_cli_gen.mtx";
  REQUIRE(run({"gen", "--n", "24", "--matrix", "parawilk", "--d", "3", "--b", "5", "--alpha", "1", "--randomize",
               "--seed", "4", "--out", path.string()})
              .code == 0);
  const Result direct = run({"solve", "--n", "24", "--matrix", "parawilk", "--d", "3", "--b", "5", "--alpha", "1",
                             "--randomize", "--seed", "4", "--backend", "int8", "--splits", "5", "--lu-block", "8"});
  const Result file = run({"solve", "--matrix", "file", "--input", path.string(), "--seed", "4", "--backend", "int8",
                           "--splits", "5", "--lu-block", "8"});
  REQUIRE(direct.code == 0);
  REQUIRE(file.code == 0);
  CHECK(column(csv_rows(direct.out), 1, "residual") == column(csv_rows(file.out), 1, "residual"));
  std::filesystem::remove(path);
}

TEST_CASE("solve reports the scaled residual and honours --strict") {
  const std::vector<std::string> base{"solve", "--n", "256", "--matrix", "parawilk", "--d", "4", "--b", "15",
                                      "--alpha", "0.5", "--randomize", "--seed", "42", "--backend", "int8",
                                      "--lu-block", "64", "--strict", "--splits"};
  auto with = [&](const char* k) {
    auto args = base;
    args.push_back(k);
    return run(args);
  };
  const Result k7 = with("7");
  CHECK(k7.code == 0);
  const auto rows = csv_rows(k7.out);
  REQUIRE(rows.size() == 2);
  CHECK(column(rows, 1, "passed") == "1");
  CHECK(column(rows, 1, "splits") == "7");
  CHECK(std::stod(column(rows, 1, "residual")) < 16.0);

  const Result k6 = with("6");
  CHECK(k6.code == 1);
  CHECK(column(csv_rows(k6.out), 1, "passed") == "0");

  auto lenient = base;
  lenient.erase(std::find(lenient.begin(), lenient.end(), "--strict"));
  lenient.push_back("6");
  CHECK(run(lenient).code == 0);
}

TEST_CASE("sweep-splits emits one row per k plus native") {
  const Result r = run({"sweep-splits", "--n", "64", "--matrix", "uniform", "--seed", "3", "--splits", "3:5",
                        "--lu-block", "16"});
  REQUIRE(r.code == 0);
  const auto rows = csv_rows(r.out);
  REQUIRE(rows.size() == 5);
  CHECK(column(rows, 1, "splits") == "3");
  CHECK(column(rows, 3, "splits") == "5");
  CHECK(column(rows, 4, "backend") == "native");
  CHECK(r.out.starts_with("# ozemu-csv v1 experiment=sweep-splits\n"));

  const Result pretty = run({"sweep-splits", "--n", "64", "--matrix", "uniform", "--seed", "3", "--splits", "3:5",
                             "--lu-block", "16", "--format", "pretty"});
  CHECK(pretty.code == 0);
  CHECK(pretty.out.find("---") != std::string::npos);
  CHECK(run({"sweep-splits", "--n", "64", "--seed", "3", "--splits", "9:3"}).code == 2);
}

TEST_CASE("search-params and bench") {
  const Result s = run({"search-params", "--n", "64", "--splits", "3", "--alpha", "1", "--randomize", "--seed", "42",
                        "--lu-block", "16"});
  REQUIRE(s.code == 0);
  const auto rows = csv_rows(s.out);
  REQUIRE(rows.size() == 2);
  CHECK(column(rows, 1, "status") == "found");
  CHECK(std::stod(column(rows, 1, "residual")) >= 16.0);
  CHECK(run({"search-params", "--n", "4", "--splits", "6", "--seed", "1"}).code == 2);

  const Result b = run({"bench", "--n", "64,80", "--lu-blocks", "32", "--splits", "3", "--matrix", "uniform",
                        "--seed", "1", "--dry-run"});
  REQUIRE(b.code == 0);
  const auto brows = csv_rows(b.out);
  REQUIRE(brows.size() == 3);
  CHECK(b.out.find("skipped") != std::string::npos);
}

TEST_CASE("gemm prints an error profile") {
  const Result r = run({"gemm", "--n", "32", "--matrix", "uniform", "--seed", "2", "--backend", "int8", "--splits",
                        "4", "--trials", "2"});
  REQUIRE(r.code == 0);
  CHECK(csv_rows(r.out).size() >= 2);
}

TEST_CASE("unwritable output is a usage error") {
  const Result r = run({"gen", "--n", "4", "--matrix", "identity", "--out", "/nonexistent-dir/x.mtx"});
  CHECK(r.code == 2);
  CHECK(r.err.starts_with("error:"));
}
