#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "oracle.hpp"
#include "ozemu/error.hpp"
#include "ozemu/lu.hpp"
#include "ozemu/matgen.hpp"
#include "ozemu/rng.hpp"

using namespace ozemu;

namespace {

bool is_permutation(const std::vector<std::size_t>& p) {
  std::vector<bool> seen(p.size(), false);
  for (std::size_t v : p) {
    if (v >= p.size() || seen[v]) return false;
    seen[v] = true;
  }
  return true;
}

double max_diff(const DenseMatrix& a, const DenseMatrix& b) {
  double m = 0.0;
  for (std::size_t j = 0; j < a.cols(); ++j) {
    for (std::size_t i = 0; i < a.rows(); ++i) m = std::max(m, std::abs(a(i, j) - b(i, j)));
  }
  return m;
}

Errc error_code(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no exception");
  return Errc::Io;
}

}  // namespace

TEST_CASE("identity factors trivially") {
  for (std::size_t block : {1u, 2u, 4u}) {
    const LuFactors f = lu_factor(DenseMatrix::identity(4), block, GemmBackend::native());
    CHECK(f.lower() == DenseMatrix::identity(4));
    CHECK(f.upper() == DenseMatrix::identity(4));
    CHECK(f.pivots == std::vector<std::size_t>{0, 1, 2, 3});
    CHECK(f.growth == 1.0);
  }
}

TEST_CASE("P A = L U with bounded multipliers") {
  std::mt19937_64 gen(21);
  for (std::size_t n : {1u, 7u, 33u, 64u}) {
    const DenseMatrix a = oracle::random_uniform(n, n, gen);
    for (std::size_t block : {std::size_t{1}, std::size_t{5}, n}) {
      if (block > n) continue;
      for (const GemmBackend& be : {GemmBackend::native(), GemmBackend::emulated(9)}) {
        const LuFactors f = lu_factor(a, block, be);
        REQUIRE(is_permutation(f.pivots));
        for (std::size_t j = 0; j < n; ++j) {
          for (std::size_t i = j + 1; i < n; ++i) REQUIRE(std::abs(f.lu(i, j)) <= 1.0);
        }
        DenseMatrix pa(n, n);
        for (std::size_t j = 0; j < n; ++j) {
          for (std::size_t i = 0; i < n; ++i) pa(i, j) = a(f.pivots[i], j);
        }
        CHECK(max_diff(oracle::naive_product(f.lower(), f.upper()), pa) <= n * 0x1p-50);
      }
    }
  }
}

TEST_CASE("blocked and unblocked factorizations agree") {
  std::mt19937_64 gen(22);
  for (int t = 0; t < 5; ++t) {
    const DenseMatrix a = oracle::random_uniform(64, 64, gen);
    const oracle::ReferenceLu ref = oracle::reference_lu(a);
    const LuFactors unblocked = lu_factor(a, 64, GemmBackend::native());
    for (std::size_t block : {1u, 16u, 20u}) {
      const LuFactors f = lu_factor(a, block, GemmBackend::native());
      CHECK(f.pivots == unblocked.pivots);
      CHECK(f.pivots == ref.perm);
      CHECK(max_diff(f.lu, unblocked.lu) <= 0x1p-40);
      CHECK(max_diff(f.lu, ref.lu) <= 0x1p-40);
    }
  }
}

TEST_CASE("pivot ties go to the smallest row index") {
  const DenseMatrix a = DenseMatrix::from_rows({{1, 2, 0}, {-3, 1, 1}, {3, 0, 2}});
  const LuFactors f = lu_factor(a, 1, GemmBackend::native());
  CHECK(f.pivots[0] == 1);
  const LuFactors w = lu_factor(wilkinson(6), 2, GemmBackend::native());
  CHECK(w.pivots == std::vector<std::size_t>{0, 1, 2, 3, 4, 5});
}

TEST_CASE("Wilkinson growth doubles per column") {
  for (std::size_t n = 2; n <= 24; ++n) {
    const DenseMatrix w = wilkinson(n);
    const double expected = std::ldexp(1.0, static_cast<int>(n) - 1);
    CHECK(oracle::reference_lu(w).growth == expected);
    for (std::size_t block : {std::size_t{1}, std::size_t{2}, n}) {
      CHECK(lu_factor(w, block, GemmBackend::native()).growth == expected);
      CHECK(lu_factor(w, block, GemmBackend::emulated(3)).growth == expected);
    }
  }
  CHECK(lu_factor(wilkinson(10), 2, GemmBackend::native()).growth == 512.0);
  CHECK(lu_factor(wilkinson(12), 4, GemmBackend::native()).growth == 2048.0);
}

TEST_CASE("solves small systems") {
  const DenseMatrix d = DenseMatrix::from_rows({{2, 0}, {0, 4}});
  const std::vector<double> b{2, 8};
  const auto x = lu_solve(lu_factor(d, 1, GemmBackend::native()), b);
  CHECK(x == std::vector<double>{1, 2});

  const std::vector<double> rhs{3, -1, 0.25};
  CHECK(lu_solve(lu_factor(DenseMatrix::identity(3), 2, GemmBackend::native()), rhs) == rhs);
}

TEST_CASE("forward error against the rational solution is bounded by conditioning") {
  std::mt19937_64 gen(23);
  for (int t = 0; t < 3; ++t) {
    const DenseMatrix a = oracle::random_uniform(32, 32, gen);
    const oracle::RationalMatrix ra = oracle::to_rational(a);
    std::vector<mpq_class> ones(32, 1);
    std::vector<double> b(32);
    for (std::size_t i = 0; i < 32; ++i) {
      mpq_class s = 0;
      for (std::size_t j = 0; j < 32; ++j) s += ra(i, j);
      b[i] = s.get_d();
    }
    const double kappa = oracle::condition_inf(ra);
    for (const GemmBackend& be : {GemmBackend::native(), GemmBackend::emulated(9)}) {
      const auto x = lu_solve(lu_factor(a, 8, be), b);
      double err = 0.0;
      for (double v : x) err = std::max(err, std::abs(v - 1.0));
      CHECK(err <= 32 * kappa * 0x1p-50);
    }
  }
}

TEST_CASE("n = 8 solution matches the exact rational solve") {
  std::mt19937_64 gen(24);
  const DenseMatrix a = oracle::random_uniform(8, 8, gen);
  std::vector<double> b(8);
  std::vector<mpq_class> rb(8);
  for (std::size_t i = 0; i < 8; ++i) {
    b[i] = static_cast<double>(i) - 3.5;
    rb[i] = b[i];
  }
  const oracle::RationalMatrix ra = oracle::to_rational(a);
  const auto exact = oracle::solve(ra, rb);
  const double kappa = oracle::condition_inf(ra);
  const auto [x, rep] = solve_system(a, b, 3, GemmBackend::native());
  double xnorm = 0.0;
  for (const auto& v : exact) xnorm = std::max(xnorm, std::abs(v.get_d()));
  for (std::size_t i = 0; i < 8; ++i) CHECK(oracle::abs_error(x[i], exact[i]) <= 8 * kappa * 0x1p-50 * xnorm);
  CHECK(rep.passed);
}

TEST_CASE("scaled residual definition and threshold") {
  const DenseMatrix a = DenseMatrix::from_rows({{2, 0}, {0, 4}});
  const std::vector<double> x{1, 2};
  const std::vector<double> b{2, 8};
  const SolveReport exact = scaled_residual(a, x, b);
  CHECK(exact.scaled_residual == 0.0);
  CHECK(exact.passed);
  CHECK(exact.epsilon == 0x1p-52);
  CHECK(exact.norm_a_inf == 4.0);
  CHECK(exact.norm_x_inf == 2.0);
  CHECK(exact.norm_b_inf == 8.0);

  // ||r|| / ((||A|| ||x|| + ||b||) n eps) with ||r|| chosen to hit the threshold.
  const double denom = (4.0 * 2.0 + 8.0) * 2 * 0x1p-52;
  const std::vector<double> b16{2 + 16 * denom, 8};
  const SolveReport at = scaled_residual(a, x, b16);
  CHECK(at.raw_residual_inf == 16 * denom);
  CHECK(at.scaled_residual == 16.0);
  CHECK_FALSE(at.passed);
  const std::vector<double> b15{2 + 15.5 * denom, 8};
  const SolveReport below = scaled_residual(a, x, b15);
  CHECK(below.scaled_residual == 15.5);
  CHECK(below.passed);

  const std::vector<double> nan_x{std::numeric_limits<double>::quiet_NaN(), 0};
  CHECK_FALSE(scaled_residual(a, nan_x, b).passed);
  CHECK(error_code([&] { scaled_residual(a, std::vector<double>{1}, b); }) == Errc::ShapeMismatch);
}

TEST_CASE("error conditions") {
  CHECK(error_code([] { lu_factor(DenseMatrix(2, 3), 1, GemmBackend::native()); }) == Errc::NonSquare);
  CHECK(error_code([] { lu_factor(DenseMatrix::identity(3), 0, GemmBackend::native()); }) == Errc::InvalidParams);
  CHECK(error_code([] { lu_factor(DenseMatrix::identity(3), 4, GemmBackend::native()); }) == Errc::InvalidParams);
  const DenseMatrix singular = DenseMatrix::from_rows({{1, 2, 3}, {2, 4, 6}, {0, 0, 0}});
  CHECK(error_code([&] { lu_factor(singular, 1, GemmBackend::native()); }) == Errc::SingularPivot);
  DenseMatrix nan = DenseMatrix::identity(2);
  nan(1, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK(error_code([&] { lu_factor(nan, 1, GemmBackend::native()); }) == Errc::NonFiniteEntry);
}

TEST_CASE("native flop count approaches 2n^3/3") {
  const std::size_t n = 512;
  const DenseMatrix a = hpl_uniform(n, 3);
  for (std::size_t block : {32u, 64u, 512u}) {
    const LuFactors f = lu_factor(a, block, GemmBackend::native());
    const double counted = 2.0 * static_cast<double>(f.flops.f64_ops);
    const double model = 2.0 * n * n * n / 3.0;
    CHECK(std::abs(counted - model) / model < 0.01);
  }
}

TEST_CASE("emulated LU only routes the trailing update through the integer path") {
  const DenseMatrix a = hpl_uniform(64, 4);
  const LuFactors f = lu_factor(a, 16, GemmBackend::emulated(5));
  std::uint64_t macs = 0;
  for (std::size_t k0 = 0; k0 + 16 < 64; k0 += 16) macs += (64 - k0 - 16) * (64 - k0 - 16) * 16;
  CHECK(f.flops.emulated_int_ops == macs * 15);
  CHECK(f.flops.f64_ops > 0u);
  const LuFactors unblocked = lu_factor(a, 64, GemmBackend::emulated(5));
  CHECK(unblocked.flops.emulated_int_ops == 0u);
}

TEST_CASE("residual verdicts on the adversarial instance") {
  const DenseMatrix a = parawilk_randomized({256, 4, 15, 0.5, true, 42});
  const std::vector<double> b = rhs_for_ones(a);
  const SolveReport k3 = solve_system(a, b, 64, GemmBackend::emulated(3)).second;
  const SolveReport k9 = solve_system(a, b, 64, GemmBackend::emulated(9)).second;
  CHECK_FALSE(k3.passed);
  CHECK(k9.passed);
  CHECK(k3.backend == "int8(k=3,q=7,band=4,pervector)");

  double prev = std::numeric_limits<double>::infinity();
  int inversions = 0;
  for (int k = 3; k <= 9; ++k) {
    const double r = solve_system(a, b, 64, GemmBackend::emulated(k)).second.scaled_residual;
    if (r > prev) {
      ++inversions;
      CHECK(r < 2 * prev);
    }
    prev = r;
  }
  CHECK(inversions <= 1);
}

TEST_CASE("native baseline residual on the adversarial instance") {
  const DenseMatrix a = parawilk_randomized({256, 4, 15, 0.5, true, 42});
  SUBCASE("ones solution") {
    const SolveReport r = solve_system(a, rhs_for_ones(a), 64, GemmBackend::native()).second;
    MESSAGE("native residual with b = A*ones: " << r.scaled_residual);
    CHECK(r.scaled_residual < 1.0);
  }
  SUBCASE("uniform right-hand side lands in the HPL-typical band") {
    Rng rng(42, 1);
    std::vector<double> b(256);
    for (double& v : b) v = rng.uniform() - 0.5;
    const SolveReport r = solve_system(a, b, 64, GemmBackend::native()).second;
    CHECK(r.scaled_residual >= 1e-5);
    CHECK(r.scaled_residual <= 1e-2);
  }
}

TEST_CASE("random matrices pass with seven splits") {
  for (std::size_t n : {128u, 256u, 512u}) {
    const DenseMatrix a = hpl_uniform(n, 100 + n);
    const std::vector<double> b = rhs_for_ones(a);
    const SolveReport r = solve_system(a, b, 64, GemmBackend::emulated(7)).second;
    CHECK(r.passed);
  }
}

TEST_CASE("identity system passes on every backend") {
  const DenseMatrix id = DenseMatrix::identity(16);
  const std::vector<double> b(16, 1.0);
  for (const GemmBackend& be : {GemmBackend::native(), GemmBackend::emulated(1), GemmBackend::emulated(7)}) {
    const auto [x, rep] = solve_system(id, b, 4, be);
    CHECK(rep.scaled_residual == 0.0);
    CHECK(rep.passed);
  }
}
