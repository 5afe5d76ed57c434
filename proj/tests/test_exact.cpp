#include <doctest.h>

#include <cmath>
#include <random>

#include "oracle.hpp"
#include "ozemu/exact.hpp"

using ozemu::DenseMatrix;
using ozemu::Dyadic;

TEST_CASE("dyadic conversion round trips") {
  for (double v : {0.0, 1.0, -3.5, 0x1p-1074, 0x1.fffffffffffffp+1023, 1.0 / 3.0}) {
    CHECK(Dyadic::from_double(v).to_double() == v);
  }
  CHECK(Dyadic::from_double(0.0).sign() == 0);
  CHECK(Dyadic::from_double(-2.0).sign() == -1);
}

TEST_CASE("to_double rounds to nearest even") {
  Dyadic halfway{(mpz_class(1) << 53) + 1, -53};  // 1 + 2^-53: a tie
  CHECK(halfway.to_double() == 1.0);
  Dyadic above{(mpz_class(1) << 54) + 3, -54};  // 1 + 3*2^-54: rounds up
  CHECK(above.to_double() == 1.0 + 0x1p-52);
}

TEST_CASE("exact product agrees with the rational oracle") {
  std::mt19937_64 gen(3);
  for (int t = 0; t < 20; ++t) {
    DenseMatrix a = oracle::random_uniform(5, 7, gen);
    DenseMatrix b = oracle::random_uniform(7, 4, gen);
    a(0, 0) = std::ldexp(a(0, 0), 60);
    b(3, 2) = std::ldexp(b(3, 2), -70);
    const ozemu::ExactMatrix e = ozemu::exact_product(a.view(), b.view());
    const oracle::RationalMatrix r = oracle::product(a, b);
    for (std::size_t j = 0; j < 4; ++j) {
      for (std::size_t i = 0; i < 5; ++i) {
        CHECK(oracle::abs_error(e(i, j).to_double(), r(i, j)) <= std::abs(r(i, j).get_d()) * 0x1p-53);
        CHECK(ozemu::relative_error(e(i, j).to_double(), e(i, j)) <= 0x1p-53);
      }
    }
  }
}

TEST_CASE("relative error conventions") {
  const Dyadic zero = Dyadic::from_double(0.0);
  CHECK(ozemu::relative_error(0.0, zero) == 0.0);
  CHECK(std::isinf(ozemu::relative_error(1e-300, zero)));
  CHECK(ozemu::relative_error(1.5, Dyadic::from_double(1.0)) == 0.5);
}
