#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "statebench/error.hpp"
#include "statebench/linalg.hpp"

using statebench::Matrix;

namespace {

Matrix to_matrix(const oracle::Dense& d) { return Matrix::from_rows(d); }

}  // namespace

TEST_CASE("matmul: identity and hand-checked products") {
  const Matrix m{{1, 2}, {3, 4}};
  CHECK(statebench::matmul(Matrix::identity(2), m) == m);
  CHECK(statebench::matmul(Matrix{{1, 2}}, Matrix{{3}, {4}}) == Matrix{{11}});
}

TEST_CASE("matmul: shape mismatch names both shapes") {
  try {
    statebench::matmul(Matrix(2, 3), Matrix(2, 3));
    FAIL("expected DimensionError");
  } catch (const statebench::DimensionError& e) {
    const std::string what = e.what();
    CHECK(what.find("2x3") != std::string::npos);
  }
}

TEST_CASE("matmul: agrees with the triple-loop oracle up to 64x64") {
  std::mt19937_64 gen(11);
  for (std::size_t n : {3u, 7u, 16u, 64u}) {
    const auto a = oracle::random_dense(n, n + 1, gen);
    const auto b = oracle::random_dense(n + 1, n / 2 + 1, gen);
    const auto expected = oracle::triple_loop_matmul(a, b);
    const Matrix got = statebench::matmul(to_matrix(a), to_matrix(b));
    for (std::size_t i = 0; i < expected.size(); ++i)
      for (std::size_t j = 0; j < expected[i].size(); ++j)
        CHECK(std::abs(got(i, j) - expected[i][j]) <= 1e-12 * std::max(1.0, std::abs(expected[i][j])));
  }
  // The 3x4 · 4x2 case spelled out.
  const auto a = oracle::random_dense(3, 4, gen);
  const auto b = oracle::random_dense(4, 2, gen);
  const auto expected = oracle::triple_loop_matmul(a, b);
  const Matrix got = statebench::matmul(to_matrix(a), to_matrix(b));
  CHECK(got.rows() == 3);
  CHECK(got.cols() == 2);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 2; ++j) CHECK(got(i, j) == doctest::Approx(expected[i][j]).epsilon(1e-12));
}

TEST_CASE("matmul_transposed equals matmul with an explicit transpose") {
  std::mt19937_64 gen(5);
  const Matrix a = to_matrix(oracle::random_dense(5, 6, gen));
  const Matrix b = to_matrix(oracle::random_dense(4, 6, gen));
  const Matrix x = statebench::matmul_transposed(a, b);
  const Matrix y = statebench::matmul(a, b.transpose());
  for (std::size_t i = 0; i < x.data().size(); ++i) CHECK(x.data()[i] == doctest::Approx(y.data()[i]).epsilon(1e-14));
}

TEST_CASE("row_l2_normalize") {
  const Matrix n = statebench::row_l2_normalize(Matrix{{3, 4}});
  CHECK(n(0, 0) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(n(0, 1) == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(statebench::row_l2_normalize(Matrix{{0, 0}}) == Matrix{{0, 0}});

  std::mt19937_64 gen(3);
  const Matrix m = to_matrix(oracle::random_dense(5, 8, gen));
  const Matrix once = statebench::row_l2_normalize(m);
  for (std::size_t r = 0; r < once.rows(); ++r) {
    double sq = 0.0;
    for (double x : once.row(r)) sq += x * x;
    CHECK(std::abs(std::sqrt(sq) - 1.0) <= 1e-12);
  }
  const Matrix twice = statebench::row_l2_normalize(once);
  for (std::size_t i = 0; i < once.data().size(); ++i) CHECK(std::abs(once.data()[i] - twice.data()[i]) <= 1e-12);
}

TEST_CASE("adam_step: zero gradient leaves parameters unchanged and advances t") {
  std::mt19937_64 gen(9);
  const Matrix params = to_matrix(oracle::random_dense(3, 4, gen));
  for (long start_step : {0L, 5L, 1000L}) {
    auto state = statebench::AdamState::for_params(params);
    state.step = start_step;
    for (int round = 0; round < 3; ++round) {
      auto [next, next_state] = statebench::adam_step(params, Matrix(3, 4), state);
      CHECK(next == params);
      CHECK(next_state.step == state.step + 1);
      state = next_state;
    }
  }
}

TEST_CASE("adam_step: first step matches the hand-executed recurrence") {
  // g = 1: m = 0.1, v = 0.001, m̂ = 1, v̂ = 1, p = 1 - 0.001 / (1 + 1e-8).
  const double expected = 1.0 - 0.001 / (1.0 + 1e-8);
  const Matrix p{{1.0}};
  auto [next, state] = statebench::adam_step(p, Matrix{{1.0}}, statebench::AdamState::for_params(p));
  CHECK(std::abs(next(0, 0) - expected) <= 1e-15);
  CHECK(state.step == 1);
  CHECK(state.m(0, 0) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(state.v(0, 0) == doctest::Approx(0.001).epsilon(1e-15));
}

TEST_CASE("adam_step: descends on p^2") {
  Matrix p{{1.0}};
  auto state = statebench::AdamState::for_params(p);
  for (int i = 0; i < 100; ++i) statebench::adam_update(p, Matrix{{2.0 * p(0, 0)}}, state);
  CHECK(std::abs(p(0, 0)) < 1.0);
}

TEST_CASE("adam_step: shape mismatch and bad hyperparameters") {
  const Matrix p(2, 2);
  CHECK_THROWS_AS(statebench::adam_step(p, Matrix(2, 3), statebench::AdamState::for_params(p)),
                  statebench::DimensionError);
  CHECK_THROWS_AS(statebench::AdamState::for_params(p, 0.0), statebench::ConfigError);
  CHECK_THROWS_AS(statebench::AdamState::for_params(p, 0.001, 1.0), statebench::ConfigError);
}

TEST_CASE("argmax_index") {
  CHECK(statebench::argmax_index(std::vector<double>{0.1, 0.9, 0.3}) == 1);
  CHECK(statebench::argmax_index(std::vector<double>{5, 5}) == 0);
  CHECK_THROWS_AS(statebench::argmax_index(std::vector<double>{}), statebench::PreconditionError);

  std::mt19937_64 gen(21);
  std::uniform_real_distribution<double> dist(-10, 10);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> v(100);
    for (double& x : v) x = dist(gen);
    const std::size_t expected = oracle::linear_scan_argmax(v);
    CHECK(statebench::argmax_index(v) == expected);
    // Positive affine maps preserve the winner.
    const double alpha = std::abs(dist(gen)) + 0.01;
    const double shift = dist(gen);
    std::vector<double> w(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) w[i] = alpha * v[i] + shift;
    CHECK(statebench::argmax_index(w) == expected);
  }
}
