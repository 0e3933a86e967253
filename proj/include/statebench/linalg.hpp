#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace statebench {

// Dense row-major matrix of doubles. Holds the training data, basis vectors,
// target matrix and every intermediate product.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  /// Stacks equal-length vectors as rows.
  static Matrix from_rows(std::span<const std::vector<double>> rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  Matrix transpose() const;
  bool all_finite() const;

  /// "RxC", used in error messages.
  std::string shape_string() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);

/// a * bᵀ without materializing the transpose.
Matrix matmul_transposed(const Matrix& a, const Matrix& b);

Matrix operator-(const Matrix& a, const Matrix& b);

/// Scales each row to unit L2 norm. Rows with zero norm are returned unchanged.
Matrix row_l2_normalize(const Matrix& m);

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> v);

/// Index of the largest element; ties resolve to the lowest index.
std::size_t argmax_index(std::span<const double> v);

struct AdamState {
  Matrix m;
  Matrix v;
  long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double learning_rate = 0.001;

  /// Zeroed moments shaped like `params`. Throws ConfigError on invalid hyperparameters.
  static AdamState for_params(const Matrix& params, double learning_rate = 0.001, double beta1 = 0.9,
                              double beta2 = 0.999, double epsilon = 1e-8);
};

/// One bias-corrected Adam update:
///   m ← β1·m + (1−β1)·g,  v ← β2·v + (1−β2)·g²
///   p ← p − η · m̂ / (√v̂ + ε),  m̂ = m/(1−β1ᵗ), v̂ = v/(1−β2ᵗ)
std::pair<Matrix, AdamState> adam_step(const Matrix& params, const Matrix& grads, AdamState state);

/// In-place variant used by the training loops.
void adam_update(Matrix& params, const Matrix& grads, AdamState& state);

}  // namespace statebench
