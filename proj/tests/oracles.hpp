#pragma once

// Independent reference computations for the test suites. Nothing here calls into
// the library's numeric kernels; each oracle is the textbook definition written out.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

using Dense = std::vector<std::vector<double>>;

inline Dense random_dense(std::size_t rows, std::size_t cols, std::mt19937_64& gen, double lo = -1.0,
                          double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Dense out(rows, std::vector<double>(cols));
  for (auto& r : out)
    for (double& x : r) x = dist(gen);
  return out;
}

inline Dense triple_loop_matmul(const Dense& a, const Dense& b) {
  Dense out(a.size(), std::vector<double>(b.front().size(), 0.0));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.front().size(); ++j)
      for (std::size_t p = 0; p < b.size(); ++p) out[i][j] += a[i][p] * b[p][j];
  return out;
}

inline Dense transpose(const Dense& a) {
  Dense out(a.front().size(), std::vector<double>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j) out[j][i] = a[i][j];
  return out;
}

inline std::size_t linear_scan_argmax(const std::vector<double>& v) {
  std::size_t best = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] > best_value) {
      best_value = v[i];
      best = i;
    }
  }
  return best;
}

inline std::size_t popcount_xor(std::uint8_t a, std::uint8_t b) {
  unsigned x = static_cast<unsigned>(a ^ b);
  std::size_t bits = 0;
  while (x != 0) {
    bits += x & 1u;
    x >>= 1;
  }
  return bits;
}

/// Cyclic Jacobi rotation; returns eigenvalues sorted descending.
inline std::vector<double> jacobi_eigenvalues(Dense a) {
  const std::size_t n = a.size();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(a[p][q]) < 1e-300) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k][p];
          const double akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p][k];
          const double aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> eig(n);
  for (std::size_t i = 0; i < n; ++i) eig[i] = a[i][i];
  std::sort(eig.begin(), eig.end(), std::greater<>());
  return eig;
}

/// Sample covariance (divides by n - 1).
inline Dense covariance(const Dense& x) {
  const std::size_t n = x.size();
  const std::size_t d = x.front().size();
  std::vector<double> mean(d, 0.0);
  for (const auto& r : x)
    for (std::size_t j = 0; j < d; ++j) mean[j] += r[j] / static_cast<double>(n);
  Dense cov(d, std::vector<double>(d, 0.0));
  for (const auto& r : x)
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) cov[i][j] += (r[i] - mean[i]) * (r[j] - mean[j]) / static_cast<double>(n - 1);
  return cov;
}

/// Exhaustive two-means: every split of the rows into two nonempty groups, minimum SSE.
/// Returns the two centroids ordered lexicographically.
inline Dense brute_force_two_means(const Dense& x) {
  const std::size_t n = x.size();
  const std::size_t d = x.front().size();
  double best_sse = std::numeric_limits<double>::infinity();
  Dense best;
  for (std::uint32_t mask = 1; mask + 1 < (1u << n); ++mask) {
    Dense centroid(2, std::vector<double>(d, 0.0));
    std::size_t count[2] = {0, 0};
    for (std::size_t i = 0; i < n; ++i) {
      const int g = (mask >> i) & 1u;
      ++count[g];
      for (std::size_t j = 0; j < d; ++j) centroid[g][j] += x[i][j];
    }
    for (int g = 0; g < 2; ++g)
      for (double& v : centroid[g]) v /= static_cast<double>(count[g]);
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const int g = (mask >> i) & 1u;
      for (std::size_t j = 0; j < d; ++j) sse += (x[i][j] - centroid[g][j]) * (x[i][j] - centroid[g][j]);
    }
    if (sse < best_sse - 1e-12) {
      best_sse = sse;
      best = centroid;
    }
  }
  std::sort(best.begin(), best.end());
  return best;
}

/// Gaussian density N(x; mean, var).
inline double gaussian_pdf(double x, double mean, double var) {
  return std::exp(-(x - mean) * (x - mean) / (2.0 * var)) / std::sqrt(2.0 * std::numbers::pi * var);
}

}  // namespace oracle
