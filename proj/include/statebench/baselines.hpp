#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "statebench/linalg.hpp"

namespace statebench::baselines {

// ---------------------------------------------------------------------------
// Similarity primitives
// ---------------------------------------------------------------------------

/// A·B / (‖A‖·‖B‖). Throws PreconditionError if either vector is zero.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

double dot_product(std::span<const double> a, std::span<const double> b);

/// Affine map [lo, hi] → [0, 255], clamped, rounded half-up.
std::vector<std::uint8_t> quantize_uint8(std::span<const double> v, double lo, double hi);

/// Number of differing bits across all bytes.
std::size_t hamming_distance_bits(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);

// ---------------------------------------------------------------------------
// Product quantization
// ---------------------------------------------------------------------------

struct PqParams {
  std::size_t m = 8;        // subspaces
  std::size_t k_star = 16;  // centroids per subspace
  std::size_t iters = 25;   // Lloyd iterations
  std::uint64_t seed = 0;
};

using PqCode = std::vector<std::uint32_t>;

struct PqCodebook {
  std::size_t m = 0;
  std::size_t k_star = 0;
  std::size_t sub_dim = 0;
  std::vector<Matrix> centroids;  // m entries, each (k_star, sub_dim)

  std::size_t dim() const noexcept { return m * sub_dim; }
};

/// Per-subspace k-means seeded with distinct random training rows.
/// Throws ConfigError when d is not divisible by m, PreconditionError when rows < k_star.
PqCodebook pq_fit(const Matrix& train, std::size_t m, std::size_t k_star, std::size_t iters, std::uint64_t seed);

/// Nearest centroid per subspace (Euclidean, ties to the lowest index).
PqCode pq_encode(const PqCodebook& codebook, std::span<const double> v);

/// Concatenated centroids selected by `code`.
std::vector<double> pq_decode(const PqCodebook& codebook, const PqCode& code);

/// Count of positions whose symbols differ.
std::size_t pq_code_distance(const PqCode& a, const PqCode& b);

// ---------------------------------------------------------------------------
// 1-nearest-neighbour retrieval over stored training embeddings
// ---------------------------------------------------------------------------

enum class Metric { Cosine, Dot, HammingBytes, PqCodes };

const char* metric_name(Metric metric);

class NearestNeighborIndex {
 public:
  static NearestNeighborIndex cosine(const Matrix& vectors, std::vector<std::string> labels);
  static NearestNeighborIndex dot(const Matrix& vectors, std::vector<std::string> labels);
  /// Quantizes with lo/hi set to the global min/max of `vectors`.
  static NearestNeighborIndex hamming_bytes(const Matrix& vectors, std::vector<std::string> labels);
  static NearestNeighborIndex product_quantized(const Matrix& vectors, std::vector<std::string> labels,
                                                const PqParams& params);

  Metric metric() const noexcept { return metric_; }
  std::size_t size() const noexcept { return labels_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }

  /// Index of the best stored item (max similarity or min distance; ties to the lowest index).
  std::size_t best_index(std::span<const double> query) const;

  /// Per-item score where larger is better: similarity, or negated distance.
  std::vector<double> scores(std::span<const double> query) const;

  double quantize_lo() const noexcept { return lo_; }
  double quantize_hi() const noexcept { return hi_; }
  const PqCodebook& codebook() const noexcept { return codebook_; }

 private:
  NearestNeighborIndex(Metric metric, const Matrix& vectors, std::vector<std::string> labels);

  Metric metric_;
  std::size_t dim_ = 0;
  std::vector<std::string> labels_;
  Matrix vectors_;                               // cosine, dot
  std::vector<double> norms_;                    // cosine
  std::vector<std::vector<std::uint8_t>> bytes_; // hamming
  double lo_ = 0.0;
  double hi_ = 1.0;
  PqCodebook codebook_;                          // pq
  std::vector<PqCode> codes_;
};

/// Label of the best stored item. Throws PreconditionError on an empty index.
const std::string& knn_predict(const NearestNeighborIndex& index, std::span<const double> query);

// ---------------------------------------------------------------------------
// Gaussian naive Bayes
// ---------------------------------------------------------------------------

struct GaussianNbModel {
  std::vector<double> priors;  // k
  Matrix means;                // (k, d)
  Matrix variances;            // (k, d), each >= var_floor
  double var_floor = 0.0;

  std::size_t num_classes() const noexcept { return priors.size(); }
};

/// Per-class priors, means and population variances floored at 1e-9 × the largest
/// per-dimension variance of the whole training set.
/// Throws PreconditionError if a class has fewer than two rows.
GaussianNbModel nb_fit(const Matrix& x, std::span<const std::size_t> y, std::size_t k);

/// log P(Y=k) + Σ log N(x_i; μ_ki, σ²_ki), without the class-independent evidence term.
std::vector<double> nb_log_posteriors(const GaussianNbModel& model, std::span<const double> q);

std::size_t nb_predict(const GaussianNbModel& model, std::span<const double> q);

// ---------------------------------------------------------------------------
// Small MLP: d → hidden (ReLU) → k, softmax cross-entropy, full-batch Adam
// ---------------------------------------------------------------------------

struct MlpConfig {
  std::size_t epochs = 500;
  double learning_rate = 0.01;
  std::size_t hidden = 5;
  std::uint64_t seed = 0;
};

struct MlpModel {
  Matrix w1;  // (hidden, d)
  Matrix b1;  // (1, hidden)
  Matrix w2;  // (k, hidden)
  Matrix b2;  // (1, k)

  std::size_t num_classes() const noexcept { return w2.rows(); }
};

MlpModel mlp_train(const Matrix& x, std::span<const std::size_t> y, std::size_t k, const MlpConfig& cfg);
std::vector<double> mlp_logits(const MlpModel& model, std::span<const double> q);
std::size_t mlp_predict(const MlpModel& model, std::span<const double> q);

// ---------------------------------------------------------------------------
// Binary logistic regression: positives are class 0, negatives class 1
// ---------------------------------------------------------------------------

struct LogRegConfig {
  std::size_t epochs = 1000;
  double learning_rate = 0.1;
  std::uint64_t seed = 0;  // initialization is all-zero; kept for a uniform config surface
};

struct LogRegModel {
  std::vector<double> weights;
  double bias = 0.0;
};

LogRegModel logreg_fit(const Matrix& positives, const Matrix& negatives, const LogRegConfig& cfg);

/// σ(w·q + b), the probability of class 1.
double logreg_probability(const LogRegModel& model, std::span<const double> q);

/// 1 when the class-1 probability exceeds 0.5, else 0.
std::size_t logreg_predict(const LogRegModel& model, std::span<const double> q);

}  // namespace statebench::baselines
