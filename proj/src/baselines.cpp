#include "statebench/baselines.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>

#include "statebench/error.hpp"
#include "statebench/rng.hpp"

namespace statebench::baselines {

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("cosine_similarity: lengths differ");
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (na == 0.0 || nb == 0.0) throw PreconditionError("cosine_similarity: zero vector");
  return std::clamp(statebench::dot(a, b) / (na * nb), -1.0, 1.0);
}

double dot_product(std::span<const double> a, std::span<const double> b) { return statebench::dot(a, b); }

std::vector<std::uint8_t> quantize_uint8(std::span<const double> v, double lo, double hi) {
  if (!(hi > lo)) throw PreconditionError("quantize_uint8: hi must exceed lo");
  std::vector<std::uint8_t> out(v.size());
  const double scale = 255.0 / (hi - lo);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double level = std::floor((v[i] - lo) * scale + 0.5);
    out[i] = static_cast<std::uint8_t>(std::clamp(level, 0.0, 255.0));
  }
  return out;
}

std::size_t hamming_distance_bits(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  if (a.size() != b.size()) {
    throw DimensionError("hamming_distance_bits: lengths " + std::to_string(a.size()) + " and " +
                         std::to_string(b.size()) + " differ");
  }
  std::size_t bits = 0;
  for (std::size_t i = 0; i < a.size(); ++i) bits += std::popcount(static_cast<unsigned>(a[i] ^ b[i]));
  return bits;
}

// ---------------------------------------------------------------------------

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    acc += diff * diff;
  }
  return acc;
}

std::size_t nearest_row(const Matrix& centroids, std::span<const double> v) {
  std::size_t best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.rows(); ++c) {
    const double dist = squared_distance(centroids.row(c), v);
    if (dist < best_dist) {
      best_dist = dist;
      best = c;
    }
  }
  return best;
}

}  // namespace

PqCodebook pq_fit(const Matrix& train, std::size_t m, std::size_t k_star, std::size_t iters, std::uint64_t seed) {
  if (m == 0 || train.cols() % m != 0) {
    throw ConfigError("pq_fit: dimension " + std::to_string(train.cols()) + " is not divisible by m = " +
                      std::to_string(m));
  }
  if (k_star == 0) throw ConfigError("pq_fit: k_star must be positive");
  if (train.rows() < k_star) {
    throw PreconditionError("pq_fit: " + std::to_string(train.rows()) + " training rows, need at least k_star = " +
                            std::to_string(k_star));
  }

  PqCodebook book;
  book.m = m;
  book.k_star = k_star;
  book.sub_dim = train.cols() / m;
  Rng rng(seed);
  const std::size_t n = train.rows();

  for (std::size_t s = 0; s < m; ++s) {
    const std::size_t offset = s * book.sub_dim;
    auto sub = [&](std::size_t r) { return train.row(r).subspan(offset, book.sub_dim); };

    // Partial Fisher-Yates picks k_star distinct rows.
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    for (std::size_t i = 0; i < k_star; ++i) {
      const auto j = i + static_cast<std::size_t>(rng.below(n - i));
      std::swap(order[i], order[j]);
    }
    Matrix centroids(k_star, book.sub_dim);
    for (std::size_t c = 0; c < k_star; ++c) {
      const auto src = sub(order[c]);
      std::copy(src.begin(), src.end(), centroids.row(c).begin());
    }

    std::vector<std::size_t> assignment(n, std::numeric_limits<std::size_t>::max());
    for (std::size_t it = 0; it < iters; ++it) {
      bool changed = false;
      for (std::size_t r = 0; r < n; ++r) {
        const std::size_t c = nearest_row(centroids, sub(r));
        changed |= c != assignment[r];
        assignment[r] = c;
      }
      if (!changed) break;
      Matrix sums(k_star, book.sub_dim);
      std::vector<std::size_t> counts(k_star, 0);
      for (std::size_t r = 0; r < n; ++r) {
        const auto src = sub(r);
        auto dst = sums.row(assignment[r]);
        for (std::size_t j = 0; j < src.size(); ++j) dst[j] += src[j];
        ++counts[assignment[r]];
      }
      // Empty clusters keep their previous centroid.
      for (std::size_t c = 0; c < k_star; ++c) {
        if (counts[c] == 0) continue;
        auto dst = centroids.row(c);
        const auto src = sums.row(c);
        for (std::size_t j = 0; j < dst.size(); ++j) dst[j] = src[j] / static_cast<double>(counts[c]);
      }
    }
    book.centroids.push_back(std::move(centroids));
  }
  return book;
}

PqCode pq_encode(const PqCodebook& codebook, std::span<const double> v) {
  if (v.size() != codebook.dim()) {
    throw DimensionError("pq_encode: vector length " + std::to_string(v.size()) + ", codebook dimension " +
                         std::to_string(codebook.dim()));
  }
  PqCode code(codebook.m);
  for (std::size_t s = 0; s < codebook.m; ++s) {
    code[s] = static_cast<std::uint32_t>(
        nearest_row(codebook.centroids[s], v.subspan(s * codebook.sub_dim, codebook.sub_dim)));
  }
  return code;
}

std::vector<double> pq_decode(const PqCodebook& codebook, const PqCode& code) {
  if (code.size() != codebook.m) throw DimensionError("pq_decode: code length does not match m");
  std::vector<double> out;
  out.reserve(codebook.dim());
  for (std::size_t s = 0; s < codebook.m; ++s) {
    const auto row = codebook.centroids[s].row(code[s]);
    out.insert(out.end(), row.begin(), row.end());
  }
  return out;
}

std::size_t pq_code_distance(const PqCode& a, const PqCode& b) {
  if (a.size() != b.size()) throw DimensionError("pq_code_distance: code lengths differ");
  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < a.size(); ++i) mismatches += a[i] != b[i];
  return mismatches;
}

// ---------------------------------------------------------------------------

const char* metric_name(Metric metric) {
  switch (metric) {
    case Metric::Cosine: return "cosine";
    case Metric::Dot: return "dot";
    case Metric::HammingBytes: return "binary";
    case Metric::PqCodes: return "pq";
  }
  return "unknown";
}

NearestNeighborIndex::NearestNeighborIndex(Metric metric, const Matrix& vectors, std::vector<std::string> labels)
    : metric_(metric), dim_(vectors.cols()), labels_(std::move(labels)) {
  if (labels_.size() != vectors.rows()) {
    throw DimensionError("nearest neighbour index: " + std::to_string(vectors.rows()) + " vectors but " +
                         std::to_string(labels_.size()) + " labels");
  }
}

NearestNeighborIndex NearestNeighborIndex::cosine(const Matrix& vectors, std::vector<std::string> labels) {
  NearestNeighborIndex index(Metric::Cosine, vectors, std::move(labels));
  index.vectors_ = vectors;
  for (std::size_t r = 0; r < vectors.rows(); ++r) index.norms_.push_back(l2_norm(vectors.row(r)));
  return index;
}

NearestNeighborIndex NearestNeighborIndex::dot(const Matrix& vectors, std::vector<std::string> labels) {
  NearestNeighborIndex index(Metric::Dot, vectors, std::move(labels));
  index.vectors_ = vectors;
  return index;
}

NearestNeighborIndex NearestNeighborIndex::hamming_bytes(const Matrix& vectors, std::vector<std::string> labels) {
  NearestNeighborIndex index(Metric::HammingBytes, vectors, std::move(labels));
  if (!vectors.empty()) {
    const auto [lo, hi] = std::minmax_element(vectors.data().begin(), vectors.data().end());
    index.lo_ = *lo;
    // Constant training data would give an empty range.
    index.hi_ = *hi > *lo ? *hi : *lo + 1.0;
  }
  for (std::size_t r = 0; r < vectors.rows(); ++r)
    index.bytes_.push_back(quantize_uint8(vectors.row(r), index.lo_, index.hi_));
  return index;
}

NearestNeighborIndex NearestNeighborIndex::product_quantized(const Matrix& vectors, std::vector<std::string> labels,
                                                             const PqParams& params) {
  NearestNeighborIndex index(Metric::PqCodes, vectors, std::move(labels));
  index.codebook_ = pq_fit(vectors, params.m, params.k_star, params.iters, params.seed);
  for (std::size_t r = 0; r < vectors.rows(); ++r) index.codes_.push_back(pq_encode(index.codebook_, vectors.row(r)));
  return index;
}

std::vector<double> NearestNeighborIndex::scores(std::span<const double> query) const {
  if (query.size() != dim_) {
    throw DimensionError("knn: query length " + std::to_string(query.size()) + ", index dimension " +
                         std::to_string(dim_));
  }
  std::vector<double> out(size());
  switch (metric_) {
    case Metric::Cosine: {
      const double qn = l2_norm(query);
      for (std::size_t i = 0; i < out.size(); ++i) {
        const double denom = qn * norms_[i];
        // Zero vectors have no direction; rank them below every real match.
        out[i] = denom == 0.0 ? -std::numeric_limits<double>::infinity()
                              : statebench::dot(query, vectors_.row(i)) / denom;
      }
      break;
    }
    case Metric::Dot:
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = statebench::dot(query, vectors_.row(i));
      break;
    case Metric::HammingBytes: {
      const auto q = quantize_uint8(query, lo_, hi_);
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = -static_cast<double>(hamming_distance_bits(q, bytes_[i]));
      break;
    }
    case Metric::PqCodes: {
      const auto q = pq_encode(codebook_, query);
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = -static_cast<double>(pq_code_distance(q, codes_[i]));
      break;
    }
  }
  return out;
}

std::size_t NearestNeighborIndex::best_index(std::span<const double> query) const {
  if (size() == 0) throw PreconditionError("knn: empty index");
  return argmax_index(scores(query));
}

const std::string& knn_predict(const NearestNeighborIndex& index, std::span<const double> query) {
  return index.labels()[index.best_index(query)];
}

// ---------------------------------------------------------------------------

GaussianNbModel nb_fit(const Matrix& x, std::span<const std::size_t> y, std::size_t k) {
  if (y.size() != x.rows()) throw DimensionError("nb_fit: label count does not match rows");
  const std::size_t d = x.cols();
  GaussianNbModel model;
  model.priors.assign(k, 0.0);
  model.means = Matrix(k, d);
  model.variances = Matrix(k, d);

  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] >= k) throw PreconditionError("nb_fit: label out of range");
    ++counts[y[i]];
    auto mean = model.means.row(y[i]);
    const auto row = x.row(i);
    for (std::size_t j = 0; j < d; ++j) mean[j] += row[j];
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] < 2) {
      throw PreconditionError("nb_fit: class " + std::to_string(c) + " has " + std::to_string(counts[c]) +
                              " rows, needs at least 2");
    }
    for (double& v : model.means.row(c)) v /= static_cast<double>(counts[c]);
    model.priors[c] = static_cast<double>(counts[c]) / static_cast<double>(y.size());
  }
  for (std::size_t i = 0; i < y.size(); ++i) {
    auto var = model.variances.row(y[i]);
    const auto mean = model.means.row(y[i]);
    const auto row = x.row(i);
    for (std::size_t j = 0; j < d; ++j) var[j] += (row[j] - mean[j]) * (row[j] - mean[j]);
  }
  for (std::size_t c = 0; c < k; ++c)
    for (double& v : model.variances.row(c)) v /= static_cast<double>(counts[c]);

  // Floor relative to the widest dimension of the pooled training data.
  double max_var = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) mean += x(i, j);
    mean /= static_cast<double>(x.rows());
    double var = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) var += (x(i, j) - mean) * (x(i, j) - mean);
    max_var = std::max(max_var, var / static_cast<double>(x.rows()));
  }
  model.var_floor = max_var > 0.0 ? 1e-9 * max_var : 1e-9;
  for (double& v : model.variances.data()) v = std::max(v, model.var_floor);
  return model;
}

std::vector<double> nb_log_posteriors(const GaussianNbModel& model, std::span<const double> q) {
  if (q.size() != model.means.cols()) throw DimensionError("nb_predict: query length does not match model");
  std::vector<double> out(model.num_classes());
  const double log_two_pi = std::log(2.0 * std::numbers::pi);
  for (std::size_t c = 0; c < out.size(); ++c) {
    double acc = std::log(model.priors[c]);
    const auto mean = model.means.row(c);
    const auto var = model.variances.row(c);
    for (std::size_t j = 0; j < q.size(); ++j) {
      const double diff = q[j] - mean[j];
      acc -= 0.5 * (log_two_pi + std::log(var[j]) + diff * diff / var[j]);
    }
    out[c] = acc;
  }
  return out;
}

std::size_t nb_predict(const GaussianNbModel& model, std::span<const double> q) {
  return argmax_index(nb_log_posteriors(model, q));
}

// ---------------------------------------------------------------------------

namespace {

Matrix uniform_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix out(rows, cols);
  for (double& x : out.data()) x = rng.uniform(-0.1, 0.1);
  return out;
}

struct MlpForward {
  Matrix pre_hidden;  // (n, hidden)
  Matrix hidden;      // relu(pre_hidden)
  Matrix logits;      // (n, k)
};

MlpForward mlp_forward(const MlpModel& model, const Matrix& x) {
  MlpForward f;
  f.pre_hidden = matmul_transposed(x, model.w1);
  for (std::size_t i = 0; i < f.pre_hidden.rows(); ++i) {
    auto row = f.pre_hidden.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += model.b1(0, j);
  }
  f.hidden = f.pre_hidden;
  for (double& v : f.hidden.data()) v = std::max(v, 0.0);
  f.logits = matmul_transposed(f.hidden, model.w2);
  for (std::size_t i = 0; i < f.logits.rows(); ++i) {
    auto row = f.logits.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += model.b2(0, j);
  }
  return f;
}

Matrix column_sums(const Matrix& m) {
  Matrix out(1, m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(0, j) += m(i, j);
  return out;
}

}  // namespace

MlpModel mlp_train(const Matrix& x, std::span<const std::size_t> y, std::size_t k, const MlpConfig& cfg) {
  if (y.size() != x.rows()) throw DimensionError("mlp_train: label count does not match rows");
  if (k == 0) throw PreconditionError("mlp_train: k must be positive");
  if (cfg.hidden == 0) throw ConfigError("mlp_train: hidden width must be positive");
  for (std::size_t label : y)
    if (label >= k) throw PreconditionError("mlp_train: label out of range");

  Rng rng(cfg.seed);
  MlpModel model;
  model.w1 = uniform_matrix(cfg.hidden, x.cols(), rng);
  model.b1 = uniform_matrix(1, cfg.hidden, rng);
  model.w2 = uniform_matrix(k, cfg.hidden, rng);
  model.b2 = uniform_matrix(1, k, rng);
  if (x.rows() == 0) return model;

  AdamState s_w1 = AdamState::for_params(model.w1, cfg.learning_rate);
  AdamState s_b1 = AdamState::for_params(model.b1, cfg.learning_rate);
  AdamState s_w2 = AdamState::for_params(model.w2, cfg.learning_rate);
  AdamState s_b2 = AdamState::for_params(model.b2, cfg.learning_rate);
  const auto n = static_cast<double>(x.rows());

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const MlpForward f = mlp_forward(model, x);
    // Softmax cross-entropy; grad_logits = (softmax − onehot) / n.
    Matrix grad_logits = f.logits;
    double loss = 0.0;
    for (std::size_t i = 0; i < grad_logits.rows(); ++i) {
      auto row = grad_logits.row(i);
      const double peak = *std::max_element(row.begin(), row.end());
      double total = 0.0;
      for (double& v : row) {
        v = std::exp(v - peak);
        total += v;
      }
      for (double& v : row) v /= total;
      loss -= std::log(std::max(row[y[i]], std::numeric_limits<double>::min()));
      row[y[i]] -= 1.0;
      for (double& v : row) v /= n;
    }
    loss /= n;
    if (!std::isfinite(loss)) throw TrainingError(epoch, "mlp: non-finite loss");

    const Matrix grad_w2 = matmul(grad_logits.transpose(), f.hidden);
    const Matrix grad_b2 = column_sums(grad_logits);
    Matrix grad_hidden = matmul(grad_logits, model.w2);
    for (std::size_t i = 0; i < grad_hidden.data().size(); ++i)
      if (f.pre_hidden.data()[i] <= 0.0) grad_hidden.data()[i] = 0.0;
    const Matrix grad_w1 = matmul(grad_hidden.transpose(), x);
    const Matrix grad_b1 = column_sums(grad_hidden);

    adam_update(model.w1, grad_w1, s_w1);
    adam_update(model.b1, grad_b1, s_b1);
    adam_update(model.w2, grad_w2, s_w2);
    adam_update(model.b2, grad_b2, s_b2);
  }
  return model;
}

std::vector<double> mlp_logits(const MlpModel& model, std::span<const double> q) {
  if (q.size() != model.w1.cols()) throw DimensionError("mlp_predict: query length does not match model");
  Matrix row(1, q.size(), std::vector<double>(q.begin(), q.end()));
  const MlpForward f = mlp_forward(model, row);
  return {f.logits.data().begin(), f.logits.data().end()};
}

std::size_t mlp_predict(const MlpModel& model, std::span<const double> q) { return argmax_index(mlp_logits(model, q)); }

// ---------------------------------------------------------------------------

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

LogRegModel logreg_fit(const Matrix& positives, const Matrix& negatives, const LogRegConfig& cfg) {
  if (positives.rows() == 0 || negatives.rows() == 0) {
    throw PreconditionError("logreg_fit: both classes need at least one row");
  }
  if (positives.cols() != negatives.cols()) throw DimensionError("logreg_fit: class dimensions differ");
  if (!(cfg.learning_rate > 0.0)) throw ConfigError("logreg_fit: learning rate must be positive");

  const std::size_t d = positives.cols();
  const auto n = static_cast<double>(positives.rows() + negatives.rows());
  LogRegModel model{std::vector<double>(d, 0.0), 0.0};
  std::vector<double> grad_w(d);

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::fill(grad_w.begin(), grad_w.end(), 0.0);
    double grad_b = 0.0;
    double loss = 0.0;
    const auto accumulate = [&](const Matrix& rows, double label) {
      for (std::size_t i = 0; i < rows.rows(); ++i) {
        const auto row = rows.row(i);
        const double z = statebench::dot(model.weights, row) + model.bias;
        const double p = sigmoid(z);
        // log(1 + e^z) − label·z, computed without overflow.
        loss += std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))) - label * z;
        const double err = p - label;
        for (std::size_t j = 0; j < d; ++j) grad_w[j] += err * row[j];
        grad_b += err;
      }
    };
    accumulate(positives, 0.0);
    accumulate(negatives, 1.0);
    if (!std::isfinite(loss)) throw TrainingError(epoch, "logreg: non-finite loss");
    for (std::size_t j = 0; j < d; ++j) model.weights[j] -= cfg.learning_rate * grad_w[j] / n;
    model.bias -= cfg.learning_rate * grad_b / n;
  }
  return model;
}

double logreg_probability(const LogRegModel& model, std::span<const double> q) {
  if (q.size() != model.weights.size()) throw DimensionError("logreg_predict: query length does not match model");
  return sigmoid(statebench::dot(model.weights, q) + model.bias);
}

std::size_t logreg_predict(const LogRegModel& model, std::span<const double> q) {
  return logreg_probability(model, q) > 0.5 ? 1 : 0;
}

}  // namespace statebench::baselines
