#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "statebench/dataset.hpp"
#include "statebench/linalg.hpp"

namespace statebench::bvm {

enum class LossVariant {
  MeanSquared,  // mean of (D·Bᵀ − T)² over every entry
  SignedMean,   // mean of the raw entries of D·Bᵀ − T
};

struct TrainConfig {
  std::size_t epochs = 1000;
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  LossVariant loss = LossVariant::MeanSquared;
  std::uint64_t seed = 0;

  /// Throws ConfigError when epochs < 1, learning_rate <= 0, or the Adam constants are out of range.
  void validate() const;
};

/// Trained basis vectors plus the one-hot target that ties training rows to classes.
struct BvmModel {
  std::vector<std::string> classes;     // k labels; column j of T and row j of B
  Matrix basis;                         // (k, d)
  Matrix target;                        // (R, k), one 1 per row
  std::vector<std::size_t> row_class;   // class of training row i, length R

  std::size_t num_classes() const noexcept { return classes.size(); }
  std::size_t dim() const noexcept { return basis.cols(); }

  /// Training rows per class when every class has the same count, else 0.
  std::size_t n_per_class() const;
};

struct TrainResult {
  BvmModel model;
  std::vector<double> loss_trace;  // one entry per epoch, measured after that epoch's normalization
};

/// One-hot (R, k) matrix with row i set at column assignment[i].
Matrix build_target(std::span<const std::size_t> assignment, std::size_t k);

/// Row j is the mean training embedding of classes[j] (not normalized).
Matrix init_basis_from_means(const LabeledDataset& train, const std::vector<std::string>& classes,
                             ClassKey key = ClassKey::Adjective);

double bvm_loss(const Matrix& data, const Matrix& basis, const Matrix& target,
                LossVariant variant = LossVariant::MeanSquared);

/// Closed-form d(loss)/d(basis), shape (k, d).
Matrix bvm_loss_gradient(const Matrix& data, const Matrix& basis, const Matrix& target,
                         LossVariant variant = LossVariant::MeanSquared);

/// Training matrix D (rows grouped by class in `classes` order, file order within a
/// class) with the matching untrained model: mean-initialized basis and target.
struct Problem {
  BvmModel model;
  Matrix data;
};
Problem prepare(const LabeledDataset& train, const std::vector<std::string>& classes,
                ClassKey key = ClassKey::Adjective);

/// Same, from rows already grouped per class (groups[j] holds the rows of classes[j]).
Problem prepare_groups(const std::vector<std::string>& classes, const std::vector<Matrix>& groups);

/// Each epoch: normalize the basis rows, record the loss, take one Adam step on the
/// closed-form gradient. The returned basis is normalized once more after the last step.
/// Throws TrainingError on a non-finite loss or gradient.
TrainResult train(const BvmModel& model, const Matrix& data, const TrainConfig& cfg);

/// M = Q·Bᵀ·Tᵀ, one score per training row.
std::vector<double> match_scores(std::span<const double> query, const BvmModel& model);

/// Per-class scores Q·Bᵀ.
std::vector<double> class_scores(std::span<const double> query, const BvmModel& model);

/// Class index owning the largest entry of the match scores.
std::size_t predict_index(std::span<const double> query, const BvmModel& model);

const std::string& predict(std::span<const double> query, const BvmModel& model);

/// JSON document {classes, n_per_class, basis}; the target is rebuilt on load.
/// Models whose classes have unequal training counts write "class_counts" instead of "n_per_class".
void save_model(const BvmModel& model, const std::filesystem::path& path);
BvmModel load_model(const std::filesystem::path& path);

std::string to_json_string(const BvmModel& model);
BvmModel from_json_string(const std::string& text);

}  // namespace statebench::bvm
