#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "statebench/linalg.hpp"

namespace statebench {

struct EmbeddingRecord {
  std::string noun;
  std::string adjective;
  std::vector<double> embedding;
  std::string source_id;

  friend bool operator==(const EmbeddingRecord&, const EmbeddingRecord&) = default;
};

/// Which label defines a class: the adjective alone, or the (noun, adjective) pair.
enum class ClassKey { Adjective, NounAdjective };

/// Class label for a record under `key`. Pair labels are "noun/adjective".
std::string class_label(const EmbeddingRecord& record, ClassKey key);

// Immutable after construction. Records keep their input order.
class LabeledDataset {
 public:
  LabeledDataset() = default;
  /// Throws PreconditionError if any record violates the dimension or label invariants.
  LabeledDataset(std::size_t dim, std::vector<EmbeddingRecord> records);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }
  const std::vector<EmbeddingRecord>& records() const noexcept { return records_; }

  /// Record indices grouped by class label, labels in lexicographic order,
  /// indices in record order within each class.
  std::map<std::string, std::vector<std::size_t>> class_indices(ClassKey key) const;

  /// Class sizes keyed by label.
  std::map<std::string, std::size_t> class_sizes(ClassKey key) const;

  /// Distinct nouns, sorted.
  std::vector<std::string> nouns() const;

  /// Subset preserving record order.
  LabeledDataset select(const std::vector<std::size_t>& indices) const;

  /// Embeddings stacked row-wise in record order.
  Matrix embeddings() const;

 private:
  std::size_t dim_ = 0;
  std::vector<EmbeddingRecord> records_;
};

struct SplitDataset {
  LabeledDataset train;
  LabeledDataset test;
};

/// Reads `noun,adjective,source_id,e0,...,e{d-1}`. Throws ParseError naming the line.
LabeledDataset load_embedding_csv(const std::filesystem::path& path);

/// Writes the same format with shortest round-trip float text.
void save_embedding_csv(const LabeledDataset& ds, const std::filesystem::path& path);

/// Keeps (noun, adjective) classes with at least `min_size` records.
LabeledDataset filter_min_class_size(const LabeledDataset& ds, std::size_t min_size = 21);

/// Per class, the first `n` records in input order go to train and the rest to test.
/// Throws PreconditionError naming any class with `n` or fewer records.
SplitDataset split_first_n(const LabeledDataset& ds, std::size_t n = 20,
                           ClassKey key = ClassKey::NounAdjective);

/// Per class, seeded shuffle, then floor(ratio * size) records to train.
/// Each class draws from its own generator seeded by (seed, class label), so one
/// class's split does not depend on which other classes are present.
SplitDataset split_shuffled_ratio(const LabeledDataset& ds, double ratio, std::uint64_t seed,
                                  ClassKey key = ClassKey::Adjective);

/// Arithmetic mean embedding per class label.
std::map<std::string, std::vector<double>> class_means(const LabeledDataset& ds, ClassKey key);

/// k classes with centers uniform on the sphere of radius `center_scale`, and
/// `n_per` points per class with isotropic Gaussian noise. Labels "class_0".."class_{k-1}",
/// noun "synthetic".
LabeledDataset gen_gaussian_clusters(std::size_t k, std::size_t n_per, std::size_t d, double center_scale,
                                     double noise_sigma, std::uint64_t seed);

inline const std::vector<double> kDefaultOrthogonalAngles{5, 10, 15, 20, 25, 30};

/// Two classes on the axes (1,0) and (0,1); each class holds its axis vector
/// rotated by +a and -a degrees for every listed angle.
LabeledDataset gen_orthogonal_2d(const std::vector<double>& angles_deg = kDefaultOrthogonalAngles);

}  // namespace statebench
