#include "statebench/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "statebench/error.hpp"
#include "statebench/format.hpp"
#include "statebench/rng.hpp"

namespace statebench {
namespace {

// FNV-1a; mixes a class label into a split seed.
std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void check_label(const std::string& label, const char* field) {
  if (label.empty()) throw PreconditionError(std::string("record has empty ") + field);
}

}  // namespace

std::string class_label(const EmbeddingRecord& record, ClassKey key) {
  return key == ClassKey::Adjective ? record.adjective : record.noun + "/" + record.adjective;
}

LabeledDataset::LabeledDataset(std::size_t dim, std::vector<EmbeddingRecord> records)
    : dim_(dim), records_(std::move(records)) {
  for (const auto& r : records_) {
    check_label(r.noun, "noun");
    check_label(r.adjective, "adjective");
    if (r.embedding.size() != dim_) {
      throw PreconditionError("record '" + r.source_id + "' has dimension " + std::to_string(r.embedding.size()) +
                              ", dataset declares " + std::to_string(dim_));
    }
  }
}

std::map<std::string, std::vector<std::size_t>> LabeledDataset::class_indices(ClassKey key) const {
  std::map<std::string, std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < records_.size(); ++i) out[class_label(records_[i], key)].push_back(i);
  return out;
}

std::map<std::string, std::size_t> LabeledDataset::class_sizes(ClassKey key) const {
  std::map<std::string, std::size_t> out;
  for (const auto& r : records_) ++out[class_label(r, key)];
  return out;
}

std::vector<std::string> LabeledDataset::nouns() const {
  std::set<std::string> seen;
  for (const auto& r : records_) seen.insert(r.noun);
  return {seen.begin(), seen.end()};
}

LabeledDataset LabeledDataset::select(const std::vector<std::size_t>& indices) const {
  std::vector<std::size_t> sorted = indices;
  std::sort(sorted.begin(), sorted.end());
  std::vector<EmbeddingRecord> out;
  out.reserve(sorted.size());
  for (std::size_t i : sorted) out.push_back(records_.at(i));
  return {dim_, std::move(out)};
}

Matrix LabeledDataset::embeddings() const {
  Matrix out(records_.size(), dim_);
  for (std::size_t r = 0; r < records_.size(); ++r)
    std::copy(records_[r].embedding.begin(), records_[r].embedding.end(), out.row(r).begin());
  return out;
}

LabeledDataset load_embedding_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string(), 0, "cannot open file");
  const std::string where = path.string();

  std::string line;
  if (!std::getline(in, line)) throw ParseError(where, 1, "missing header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_fields(line);
  if (header.size() < 4 || header[0] != "noun" || header[1] != "adjective" || header[2] != "source_id") {
    throw ParseError(where, 1, "header must start with noun,adjective,source_id and name at least one e0 column");
  }
  const std::size_t dim = header.size() - 3;
  for (std::size_t j = 0; j < dim; ++j) {
    if (header[3 + j] != "e" + std::to_string(j)) {
      throw ParseError(where, 1, "expected column 'e" + std::to_string(j) + "', found '" +
                                     std::string(header[3 + j]) + "'");
    }
  }

  std::vector<EmbeddingRecord> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw ParseError(where, line_no, "expected " + std::to_string(header.size()) + " fields, found " +
                                           std::to_string(fields.size()));
    }
    EmbeddingRecord rec;
    rec.noun = fields[0];
    rec.adjective = fields[1];
    rec.source_id = fields[2];
    if (rec.noun.empty() || rec.adjective.empty()) throw ParseError(where, line_no, "empty noun or adjective");
    rec.embedding.reserve(dim);
    for (std::size_t j = 0; j < dim; ++j) {
      const auto value = parse_double(fields[3 + j]);
      if (!value) {
        throw ParseError(where, line_no, "column e" + std::to_string(j) + ": '" + std::string(fields[3 + j]) +
                                             "' is not a finite number");
      }
      rec.embedding.push_back(*value);
    }
    records.push_back(std::move(rec));
  }
  return {dim, std::move(records)};
}

void save_embedding_csv(const LabeledDataset& ds, const std::filesystem::path& path) {
  std::ostringstream out;
  out << "noun,adjective,source_id";
  for (std::size_t j = 0; j < ds.dim(); ++j) out << ",e" << j;
  out << '\n';
  for (const auto& r : ds.records()) {
    for (const std::string* field : {&r.noun, &r.adjective, &r.source_id}) {
      if (field->find_first_of(",\n\r") != std::string::npos) {
        throw PreconditionError("field '" + *field + "' contains a separator and cannot be written");
      }
    }
    out << r.noun << ',' << r.adjective << ',' << r.source_id;
    for (double x : r.embedding) out << ',' << format_double(x);
    out << '\n';
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw std::runtime_error("cannot write " + path.string());
  file << out.str();
  if (!file) throw std::runtime_error("write failed for " + path.string());
}

LabeledDataset filter_min_class_size(const LabeledDataset& ds, std::size_t min_size) {
  if (min_size < 1) throw PreconditionError("filter_min_class_size: min_size must be at least 1");
  const auto sizes = ds.class_sizes(ClassKey::NounAdjective);
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < ds.size(); ++i)
    if (sizes.at(class_label(ds.records()[i], ClassKey::NounAdjective)) >= min_size) keep.push_back(i);
  return ds.select(keep);
}

SplitDataset split_first_n(const LabeledDataset& ds, std::size_t n, ClassKey key) {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  for (const auto& [label, indices] : ds.class_indices(key)) {
    if (indices.size() <= n) {
      throw PreconditionError("split_first_n: class '" + label + "' has " + std::to_string(indices.size()) +
                              " records, needs more than " + std::to_string(n));
    }
    train.insert(train.end(), indices.begin(), indices.begin() + static_cast<std::ptrdiff_t>(n));
    test.insert(test.end(), indices.begin() + static_cast<std::ptrdiff_t>(n), indices.end());
  }
  return {ds.select(train), ds.select(test)};
}

SplitDataset split_shuffled_ratio(const LabeledDataset& ds, double ratio, std::uint64_t seed, ClassKey key) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw PreconditionError("split_shuffled_ratio: ratio must lie in (0, 1)");
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  for (auto [label, indices] : ds.class_indices(key)) {
    Rng rng(seed ^ fnv1a(label));
    rng.shuffle(std::span<std::size_t>(indices));
    const auto n_train = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(indices.size())));
    train.insert(train.end(), indices.begin(), indices.begin() + static_cast<std::ptrdiff_t>(n_train));
    test.insert(test.end(), indices.begin() + static_cast<std::ptrdiff_t>(n_train), indices.end());
  }
  return {ds.select(train), ds.select(test)};
}

std::map<std::string, std::vector<double>> class_means(const LabeledDataset& ds, ClassKey key) {
  std::map<std::string, std::vector<double>> out;
  for (const auto& [label, indices] : ds.class_indices(key)) {
    if (indices.empty()) throw PreconditionError("class_means: class '" + label + "' is empty");
    std::vector<double> mean(ds.dim(), 0.0);
    for (std::size_t i : indices) {
      const auto& e = ds.records()[i].embedding;
      for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += e[j];
    }
    for (double& x : mean) x /= static_cast<double>(indices.size());
    out.emplace(label, std::move(mean));
  }
  return out;
}

LabeledDataset gen_gaussian_clusters(std::size_t k, std::size_t n_per, std::size_t d, double center_scale,
                                     double noise_sigma, std::uint64_t seed) {
  if (k < 2) throw PreconditionError("gen_gaussian_clusters: k must be at least 2");
  if (n_per < 1) throw PreconditionError("gen_gaussian_clusters: n_per must be at least 1");
  if (d < 2) throw PreconditionError("gen_gaussian_clusters: d must be at least 2");
  if (!(noise_sigma >= 0.0)) throw PreconditionError("gen_gaussian_clusters: noise_sigma must be non-negative");

  Rng rng(seed);
  std::vector<std::vector<double>> centers(k, std::vector<double>(d));
  for (auto& c : centers) {
    // Normalized Gaussian draw is uniform on the sphere.
    double norm = 0.0;
    while (norm == 0.0) {
      for (double& x : c) x = rng.normal();
      norm = l2_norm(c);
    }
    for (double& x : c) x *= center_scale / norm;
  }

  std::vector<EmbeddingRecord> records;
  records.reserve(k * n_per);
  for (std::size_t cls = 0; cls < k; ++cls) {
    for (std::size_t i = 0; i < n_per; ++i) {
      EmbeddingRecord rec;
      rec.noun = "synthetic";
      rec.adjective = "class_" + std::to_string(cls);
      rec.source_id = "c" + std::to_string(cls) + "_" + std::to_string(i);
      rec.embedding = centers[cls];
      if (noise_sigma > 0.0)
        for (double& x : rec.embedding) x += noise_sigma * rng.normal();
      records.push_back(std::move(rec));
    }
  }
  return {d, std::move(records)};
}

LabeledDataset gen_orthogonal_2d(const std::vector<double>& angles_deg) {
  std::vector<EmbeddingRecord> records;
  for (std::size_t cls = 0; cls < 2; ++cls) {
    std::size_t i = 0;
    for (double angle : angles_deg) {
      for (double sign : {1.0, -1.0}) {
        const double theta = sign * angle * std::numbers::pi / 180.0;
        EmbeddingRecord rec;
        rec.noun = "synthetic";
        rec.adjective = "class_" + std::to_string(cls);
        rec.source_id = "o" + std::to_string(cls) + "_" + std::to_string(i++);
        // Rotate the axis vector directly so angle 0 reproduces it exactly.
        if (cls == 0) {
          rec.embedding = {std::cos(theta), std::sin(theta)};
        } else {
          rec.embedding = {0.0 - std::sin(theta), std::cos(theta)};
        }
        records.push_back(std::move(rec));
      }
    }
  }
  return {2, std::move(records)};
}

}  // namespace statebench
