#include "statebench/bvm.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "statebench/error.hpp"

namespace statebench::bvm {

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(beta1 > 0.0 && beta1 < 1.0)) throw ConfigError("beta1 must lie in (0, 1)");
  if (!(beta2 > 0.0 && beta2 < 1.0)) throw ConfigError("beta2 must lie in (0, 1)");
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
}

std::size_t BvmModel::n_per_class() const {
  std::vector<std::size_t> counts(classes.size(), 0);
  for (std::size_t c : row_class) ++counts.at(c);
  if (counts.empty()) return 0;
  for (std::size_t c : counts)
    if (c != counts.front()) return 0;
  return counts.front();
}

Matrix build_target(std::span<const std::size_t> assignment, std::size_t k) {
  Matrix target(assignment.size(), k);
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] >= k) {
      throw PreconditionError("build_target: row " + std::to_string(i) + " assigned to class " +
                              std::to_string(assignment[i]) + " but k = " + std::to_string(k));
    }
    target(i, assignment[i]) = 1.0;
  }
  return target;
}

Matrix init_basis_from_means(const LabeledDataset& train, const std::vector<std::string>& classes, ClassKey key) {
  const auto means = class_means(train, key);
  Matrix basis(classes.size(), train.dim());
  for (std::size_t j = 0; j < classes.size(); ++j) {
    const auto it = means.find(classes[j]);
    if (it == means.end()) {
      throw PreconditionError("init_basis_from_means: class '" + classes[j] + "' has no training records");
    }
    std::copy(it->second.begin(), it->second.end(), basis.row(j).begin());
  }
  return basis;
}

namespace {

void check_loss_shapes(const Matrix& data, const Matrix& basis, const Matrix& target) {
  if (data.cols() != basis.cols() || target.rows() != data.rows() || target.cols() != basis.rows()) {
    throw DimensionError("bvm loss: D " + data.shape_string() + ", B " + basis.shape_string() + ", T " +
                         target.shape_string() + " do not conform");
  }
}

}  // namespace

double bvm_loss(const Matrix& data, const Matrix& basis, const Matrix& target, LossVariant variant) {
  check_loss_shapes(data, basis, target);
  const Matrix residual = matmul_transposed(data, basis) - target;
  double acc = 0.0;
  for (double r : residual.data()) acc += variant == LossVariant::MeanSquared ? r * r : r;
  const auto count = static_cast<double>(residual.data().size());
  return count == 0.0 ? 0.0 : acc / count;
}

Matrix bvm_loss_gradient(const Matrix& data, const Matrix& basis, const Matrix& target, LossVariant variant) {
  check_loss_shapes(data, basis, target);
  const auto count = static_cast<double>(data.rows() * basis.rows());
  Matrix grad(basis.rows(), basis.cols());
  if (count == 0.0) return grad;

  if (variant == LossVariant::SignedMean) {
    // d/dB[j][c] of mean(D·Bᵀ − T) is the column sum of D, identical for every j.
    std::vector<double> column_sum(data.cols(), 0.0);
    for (std::size_t i = 0; i < data.rows(); ++i)
      for (std::size_t c = 0; c < data.cols(); ++c) column_sum[c] += data(i, c);
    for (std::size_t j = 0; j < grad.rows(); ++j)
      for (std::size_t c = 0; c < grad.cols(); ++c) grad(j, c) = column_sum[c] / count;
    return grad;
  }

  // 2/(R·k) · (D·Bᵀ − T)ᵀ · D
  const Matrix residual = matmul_transposed(data, basis) - target;
  const double scale = 2.0 / count;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const auto d_row = data.row(i);
    for (std::size_t j = 0; j < grad.rows(); ++j) {
      const double r = residual(i, j) * scale;
      auto g_row = grad.row(j);
      for (std::size_t c = 0; c < d_row.size(); ++c) g_row[c] += r * d_row[c];
    }
  }
  return grad;
}

Problem prepare(const LabeledDataset& train, const std::vector<std::string>& classes, ClassKey key) {
  std::map<std::string, std::size_t> class_index;
  for (std::size_t j = 0; j < classes.size(); ++j) {
    if (!class_index.emplace(classes[j], j).second) {
      throw PreconditionError("bvm: duplicate class label '" + classes[j] + "'");
    }
  }
  std::vector<std::vector<std::size_t>> rows_by_class(classes.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    const auto it = class_index.find(class_label(train.records()[i], key));
    if (it != class_index.end()) rows_by_class[it->second].push_back(i);
  }

  Problem problem;
  std::vector<std::size_t> ordered;
  for (std::size_t j = 0; j < classes.size(); ++j) {
    if (rows_by_class[j].empty()) {
      throw PreconditionError("bvm: class '" + classes[j] + "' has no training records");
    }
    for (std::size_t i : rows_by_class[j]) {
      ordered.push_back(i);
      problem.model.row_class.push_back(j);
    }
  }
  problem.data = Matrix(ordered.size(), train.dim());
  for (std::size_t r = 0; r < ordered.size(); ++r) {
    const auto& e = train.records()[ordered[r]].embedding;
    std::copy(e.begin(), e.end(), problem.data.row(r).begin());
  }
  problem.model.classes = classes;
  problem.model.target = build_target(problem.model.row_class, classes.size());
  problem.model.basis = init_basis_from_means(train, classes, key);
  return problem;
}

Problem prepare_groups(const std::vector<std::string>& classes, const std::vector<Matrix>& groups) {
  if (classes.size() != groups.size()) throw DimensionError("bvm: class and group counts differ");
  if (groups.empty()) throw PreconditionError("bvm: no classes");
  const std::size_t dim = groups.front().cols();
  Problem problem;
  problem.model.classes = classes;
  problem.model.basis = Matrix(classes.size(), dim);
  std::size_t total = 0;
  for (std::size_t j = 0; j < groups.size(); ++j) {
    if (groups[j].cols() != dim) throw DimensionError("bvm: groups have different dimensions");
    if (groups[j].rows() == 0) throw PreconditionError("bvm: class '" + classes[j] + "' has no training records");
    total += groups[j].rows();
  }
  problem.data = Matrix(total, dim);
  std::size_t r = 0;
  for (std::size_t j = 0; j < groups.size(); ++j) {
    auto mean = problem.model.basis.row(j);
    for (std::size_t i = 0; i < groups[j].rows(); ++i, ++r) {
      const auto src = groups[j].row(i);
      std::copy(src.begin(), src.end(), problem.data.row(r).begin());
      for (std::size_t c = 0; c < dim; ++c) mean[c] += src[c];
      problem.model.row_class.push_back(j);
    }
    for (double& x : mean) x /= static_cast<double>(groups[j].rows());
  }
  problem.model.target = build_target(problem.model.row_class, classes.size());
  return problem;
}

TrainResult train(const BvmModel& model, const Matrix& data, const TrainConfig& cfg) {
  cfg.validate();
  check_loss_shapes(data, model.basis, model.target);

  TrainResult result{model, {}};
  result.loss_trace.reserve(cfg.epochs);
  Matrix& basis = result.model.basis;
  AdamState adam = AdamState::for_params(basis, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon);

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    basis = row_l2_normalize(basis);
    const double loss = bvm_loss(data, basis, model.target, cfg.loss);
    if (!std::isfinite(loss)) throw TrainingError(epoch, "non-finite loss");
    result.loss_trace.push_back(loss);
    const Matrix grad = bvm_loss_gradient(data, basis, model.target, cfg.loss);
    if (!grad.all_finite()) throw TrainingError(epoch, "non-finite gradient");
    adam_update(basis, grad, adam);
  }
  basis = row_l2_normalize(basis);
  if (!basis.all_finite()) throw TrainingError(cfg.epochs, "non-finite basis");
  return result;
}

std::vector<double> class_scores(std::span<const double> query, const BvmModel& model) {
  if (query.size() != model.dim()) {
    throw DimensionError("bvm: query length " + std::to_string(query.size()) + " does not match basis dimension " +
                         std::to_string(model.dim()));
  }
  std::vector<double> scores(model.num_classes());
  for (std::size_t j = 0; j < scores.size(); ++j) scores[j] = dot(query, model.basis.row(j));
  return scores;
}

std::vector<double> match_scores(std::span<const double> query, const BvmModel& model) {
  const auto s = class_scores(query, model);
  // s·Tᵀ: entry i is Σ_j s[j]·T[i][j].
  std::vector<double> m(model.target.rows(), 0.0);
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j) m[i] += s[j] * model.target(i, j);
  return m;
}

std::size_t predict_index(std::span<const double> query, const BvmModel& model) {
  const auto m = match_scores(query, model);
  const std::size_t column = argmax_index(m);
  return argmax_index(model.target.row(column));
}

const std::string& predict(std::span<const double> query, const BvmModel& model) {
  return model.classes.at(predict_index(query, model));
}

std::string to_json_string(const BvmModel& model) {
  nlohmann::ordered_json doc;
  doc["classes"] = model.classes;
  if (const std::size_t n = model.n_per_class(); n > 0) {
    doc["n_per_class"] = n;
  } else {
    std::vector<std::size_t> counts(model.num_classes(), 0);
    for (std::size_t c : model.row_class) ++counts.at(c);
    doc["class_counts"] = counts;
  }
  doc["dim"] = model.dim();
  doc["basis"] = std::vector<double>(model.basis.data().begin(), model.basis.data().end());
  return doc.dump(1) + "\n";
}

BvmModel from_json_string(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("model", 0, e.what());
  }
  try {
    BvmModel model;
    model.classes = doc.at("classes").get<std::vector<std::string>>();
    const std::size_t k = model.classes.size();
    const auto dim = doc.at("dim").get<std::size_t>();
    auto basis = doc.at("basis").get<std::vector<double>>();
    if (k == 0 || basis.size() != k * dim) throw ParseError("model", 0, "basis length does not match classes x dim");
    model.basis = Matrix(k, dim, std::move(basis));

    std::vector<std::size_t> counts;
    if (doc.contains("n_per_class")) {
      counts.assign(k, doc.at("n_per_class").get<std::size_t>());
    } else {
      counts = doc.at("class_counts").get<std::vector<std::size_t>>();
      if (counts.size() != k) throw ParseError("model", 0, "class_counts length does not match classes");
    }
    for (std::size_t j = 0; j < k; ++j) model.row_class.insert(model.row_class.end(), counts[j], j);
    model.target = build_target(model.row_class, k);
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("model", 0, e.what());
  }
}

void save_model(const BvmModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << to_json_string(model);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

BvmModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string(), 0, "cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json_string(buf.str());
}

}  // namespace statebench::bvm
