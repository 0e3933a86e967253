#include "statebench/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

#include "statebench/error.hpp"
#include "statebench/format.hpp"
#include "statebench/rng.hpp"

namespace statebench::eval {
namespace {

std::uint64_t label_seed(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Runs body(i) for i in [0, n) on up to `jobs` threads. Results must be written by index.
template <typename Body>
void parallel_for(std::size_t n, std::size_t jobs, Body&& body) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  if (failure) std::rethrow_exception(failure);
}

class Logger {
 public:
  explicit Logger(const std::function<void(const std::string&)>& sink) : sink_(sink) {}
  void operator()(const std::string& message) const {
    if (!sink_) return;
    std::lock_guard lock(mutex_);
    sink_(message);
  }

 private:
  const std::function<void(const std::string&)>& sink_;
  mutable std::mutex mutex_;
};

Matrix stack(const LabeledDataset& ds, const std::vector<std::size_t>& indices) {
  Matrix out(indices.size(), ds.dim());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const auto& e = ds.records()[indices[r]].embedding;
    std::copy(e.begin(), e.end(), out.row(r).begin());
  }
  return out;
}

NounAdjResultRow evaluate_noun(const std::string& noun, const LabeledDataset& train, const LabeledDataset& test,
                               const ExperimentConfig& cfg) {
  // Adjective classes of this noun, sorted; training rows in record order.
  std::set<std::string> adjective_set;
  std::vector<std::size_t> train_rows;
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (train.records()[i].noun != noun) continue;
    adjective_set.insert(train.records()[i].adjective);
    train_rows.push_back(i);
  }
  const std::vector<std::string> adjectives(adjective_set.begin(), adjective_set.end());
  std::map<std::string, std::size_t> adjective_index;
  for (std::size_t j = 0; j < adjectives.size(); ++j) adjective_index[adjectives[j]] = j;

  std::vector<std::size_t> test_rows;
  for (std::size_t i = 0; i < test.size(); ++i)
    if (test.records()[i].noun == noun) test_rows.push_back(i);

  const Matrix x = stack(train, train_rows);
  std::vector<std::string> labels;
  std::vector<std::size_t> y;
  for (std::size_t i : train_rows) {
    labels.push_back(train.records()[i].adjective);
    y.push_back(adjective_index.at(train.records()[i].adjective));
  }

  const std::uint64_t seed = label_seed(noun);
  baselines::PqParams pq = cfg.pq;
  pq.seed = seed;
  pq.k_star = std::min(pq.k_star, x.rows());
  baselines::MlpConfig mlp = cfg.mlp;
  mlp.seed = seed;

  const auto cosine = baselines::NearestNeighborIndex::cosine(x, labels);
  const auto dot = baselines::NearestNeighborIndex::dot(x, labels);
  const auto binary = baselines::NearestNeighborIndex::hamming_bytes(x, labels);
  const auto pq_index = baselines::NearestNeighborIndex::product_quantized(x, labels, pq);
  const auto nb = baselines::nb_fit(x, y, adjectives.size());
  const auto net = baselines::mlp_train(x, y, adjectives.size(), mlp);
  const auto problem = bvm::prepare(train.select(train_rows), adjectives, ClassKey::Adjective);
  const auto trained = bvm::train(problem.model, problem.data, cfg.bvm).model;

  NounAdjResultRow row;
  row.noun = noun;
  row.test_count = test_rows.size();
  row.num_adjectives = adjectives.size();
  row.trivial = adjectives.size() == 1;
  for (std::size_t i : test_rows) {
    const auto& rec = test.records()[i];
    const auto& q = rec.embedding;
    const auto truth = adjective_index.find(rec.adjective);
    const std::size_t truth_index = truth == adjective_index.end() ? adjectives.size() : truth->second;
    const std::array<bool, 7> hits{
        baselines::knn_predict(cosine, q) == rec.adjective,
        baselines::knn_predict(dot, q) == rec.adjective,
        baselines::knn_predict(binary, q) == rec.adjective,
        baselines::knn_predict(pq_index, q) == rec.adjective,
        baselines::nb_predict(nb, q) == truth_index,
        baselines::mlp_predict(net, q) == truth_index,
        bvm::predict_index(q, trained) == truth_index,
    };
    for (std::size_t m = 0; m < hits.size(); ++m) row.correct[m] += hits[m];
  }
  for (std::size_t m = 0; m < row.accuracy.size(); ++m)
    row.accuracy[m] = static_cast<double>(row.correct[m]) / static_cast<double>(row.test_count);
  return row;
}

}  // namespace

std::vector<NounAdjResultRow> run_noun_adjective_experiment(const SplitDataset& split, const ExperimentConfig& cfg) {
  cfg.bvm.validate();
  const Logger log(cfg.log);
  std::set<std::string> noun_set;
  for (const auto& r : split.train.records()) noun_set.insert(r.noun);
  const std::vector<std::string> nouns(noun_set.begin(), noun_set.end());

  std::vector<std::optional<NounAdjResultRow>> results(nouns.size());
  parallel_for(nouns.size(), cfg.jobs, [&](std::size_t i) {
    const auto& noun = nouns[i];
    const bool has_test = std::any_of(split.test.records().begin(), split.test.records().end(),
                                      [&](const EmbeddingRecord& r) { return r.noun == noun; });
    if (!has_test) {
      log("warning: noun '" + noun + "' has no test records; skipped");
      return;
    }
    results[i] = evaluate_noun(noun, split.train, split.test, cfg);
    log("noun " + noun + ": " + std::to_string(results[i]->num_adjectives) + " adjectives, " +
        std::to_string(results[i]->test_count) + " test records" + (results[i]->trivial ? " (single adjective)" : ""));
  });

  std::vector<NounAdjResultRow> rows;
  for (auto& r : results)
    if (r) rows.push_back(std::move(*r));
  return rows;
}

std::vector<AdjResultRow> run_adjective_ovr_experiment(const SplitDataset& split, const ExperimentConfig& cfg) {
  cfg.bvm.validate();
  const Logger log(cfg.log);
  const auto train_classes = split.train.class_indices(ClassKey::Adjective);
  const auto test_classes = split.test.class_indices(ClassKey::Adjective);
  std::set<std::string> adjective_set;
  for (const auto& [a, _] : train_classes) adjective_set.insert(a);
  for (const auto& [a, _] : test_classes) adjective_set.insert(a);
  const std::vector<std::string> adjectives(adjective_set.begin(), adjective_set.end());

  std::vector<std::optional<AdjResultRow>> results(adjectives.size());
  parallel_for(adjectives.size(), cfg.jobs, [&](std::size_t idx) {
    const auto& adjective = adjectives[idx];
    const auto test_it = test_classes.find(adjective);
    const auto train_it = train_classes.find(adjective);
    if (test_it == test_classes.end()) {
      log("warning: adjective '" + adjective + "' has an empty test split; skipped");
      return;
    }
    if (train_it == train_classes.end()) {
      log("warning: adjective '" + adjective + "' has no training records; skipped");
      return;
    }
    std::vector<std::size_t> negative_rows;
    for (std::size_t i = 0; i < split.train.size(); ++i)
      if (split.train.records()[i].adjective != adjective) negative_rows.push_back(i);
    if (negative_rows.empty()) {
      log("warning: adjective '" + adjective + "' has no other adjectives to contrast; skipped");
      return;
    }

    const Matrix positives = stack(split.train, train_it->second);
    const Matrix negatives = stack(split.train, negative_rows);
    const auto logreg = baselines::logreg_fit(positives, negatives, cfg.logreg);
    const auto problem = bvm::prepare_groups({adjective, "not " + adjective}, {positives, negatives});
    const auto trained = bvm::train(problem.model, problem.data, cfg.bvm).model;

    AdjResultRow row;
    row.adjective = adjective;
    row.test_count = test_it->second.size();
    std::size_t logreg_hits = 0;
    std::size_t bvm_hits = 0;
    for (std::size_t i : test_it->second) {
      const auto& q = split.test.records()[i].embedding;
      logreg_hits += baselines::logreg_predict(logreg, q) == 0;
      bvm_hits += bvm::predict_index(q, trained) == 0;
    }
    row.logreg = static_cast<double>(logreg_hits) / static_cast<double>(row.test_count);
    row.bvm = static_cast<double>(bvm_hits) / static_cast<double>(row.test_count);
    results[idx] = row;
    log("adjective " + adjective + ": " + std::to_string(row.test_count) + " test records");
  });

  std::vector<AdjResultRow> rows;
  for (auto& r : results)
    if (r) rows.push_back(std::move(*r));
  return rows;
}

// ---------------------------------------------------------------------------

namespace {

template <std::size_t N, typename Row, typename Getter>
MacroSummary average_columns(const std::vector<Row>& rows, const std::array<const char*, N>& names, Getter get) {
  if (rows.empty()) throw PreconditionError("macro_average: no rows");
  MacroSummary summary;
  for (std::size_t m = 0; m < N; ++m) {
    double acc = 0.0;
    for (const auto& row : rows) acc += get(row, m);
    summary.metrics.emplace_back(names[m]);
    summary.means.push_back(acc / static_cast<double>(rows.size()));
  }
  return summary;
}

double adj_value(const AdjResultRow& row, std::size_t m) { return m == 0 ? row.logreg : row.bvm; }

std::string percent(double fraction) { return format_fixed(100.0 * fraction, 2) + "%"; }

template <std::size_t N>
std::string csv_header(const std::string& key, const std::array<const char*, N>& names) {
  std::string out = key;
  for (const char* n : names) out += std::string(",") + n;
  return out + "\n";
}

template <std::size_t N>
std::string markdown_header(const std::string& key, const std::array<const char*, N>& titles) {
  std::string head = "| " + key;
  std::string rule = "|---";
  for (const char* t : titles) {
    head += std::string(" | ") + t;
    rule += "|---";
  }
  return head + " |\n" + rule + "|\n";
}

template <std::size_t N>
std::string markdown_summary(const std::string& caption, const std::array<const char*, N>& titles,
                             const MacroSummary& summary) {
  if (summary.means.empty()) return "";
  std::string out = "\n" + caption + "\n\n|";
  std::string rule = "|";
  for (const char* t : titles) {
    out += std::string(" ") + t + " |";
    rule += "---|";
  }
  out += "\n" + rule + "\n|";
  for (double v : summary.means) out += " " + percent(v) + " |";
  return out + "\n";
}

}  // namespace

MacroSummary macro_average(const std::vector<NounAdjResultRow>& rows) {
  return average_columns(rows, kNounAdjMetrics, [](const NounAdjResultRow& r, std::size_t m) { return r.accuracy[m]; });
}

MacroSummary macro_average(const std::vector<AdjResultRow>& rows) {
  return average_columns(rows, kAdjMetrics, adj_value);
}

std::string render_report(const std::vector<NounAdjResultRow>& rows, const MacroSummary& summary,
                          ReportFormat format) {
  std::string out;
  if (format == ReportFormat::Csv) {
    out = csv_header("class", kNounAdjMetrics);
    for (const auto& row : rows) {
      out += row.noun;
      for (double v : row.accuracy) out += "," + format_fixed(v, 6);
      out += "\n";
    }
    return out;
  }
  out = markdown_header("Noun", kNounAdjMetricTitles);
  for (const auto& row : rows) {
    out += "| " + row.noun + (row.trivial ? " (single adjective)" : "");
    for (double v : row.accuracy) out += " | " + percent(v);
    out += " |\n";
  }
  return out + markdown_summary("Averages for metrics on noun-adjective pairs", kNounAdjMetricTitles, summary);
}

std::string render_report(const std::vector<AdjResultRow>& rows, const MacroSummary& summary, ReportFormat format) {
  std::string out;
  if (format == ReportFormat::Csv) {
    out = csv_header("adjective", kAdjMetrics);
    for (const auto& row : rows) out += row.adjective + "," + format_fixed(row.logreg, 6) + "," + format_fixed(row.bvm, 6) + "\n";
    return out;
  }
  out = markdown_header("Adjective", kAdjMetricTitles);
  for (const auto& row : rows) out += "| " + row.adjective + " | " + percent(row.logreg) + " | " + percent(row.bvm) + " |\n";
  return out + markdown_summary("Averages for metrics on discerning adjectives", kAdjMetricTitles, summary);
}

std::string render_summary_csv(const MacroSummary& summary, const std::string& key_column) {
  std::string out = key_column;
  for (const auto& m : summary.metrics) out += "," + m;
  out += "\naverage";
  for (double v : summary.means) out += "," + format_fixed(v, 6);
  return out + "\n";
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  out.flush();
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

void emit_report(const std::vector<NounAdjResultRow>& rows, const MacroSummary& summary, ReportFormat format,
                 const std::filesystem::path& path) {
  write_text_file(path, render_report(rows, summary, format));
}

void emit_report(const std::vector<AdjResultRow>& rows, const MacroSummary& summary, ReportFormat format,
                 const std::filesystem::path& path) {
  write_text_file(path, render_report(rows, summary, format));
}

namespace {

template <std::size_t N>
std::vector<std::pair<std::string, std::array<double, N>>> read_report(const std::filesystem::path& path,
                                                                       const std::string& expected_header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string(), 0, "cannot open file");
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path.string(), 1, "missing header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line + "\n" != expected_header) throw ParseError(path.string(), 1, "unexpected header '" + line + "'");

  std::vector<std::pair<std::string, std::array<double, N>>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != N + 1) {
      throw ParseError(path.string(), line_no, "expected " + std::to_string(N + 1) + " fields");
    }
    std::array<double, N> values{};
    for (std::size_t m = 0; m < N; ++m) {
      const auto v = parse_double(fields[m + 1]);
      if (!v || *v < 0.0 || *v > 1.0) {
        throw ParseError(path.string(), line_no, "'" + std::string(fields[m + 1]) + "' is not a fraction in [0, 1]");
      }
      values[m] = *v;
    }
    rows.emplace_back(std::string(fields[0]), values);
  }
  return rows;
}

}  // namespace

std::vector<NounAdjResultRow> read_noun_adj_report_csv(const std::filesystem::path& path) {
  std::vector<NounAdjResultRow> rows;
  for (auto& [name, values] : read_report<7>(path, csv_header("class", kNounAdjMetrics))) {
    NounAdjResultRow row;
    row.noun = name;
    row.accuracy = values;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<AdjResultRow> read_adj_report_csv(const std::filesystem::path& path) {
  std::vector<AdjResultRow> rows;
  for (auto& [name, values] : read_report<2>(path, csv_header("adjective", kAdjMetrics))) {
    AdjResultRow row;
    row.adjective = name;
    row.logreg = values[0];
    row.bvm = values[1];
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::array<const char*, 10> kPalette{"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                               "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
constexpr double kCanvas = 800.0;
constexpr double kMargin = 40.0;

std::string coord(double v) { return format_fixed(v, 3); }

}  // namespace

std::string render_scatter_svg(const std::vector<LabeledPoint>& points, const std::vector<LabeledPoint>& arrows) {
  double extent = 0.0;
  std::set<std::string> label_set;
  for (const auto* group : {&points, &arrows}) {
    for (const auto& p : *group) {
      if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
        throw PreconditionError("emit_scatter_svg: non-finite coordinate for '" + p.label + "'");
      }
      extent = std::max({extent, std::abs(p.x), std::abs(p.y)});
      label_set.insert(p.label);
    }
  }
  if (extent == 0.0) extent = 1.0;
  std::map<std::string, std::size_t> color_of;
  for (const auto& label : label_set) color_of.emplace(label, color_of.size() % kPalette.size());

  const double centre = kCanvas / 2.0;
  const double scale = (centre - kMargin) / extent;
  const auto px = [&](double x) { return coord(centre + x * scale); };
  const auto py = [&](double y) { return coord(centre - y * scale); };

  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"800\" height=\"800\" "
         "viewBox=\"0 0 800 800\">\n"
      << "<defs>\n";
  for (std::size_t c = 0; c < kPalette.size(); ++c) {
    out << "<marker id=\"head" << c << "\" markerWidth=\"10\" markerHeight=\"10\" refX=\"8\" refY=\"5\" "
        << "orient=\"auto\" markerUnits=\"userSpaceOnUse\"><path d=\"M0,0 L10,5 L0,10 z\" fill=\"" << kPalette[c]
        << "\"/></marker>\n";
  }
  out << "</defs>\n<g id=\"points\">\n";
  for (const auto& p : points) {
    out << "<circle cx=\"" << px(p.x) << "\" cy=\"" << py(p.y) << "\" r=\"4\" fill=\""
        << kPalette[color_of.at(p.label)] << "\" fill-opacity=\"0.7\"><title>" << p.label << "</title></circle>\n";
  }
  out << "</g>\n<g id=\"vectors\">\n";
  for (const auto& a : arrows) {
    const std::size_t c = color_of.at(a.label);
    out << "<line x1=\"" << px(0.0) << "\" y1=\"" << py(0.0) << "\" x2=\"" << px(a.x) << "\" y2=\"" << py(a.y)
        << "\" stroke=\"" << kPalette[c] << "\" stroke-width=\"3\" marker-end=\"url(#head" << c << ")\"><title>"
        << a.label << "</title></line>\n";
  }
  out << "</g>\n</svg>\n";
  return out.str();
}

void emit_scatter_svg(const std::vector<LabeledPoint>& points, const std::vector<LabeledPoint>& arrows,
                      const std::filesystem::path& path) {
  write_text_file(path, render_scatter_svg(points, arrows));
}

// ---------------------------------------------------------------------------

namespace {

std::vector<double> mat_vec(const Matrix& m, const std::vector<double>& v) {
  std::vector<double> out(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) out[i] = dot(m.row(i), v);
  return out;
}

void remove_component(std::vector<double>& v, const std::vector<double>& axis) {
  const double proj = dot(v, axis);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] -= proj * axis[i];
}

// Largest-magnitude entry made positive so the sign of each axis is reproducible.
void fix_sign(std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (std::abs(v[i]) > std::abs(v[best])) best = i;
  if (v[best] < 0.0)
    for (double& x : v) x = -x;
}

// Dominant eigenpair of the symmetric PSD matrix `cov`, restricted to the
// complement of `exclude`.
std::pair<double, std::vector<double>> dominant_eigenpair(const Matrix& cov, const std::vector<double>* exclude,
                                                          Rng& rng, std::size_t max_iter) {
  const std::size_t d = cov.rows();
  std::vector<double> v(d);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  if (exclude) remove_component(v, *exclude);
  double norm = l2_norm(v);
  for (double& x : v) x /= norm;

  double eigenvalue = 0.0;
  for (std::size_t it = 0; it < max_iter; ++it) {
    std::vector<double> w = mat_vec(cov, v);
    if (exclude) remove_component(w, *exclude);
    norm = l2_norm(w);
    if (norm == 0.0) {
      eigenvalue = 0.0;
      break;
    }
    for (double& x : w) x /= norm;
    double delta = 0.0;
    for (std::size_t i = 0; i < d; ++i) delta = std::max(delta, std::abs(w[i] - v[i]));
    v = std::move(w);
    eigenvalue = dot(v, mat_vec(cov, v));
    if (delta < 1e-13) break;
  }
  fix_sign(v);
  return {std::max(eigenvalue, 0.0), v};
}

}  // namespace

PcaProjection project_pca_2d(const Matrix& data, std::uint64_t seed, std::size_t max_iter) {
  if (data.rows() < 2 || data.cols() < 2) throw PreconditionError("project_pca_2d: need at least 2 rows and 2 columns");
  const std::size_t n = data.rows();
  const std::size_t d = data.cols();

  PcaProjection out;
  out.mean.assign(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) out.mean[j] += data(i, j);
  for (double& x : out.mean) x /= static_cast<double>(n);

  Matrix centred = data;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) centred(i, j) -= out.mean[j];
  Matrix cov = matmul(centred.transpose(), centred);
  for (double& x : cov.data()) x /= static_cast<double>(n - 1);

  double trace = 0.0;
  for (std::size_t j = 0; j < d; ++j) trace += cov(j, j);
  if (!(trace > 0.0)) throw PreconditionError("project_pca_2d: data has rank 0");

  Rng rng(seed);
  auto [lambda1, v1] = dominant_eigenpair(cov, nullptr, rng, max_iter);
  auto [lambda2, v2] = dominant_eigenpair(cov, &v1, rng, max_iter);
  out.variance = {lambda1, lambda2};
  out.components = Matrix(2, d);
  std::copy(v1.begin(), v1.end(), out.components.row(0).begin());
  std::copy(v2.begin(), v2.end(), out.components.row(1).begin());
  out.points = matmul_transposed(centred, out.components);
  return out;
}

}  // namespace statebench::eval
