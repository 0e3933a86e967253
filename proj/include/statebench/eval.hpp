#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "statebench/baselines.hpp"
#include "statebench/bvm.hpp"
#include "statebench/dataset.hpp"
#include "statebench/linalg.hpp"

namespace statebench::eval {

// Column order of the noun-adjective report, matching the appendix tables.
inline constexpr std::array<const char*, 7> kNounAdjMetrics{"cosine", "dot", "binary", "pq", "nb", "mlp", "bvm"};
inline constexpr std::array<const char*, 7> kNounAdjMetricTitles{
    "Cosine Similarity", "Dot Product", "Binary Index", "Product Quantization",
    "Naive Bayes",       "Custom Neural Network", "Basis Vectors"};
inline constexpr std::array<const char*, 2> kAdjMetrics{"logreg", "bvm"};
inline constexpr std::array<const char*, 2> kAdjMetricTitles{"Logistic Regression", "Basis Vectors (BVM)"};

struct NounAdjResultRow {
  std::string noun;
  std::array<double, 7> accuracy{};    // fraction correct, order of kNounAdjMetrics
  std::array<std::size_t, 7> correct{};
  std::size_t test_count = 0;
  std::size_t num_adjectives = 0;
  bool trivial = false;                // one adjective class: every classifier is right by construction
};

struct AdjResultRow {
  std::string adjective;
  double logreg = 0.0;  // recall on held-out rows of the adjective
  double bvm = 0.0;
  std::size_t test_count = 0;
};

struct MacroSummary {
  std::vector<std::string> metrics;
  std::vector<double> means;
};

struct ExperimentConfig {
  bvm::TrainConfig bvm;
  baselines::PqParams pq;
  baselines::MlpConfig mlp;
  baselines::LogRegConfig logreg;
  std::size_t jobs = 1;
  /// Optional sink for per-class progress and warnings.
  std::function<void(const std::string&)> log;
};

/// Per noun, fits all seven classifiers over that noun's adjectives and scores its test rows.
/// Expects a split made per (noun, adjective) class. Rows come back sorted by noun.
/// Seeds for PQ and the MLP derive from the noun name, so the result does not depend on any run seed.
std::vector<NounAdjResultRow> run_noun_adjective_experiment(const SplitDataset& split, const ExperimentConfig& cfg);

/// Per adjective, one-vs-rest logistic regression and two-class BVM; score is recall on the
/// adjective's test rows. Adjectives without test rows, training rows, or negatives are skipped
/// with a log warning. Rows come back sorted by adjective.
std::vector<AdjResultRow> run_adjective_ovr_experiment(const SplitDataset& split, const ExperimentConfig& cfg);

MacroSummary macro_average(const std::vector<NounAdjResultRow>& rows);
MacroSummary macro_average(const std::vector<AdjResultRow>& rows);

enum class ReportFormat { Csv, Markdown };

/// CSV: header plus one line per row, fractions with six decimals.
/// Markdown: the appendix layout with percentages to two decimals, followed by the averages.
std::string render_report(const std::vector<NounAdjResultRow>& rows, const MacroSummary& summary, ReportFormat format);
std::string render_report(const std::vector<AdjResultRow>& rows, const MacroSummary& summary, ReportFormat format);

/// CSV with the report header and a single "average" row.
std::string render_summary_csv(const MacroSummary& summary, const std::string& key_column);

void emit_report(const std::vector<NounAdjResultRow>& rows, const MacroSummary& summary, ReportFormat format,
                 const std::filesystem::path& path);
void emit_report(const std::vector<AdjResultRow>& rows, const MacroSummary& summary, ReportFormat format,
                 const std::filesystem::path& path);

/// Reads a report CSV back (e.g. the appendix fixture). Throws ParseError.
std::vector<NounAdjResultRow> read_noun_adj_report_csv(const std::filesystem::path& path);
std::vector<AdjResultRow> read_adj_report_csv(const std::filesystem::path& path);

/// Writes `text` to `path`, throwing std::runtime_error when the path is unwritable.
void write_text_file(const std::filesystem::path& path, const std::string& text);

// ---------------------------------------------------------------------------
// Figures
// ---------------------------------------------------------------------------

struct LabeledPoint {
  double x = 0.0;
  double y = 0.0;
  std::string label;
};

/// 800×800 SVG: one circle per point, one arrow from the origin per vector,
/// coloured by label. Throws PreconditionError on a non-finite coordinate.
std::string render_scatter_svg(const std::vector<LabeledPoint>& points, const std::vector<LabeledPoint>& arrows);
void emit_scatter_svg(const std::vector<LabeledPoint>& points, const std::vector<LabeledPoint>& arrows,
                      const std::filesystem::path& path);

struct PcaProjection {
  Matrix points;                  // (n, 2) centred scores
  Matrix components;              // (2, d) unit principal axes
  std::array<double, 2> variance{};  // eigenvalues of the sample covariance
  std::vector<double> mean;
};

/// Top-two principal components by power iteration with deflation.
/// Throws PreconditionError for fewer than two rows, d < 2, or rank-0 data.
PcaProjection project_pca_2d(const Matrix& data, std::uint64_t seed = 0, std::size_t max_iter = 5000);

}  // namespace statebench::eval
