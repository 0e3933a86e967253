// statebench command-line driver.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "statebench/bvm.hpp"
#include "statebench/dataset.hpp"
#include "statebench/error.hpp"
#include "statebench/eval.hpp"
#include "statebench/format.hpp"

namespace fs = std::filesystem;
using namespace statebench;

namespace {

struct SynthOptions {
  std::string kind;
  std::size_t k = 10;
  std::size_t n = 50;
  std::size_t d = 100;
  double center_scale = 1.0;
  double noise = 0.05;
  std::uint64_t seed = 0;
  std::string out;
};

struct TrainOptions {
  std::string input;
  std::string out;
  std::size_t epochs = 1000;
  double lr = 0.001;
  std::string loss = "squared";
  double ratio = 0.8;
  std::uint64_t seed = 0;
};

struct NounAdjOptions {
  std::string input;
  std::string results;
  std::string out_dir = ".";
  std::size_t epochs = 1000;
  double lr = 0.001;
  std::size_t min_class_size = 21;
  std::size_t train_per_class = 20;
  std::size_t pq_m = 8;
  std::size_t pq_k = 16;
  std::size_t pq_iters = 25;
  std::size_t mlp_epochs = 500;
  std::size_t jobs = 1;
  std::uint64_t seed = 0;
};

struct AdjOptions {
  std::string input;
  std::string results;
  std::string out_dir = ".";
  double ratio = 0.8;
  std::size_t epochs = 5000;
  double lr = 0.001;
  std::size_t logreg_epochs = 1000;
  double logreg_lr = 0.1;
  std::size_t jobs = 1;
  std::uint64_t seed = 0;
};

struct PlotOptions {
  std::string input;
  std::string model;
  bool pca = false;
  std::string out;
  std::uint64_t seed = 0;
};

bvm::LossVariant parse_loss(const std::string& name) {
  if (name == "squared") return bvm::LossVariant::MeanSquared;
  if (name == "signed") return bvm::LossVariant::SignedMean;
  throw ConfigError("unknown loss '" + name + "' (expected squared or signed)");
}

void log_line(const std::string& message) { std::cerr << message << '\n'; }

void require_input(const std::string& input, const std::string& results) {
  if (input.empty() == results.empty()) throw ConfigError("give exactly one of --input or --results");
}

std::string percent(double fraction) { return format_fixed(100.0 * fraction, 2) + "%"; }

void print_summary(const eval::MacroSummary& summary) {
  for (std::size_t i = 0; i < summary.metrics.size(); ++i)
    std::cout << "  " << summary.metrics[i] << ": " << percent(summary.means[i]) << '\n';
}

int cmd_synth(const SynthOptions& o) {
  LabeledDataset ds;
  if (o.kind == "orthogonal2d") {
    ds = gen_orthogonal_2d();
  } else {
    ds = gen_gaussian_clusters(o.k, o.n, o.d, o.center_scale, o.noise, o.seed);
  }
  save_embedding_csv(ds, o.out);
  std::cout << "wrote " << o.out << ": " << ds.class_sizes(ClassKey::Adjective).size() << " classes, " << ds.size()
            << " rows, d=" << ds.dim() << '\n';
  return 0;
}

std::vector<std::string> sorted_classes(const LabeledDataset& ds) {
  std::vector<std::string> out;
  for (const auto& [label, indices] : ds.class_indices(ClassKey::Adjective)) out.push_back(label);
  return out;
}

int cmd_train(const TrainOptions& o) {
  bvm::TrainConfig cfg;
  cfg.epochs = o.epochs;
  cfg.learning_rate = o.lr;
  cfg.loss = parse_loss(o.loss);
  cfg.seed = o.seed;
  cfg.validate();

  const auto split = split_shuffled_ratio(load_embedding_csv(o.input), o.ratio, o.seed);
  const auto classes = sorted_classes(split.train);
  const auto problem = bvm::prepare(split.train, classes);
  const auto result = bvm::train(problem.model, problem.data, cfg);
  bvm::save_model(result.model, o.out);

  std::size_t correct = 0;
  for (const auto& rec : split.test.records()) correct += bvm::predict(rec.embedding, result.model) == rec.adjective;
  const double accuracy = split.test.size() == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(split.test.size());
  std::cout << "wrote " << o.out << ": " << classes.size() << " classes, " << split.train.size() << " train rows\n"
            << "loss: " << format_fixed(result.loss_trace.front(), 6) << " -> " << format_fixed(result.loss_trace.back(), 6)
            << '\n'
            << "held-out accuracy: " << format_fixed(accuracy, 4) << " (" << correct << "/" << split.test.size() << ")\n";
  return 0;
}

int cmd_eval_nounadj(const NounAdjOptions& o) {
  require_input(o.input, o.results);
  std::vector<eval::NounAdjResultRow> rows;
  if (!o.results.empty()) {
    rows = eval::read_noun_adj_report_csv(o.results);
  } else {
    eval::ExperimentConfig cfg;
    cfg.bvm.epochs = o.epochs;
    cfg.bvm.learning_rate = o.lr;
    cfg.bvm.validate();
    cfg.pq.m = o.pq_m;
    cfg.pq.k_star = o.pq_k;
    cfg.pq.iters = o.pq_iters;
    cfg.mlp.epochs = o.mlp_epochs;
    cfg.jobs = o.jobs;
    cfg.log = log_line;
    const auto filtered = filter_min_class_size(load_embedding_csv(o.input), o.min_class_size);
    if (filtered.size() == 0) throw PreconditionError("no class has at least " + std::to_string(o.min_class_size) + " records");
    rows = eval::run_noun_adjective_experiment(split_first_n(filtered, o.train_per_class), cfg);
  }
  const auto summary = eval::macro_average(rows);
  const fs::path dir = o.out_dir;
  fs::create_directories(dir);
  eval::emit_report(rows, summary, eval::ReportFormat::Csv, dir / "nounadj_report.csv");
  eval::emit_report(rows, summary, eval::ReportFormat::Markdown, dir / "nounadj_report.md");
  eval::write_text_file(dir / "nounadj_summary.csv", eval::render_summary_csv(summary, "class"));
  std::cout << rows.size() << " nouns; macro averages:\n";
  print_summary(summary);
  return 0;
}

int cmd_eval_adj(const AdjOptions& o) {
  require_input(o.input, o.results);
  std::vector<eval::AdjResultRow> rows;
  if (!o.results.empty()) {
    rows = eval::read_adj_report_csv(o.results);
  } else {
    eval::ExperimentConfig cfg;
    cfg.bvm.epochs = o.epochs;
    cfg.bvm.learning_rate = o.lr;
    cfg.bvm.seed = o.seed;
    cfg.bvm.validate();
    cfg.logreg.epochs = o.logreg_epochs;
    cfg.logreg.learning_rate = o.logreg_lr;
    cfg.logreg.seed = o.seed;
    cfg.jobs = o.jobs;
    cfg.log = log_line;
    rows = eval::run_adjective_ovr_experiment(split_shuffled_ratio(load_embedding_csv(o.input), o.ratio, o.seed), cfg);
  }
  const auto summary = eval::macro_average(rows);
  const fs::path dir = o.out_dir;
  fs::create_directories(dir);
  eval::emit_report(rows, summary, eval::ReportFormat::Csv, dir / "adj_report.csv");
  eval::emit_report(rows, summary, eval::ReportFormat::Markdown, dir / "adj_report.md");
  eval::write_text_file(dir / "adj_summary.csv", eval::render_summary_csv(summary, "adjective"));
  std::cout << rows.size() << " adjectives; macro averages:\n";
  print_summary(summary);
  return 0;
}

int cmd_plot(const PlotOptions& o) {
  const auto ds = load_embedding_csv(o.input);
  if (ds.dim() != 2 && !o.pca) throw PreconditionError("data has d=" + std::to_string(ds.dim()) + "; pass --pca to plot it");

  std::vector<eval::LabeledPoint> points;
  std::vector<eval::LabeledPoint> arrows;
  std::vector<std::vector<double>> vectors;
  std::vector<std::string> vector_labels;
  if (!o.model.empty()) {
    const auto model = bvm::load_model(o.model);
    if (model.dim() != ds.dim())
      throw DimensionError("model has d=" + std::to_string(model.dim()) + " but data has d=" + std::to_string(ds.dim()));
    for (std::size_t j = 0; j < model.num_classes(); ++j) {
      vectors.emplace_back(model.basis.row(j).begin(), model.basis.row(j).end());
      vector_labels.push_back(model.classes[j]);
    }
  }

  if (o.pca) {
    const auto pca = eval::project_pca_2d(ds.embeddings(), o.seed);
    for (std::size_t i = 0; i < ds.size(); ++i)
      points.push_back({pca.points(i, 0), pca.points(i, 1), ds.records()[i].adjective});
    for (std::size_t j = 0; j < vectors.size(); ++j)
      arrows.push_back({dot(pca.components.row(0), vectors[j]), dot(pca.components.row(1), vectors[j]), vector_labels[j]});
  } else {
    for (const auto& rec : ds.records()) points.push_back({rec.embedding[0], rec.embedding[1], rec.adjective});
    for (std::size_t j = 0; j < vectors.size(); ++j) arrows.push_back({vectors[j][0], vectors[j][1], vector_labels[j]});
  }
  eval::emit_scatter_svg(points, arrows, o.out);
  std::cout << "wrote " << o.out << ": " << points.size() << " points, " << arrows.size() << " vectors\n";
  return 0;
}

// Turns a flat JSON object into flags placed ahead of the user's own, so that
// with take-last semantics anything given on the command line wins.
std::vector<std::string> config_to_args(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config " + path.string() + ": expected a JSON object");
  std::vector<std::string> args;
  for (const auto& [key, value] : doc.items()) {
    const std::string flag = "--" + key;
    if (value.is_boolean()) {
      if (value.get<bool>()) args.push_back(flag);
    } else if (value.is_string()) {
      args.push_back(flag);
      args.push_back(value.get<std::string>());
    } else if (value.is_number_integer() || value.is_number_unsigned()) {
      args.push_back(flag);
      args.push_back(value.dump());
    } else if (value.is_number_float()) {
      args.push_back(flag);
      args.push_back(format_double(value.get<double>()));
    } else {
      throw ConfigError("config key '" + key + "' must be a string, number, or boolean");
    }
  }
  return args;
}

// argv with any `--config FILE` expanded in place right after the subcommand name.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::string config_path;
  std::vector<std::string> rest;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config_path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  if (config_path.empty() || rest.empty()) return args;
  const auto extra = config_to_args(config_path);
  rest.insert(rest.begin() + 1, extra.begin(), extra.end());
  return rest;
}

void add_seed(CLI::App* cmd, std::uint64_t& seed) {
  cmd->add_option("--seed", seed, "Random seed")->envname("STATEBENCH_SEED")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Benchmark basis-vector classification of object states against retrieval and learned baselines"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  std::string config_unused;
  app.add_option("--config", config_unused, "JSON file whose keys mirror the flags; explicit flags take precedence");

  SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic embedding CSV");
  synth_cmd->add_option("kind", synth.kind, "orthogonal2d or clusters")
      ->required()
      ->check(CLI::IsMember({"orthogonal2d", "clusters"}));
  synth_cmd->add_option("--k", synth.k, "Number of clusters")->capture_default_str()->check(CLI::PositiveNumber);
  synth_cmd->add_option("--n", synth.n, "Points per cluster")->capture_default_str()->check(CLI::PositiveNumber);
  synth_cmd->add_option("--d", synth.d, "Dimension")->capture_default_str()->check(CLI::PositiveNumber);
  synth_cmd->add_option("--center-scale", synth.center_scale, "Norm of cluster centers")->capture_default_str();
  synth_cmd->add_option("--noise", synth.noise, "Per-coordinate Gaussian noise sigma")->capture_default_str();
  add_seed(synth_cmd, synth.seed);
  synth_cmd->add_option("--out", synth.out, "Output CSV")->required();

  TrainOptions train;
  auto* train_cmd = app.add_subcommand("train", "Train basis vectors on a shuffled split and report held-out accuracy");
  train_cmd->add_option("--input", train.input, "Embedding CSV")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--out", train.out, "Output model JSON")->required();
  train_cmd->add_option("--epochs", train.epochs, "Training epochs")->capture_default_str();
  train_cmd->add_option("--lr", train.lr, "Adam learning rate")->capture_default_str();
  train_cmd->add_option("--loss", train.loss, "squared or signed")
      ->capture_default_str()
      ->check(CLI::IsMember({"squared", "signed"}));
  train_cmd->add_option("--ratio", train.ratio, "Train fraction per class")->capture_default_str();
  add_seed(train_cmd, train.seed);

  NounAdjOptions na;
  auto* na_cmd = app.add_subcommand("eval-nounadj", "Per-noun adjective classification across all seven metrics");
  na_cmd->add_option("--input", na.input, "Embedding CSV")->check(CLI::ExistingFile);
  na_cmd->add_option("--results", na.results, "Existing per-noun results CSV to aggregate instead")
      ->check(CLI::ExistingFile);
  na_cmd->add_option("--out-dir", na.out_dir, "Output directory")->capture_default_str();
  na_cmd->add_option("--epochs", na.epochs, "BVM epochs")->capture_default_str();
  na_cmd->add_option("--lr", na.lr, "BVM learning rate")->capture_default_str();
  na_cmd->add_option("--min-class-size", na.min_class_size, "Drop noun-adjective classes smaller than this")
      ->capture_default_str();
  na_cmd->add_option("--train-per-class", na.train_per_class, "Leading records per class used for training")
      ->capture_default_str();
  na_cmd->add_option("--pq-m", na.pq_m, "PQ subspaces")->capture_default_str();
  na_cmd->add_option("--pq-k", na.pq_k, "PQ centroids per subspace")->capture_default_str();
  na_cmd->add_option("--pq-iters", na.pq_iters, "PQ k-means iterations")->capture_default_str();
  na_cmd->add_option("--mlp-epochs", na.mlp_epochs, "MLP epochs")->capture_default_str();
  na_cmd->add_option("--jobs", na.jobs, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  add_seed(na_cmd, na.seed);

  AdjOptions adj;
  auto* adj_cmd = app.add_subcommand("eval-adj", "Per-adjective one-vs-rest comparison of logistic regression and BVM");
  adj_cmd->add_option("--input", adj.input, "Embedding CSV")->check(CLI::ExistingFile);
  adj_cmd->add_option("--results", adj.results, "Existing per-adjective results CSV to aggregate instead")
      ->check(CLI::ExistingFile);
  adj_cmd->add_option("--out-dir", adj.out_dir, "Output directory")->capture_default_str();
  adj_cmd->add_option("--ratio", adj.ratio, "Train fraction per adjective")->capture_default_str();
  adj_cmd->add_option("--epochs", adj.epochs, "BVM epochs")->capture_default_str();
  adj_cmd->add_option("--lr", adj.lr, "BVM learning rate")->capture_default_str();
  adj_cmd->add_option("--logreg-epochs", adj.logreg_epochs, "Logistic regression epochs")->capture_default_str();
  adj_cmd->add_option("--logreg-lr", adj.logreg_lr, "Logistic regression learning rate")->capture_default_str();
  adj_cmd->add_option("--jobs", adj.jobs, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  add_seed(adj_cmd, adj.seed);

  PlotOptions plot;
  auto* plot_cmd = app.add_subcommand("plot", "Scatter plot of embeddings with optional basis-vector arrows");
  plot_cmd->add_option("--input", plot.input, "Embedding CSV")->required()->check(CLI::ExistingFile);
  plot_cmd->add_option("--model", plot.model, "Model JSON whose basis vectors are drawn")->check(CLI::ExistingFile);
  plot_cmd->add_flag("--pca", plot.pca, "Project onto the top two principal components");
  plot_cmd->add_option("--out", plot.out, "Output SVG")->required();
  add_seed(plot_cmd, plot.seed);

  std::vector<std::string> args;
  try {
    args = expand_config(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*synth_cmd) return cmd_synth(synth);
    if (*train_cmd) return cmd_train(train);
    if (*na_cmd) return cmd_eval_nounadj(na);
    if (*adj_cmd) return cmd_eval_adj(adj);
    if (*plot_cmd) return cmd_plot(plot);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\nrun with --help for usage\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
