#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "statebench/dataset.hpp"
#include "statebench/error.hpp"

namespace fs = std::filesystem;
using namespace statebench;

namespace {

fs::path temp_path(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "statebench_tests";
  fs::create_directories(dir);
  return dir / name;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

EmbeddingRecord record(const std::string& noun, const std::string& adj, std::vector<double> e, const std::string& id) {
  return {noun, adj, std::move(e), id};
}

// Random dataset with class sizes in [1, max_size] over a few nouns and adjectives.
LabeledDataset random_dataset(std::mt19937_64& gen, std::size_t max_size) {
  std::uniform_int_distribution<std::size_t> size_dist(1, max_size);
  std::normal_distribution<double> value(0.0, 1.0);
  std::vector<EmbeddingRecord> records;
  std::size_t id = 0;
  for (const char* noun : {"apple", "box", "cord"}) {
    for (const char* adj : {"old", "new", "wet"}) {
      const std::size_t n = size_dist(gen);
      for (std::size_t i = 0; i < n; ++i)
        records.push_back(record(noun, adj, {value(gen), value(gen), value(gen)}, "r" + std::to_string(id++)));
    }
  }
  std::shuffle(records.begin(), records.end(), gen);
  return {3, std::move(records)};
}

std::multiset<std::string> ids(const LabeledDataset& ds) {
  std::multiset<std::string> out;
  for (const auto& r : ds.records()) out.insert(r.source_id);
  return out;
}

void check_partition(const LabeledDataset& original, const SplitDataset& split, ClassKey key) {
  const auto train_ids = ids(split.train);
  for (const auto& id : ids(split.test)) CHECK(train_ids.count(id) == 0);
  for (const auto& [label, indices] : original.class_indices(key)) {
    std::multiset<std::string> expected;
    for (std::size_t i : indices) expected.insert(original.records()[i].source_id);
    std::multiset<std::string> got;
    for (const auto* side : {&split.train, &split.test})
      for (const auto& r : side->records())
        if (class_label(r, key) == label) got.insert(r.source_id);
    CHECK(got == expected);
  }
}

}  // namespace

TEST_CASE("load_embedding_csv: small file") {
  const auto path = temp_path("two_rows.csv");
  write_file(path, "noun,adjective,source_id,e0,e1,e2\napple,peeled,a.jpg,1,2.5,-3e-2\napple,pureed,b.jpg,0,0,1\n");
  const auto ds = load_embedding_csv(path);
  CHECK(ds.size() == 2);
  CHECK(ds.dim() == 3);
  CHECK(ds.records()[0].embedding == std::vector<double>{1, 2.5, -0.03});
  CHECK(ds.records()[1].adjective == "pureed");
}

TEST_CASE("load_embedding_csv: malformed rows name the line") {
  const auto path = temp_path("short_row.csv");
  write_file(path, "noun,adjective,source_id,e0,e1,e2\napple,peeled,a.jpg,1,2,3\napple,peeled,b.jpg,1,2\n");
  try {
    load_embedding_csv(path);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
    CHECK(std::string(e.what()).find(":3:") != std::string::npos);
  }

  write_file(path, "noun,adjective,source_id,e0\napple,peeled,a.jpg,abc\n");
  CHECK_THROWS_AS(load_embedding_csv(path), ParseError);
  write_file(path, "noun,adjective,e0\n");
  CHECK_THROWS_AS(load_embedding_csv(path), ParseError);
  write_file(path, "noun,adjective,source_id,e1\n");
  CHECK_THROWS_AS(load_embedding_csv(path), ParseError);
  write_file(path, "noun,adjective,source_id,e0\napple,peeled,a.jpg,nan\n");
  CHECK_THROWS_AS(load_embedding_csv(path), ParseError);
  CHECK_THROWS_AS(load_embedding_csv(temp_path("does_not_exist.csv")), ParseError);
}

TEST_CASE("save/load round trip is byte-stable") {
  const auto ds = gen_gaussian_clusters(4, 10, 5, 1.0, 0.3, 99);
  CHECK(ds.size() == 40);
  const auto first = temp_path("roundtrip_a.csv");
  const auto second = temp_path("roundtrip_b.csv");
  save_embedding_csv(ds, first);
  const auto loaded = load_embedding_csv(first);
  CHECK(loaded.records() == ds.records());
  save_embedding_csv(loaded, second);
  CHECK(read_file(first) == read_file(second));
}

TEST_CASE("filter_min_class_size") {
  std::vector<EmbeddingRecord> records;
  for (int i = 0; i < 20; ++i) records.push_back(record("apple", "small", {0.0}, "s" + std::to_string(i)));
  for (int i = 0; i < 21; ++i) records.push_back(record("apple", "large", {1.0}, "l" + std::to_string(i)));
  const LabeledDataset ds(1, records);
  const auto kept = filter_min_class_size(ds);
  const auto sizes = kept.class_sizes(ClassKey::NounAdjective);
  CHECK(sizes.size() == 1);
  CHECK(sizes.at("apple/large") == 21);
  CHECK_THROWS_AS(filter_min_class_size(ds, 0), PreconditionError);

  std::mt19937_64 gen(4);
  for (int trial = 0; trial < 20; ++trial) {
    const auto random = random_dataset(gen, 12);
    const auto filtered = filter_min_class_size(random, 6);
    for (const auto& [label, n] : filtered.class_sizes(ClassKey::NounAdjective)) {
      CHECK(n >= 6);
      CHECK(random.class_sizes(ClassKey::NounAdjective).at(label) == n);
    }
    CHECK(filter_min_class_size(filtered, 6).records() == filtered.records());
  }
}

TEST_CASE("split_first_n") {
  std::vector<EmbeddingRecord> records;
  for (int i = 0; i < 25; ++i) records.push_back(record("bed", "made", {double(i)}, "m" + std::to_string(i)));
  for (int i = 0; i < 21; ++i) records.push_back(record("bed", "unmade", {double(i)}, "u" + std::to_string(i)));
  const LabeledDataset ds(1, records);
  const auto split = split_first_n(ds, 20);
  CHECK(split.train.size() == 40);
  CHECK(split.test.size() == 6);
  CHECK(split.test.class_sizes(ClassKey::NounAdjective).at("bed/made") == 5);
  CHECK(split.test.class_sizes(ClassKey::NounAdjective).at("bed/unmade") == 1);
  // File order: the first twenty go to train.
  CHECK(split.train.records()[19].source_id == "m19");
  CHECK(split.test.records()[0].source_id == "m20");

  records.push_back(record("cot", "made", {0.0}, "c0"));
  try {
    split_first_n(LabeledDataset(1, records), 20);
    FAIL("expected PreconditionError");
  } catch (const PreconditionError& e) {
    CHECK(std::string(e.what()).find("cot/made") != std::string::npos);
  }

  std::mt19937_64 gen(8);
  for (int trial = 0; trial < 20; ++trial) {
    const auto random = filter_min_class_size(random_dataset(gen, 15), 6);
    check_partition(random, split_first_n(random, 5), ClassKey::NounAdjective);
  }
}

TEST_CASE("split_shuffled_ratio") {
  std::vector<EmbeddingRecord> records;
  for (int i = 0; i < 10; ++i) records.push_back(record("x", "ten", {double(i)}, "t" + std::to_string(i)));
  records.push_back(record("x", "one", {0.0}, "o0"));
  const LabeledDataset ds(1, records);
  const auto split = split_shuffled_ratio(ds, 0.8, 17);
  CHECK(split.train.class_sizes(ClassKey::Adjective).at("ten") == 8);
  CHECK(split.test.class_sizes(ClassKey::Adjective).at("ten") == 2);
  CHECK(split.train.class_sizes(ClassKey::Adjective).count("one") == 0);
  CHECK(split.test.class_sizes(ClassKey::Adjective).at("one") == 1);

  const auto again = split_shuffled_ratio(ds, 0.8, 17);
  CHECK(again.train.records() == split.train.records());
  CHECK(again.test.records() == split.test.records());

  CHECK_THROWS_AS(split_shuffled_ratio(ds, 1.0, 1), PreconditionError);
  CHECK_THROWS_AS(split_shuffled_ratio(ds, 0.0, 1), PreconditionError);

  std::mt19937_64 gen(12);
  for (int trial = 0; trial < 20; ++trial) {
    const auto random = random_dataset(gen, 15);
    check_partition(random, split_shuffled_ratio(random, 0.8, trial), ClassKey::Adjective);
    check_partition(random, split_shuffled_ratio(random, 0.5, trial, ClassKey::NounAdjective), ClassKey::NounAdjective);
  }
}

TEST_CASE("class_means") {
  const LabeledDataset ds(2, {record("n", "a", {1, 0}, "1"), record("n", "a", {0, 1}, "2"),
                              record("n", "b", {3, -2}, "3")});
  const auto means = class_means(ds, ClassKey::Adjective);
  CHECK(means.at("a") == std::vector<double>{0.5, 0.5});
  CHECK(means.at("b") == std::vector<double>{3, -2});

  std::mt19937_64 gen(31);
  std::normal_distribution<double> value(0.0, 2.0);
  std::vector<EmbeddingRecord> seven;
  std::vector<double> sum(4, 0.0);
  for (int i = 0; i < 7; ++i) {
    std::vector<double> e(4);
    for (std::size_t j = 0; j < 4; ++j) {
      e[j] = value(gen);
      sum[j] += e[j];
    }
    seven.push_back(record("n", "c", e, std::to_string(i)));
  }
  const auto mean = class_means(LabeledDataset(4, seven), ClassKey::Adjective).at("c");
  for (std::size_t j = 0; j < 4; ++j) CHECK(std::abs(mean[j] - sum[j] / 7.0) <= 1e-12);

  std::shuffle(seven.begin(), seven.end(), gen);
  const auto permuted = class_means(LabeledDataset(4, seven), ClassKey::Adjective).at("c");
  for (std::size_t j = 0; j < 4; ++j) CHECK(std::abs(mean[j] - permuted[j]) <= 1e-12);
}

TEST_CASE("gen_gaussian_clusters") {
  const auto ds = gen_gaussian_clusters(10, 50, 100, 1.0, 0.1, 7);
  CHECK(ds.size() == 500);
  CHECK(ds.dim() == 100);
  CHECK(ds.class_sizes(ClassKey::Adjective).size() == 10);
  CHECK(ds.records().front().noun == "synthetic");
  CHECK(ds.class_sizes(ClassKey::Adjective).count("class_9") == 1);

  const auto again = gen_gaussian_clusters(10, 50, 100, 1.0, 0.1, 7);
  CHECK(again.records() == ds.records());

  const auto exact = gen_gaussian_clusters(3, 4, 5, 2.0, 0.0, 1);
  for (const auto& [label, indices] : exact.class_indices(ClassKey::Adjective)) {
    const auto& centre = exact.records()[indices.front()].embedding;
    double sq = 0.0;
    for (double x : centre) sq += x * x;
    CHECK(std::sqrt(sq) == doctest::Approx(2.0).epsilon(1e-12));
    for (std::size_t i : indices) CHECK(exact.records()[i].embedding == centre);
  }
  CHECK_THROWS_AS(gen_gaussian_clusters(1, 4, 5, 1.0, 0.1, 1), PreconditionError);
  CHECK_THROWS_AS(gen_gaussian_clusters(2, 4, 1, 1.0, 0.1, 1), PreconditionError);
}

TEST_CASE("gen_orthogonal_2d") {
  const auto ds = gen_orthogonal_2d();
  CHECK(ds.size() == 24);
  CHECK(ds.dim() == 2);
  CHECK(ds.class_sizes(ClassKey::Adjective).at("class_0") == 12);
  CHECK(ds.class_sizes(ClassKey::Adjective).at("class_1") == 12);
  for (const auto& r : ds.records())
    CHECK(std::abs(std::hypot(r.embedding[0], r.embedding[1]) - 1.0) <= 1e-12);

  const auto axes = gen_orthogonal_2d({0.0});
  CHECK(axes.size() == 4);
  CHECK(axes.records()[0].embedding == std::vector<double>{1, 0});
  CHECK(axes.records()[1].embedding == std::vector<double>{1, 0});
  CHECK(axes.records()[2].embedding == std::vector<double>{0, 1});
  CHECK(axes.records()[3].embedding == std::vector<double>{0, 1});
}

TEST_CASE("LabeledDataset rejects inconsistent records") {
  CHECK_THROWS_AS(LabeledDataset(2, {record("n", "a", {1.0}, "x")}), PreconditionError);
  CHECK_THROWS_AS(LabeledDataset(1, {record("", "a", {1.0}, "x")}), PreconditionError);
}
