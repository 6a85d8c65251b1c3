#include <fstream>
#include <set>
#include <string>

#include "dagfm/data/dataset.hpp"
#include "dagfm/data/movielens.hpp"
#include "dagfm/data/schema.hpp"
#include "dagfm/data/synthetic.hpp"
#include "dagfm/numcore/errors.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace dagfm;

namespace {

std::filesystem::path write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream(path) << text;
  return path;
}

}  // namespace

TEST_CASE("build_vocab applies the frequency threshold") {
  const auto dir = testutil::scratch_dir("vocab");
  const auto csv = write_file(dir / "a.csv", "label,x,y\n1,a,p\n0,a,q\n1,b,p\n");
  const FieldSchema s = build_vocab(csv, 2);
  CHECK(s.field(0).values() == std::vector<std::string>{"a"});
  CHECK(s.field(0).encode("a") == 0);
  CHECK(s.field(0).oov_index() == 1);
  CHECK(s.field(0).encode("b") == 1);

  const FieldSchema all = build_vocab(csv, 0);
  CHECK(all.field(0).size() == 2);
  CHECK(all.field(1).size() == 2);
  CHECK(all.total_features() == 6);
}

TEST_CASE("total features on a 1000-row file with two 10-value fields") {
  const auto dir = testutil::scratch_dir("features");
  std::mt19937_64 rng(5);
  std::set<std::string> seen[2];
  std::ofstream out(dir / "f.csv");
  out << "label,u,v\n";
  for (int n = 0; n < 1000; ++n) {
    // Cycle through all values first so each appears.
    const std::string u = "u" + std::to_string(n < 10 ? n : static_cast<int>(rng() % 10));
    const std::string v = "v" + std::to_string(n < 10 ? n : static_cast<int>(rng() % 10));
    seen[0].insert(u);
    seen[1].insert(v);
    out << (rng() % 2) << ',' << u << ',' << v << '\n';
  }
  out.close();
  const FieldSchema s = build_vocab(dir / "f.csv", 0);
  CHECK(s.total_features() == seen[0].size() + 1 + seen[1].size() + 1);
  CHECK(s.total_features() == 22);
}

TEST_CASE("build_vocab errors") {
  const auto dir = testutil::scratch_dir("vocab_err");
  CHECK_THROWS_AS(build_vocab(write_file(dir / "one.csv", "label,x\n1,a\n"), 0), ConfigError);
  try {
    build_vocab(write_file(dir / "bad.csv", "label,x,y\n1,a,b\n0,a\n"), 0);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  CHECK_THROWS_AS(build_vocab(write_file(dir / "label.csv", "label,x,y\n2,a,b\n"), 0), ParseError);
  CHECK_THROWS_AS(build_vocab(write_file(dir / "head.csv", "y,x,z\n1,a,b\n"), 0), ParseError);
}

TEST_CASE("encode_instance maps known, unseen and label values") {
  const FieldSchema s({FieldVocab("x", {"a", "b"}), FieldVocab("y", {"p"})}, 0);
  const std::vector<std::string_view> row{"1", "b", "zzz"};
  const Instance inst = encode_instance(s, row);
  CHECK(inst.label == 1);
  CHECK(inst.indices == std::vector<FieldIndex>{1, 1});
  const std::vector<std::string_view> short_row{"0", "a"};
  CHECK_THROWS_AS(encode_instance(s, short_row), ParseError);
  const std::vector<std::string_view> bad_label{"yes", "a", "p"};
  CHECK_THROWS_AS(encode_instance(s, bad_label), ParseError);
}

TEST_CASE("encode and decode round-trip in-vocabulary values") {
  const FieldVocab v("x", {"red", "green", "blue"});
  for (const auto& value : v.values()) CHECK(v.decode(v.encode(value)) == value);
  CHECK_THROWS_AS(v.decode(7), LookupError);
}

TEST_CASE("schema JSON round trip") {
  const auto dir = testutil::scratch_dir("schema");
  const FieldSchema s({FieldVocab("x", {"a", "b"}), FieldVocab("y", {"p"})}, 3);
  const nlohmann::json j = s.to_json();
  CHECK(j.at("min_freq") == 3);
  CHECK(j.at("fields")[0].at("name") == "x");
  CHECK(j.at("fields")[0].at("values") == nlohmann::json::array({"a", "b"}));
  s.save(dir / "schema.json");
  const FieldSchema back = FieldSchema::load(dir / "schema.json");
  CHECK(back.to_json() == j);
  CHECK(back.vocab_rows() == std::vector<std::size_t>{3, 2});
  CHECK_THROWS_AS(FieldSchema::load(write_file(dir / "bad.json", "{not json")), FormatError);
}

namespace {

Dataset numbered(std::size_t n) {
  Dataset d(2);
  for (std::size_t k = 0; k < n; ++k) {
    const std::vector<FieldIndex> row{static_cast<FieldIndex>(k), 0};
    d.add(row, static_cast<std::uint8_t>(k % 2));
  }
  return d;
}

std::vector<FieldIndex> ids(const Dataset& d) {
  std::vector<FieldIndex> out;
  for (std::size_t k = 0; k < d.size(); ++k) out.push_back(d.row(k)[0]);
  return out;
}

}  // namespace

TEST_CASE("split sizes, determinism and coverage") {
  const Dataset d = numbered(10);
  const DatasetSplit s = split_dataset(d, kDefaultSplit, 42);
  CHECK(s.train.size() == 8);
  CHECK(s.validation.size() == 1);
  CHECK(s.test.size() == 1);

  std::multiset<FieldIndex> all;
  for (const Dataset* part : {&s.train, &s.validation, &s.test}) {
    for (FieldIndex id : ids(*part)) all.insert(id);
  }
  CHECK(all.size() == 10);
  CHECK(std::set<FieldIndex>(all.begin(), all.end()).size() == 10);

  const DatasetSplit again = split_dataset(d, kDefaultSplit, 42);
  CHECK(ids(again.train) == ids(s.train));
  CHECK(ids(again.test) == ids(s.test));
}

TEST_CASE("different split seeds give different permutations") {
  const Dataset d = numbered(50);
  const auto base = ids(split_dataset(d, kDefaultSplit, 1).train);
  int differing = 0;
  for (std::uint64_t seed = 2; seed < 12; ++seed) {
    if (ids(split_dataset(d, kDefaultSplit, seed).train) != base) ++differing;
  }
  CHECK(differing == 10);
}

TEST_CASE("split errors") {
  CHECK_THROWS_AS(split_dataset(Dataset(2), kDefaultSplit, 1), ConfigError);
  CHECK_THROWS_AS(split_dataset(numbered(4), SplitRatios{0.5, 0.5, 0.0}, 1), ConfigError);
  CHECK_THROWS_AS(split_dataset(numbered(4), SplitRatios{0.5, 0.3, 0.3}, 1), ConfigError);
}

TEST_CASE("batch sizes and ordering") {
  const Dataset d = numbered(5);
  const auto batches = iterate_batches(d, 2, 9);
  REQUIRE(batches.size() == 3);
  CHECK(batches[0].labels.size() == 2);
  CHECK(batches[1].labels.size() == 2);
  CHECK(batches[2].labels.size() == 1);
  CHECK(iterate_batches(d, 5, 9).size() == 1);
  CHECK(iterate_batches(d, 50, 9).size() == 1);
  CHECK_THROWS_AS(BatchSchedule(5, 0, 1), ConfigError);

  // The concatenated batches are the seeded permutation of the rows.
  const auto perm = seeded_permutation(5, 9);
  std::vector<FieldIndex> concat;
  for (const Batch& b : batches) {
    for (std::size_t k = 0; k < b.labels.size(); ++k) concat.push_back(b.indices[k * 2]);
  }
  std::vector<FieldIndex> expected;
  for (std::size_t p : perm) expected.push_back(static_cast<FieldIndex>(p));
  CHECK(concat == expected);
  CHECK(std::set<FieldIndex>(concat.begin(), concat.end()).size() == 5);
}

TEST_CASE("synthetic data round-trips through CSV") {
  const auto dir = testutil::scratch_dir("synthetic");
  PlantedRuleConfig cfg;
  cfg.instances = 300;
  cfg.num_fields = 4;
  cfg.vocab_per_field = 5;
  const PlantedDataset p = make_planted_dataset(cfg);
  CHECK(p.data.size() == 300);
  write_csv(dir / "s.csv", p.schema, p.data);
  const Dataset back = load_dataset(dir / "s.csv", p.schema);
  REQUIRE(back.size() == p.data.size());
  for (std::size_t k = 0; k < back.size(); ++k) {
    CHECK(back.label(k) == p.data.label(k));
    CHECK(std::equal(back.row(k).begin(), back.row(k).end(), p.data.row(k).begin()));
  }
  // Both classes show up.
  std::size_t pos = 0;
  for (auto y : p.data.labels()) pos += y;
  CHECK(pos > 30);
  CHECK(pos < 270);
}

TEST_CASE("movielens conversion") {
  const auto dir = testutil::scratch_dir("movielens");
  write_file(dir / "users.dat", "1::F::1::10::48067\n2::M::56::16::70072\n");
  write_file(dir / "movies.dat", "10::Toy Story (1995)::Animation|Children's|Comedy\n20::Heat (1995)::Action\n");
  write_file(dir / "ratings.dat", "1::10::5::978300760\n2::20::3::978302109\n2::10::4::978301968\n");
  const MovieLensSummary s = convert_movielens(dir, dir / "ml.csv");
  CHECK(s.rows == 3);
  CHECK(s.positives == 2);
  std::ifstream in(dir / "ml.csv");
  std::string header, first;
  std::getline(in, header);
  std::getline(in, first);
  CHECK(header == "label,user_id,gender,age,occupation,zip,movie_id,genre");
  CHECK(first == "1,1,F,1,10,48067,10,Animation");
  const FieldSchema schema = build_vocab(dir / "ml.csv", 0);
  CHECK(schema.num_fields() == 7);
}
