#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "zsl/hierarchy_builder.hpp"
#include "zsl/io.hpp"
#include "zsl/synthetic.hpp"

using namespace zsl;
namespace fs = std::filesystem;

namespace {

using testing::TempDir;

std::string file_text(const fs::path& p) { return io::read_text(p); }

// Runs fn, expecting a FormatError at the given line.
template <class F>
void expect_line(F fn, std::size_t line, const std::string& needle = "") {
  try {
    fn();
    FAIL("no error raised");
  } catch (const io::FormatError& e) {
    CHECK(e.line() == line);
    if (!needle.empty()) CHECK(std::string(e.what()).find(needle) != std::string::npos);
  }
}

}  // namespace

TEST_CASE("double formatting round-trips") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 2000; ++i) {
    const double v = i % 2 ? u(rng) : std::ldexp(u(rng), -60);
    CHECK(io::parse_double(io::format_double(v)) == v);
  }
  CHECK(io::format_double(0.5) == "0.5");
  CHECK(io::format_double(NAN) == "nan");
  CHECK(std::isnan(io::parse_double("nan")));
  CHECK_THROWS(io::parse_double("1.5x"));
  CHECK_THROWS(io::parse_double(""));
}

TEST_CASE("catalog files") {
  TempDir d;
  const auto cat = testing::make_catalog(4, {2});
  io::write_catalog(cat, d.path / "c.csv");
  CHECK(file_text(d.path / "c.csv") == "index,label,novel\n0,c0,0\n1,c1,0\n2,c2,1\n3,c3,0\n");
  const auto back = io::read_catalog(d.path / "c.csv");
  CHECK(back.size() == 4);
  CHECK(back.novel() == std::vector<int>{2});

  expect_line([&] { io::read_catalog(d.file("h.csv", "idx,label,novel\n")); }, 1);
  expect_line([&] { io::read_catalog(d.file("n.csv", "index,label,novel\n0,a,0\n1,b,2\n")); }, 3, "novel flag");
  expect_line([&] { io::read_catalog(d.file("f.csv", "index,label,novel\n0,a\n")); }, 2);
  CHECK_THROWS_AS(io::read_catalog(d.file("dup.csv", "index,label,novel\n0,a,0\n1,a,0\n")), io::FormatError);
  CHECK_THROWS(io::read_catalog(d.path / "missing.csv"));
}

TEST_CASE("feature files") {
  TempDir d;
  const auto cat = testing::make_catalog(3);
  const auto p = d.file("f.csv", "item_id,label,f0,f1,f2\na,c0,1,2,3\nb,,4,5,6\n");
  const auto recs = io::read_features(p, cat);
  REQUIRE(recs.size() == 2);
  CHECK(feature_dimension(recs) == 3);
  CHECK(recs[0].class_id == 0);
  CHECK_FALSE(recs[1].class_id.has_value());

  expect_line([&] { io::read_features(d.file("r.csv", "item_id,label,f0,f1,f2\na,c0,1,2,3\nb,c1,1,2\n"), cat); }, 3,
              "expected 3");
  expect_line([&] { io::read_features(d.file("n.csv", "item_id,label,f0,f1\na,c0,1,2\nb,c1,1,inf\n"), cat); }, 3);
  expect_line([&] { io::read_features(d.file("x.csv", "item_id,label,f0\na,c0,nan\n"), cat); }, 2);
  expect_line([&] { io::read_features(d.file("u.csv", "item_id,label,f0\na,zz,1\n"), cat); }, 2, "unknown class");
  expect_line([&] { io::read_features(d.file("b.csv", "item_id,label,f0\na,c0,abc\n"), cat); }, 2);
  expect_line([&] { io::read_features(d.file("h.csv", "item_id,label,g0\n"), cat); }, 1);

  io::write_features(recs, cat, d.path / "w.csv");
  CHECK(file_text(d.path / "w.csv") == "item_id,label,f0,f1,f2\na,c0,1,2,3\nb,,4,5,6\n");
}

TEST_CASE("attribute matrix files") {
  TempDir d;
  const auto m = io::read_attribute_matrix(d.file("a.csv", "class,x,y,z,w\nc0,1,0,-1,1\nc1,0,0,0,0\nc2,-1,1,1,-1\n"));
  CHECK(m.rows() == 3);
  CHECK(m.cols() == 4);
  CHECK(m.value(2, 0) == -1);
  CHECK(m.attribute_names()[3] == "w");
  expect_line([&] { io::read_attribute_matrix(d.file("b.csv", "class,x,y\nc0,1,0\nc1,2,0\n")); }, 3, "(1, 0)");
  expect_line([&] { io::read_attribute_matrix(d.file("c.csv", "class,x,y\nc0,1,0,1\n")); }, 2, "header has");
  expect_line([&] { io::read_attribute_matrix(d.file("e.csv", "klass,x\n")); }, 1);

  io::write_attribute_matrix(m, d.path / "w.csv");
  CHECK(file_text(d.path / "w.csv") == "class,x,y,z,w\nc0,1,0,-1,1\nc1,0,0,0,0\nc2,-1,1,1,-1\n");
}

TEST_CASE("hierarchy text round-trips") {
  const auto cat = testing::make_catalog(2);
  const auto two = testing::tree_from_parents({-1, 0, 0}, {-1, 0, 1});
  const auto text = io::hierarchy_to_text(two, cat);
  CHECK(io::hierarchy_to_text(io::hierarchy_from_text(text, cat), cat) == text);

  std::mt19937_64 rng(2);
  for (int round = 0; round < 30; ++round) {
    const int k = std::uniform_int_distribution<int>(2, 40)(rng);
    const auto c = testing::make_catalog(k);
    const auto t = testing::random_tree(rng, k);
    const auto s = io::hierarchy_to_text(t, c);
    const auto back = io::hierarchy_from_text(s, c);
    CHECK(io::hierarchy_to_text(back, c) == s);
    CHECK(clade_signature(back) == clade_signature(t));
  }

  const auto cat3 = testing::make_catalog(3);
  CHECK_THROWS(io::hierarchy_from_text(
      R"({"label":"r","children":[{"label":"c0","class":"c0"},{"label":"c0","class":"c0"}]})", cat3));
  CHECK_THROWS(io::hierarchy_from_text(
      R"({"label":"r","children":[{"label":"a","class":"c0"},{"label":"b","class":"zz"}]})", cat3));
  CHECK_THROWS(io::hierarchy_from_text(R"({"label":"r","children":[]})", cat3));
  CHECK_THROWS(io::hierarchy_from_text(R"({"label":"r","class":"c0","children":[]})", cat3));
  CHECK_THROWS(io::hierarchy_from_text(R"({"label":"r","kids":[]})", cat3));
  CHECK_THROWS(io::hierarchy_from_text("{not json", cat3));
}

TEST_CASE("builder output imports and validates") {
  synth::SynthConfig c;
  c.classes = 16;
  c.novel = 2;
  c.dim = 8;
  c.attributes = 24;
  c.items_per_class = 20;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    c.seed = seed;
    const auto data = synth::generate(c);
    const auto built = build_hierarchy(data.attributes).tree;
    TempDir d;
    io::export_hierarchy(built, data.catalog, d.path / "h.json");
    const auto back = io::import_hierarchy(d.path / "h.json", data.catalog);
    CHECK(validate_catalog(data.catalog, data.attributes, back).ok());
    io::export_hierarchy(back, data.catalog, d.path / "h2.json");
    CHECK(file_text(d.path / "h.json") == file_text(d.path / "h2.json"));
  }
}

TEST_CASE("dataset files round-trip byte-identically") {
  synth::SynthConfig c;
  c.classes = 8;
  c.novel = 2;
  c.dim = 5;
  c.attributes = 6;
  c.items_per_class = 10;
  const auto data = synth::generate(c);
  TempDir d;
  io::write_catalog(data.catalog, d.path / "cat.csv");
  io::write_attribute_matrix(data.attributes, d.path / "attr.csv");
  io::write_features(data.split.train, data.catalog, d.path / "train.csv");
  const auto cat = io::read_catalog(d.path / "cat.csv");
  io::write_catalog(cat, d.path / "cat2.csv");
  io::write_attribute_matrix(io::read_attribute_matrix(d.path / "attr.csv"), d.path / "attr2.csv");
  const auto train = io::read_features(d.path / "train.csv", cat);
  io::write_features(train, cat, d.path / "train2.csv");
  CHECK(file_text(d.path / "cat.csv") == file_text(d.path / "cat2.csv"));
  CHECK(file_text(d.path / "attr.csv") == file_text(d.path / "attr2.csv"));
  CHECK(file_text(d.path / "train.csv") == file_text(d.path / "train2.csv"));
  for (std::size_t i = 0; i < train.size(); ++i) CHECK(train[i].features == data.split.train[i].features);
}

TEST_CASE("key value text") {
  const auto kv = io::parse_key_values("# comment\n a = 1 \n\nb=two words\n");
  CHECK(kv.at("a") == "1");
  CHECK(kv.at("b") == "two words");
  CHECK(io::parse_key_values(io::key_values_to_text(kv)) == kv);
  expect_line([] { io::parse_key_values("a = 1\nnonsense\n"); }, 2);
  expect_line([] { io::parse_key_values("a = 1\na = 2\n"); }, 2, "duplicate");
  expect_line([] { io::parse_key_values(" = 3\n"); }, 1);
  TempDir d;
  try {
    io::read_key_values(d.file("k.cfg", "x = 1\ny\n"));
    FAIL("no error raised");
  } catch (const io::FormatError& e) {
    CHECK(e.line() == 2);
    const std::string what = e.what();
    CHECK(what.find("k.cfg:2: expected key = value") != std::string::npos);
  }
}

TEST_CASE("curve and record tables") {
  std::vector<SweepCurve> curves{
      {"darts", "conventional", "non-novel", {{0.0, 0.5, 3.25, 4.0, 10}, {0.1, 0.75, 1.0, 1.5, 10}}},
      {"darts", "conventional", "novel", {{0.0, 0.0, 0.0, 0.0, 0}, {0.1, 0.0, 0.0, 0.0, 0}}},
  };
  const auto text = io::curves_to_csv(curves);
  CHECK(text.rfind("method,posterior_source,param,subset,avg_accuracy,avg_reward_strict,avg_reward_nominal,n_items\n",
                   0) == 0);
  const auto back = io::curves_from_csv(text);
  REQUIRE(back.size() == 2);
  CHECK(io::curves_to_csv(back) == text);
  CHECK(back[1].empty());
  expect_line([] { io::curves_from_csv("bad header\n"); }, 1);
  const std::string nonmono =
      "method,posterior_source,param,subset,avg_accuracy,avg_reward_strict,avg_reward_nominal,n_items\n"
      "darts,s,0.5,novel,1,1,1,3\ndarts,s,0.5,novel,1,1,1,3\n";
  expect_line([&] { io::curves_from_csv(nonmono); }, 3, "strictly increasing");

  const auto cat = testing::make_catalog(3, {2});
  std::vector<EvalRecord> recs{{"a", 0, false, "darts", "conventional", 0.25, 3, 1, 2, 1.0, true},
                               {"b", 2, true, "topn-maxexp", "direct-attr", 0.1, 0, 3, 3, 0.0, false}};
  const auto rt = io::records_to_csv(recs, cat);
  CHECK(io::records_to_csv(io::records_from_csv(rt, cat), cat) == rt);
  expect_line([&] { io::records_from_csv(rt + "x,c0\n", cat); }, 4);
}

TEST_CASE("model bundle round-trip") {
  io::ModelBundle b;
  b.conventional.classes = {0, 2};
  b.conventional.dimension = 2;
  b.conventional.members.resize(2);
  b.conventional.members[0].model = {{0.1, -1.0 / 3}, 0.7};
  b.conventional.members[0].calibration = {-1.25, 0.1};
  b.conventional.members[1].model = {{2.0, 1e-300}, -4.0};
  b.direct.dimension = 2;
  b.direct.attributes.resize(2);
  b.direct.attributes[0].trained = {true, false, true};
  b.direct.attributes[0].members[0].model = {{1, 2}, 3};
  b.direct.attributes[0].members[2].model = {{-1, -2}, -3};
  b.direct.attributes[1].constant = true;
  b.direct.attributes[1].constant_value = -1;
  b.direct.notes = {"attribute a1 is constant"};
  b.direct_errors.rates.assign(2, {Triple{0.5, 0.25, 0.25}, Triple{0.1, 0.8, 0.1}, Triple{1. / 3, 1. / 3, 1. / 3}});
  b.indirect_errors = b.direct_errors;
  b.indirect_threshold = 0.3;
  const auto text = io::models_to_text(b);
  const auto back = io::models_from_text(text);
  CHECK(io::models_to_text(back) == text);
  CHECK(back.conventional.members[0].model.weights[1] == -1.0 / 3);
  CHECK(back.direct.attributes[1].constant);
  CHECK_FALSE(back.direct.attributes[0].trained[1]);
  CHECK(back.direct_errors.rates[1][2][0] == 1.0 / 3);
  CHECK_THROWS(io::models_from_text("{}"));
}
