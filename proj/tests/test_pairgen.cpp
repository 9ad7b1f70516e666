#include <algorithm>
#include <catch2/catch_amalgamated.hpp>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "gppl/pairgen.hpp"
#include "gppl/random.hpp"
#include "oracles.hpp"
#include "temp_dir.hpp"

using gppl::Dataset;
using gppl::generate_minimal_pairs;
using gppl::Instance;
using gppl::PairGenConfig;
using gppl::PreferencePair;
using gppl::score_levels;
using gppl::ScoreLevel;
using gppl::subsample_pairs;
using gppl::ValidationError;

namespace {

Dataset make_dataset(const std::vector<std::pair<std::string, double>>& rows) {
  Dataset data;
  for (const auto& [id, score] : rows) {
    Instance inst;
    inst.id = id;
    inst.text = id;
    inst.gold_score = score;
    inst.gold_label = score > 0.0;
    data.add(inst);
  }
  return data;
}

/// Random dataset with n instances over at most max_levels distinct scores.
Dataset random_dataset(gppl::Rng& rng, std::size_t n,
                       std::size_t max_levels) {
  std::vector<std::pair<std::string, double>> rows;
  const std::size_t levels = 1 + rng.uniform_int(max_levels);
  for (std::size_t i = 0; i < n; ++i) {
    rows.emplace_back("i" + std::to_string(i),
                      static_cast<double>(rng.uniform_int(levels)));
  }
  return make_dataset(rows);
}

}  // namespace

TEST_CASE("score_levels sorts ascending and groups by score") {
  SECTION("three distinct scores") {
    const Dataset data =
        make_dataset({{"A", 5.0}, {"B", 3.0}, {"C", 1.0}});
    const auto levels = score_levels(data);
    REQUIRE(levels.size() == 3);
    CHECK(levels[0].score == 1.0);
    CHECK(levels[0].ids == std::vector<std::string>{"C"});
    CHECK(levels[1].ids == std::vector<std::string>{"B"});
    CHECK(levels[2].ids == std::vector<std::string>{"A"});
  }
  SECTION("all equal collapses to one level") {
    const Dataset data = make_dataset({{"a", 2.0}, {"b", 2.0}, {"c", 2.0}});
    const auto levels = score_levels(data);
    REQUIRE(levels.size() == 1);
    CHECK(levels[0].ids == std::vector<std::string>{"a", "b", "c"});
  }
  SECTION("grouping keeps dataset order within a level") {
    const Dataset data = make_dataset({{"X", 0.0}, {"Y", 0.0}, {"Z", 2.0}});
    const auto levels = score_levels(data);
    REQUIRE(levels.size() == 2);
    CHECK(levels[0].score == 0.0);
    CHECK(levels[0].ids == std::vector<std::string>{"X", "Y"});
    CHECK(levels[1].ids == std::vector<std::string>{"Z"});
  }
  SECTION("missing gold score names the instance") {
    Dataset data = make_dataset({{"ok", 1.0}});
    Instance bad;
    bad.id = "sin-puntaje";
    bad.text = "x";
    data.add(bad);
    CHECK_THROWS_WITH(score_levels(data),
                      Catch::Matchers::ContainsSubstring("sin-puntaje"));
  }
}

TEST_CASE("generate_minimal_pairs links adjacent levels only") {
  const Dataset data = make_dataset({{"A", 5.0}, {"B", 3.0}, {"C", 1.0}});
  const auto pairs = generate_minimal_pairs(score_levels(data));
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0] == PreferencePair{"C", "B"});
  CHECK(pairs[1] == PreferencePair{"B", "A"});
}

TEST_CASE("single level produces no pairs") {
  const Dataset data = make_dataset({{"a", 2.0}, {"b", 2.0}});
  CHECK(generate_minimal_pairs(score_levels(data)).empty());
}

TEST_CASE("two levels of two instances form the full bipartite set") {
  const Dataset data =
      make_dataset({{"w1", 1.0}, {"w2", 1.0}, {"b1", 2.0}, {"b2", 2.0}});
  const auto pairs = generate_minimal_pairs(score_levels(data));
  REQUIRE(pairs.size() == 4);
  // Closure equals the exhaustive cross set (here: the pair set itself).
  const std::set<std::pair<std::string, std::string>> got(
      [&] {
        std::set<std::pair<std::string, std::string>> s;
        for (const auto& p : pairs) s.emplace(p.worse_id, p.better_id);
        return s;
      }());
  for (const char* w : {"w1", "w2"}) {
    for (const char* b : {"b1", "b2"}) {
      CHECK(got.count({w, b}) == 1);
    }
  }
}

TEST_CASE("minimal pair set: completeness, minimality and count identity") {
  gppl::Rng rng(20240811);
  for (int trial = 0; trial < 60; ++trial) {
    const Dataset data = random_dataset(rng, 3 + rng.uniform_int(28), 6);
    const auto levels = score_levels(data);
    const auto pairs = generate_minimal_pairs(levels);

    // Pair count identity: sum of adjacent level size products.
    std::size_t expected = 0;
    for (std::size_t i = 0; i + 1 < levels.size(); ++i) {
      expected += levels[i].ids.size() * levels[i + 1].ids.size();
    }
    REQUIRE(pairs.size() == expected);

    // Index ids for the oracle closure.
    std::map<std::string, std::size_t> pos;
    std::vector<double> score_of;
    for (const Instance& inst : data) {
      pos[inst.id] = score_of.size();
      score_of.push_back(*inst.gold_score);
    }
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (const auto& p : pairs) {
      edges.emplace_back(pos[p.worse_id], pos[p.better_id]);
    }
    const auto reach = oracle::transitive_closure(score_of.size(), edges);

    // Completeness: closure == exhaustive order set.
    for (std::size_t i = 0; i < score_of.size(); ++i) {
      for (std::size_t j = 0; j < score_of.size(); ++j) {
        CHECK(reach[i][j] == (score_of[i] < score_of[j]));
      }
    }

    // Minimality: dropping any single pair loses at least one relation.
    if (data.size() <= 30) {
      for (std::size_t drop = 0; drop < edges.size(); ++drop) {
        std::vector<std::pair<std::size_t, std::size_t>> reduced;
        for (std::size_t e = 0; e < edges.size(); ++e) {
          if (e != drop) reduced.push_back(edges[e]);
        }
        const auto smaller =
            oracle::transitive_closure(score_of.size(), reduced);
        std::size_t count_full = 0, count_small = 0;
        for (std::size_t i = 0; i < score_of.size(); ++i) {
          for (std::size_t j = 0; j < score_of.size(); ++j) {
            count_full += reach[i][j] ? 1 : 0;
            count_small += smaller[i][j] ? 1 : 0;
          }
        }
        CHECK(count_small < count_full);
      }
    }
  }
}

TEST_CASE("subsample_pairs caps appearances as the better element") {
  std::vector<PreferencePair> pairs;
  for (int i = 0; i < 3; ++i) {
    pairs.push_back({"w" + std::to_string(i), "b"});
  }
  PairGenConfig config;
  config.cap_per_better = 1;
  config.seed = 42;
  const auto out = subsample_pairs(pairs, config);
  REQUIRE(out.size() == 1);
  CHECK(out[0].better_id == "b");
}

TEST_CASE("subsample with generous cap and full fraction is the identity") {
  std::vector<PreferencePair> pairs = {
      {"a", "b"}, {"b", "c"}, {"a", "c"}, {"c", "d"}};
  PairGenConfig config;
  config.cap_per_better = 1000000000;
  config.keep_fraction = 1.0;
  config.seed = 9;
  gppl::SubsampleReport report;
  const auto out = subsample_pairs(pairs, config, &report);
  CHECK(out == pairs);
  CHECK(report.input_count == 4);
  CHECK(report.after_cap == 4);
  CHECK(report.after_fraction == 4);
}

TEST_CASE("keep_fraction keeps the floored share, at least one") {
  std::vector<PreferencePair> pairs;
  for (int i = 0; i < 10; ++i) {
    pairs.push_back({"w" + std::to_string(i), "b" + std::to_string(i)});
  }
  PairGenConfig config;
  config.keep_fraction = 0.6;
  config.seed = 3;
  CHECK(subsample_pairs(pairs, config).size() == 6);

  config.keep_fraction = 0.05;  // floor(0.5) == 0, bumped to 1
  CHECK(subsample_pairs(pairs, config).size() == 1);
}

TEST_CASE("subsampling is deterministic and respects the cap") {
  gppl::Rng rng(7);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<PreferencePair> pairs;
    const std::size_t n = 1 + rng.uniform_int(120);
    for (std::size_t i = 0; i < n; ++i) {
      pairs.push_back({"w" + std::to_string(rng.uniform_int(15)),
                       "b" + std::to_string(rng.uniform_int(15))});
    }
    PairGenConfig config;
    config.cap_per_better = 1 + rng.uniform_int(5);
    config.keep_fraction = 0.25 + 0.75 * rng.uniform();
    config.seed = rng.next_u64();

    const auto out1 = subsample_pairs(pairs, config);
    const auto out2 = subsample_pairs(pairs, config);
    CHECK(out1 == out2);

    std::map<std::string, long> better_counts;
    for (const auto& p : out1) better_counts[p.better_id] += 1;
    for (const auto& [id, count] : better_counts) {
      CHECK(count <= config.cap_per_better);
    }

    // Survivors keep input order and multiplicity never grows.
    std::multiset<std::pair<std::string, std::string>> in_set, out_set;
    for (const auto& p : pairs) in_set.emplace(p.worse_id, p.better_id);
    for (const auto& p : out1) out_set.emplace(p.worse_id, p.better_id);
    for (const auto& e : out_set) {
      CHECK(in_set.count(e) >= out_set.count(e));
    }
  }
}

TEST_CASE("pairs round-trip through the TSV format") {
  testutil::TempDir tmp;
  const std::vector<PreferencePair> pairs = {{"c", "b"}, {"b", "a"}};
  const std::string path = tmp.file("pairs.tsv");
  gppl::save_pairs(pairs, path);
  CHECK(gppl::read_file(path) == "worse_id\tbetter_id\nc\tb\nb\ta\n");
  CHECK(gppl::load_pairs(path) == pairs);
}

TEST_CASE("pair TSV parsing validates structure") {
  CHECK_THROWS_AS(gppl::parse_pairs_tsv("nope\n", "test"), ValidationError);
  CHECK_THROWS_AS(
      gppl::parse_pairs_tsv("worse_id\tbetter_id\nx\tx\n", "test"),
      ValidationError);  // self-pair
  CHECK_THROWS_AS(
      gppl::parse_pairs_tsv("worse_id\tbetter_id\nsolo-un-campo\n", "test"),
      ValidationError);
}

TEST_CASE("config validation rejects out-of-range values") {
  PairGenConfig config;
  config.cap_per_better = 0;
  CHECK_THROWS_AS(config.validate(), ValidationError);
  config = {};
  config.keep_fraction = 0.0;
  CHECK_THROWS_AS(config.validate(), ValidationError);
  config.keep_fraction = 1.5;
  CHECK_THROWS_AS(config.validate(), ValidationError);
}
