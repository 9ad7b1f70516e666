#include <catch2/catch_amalgamated.hpp>
#include <string>
#include <vector>

#include "gppl/bws.hpp"
#include "gppl/random.hpp"
#include "oracles.hpp"
#include "temp_dir.hpp"

using gppl::bws_scores;
using gppl::BwsScores;
using gppl::PreferencePair;

TEST_CASE("bws counting on a small multiset") {
  // a beats b twice, loses to c once: a appears 3 times, best 2, worst 1.
  const std::vector<PreferencePair> pairs = {
      {"b", "a"}, {"b", "a"}, {"a", "c"}};
  const BwsScores scores = bws_scores(pairs);
  CHECK(scores.by_id.at("a").score == Catch::Approx((2.0 - 1.0) / 3.0));
  CHECK(scores.by_id.at("a").appearances == 3);
  CHECK(scores.by_id.at("b").score == Catch::Approx(-1.0));
  CHECK(scores.by_id.at("c").score == Catch::Approx(1.0));
}

TEST_CASE("instances never compared default to score zero") {
  const std::vector<PreferencePair> pairs = {{"x", "y"}};
  const BwsScores scores = bws_scores(pairs);
  CHECK(scores.score_or_zero("nunca") == 0.0);
  CHECK(scores.score_or_zero("y") == 1.0);
}

TEST_CASE("bws matches the exhaustive counting oracle on random multisets") {
  gppl::Rng rng(1234);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t ids = 2 + rng.uniform_int(19);
    const std::size_t n = 1 + rng.uniform_int(60);
    std::vector<PreferencePair> pairs;
    std::vector<oracle::NamedPair> named;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t w = rng.uniform_int(ids);
      std::size_t b = rng.uniform_int(ids);
      if (w == b) b = (b + 1) % ids;
      PreferencePair p{"i" + std::to_string(w), "i" + std::to_string(b)};
      pairs.push_back(p);
      named.push_back({p.worse_id, p.better_id});
    }
    const BwsScores got = bws_scores(pairs);
    const auto expected = oracle::bws_exhaustive(named);
    REQUIRE(got.by_id.size() == expected.size());
    for (const auto& [id, score] : expected) {
      REQUIRE(got.by_id.count(id) == 1);
      CHECK(got.by_id.at(id).score == score);  // exact: same integer counts
    }
  }
}

TEST_CASE("bws scores always lie in [-1, 1] and hit the extremes") {
  const std::vector<PreferencePair> pairs = {
      {"loser", "winner"}, {"loser", "winner"}, {"loser", "other"}};
  const BwsScores scores = bws_scores(pairs);
  CHECK(scores.by_id.at("winner").score == 1.0);
  CHECK(scores.by_id.at("loser").score == -1.0);
  for (const auto& [id, entry] : scores.by_id) {
    CHECK(entry.score >= -1.0);
    CHECK(entry.score <= 1.0);
  }
}

TEST_CASE("bws csv output is ordered by id and round-trip stable") {
  testutil::TempDir tmp;
  const std::vector<PreferencePair> pairs = {{"b", "a"}, {"c", "b"}};
  const BwsScores scores = bws_scores(pairs);
  const std::string path = tmp.file("bws.csv");
  gppl::save_bws_csv(scores, path);
  const std::string content = gppl::read_file(path);
  CHECK(content ==
        "id,score,appearances\n"
        "a,1,1\n"
        "b,0,2\n"
        "c,-1,1\n");
}

TEST_CASE("empty pair list yields empty scores") {
  const BwsScores scores = bws_scores(std::vector<PreferencePair>{});
  CHECK(scores.by_id.empty());
}
