#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "mframe/error.hpp"
#include "mframe/lexicon.hpp"
#include "support.hpp"

using namespace mframe;

namespace {

// Two labels, two documents each, 8 tokens in all.
//   A: "gun law", "gun rights"     B: "gun care", "care law"
std::vector<LabeledDocument> toy() {
  return {{"A", {"gun", "law"}}, {"A", {"gun", "rights"}}, {"B", {"gun", "care"}}, {"B", {"care", "law"}}};
}

}  // namespace

TEST_CASE("pmi: toy corpus matches hand arithmetic") {
  PmiConfig cfg;
  cfg.n_max = 2;
  cfg.min_count = 1;
  const auto table = pmi_table(toy(), cfg);
  CHECK(table.total_tokens == 8);
  auto I = [&](const std::string& l, const std::string& w) { return table.stats.at(l).at(w).pmi; };
  // P(gun|A) = 2/4, P(gun) = 3/8.
  CHECK(std::abs(I("A", "gun") - std::log(4.0 / 3.0)) < 1e-9);
  CHECK(std::abs(I("B", "gun") - std::log(2.0 / 3.0)) < 1e-9);
  // P(care|B) = 2/4, P(care) = 2/8.
  CHECK(std::abs(I("B", "care") - std::log(2.0)) < 1e-9);
  CHECK(std::abs(I("A", "rights") - std::log(2.0)) < 1e-9);
  // Bigram: P(gun law|A) = 1/4, P(gun law) = 1/8.
  CHECK(std::abs(I("A", "gun law") - std::log(2.0)) < 1e-9);
  // "law" has the same relative frequency under both labels.
  CHECK(I("A", "law") == 0.0);
  CHECK(I("B", "law") == 0.0);
}

TEST_CASE("pmi lexicon: thresholds, zero PMI and weights") {
  PmiConfig cfg;
  cfg.n_max = 2;
  cfg.min_count = 2;
  const auto lex = build_pmi_lexicon(toy(), cfg);
  CHECK(lex.find("A", "law") == nullptr);     // I = 0
  CHECK(lex.find("B", "law") == nullptr);
  CHECK(lex.find("A", "rights") == nullptr);  // once, below min count
  REQUIRE(lex.find("A", "gun") != nullptr);
  CHECK(lex.find("A", "gun")->weight == 1.0);
  REQUIRE(lex.find("B", "care") != nullptr);
  CHECK(lex.find("B", "gun") == nullptr);  // negative PMI

  cfg.min_count = 1;
  const auto loose = build_pmi_lexicon(toy(), cfg);
  // Within A: rights, gun law, gun rights all have log 2; gun has log 4/3.
  CHECK(loose.find("A", "rights")->weight == 1.0);
  CHECK(std::abs(loose.find("A", "gun")->weight - std::log(4.0 / 3.0) / std::log(2.0)) < 1e-12);
  for (const auto& [label, entries] : loose.labels())
    for (const auto& e : entries) {
      CHECK(e.weight > 0.0);
      CHECK(e.weight <= 1.0);
    }
  cfg.top_k = 1;
  CHECK(build_pmi_lexicon(toy(), cfg).entries("A")->size() == 1);
}

TEST_CASE("pmi: order invariance and growth of the denominator") {
  PmiConfig cfg;
  cfg.n_max = 3;
  cfg.min_count = 1;
  std::mt19937_64 rng(7);
  std::vector<LabeledDocument> docs;
  const std::vector<std::string> words = {"a", "b", "c", "d", "e"};
  for (int i = 0; i < 30; ++i) {
    LabeledDocument d{i % 3 == 0 ? "X" : (i % 3 == 1 ? "Y" : "Z"), {}};
    for (int k = 0; k < 6; ++k) d.tokens.push_back(words[rng() % words.size()]);
    docs.push_back(d);
  }
  const auto base = pmi_table(docs, cfg);
  auto shuffled = docs;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  const auto again = pmi_table(shuffled, cfg);
  for (const auto& [label, stats] : base.stats)
    for (const auto& [w, s] : stats) CHECK(again.stats.at(label).at(w).pmi == s.pmi);

  // Documents of Z that avoid "a" never raise I(a, X).
  auto more = docs;
  for (int i = 0; i < 5; ++i) more.push_back({"Z", {"b", "c", "d"}});
  const auto grown = pmi_table(more, cfg);
  for (const auto& [w, s] : base.stats.at("X")) {
    if (w.find('a') == std::string::npos) continue;
    CHECK(grown.stats.at("X").at(w).pmi >= s.pmi - 1e-12);  // fewer a's per token overall
  }
  CHECK(grown.stats.at("X").at("a").pmi > base.stats.at("X").at("a").pmi);
}

TEST_CASE("pmi: errors") {
  CHECK_THROWS_AS(pmi_table({}, PmiConfig{}), DataError);
  CHECK_THROWS_AS(pmi_table(toy(), PmiConfig{}, {"A", "B", "C"}), DataError);
  PmiConfig bad;
  bad.n_max = 0;
  CHECK_THROWS_AS(pmi_table(toy(), bad), ConfigError);
}

TEST_CASE("mfd: stems, weights and scoring") {
  std::istringstream in("# tiny dictionary\n[care]\nprotect*\nsafe\nsafety net\n[fairness]\nfair*\nfairness*\n");
  const auto lex = parse_mfd(in);
  for (const auto& [label, entries] : lex.labels())
    for (const auto& e : entries) {
      CHECK(e.weight == 1.0);
      CHECK(e.provenance == Provenance::MFD);
    }
  auto score = [&](const std::string& text, const std::string& label) { return lex.score_text(text).at(label); };
  CHECK(score("they protect kids", "CareHarm") == 1.0);
  CHECK(score("protection for all", "CareHarm") == 1.0);
  CHECK(score("safe safe", "CareHarm") == 2.0);
  CHECK(score("a safety net", "CareHarm") == 1.0);  // the bigram, not also "safe"
  CHECK(score("fairness matters", "FairnessCheating") == 1.0);
  CHECK(score("nothing here", "CareHarm") == 0.0);

  std::istringstream bad("protect\n");
  CHECK_THROWS_AS(parse_mfd(bad), DataError);
}

TEST_CASE("lexicon: longest match without overlap and TSV round trip") {
  Lexicon lex(3);
  lex.add("L", {"new york", 0.5, Provenance::PMI});
  lex.add("L", {"york", 0.25, Provenance::PMI});
  lex.add("L", {"new york city", 1.0, Provenance::PMI});
  lex.sort();
  CHECK(lex.score_tokens({"new", "york", "city"}).at("L") == 1.0);
  CHECK(lex.score_tokens({"new", "york", "york"}).at("L") == 0.75);
  CHECK_THROWS(lex.add("L", {"york", 0.5, Provenance::PMI}));
  CHECK_THROWS(lex.add("L", {"bad", 0.0, Provenance::PMI}));
  CHECK_THROWS(lex.add("L", {"mfd", 0.5, Provenance::MFD}));

  std::ostringstream out;
  lex.write_tsv(out);
  std::istringstream in(out.str());
  const auto back = Lexicon::read_tsv(in);
  CHECK(back.size() == 3);
  CHECK(back.find("L", "new york")->weight == 0.5);
  std::ostringstream out2;
  back.write_tsv(out2);
  CHECK(out2.str() == out.str());
}

TEST_CASE("lexicon: merging keeps dictionary weights") {
  Lexicon pmi(2), mfd(1);
  pmi.add("CareHarm", {"protect", 0.4, Provenance::PMI});
  pmi.add("CareHarm", {"kids", 0.7, Provenance::PMI});
  mfd.add("CareHarm", {"protect", 1.0, Provenance::MFD});
  mfd.add("CareHarm", {"harm*", 1.0, Provenance::MFD});
  const auto merged = merge_lexicons(pmi, mfd);
  CHECK(merged.find("CareHarm", "protect")->weight == 1.0);
  CHECK(merged.find("CareHarm", "protect")->provenance == Provenance::Merged);
  CHECK(merged.find("CareHarm", "kids")->weight == 0.7);
  CHECK(merged.find("CareHarm", "harm*")->provenance == Provenance::MFD);
}

TEST_CASE("baseline: dominant labels, random fallback, reproducibility") {
  Lexicon lex(1);
  lex.add("CareHarm", {"protect", 1.0, Provenance::MFD});
  lex.add("FairnessCheating", {"fair", 1.0, Provenance::MFD});
  lex.sort();
  std::vector<TweetInstance> tweets = {testkit::tweet("a", "protect protect fair"), testkit::tweet("b", "fair play"),
                                       testkit::tweet("c", "nothing matches"), testkit::tweet("d", "protect fair")};
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto r = lexicon_baseline_predict(lex, tweets, seed);
    CHECK(r.labels[0] == MoralFoundation::CareHarm);
    CHECK(r.labels[1] == MoralFoundation::FairnessCheating);
    CHECK(r.random_fallbacks == 1);
    CHECK(r.ties == 1);
    CHECK(r.fallback_fraction() == doctest::Approx(0.25));
    CHECK((r.labels[3] == MoralFoundation::CareHarm || r.labels[3] == MoralFoundation::FairnessCheating));
    CHECK(lexicon_baseline_predict(lex, tweets, seed).labels == r.labels);
  }
  // Zero-score draws cover all five foundations over many tweets.
  std::vector<TweetInstance> empty;
  for (int i = 0; i < 200; ++i) empty.push_back(testkit::tweet("z" + std::to_string(i), "no hits"));
  const auto r = lexicon_baseline_predict(lex, empty, 11);
  CHECK(r.fallback_fraction() == 1.0);
  std::array<int, 5> seen{};
  for (auto f : r.labels) ++seen[index_of(f)];
  for (int n : seen) CHECK(n > 10);
}
