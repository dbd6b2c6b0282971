#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "trialsize/features.hpp"
#include "trialsize/random.hpp"

using namespace trialsize;

namespace {

const ClusterModel& toy_clusters() {
  static const ClusterModel m(3, {{0.0}, {1.0}, {2.0}},
                              {{"patients", 0}, {"from", 1}, {"years", 2}, {"old", 2}});
  return m;
}

std::set<std::string> names_of(const std::vector<NamedFeature>& fs) {
  std::set<std::string> out;
  for (const auto& f : fs) out.insert(f.name);
  return out;
}

const NamedFeature* find(const std::vector<NamedFeature>& fs, const std::string& name) {
  for (const auto& f : fs)
    if (f.name == name) return &f;
  return nullptr;
}

Abstract clustered() {
  return build_abstract(
      "a",
      {{"BACKGROUND", "Background", "Trials are rare."},
       {"METHODS", "Patients and methods",
        "Between 1996 and 2001, 1477 patients from 70 hospitals in 14 countries were enrolled. "
        "They were 37 years old on average."}},
      1477);
}

}  // namespace

TEST_CASE("default lexicons are stemmed") {
  const auto lex = Lexicons::defaults();
  CHECK(lex.population_terms.count("patient"));
  CHECK(lex.population_terms.count("particip"));
  CHECK(lex.population_terms.count("women"));
  CHECK(lex.temporal_terms.count("year"));
  CHECK(lex.likely_labels.count("method"));
  CHECK(Lexicons::from_json(lex.to_json()) == lex);
}

TEST_CASE("term lists from files") {
  const std::string path = (std::filesystem::temp_directory_path() / "trialsize_terms_test.txt").string();
  {
    std::ofstream out(path);
    out << "# comment\nPatients\n\n  cohorts  \n";
  }
  auto terms = load_term_list(path);
  CHECK(terms == std::vector<std::string>{"Patients", "cohorts"});
  CHECK(stem_terms(terms) == std::set<std::string>{"patient", "cohort"});
}

TEST_CASE("contextual features of the clustered candidate") {
  const auto a = clustered();
  const auto cs = extract_candidates(a);
  const auto& c = cs[2];
  REQUIRE(c.value == 1477);
  const auto fs = contextual_features(c, toy_clusters(), Lexicons::defaults());
  const auto names = names_of(fs);
  CHECK(names.count("ctx[-1]=,"));
  CHECK(names.count("ctx[+1]=patient"));
  CHECK(names.count("ctx[+2]=from"));
  CHECK(names.count("ctxstr=and|2001|,|1477|patient|from|70"));
  CHECK(names.count("cluster[+1]=0"));
  CHECK(names.count("cluster[+2]=1"));
  CHECK(names.count("cluster[+0]=3"));
  CHECK(names.count("pop_in_window"));
  const auto* d = find(fs, "pop_distance");
  REQUIRE(d);
  CHECK(d->numeric);
  CHECK(d->value == 1.0);
  CHECK_FALSE(names.count("temporal_adjacent"));
  int positional = 0, clusters = 0;
  for (const auto& n : names) {
    positional += n.rfind("ctx[", 0) == 0;
    clusters += n.rfind("cluster[", 0) == 0;
  }
  CHECK(positional == 6);
  CHECK(clusters == 7);
}

TEST_CASE("temporal adjacency and padding") {
  const auto a = clustered();
  const auto cs = extract_candidates(a);
  const auto& age = cs.back();
  REQUIRE(age.value == 37);
  const auto fs = contextual_features(age, toy_clusters(), Lexicons::defaults());
  CHECK(names_of(fs).count("temporal_adjacent"));

  auto single = build_abstract("s", {{std::nullopt, std::nullopt, "40 men."}}, std::nullopt);
  const auto c = extract_candidates(single).at(0);
  const auto pf = names_of(contextual_features(c, toy_clusters(), Lexicons::defaults()));
  CHECK(pf.count("ctx[-1]=<pad>"));
  CHECK(pf.count("cluster[-3]=3"));
  CHECK(pf.count("pop_in_window"));
}

TEST_CASE("lexical features") {
  const auto a = build_abstract("l", {{std::nullopt, std::nullopt, "In 1995 , 40"}}, std::nullopt);
  const auto cs = extract_candidates(a);
  REQUIRE(cs.size() == 2);
  const auto year = names_of(lexical_features(cs[0], a));
  CHECK(year.count("year"));
  const auto other = names_of(lexical_features(cs[1], a));
  CHECK_FALSE(other.count("year"));
  // 4 tokens: 4 unigrams, 3 bigrams, 2 trigrams.
  CHECK(other.size() == 9);
  CHECK(other.count("ngram2=1995 ,"));
  CHECK(other.count("ngram3=in 1995 ,"));

  auto three = build_abstract("t", {{std::nullopt, std::nullopt, "we saw 1477"}}, std::nullopt);
  const auto c3 = extract_candidates(three).at(0);
  CHECK(lexical_features(c3, three).size() == 6);

  for (std::int64_t v : {1949, 1950, 2020, 2021}) {
    Candidate c = c3;
    c.value = v;
    CHECK(names_of(lexical_features(c, three)).count("year") == (v >= 1950 && v <= 2020));
  }
}

TEST_CASE("structural features") {
  const auto a = clustered();
  const auto cs = extract_candidates(a);
  const auto fs = structural_features(cs[2], a, Lexicons::defaults());
  const auto names = names_of(fs);
  CHECK(names.count("cat=METHODS"));
  CHECK(names.count("label=patients and methods"));
  CHECK(names.count("likely_label"));
  CHECK(find(fs, "cand_pos_abs")->value == 5.0);
  CHECK(find(fs, "sent_pos_abs")->value == 1.0);
  CHECK(find(fs, "sent_pos_rel")->value == doctest::Approx(1.0 / 3.0));

  auto single = build_abstract("s", {{std::nullopt, std::nullopt, "40"}}, std::nullopt);
  const auto sf = structural_features(extract_candidates(single).at(0), single, Lexicons::defaults());
  CHECK(find(sf, "cand_pos_abs")->value == 0.0);
  CHECK(find(sf, "cand_pos_rel")->value == 0.0);
  CHECK(find(sf, "sent_pos_abs")->value == 0.0);
  CHECK(find(sf, "sent_pos_rel")->value == 0.0);
  CHECK_FALSE(names_of(sf).count("likely_label"));
}

TEST_CASE("families never share names and selections compose exactly") {
  Rng rng(4);
  const auto lex = Lexicons::defaults();
  const char* words[] = {"patients", "were", "from", "years", "and", "of", "children", ","};
  for (int trial = 0; trial < 100; ++trial) {
    std::string text = "Overall";
    for (int i = 0; i < 12; ++i)
      text += rng.below(3) ? std::string(" ") + words[rng.below(8)]
                           : " " + std::to_string(rng.below(3000));
    auto a = build_abstract("p", {{"RESULTS", "Results", text + "."}}, std::nullopt);
    for (const auto& c : extract_candidates(a)) {
      const auto ctx = contextual_features(c, toy_clusters(), lex);
      const auto lx = lexical_features(c, a);
      const auto st = structural_features(c, a, lex);
      for (const auto& f : ctx) CHECK(family_of(f.name) == FeatureFamily::kContextual);
      for (const auto& f : lx) CHECK(family_of(f.name) == FeatureFamily::kLexical);
      for (const auto& f : st) CHECK(family_of(f.name) == FeatureFamily::kStructural);
      for (const auto& f : st)
        if (f.name.find("_rel") != std::string::npos) CHECK((f.value >= 0 && f.value <= 1));
      if (const auto* d = find(ctx, "pop_distance")) CHECK((d->value >= 1 && d->value <= 3));
      for (const auto& sel : ablation_selections()) {
        const auto all = feature_groups(sel, toy_clusters(), lex)(c, a);
        std::size_t expected = (sel.contextual ? ctx.size() : 0) + (sel.lexical ? lx.size() : 0) +
                               (sel.structural ? st.size() : 0);
        CHECK(all.size() == expected);
        for (const auto& f : all) {
          const auto fam = family_of(f.name);
          CHECK(((fam == FeatureFamily::kContextual && sel.contextual) ||
                 (fam == FeatureFamily::kLexical && sel.lexical) ||
                 (fam == FeatureFamily::kStructural && sel.structural)));
        }
      }
    }
  }
}

TEST_CASE("ablation selections follow the table order") {
  std::vector<std::string> names;
  for (const auto& s : ablation_selections()) names.push_back(s.display_name());
  CHECK(names == std::vector<std::string>{"All", "Contextual", "Structural", "Lexical",
                                          "- Contextual", "- Structural", "- Lexical"});
  CHECK_THROWS_AS(feature_groups(FeatureGroups{false, false, false}, toy_clusters(),
                                 Lexicons::defaults()),
                  std::invalid_argument);
  FeatureGroups g{true, false, true};
  CHECK(FeatureGroups::from_names(g.names()) == g);
}

TEST_CASE("vocabulary freezing") {
  FeatureVocabulary v;
  ScalingTable none;
  auto x = vectorize({{"a", 1, false}, {"b", 1, false}, {"a", 1, false}}, v, none);
  CHECK(v.size() == 2);
  CHECK(x.entries.size() == 2);
  v.freeze();
  auto y = vectorize({{"c", 1, false}, {"d", 1, false}}, v, none);
  CHECK(y.entries.empty());
  CHECK(v.size() == 2);
  auto z = vectorize({{"b", 1, false}, {"zzz", 1, false}}, v, none);
  REQUIRE(z.entries.size() == 1);
  CHECK(z.entries[0].first < v.size());
  auto back = FeatureVocabulary::from_json(v.to_json());
  CHECK(back.frozen());
  CHECK(back.names() == v.names());
  CHECK(back.content_hash() == v.content_hash());
  CHECK(vectorize({{"a", 1, false}, {"b", 1, false}}, v, none) ==
        vectorize({{"a", 1, false}, {"b", 1, false}}, v, none));
}

TEST_CASE("numeric scaling") {
  const auto table = fit_scaling({{{"n", 2.0, true}, {"i", 1.0, false}}, {{"n", 6.0, true}}});
  REQUIRE(table.count("n"));
  CHECK_FALSE(table.count("i"));
  CHECK(scale_value(table, "n", 6.0) == 1.0);
  CHECK(scale_value(table, "n", 2.0) == 0.0);
  CHECK(scale_value(table, "n", 4.0) == 0.5);
  CHECK(scale_value(table, "n", 100.0) == 1.0);
  CHECK(scale_value(table, "n", -3.0) == 0.0);
  const auto flat = fit_scaling({{{"k", 3.0, true}}, {{"k", 3.0, true}}});
  CHECK(scale_value(flat, "k", 3.0) == 0.0);

  FeatureVocabulary v;
  auto x = vectorize({{"n", 6.0, true}, {"i", 1.0, false}}, v, table);
  for (const auto& [id, val] : x.entries) CHECK(val == 1.0);
}
