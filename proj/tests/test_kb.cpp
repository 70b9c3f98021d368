#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include <storysense/chunker.hpp>
#include <storysense/kb.hpp>

#include "support/toy.hpp"

using namespace storysense;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
    auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream out(path, std::ios::binary);
    out << content;
    return path.string();
}

// fixed chunker for indexing tests
class StubChunker final : public PhraseChunker {
public:
    explicit StubChunker(std::vector<std::string> phrases) : phrases_(std::move(phrases)) {}
    std::vector<std::string> phrases(const std::string&) const override { return phrases_; }

private:
    std::vector<std::string> phrases_;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

} // namespace

TEST_CASE("dimension groups partition the nine dimensions") {
    std::set<Dim> cause, effect;
    for (Dim d : kAllDims)
        (dim_group(d) == DimGroup::cause ? cause : effect).insert(d);
    CHECK(cause == std::set<Dim>{Dim::xNeed, Dim::xIntent, Dim::xAttr});
    CHECK(effect.size() == 6);
    CHECK(cause.size() + effect.size() == 9);
    for (const auto& info : dim_table()) {
        std::string tmpl = info.tmpl;
        REQUIRE(tmpl.size() > 2);
        CHECK(tmpl.substr(tmpl.size() - 2) == ": ");
    }
    CHECK(dim_from_name("xWant") == Dim::xWant);
    CHECK_FALSE(dim_from_name("xFoo").has_value());
}

TEST_CASE("render_template") {
    CHECK(render_template(Dim::xWant, "to finish the chapter") == "PersonX wants: to finish the chapter");
    CHECK(render_template(Dim::xAttr, "sad") == "PersonX is seen as: sad");
    CHECK(render_template(Dim::oReact, "happy") == "Others then feel: happy");
    CHECK(render_template(Dim::xNeed, "  to grab a fire extinguisher  ") ==
          "PersonX needed: to grab a fire extinguisher");
    CHECK(render_template(Dim::oEffect, "gets wet") == "PersonY is likely: gets wet");
    CHECK_THROWS_AS(render_template(Dim::xWant, "   "), std::invalid_argument);
    // injective per dimension for distinct tails
    CHECK(render_template(Dim::xWant, "a") != render_template(Dim::xWant, "b"));
}

TEST_CASE("normalize_for_nli golden values") {
    CHECK(normalize_for_nli(Dim::xWant, "to finish the chapter") == "they want to finish the chapter.");
    CHECK(normalize_for_nli(Dim::xAttr, "Sad") == "they are seen as sad.");
    CHECK(normalize_for_nli(Dim::oReact, "happy") == "they then feel happy.");
    CHECK(normalize_for_nli(Dim::xNeed, "to grab a fire extinguisher") ==
          "they needed to grab a fire extinguisher.");
    CHECK(normalize_for_nli(Dim::xIntent, "to be inclusive") == "they wanted to be inclusive.");
    CHECK(normalize_for_nli(Dim::xEffect, "gets wet.") == "they are likely gets wet.");
    CHECK_THROWS_AS(normalize_for_nli(Dim::xIntent, ""), std::invalid_argument);
}

TEST_CASE("normalize_for_nli properties: no colon, no PersonX, lowercase") {
    std::vector<std::string> tails = {"to Win: the race", "PersonX smiles at PersonY",
                                      "VERY Loud", "none", "gets a new Job."};
    for (Dim d : kAllDims) {
        for (const auto& tail : tails) {
            auto s = normalize_for_nli(d, tail);
            CHECK(s.find(':') == std::string::npos);
            CHECK(to_lower(s).find("personx") == std::string::npos);
            CHECK(s == to_lower(s));
            REQUIRE(!s.empty());
            CHECK(s.back() == '.');
        }
    }
}

TEST_CASE("load_knowledge_base tsv") {
    auto path = write_temp("kb_ok.tsv",
                           "PersonX puts out a fire\txNeed\tto grab a fire extinguisher\n");
    auto kb = load_knowledge_base(path, KbFormat::tsv);
    REQUIRE(kb.triples.size() == 1);
    CHECK(kb.triples[0].head == "PersonX puts out a fire");
    CHECK(kb.triples[0].dim == Dim::xNeed);
    CHECK(kb.triples[0].tail == "to grab a fire extinguisher");
    CHECK(kb.skipped == 0);

    SUBCASE("unknown dimension is skipped; zero valid is fatal") {
        auto bad = write_temp("kb_bad.tsv", "PersonX eats\txFoo\tsomething\n");
        CHECK_THROWS_AS(load_knowledge_base(bad, KbFormat::tsv), FatalError);
    }
    SUBCASE("missing file is fatal") {
        CHECK_THROWS_AS(load_knowledge_base("/nonexistent/kb.tsv", KbFormat::tsv), FatalError);
    }
    SUBCASE("event set deduplicates heads") {
        auto three = write_temp("kb_three.tsv",
                                "PersonX eats\txWant\tto nap\n"
                                "PersonX eats\txReact\tfull\n"
                                "PersonX runs\txReact\ttired\n");
        auto kb3 = load_knowledge_base(three, KbFormat::tsv);
        CHECK(kb3.triples.size() == 3);
        CHECK(kb3.events.size() == 2);
    }
    SUBCASE("skipped rows are counted") {
        auto mixed = write_temp("kb_mixed.tsv",
                                "PersonX eats\txWant\tto nap\n"
                                "only two\tcolumns\n"
                                "PersonX eats\txFoo\tbad dim\n"
                                "\txWant\tempty head\n");
        auto kbm = load_knowledge_base(mixed, KbFormat::tsv);
        CHECK(kbm.triples.size() == 1);
        CHECK(kbm.skipped == 3);
    }
}

TEST_CASE("load_knowledge_base jsonl and none flag") {
    auto path = write_temp("kb.jsonl",
                           R"({"head":"PersonX eats","dim":"xWant","tail":"none"})"
                           "\n"
                           R"({"head":"PersonX eats","dim":"xReact","tail":"full"})"
                           "\n");
    auto kb = load_knowledge_base(path, KbFormat::jsonl);
    REQUIRE(kb.triples.size() == 2);
    CHECK(kb.triples[0].none_tail);
    CHECK_FALSE(kb.triples[1].none_tail);
}

TEST_CASE("deterministic ingestion: reload serializes byte-identically") {
    auto kb = toy::make_kb();
    auto dir = toy::temp_dir("kbdet");
    toy::write_kb_tsv(kb, dir + "/kb.tsv");
    auto kb1 = load_knowledge_base(dir + "/kb.tsv", KbFormat::tsv);
    auto kb2 = load_knowledge_base(dir + "/kb.tsv", KbFormat::tsv);
    save_knowledge_base(kb1, dir + "/kb1.jsonl");
    save_knowledge_base(kb2, dir + "/kb2.jsonl");
    CHECK(read_file(dir + "/kb1.jsonl") == read_file(dir + "/kb2.jsonl"));
    // round trip through jsonl preserves content
    auto kb3 = load_knowledge_base(dir + "/kb1.jsonl", KbFormat::jsonl);
    CHECK(kb3.triples.size() == kb1.triples.size());
}

TEST_CASE("index_phrases") {
    SUBCASE("stub chunker maps both phrases to the triple") {
        auto path = write_temp("kb_fire.tsv",
                               "PersonX puts out a fire\txNeed\tto grab a fire extinguisher\n");
        auto kb = load_knowledge_base(path, KbFormat::tsv);
        StubChunker chunker({"a fire", "puts out"});
        index_phrases(kb, chunker);
        REQUIRE(kb.phrase_index.count("a fire"));
        REQUIRE(kb.phrase_index.count("puts out"));
        CHECK(kb.phrase_index.at("a fire") == std::vector<size_t>{0});
        CHECK(kb.phrase_index.at("puts out") == std::vector<size_t>{0});
    }
    SUBCASE("shared phrase maps to both triples in file order") {
        auto path = write_temp("kb_share.tsv",
                               "PersonX goes to the store\txWant\tto shop\n"
                               "PersonX leaves the store\txEffect\tgets home\n");
        auto kb = load_knowledge_base(path, KbFormat::tsv);
        RuleChunker chunker;
        index_phrases(kb, chunker);
        REQUIRE(kb.phrase_index.count("the store"));
        CHECK(kb.phrase_index.at("the store") == std::vector<size_t>{0, 1});
    }
    SUBCASE("empty chunker output leaves the index empty") {
        auto path = write_temp("kb_one.tsv", "PersonX eats\txWant\tto nap\n");
        auto kb = load_knowledge_base(path, KbFormat::tsv);
        StubChunker chunker({});
        index_phrases(kb, chunker);
        CHECK(kb.phrase_index.empty());
    }
}

TEST_CASE("rule chunker extracts noun and verb phrases") {
    RuleChunker chunker;
    auto phrases = chunker.phrases("PersonX puts out a fire");
    CHECK(std::count(phrases.begin(), phrases.end(), "puts out") == 1);
    CHECK(std::count(phrases.begin(), phrases.end(), "a fire") == 1);

    auto np = chunker.phrases("Mia found a lost dog.");
    CHECK(std::count(np.begin(), np.end(), "a lost dog") == 1);

    // determinism and substring-modulo-normalization invariant
    auto again = chunker.phrases("PersonX puts out a fire");
    CHECK(phrases == again);
    for (const auto& p : chunker.phrases("The big race was long and loud.")) {
        auto hay = to_lower("The big race was long and loud.");
        CHECK(hay.find(p) != std::string::npos);
    }
}

TEST_CASE("phrase cache hits avoid recomputation") {
    PhraseCache cache;
    RuleChunker chunker;
    auto a = cache.get_or_compute("Mia went to the store.", chunker);
    auto b = cache.get_or_compute("Mia went to the store.", chunker);
    CHECK(a == b);
    CHECK(cache.hits() == 1);
    CHECK(cache.misses() == 1);
    CHECK(cache.size() == 1);
}
