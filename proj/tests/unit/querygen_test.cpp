#include <catch_amalgamated.hpp>

#include <random>

#include "iag/backends/mock.hpp"
#include "iag/core/errors.hpp"
#include "iag/querygen.hpp"

using namespace iag;

namespace {

using Tokens = std::vector<std::string>;

Tokens keys_of(const std::string& s) {
    Tokens out;
    for (const auto& raw : split_whitespace(s)) {
        std::string k;
        for (char c : raw) {
            if (!std::ispunct(static_cast<unsigned char>(c))) {
                k += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            }
        }
        if (!k.empty()) out.push_back(k);
    }
    return out;
}

bool contains_run(const Tokens& hay, const Tokens& run) {
    if (run.size() > hay.size()) return false;
    for (std::size_t i = 0; i + run.size() <= hay.size(); ++i) {
        if (std::equal(run.begin(), run.end(), hay.begin() + static_cast<std::ptrdiff_t>(i))) return true;
    }
    return false;
}

// Enumerates every contiguous run of every string and keeps the best by
// (length, support, earliest occurrence).
Tokens brute_force_run(const std::vector<std::string>& strings, double support) {
    std::vector<Tokens> toks;
    for (const auto& s : strings) toks.push_back(keys_of(s));
    const auto need = static_cast<std::size_t>(std::ceil(support * static_cast<double>(strings.size()) - 1e-9));
    Tokens best;
    std::size_t best_support = 0;
    for (const auto& t : toks) {
        for (std::size_t b = 0; b < t.size(); ++b) {
            for (std::size_t e = b + 1; e <= t.size(); ++e) {
                Tokens run(t.begin() + static_cast<std::ptrdiff_t>(b), t.begin() + static_cast<std::ptrdiff_t>(e));
                std::size_t sup = 0;
                for (const auto& other : toks) sup += contains_run(other, run);
                if (sup < std::max<std::size_t>(need, 1)) continue;
                if (run.size() > best.size() || (run.size() == best.size() && sup > best_support)) {
                    best = run;
                    best_support = sup;
                }
            }
        }
    }
    return best;
}

std::shared_ptr<ScriptedGenerator> replying(const std::string& reply) {
    return std::make_shared<ScriptedGenerator>(std::vector<std::pair<std::string, std::string>>{}, reply);
}

std::vector<std::string> texts(const std::vector<Query>& qs) {
    std::vector<std::string> out;
    for (const auto& q : qs) out.push_back(q.text());
    return out;
}

}  // namespace

TEST_CASE("question-query prompt carries the fixed instruction", "[querygen]") {
    CHECK(question_query_prompt("Who is this?") ==
          "Question: Who is this?\nDo not try to answer the question, just print the most informative no more "
          "than three entities in the question. Put them on one line and separate them with comm.");
}

TEST_CASE("gen_question_queries splits the reply on commas", "[querygen]") {
    auto r = gen_question_queries("q?", *replying("Detective Conan, theme song"));
    CHECK(texts(r.queries) == std::vector<std::string>{"Detective Conan", "theme song"});
    CHECK_FALSE(r.fell_back);
    for (const auto& q : r.queries) CHECK(q.origin() == QueryOrigin::question);

    r = gen_question_queries("q?", *replying("a, b, c, d"));
    CHECK(texts(r.queries) == std::vector<std::string>{"a", "b", "c"});

    r = gen_question_queries("What is in the picture?", *replying("  "));
    CHECK(texts(r.queries) == std::vector<std::string>{"What is in the picture?"});
    CHECK(r.fell_back);

    r = gen_question_queries("q?", *replying("x\xEF\xBC\x8C y ,, z"));
    CHECK(texts(r.queries) == std::vector<std::string>{"x", "y", "z"});
}

TEST_CASE("gen_question_queries always yields one to three queries", "[querygen][property]") {
    std::mt19937_64 rng(3);
    const std::vector<std::string> parts{"a", " ", ",", "b c", "\xEF\xBC\x8C", "", "dd", "\n", "e"};
    for (int trial = 0; trial < 300; ++trial) {
        std::string reply;
        auto n = rng() % 8;
        for (std::size_t i = 0; i < n; ++i) reply += parts[rng() % parts.size()];
        auto r = gen_question_queries("Which entity?", *replying(reply));
        CHECK(r.queries.size() >= 1);
        CHECK(r.queries.size() <= 3);
    }
}

TEST_CASE("gen_image_queries", "[querygen]") {
    VisualSearchResult named;
    named.entity_name = "Pororo Dragon Castle Adventure";
    named.related_terms = {"ignored"};
    VisualSearchResult unnamed;
    unnamed.related_terms = {"Pororo movie trailer", "Pororo movie review"};
    unnamed.related_titles = {"Pororo movie cast"};
    StaticVisualSearch visual({{"named", named}, {"unnamed", unnamed}, {"empty", {}}});

    CHECK(texts(gen_image_queries("named", visual)) == std::vector<std::string>{"Pororo Dragon Castle Adventure"});
    CHECK(texts(gen_image_queries("unnamed", visual)) == std::vector<std::string>{"Pororo movie"});
    CHECK(gen_image_queries("named", visual)[0].origin() == QueryOrigin::image);

    Diagnostics diag;
    CHECK(gen_image_queries("missing", visual, 0.6, &diag).empty());
    CHECK_FALSE(diag.empty());
    CHECK(gen_image_queries("empty", visual).empty());
}

TEST_CASE("longest_common_token_run examples", "[querygen]") {
    CHECK(longest_common_token_run({"alpha beta gamma", "alpha beta delta"}, 1.0) == "alpha beta");
    CHECK(longest_common_token_run({"x"}, 0.3) == "x");
    CHECK(longest_common_token_run({"a b", "c d"}, 1.0).empty());
    CHECK(longest_common_token_run({"Pororo, Movie!", "pororo movie"}, 1.0) == "Pororo Movie");
    // Outlier titles are tolerated under partial support.
    CHECK(longest_common_token_run({"new pororo movie", "pororo movie cast", "weather today"}, 0.6) ==
          "pororo movie");
    CHECK_THROWS_AS(longest_common_token_run({}, 1.0), PreconditionError);
    CHECK_THROWS_AS(longest_common_token_run({"a"}, 0.0), ParameterError);
}

TEST_CASE("longest_common_token_run matches a brute-force search", "[querygen][property]") {
    std::mt19937_64 rng(11);
    const std::vector<std::string> vocab{"a", "b", "c", "D", "e,", "(b)"};
    for (int trial = 0; trial < 400; ++trial) {
        std::vector<std::string> strings(1 + rng() % 4);
        for (auto& s : strings) {
            auto len = rng() % 7;
            for (std::size_t i = 0; i < len; ++i) s += (i ? " " : "") + vocab[rng() % vocab.size()];
        }
        double support = (trial % 3 == 0) ? 1.0 : (trial % 3 == 1 ? 0.6 : 0.5);
        auto got = keys_of(longest_common_token_run(strings, support));
        auto want = brute_force_run(strings, support);
        INFO("trial " << trial);
        CHECK(got.size() == want.size());
        // Same length and at least the required support.
        std::size_t sup = 0;
        for (const auto& s : strings) sup += contains_run(keys_of(s), got);
        if (!got.empty()) {
            CHECK(sup >= static_cast<std::size_t>(std::ceil(support * static_cast<double>(strings.size()) - 1e-9)));
        }
        if (support == 1.0 && !got.empty()) {
            for (const auto& s : strings) CHECK(contains_run(keys_of(s), got));
        }
    }
}

TEST_CASE("adding a string never lengthens the full-support run", "[querygen][property]") {
    std::mt19937_64 rng(5);
    const std::vector<std::string> vocab{"a", "b", "c", "d"};
    auto random_string = [&] {
        std::string s;
        auto len = 1 + rng() % 8;
        for (std::size_t i = 0; i < len; ++i) s += (i ? " " : "") + vocab[rng() % vocab.size()];
        return s;
    };
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<std::string> strings(1 + rng() % 3);
        for (auto& s : strings) s = random_string();
        auto before = keys_of(longest_common_token_run(strings, 1.0)).size();
        strings.push_back(random_string());
        auto after = keys_of(longest_common_token_run(strings, 1.0)).size();
        CHECK(after <= before);
    }
}

TEST_CASE("make_bundle removes duplicate texts across the bundle", "[querygen]") {
    auto b = make_bundle({Query("Pororo", QueryOrigin::question), Query("movie", QueryOrigin::question),
                          Query("pororo", QueryOrigin::question)},
                         {Query("MOVIE", QueryOrigin::image), Query("castle", QueryOrigin::image)});
    CHECK(texts(b.question_queries) == std::vector<std::string>{"Pororo", "movie"});
    CHECK(texts(b.image_queries) == std::vector<std::string>{"castle"});
    CHECK(b.size() == 3);
    CHECK(texts(b.all()) == std::vector<std::string>{"Pororo", "movie", "castle"});
}
