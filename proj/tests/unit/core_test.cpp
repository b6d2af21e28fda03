#include <catch_amalgamated.hpp>

#include <atomic>
#include <chrono>
#include <random>
#include <thread>

#include "iag/core/config.hpp"
#include "iag/core/errors.hpp"
#include "iag/core/jsonl.hpp"
#include "iag/core/parallel.hpp"
#include "iag/core/rng.hpp"
#include "iag/core/text.hpp"
#include "iag/core/types.hpp"
#include "iag/core/url.hpp"

using namespace iag;

namespace {

VqaSample make_sample() {
    VqaSample s;
    s.id = "s1";
    s.image_ref = "img/1.jpg";
    s.question = "Who won?";
    s.options = {{'A', "Ann"}, {'B', "Bob"}, {'C', "Cy"}, {'D', "Dee"}, {'E', std::string(kComplementOption)}};
    s.gt_letter = 'B';
    s.gt_answer = "Bob";
    s.distractors = {"Ann", "Cy", "Dee"};
    s.category = Category::sports;
    ContentSegment seg;
    seg.site_url = "https://news.example/a";
    seg.index = 2;
    seg.text = "Bob won the final. Fans cheered. It rained.";
    seg.sentence_count = 3;
    seg.token_count = 8;
    seg.first_sentence = 6;
    s.gt_segment = seg;
    s.source_query = "final";
    return s;
}

}  // namespace

TEST_CASE("normalize_url canonicalizes scheme, host, port and fragment", "[core][url]") {
    CHECK(normalize_url("HTTP://Ex.com:80/a#x") == "http://ex.com/a");
    CHECK(normalize_url("https://a.com/") == "https://a.com");
    CHECK(normalize_url("https://a.com:443/p?q=1") == "https://a.com/p?q=1");
    CHECK(normalize_url("https://a.com:8443/p") == "https://a.com:8443/p");
    CHECK(normalize_url("https://A.com/Path/") == "https://a.com/Path/");
    CHECK_THROWS_AS(normalize_url("not a url"), ParseError);
    CHECK_THROWS_AS(normalize_url("ftp://a.com/x"), ParseError);
    CHECK_THROWS_AS(normalize_url("http://"), ParseError);
}

TEST_CASE("normalize_url is idempotent", "[core][url]") {
    for (std::string raw : {"HTTP://Ex.com:80/a#x", "https://a.com/", "http://b.org:8080/x/y?z#f"}) {
        std::string once = normalize_url(raw);
        CHECK(normalize_url(once) == once);
    }
}

TEST_CASE("count_tokens counts whitespace runs", "[core][text]") {
    CHECK(count_tokens("a b  c") == 3);
    CHECK(count_tokens("") == 0);
    CHECK(count_tokens("one") == 1);
    CHECK(count_tokens("  \t\n ") == 0);
    CHECK(count_tokens(" lead and trail ") == 3);
}

TEST_CASE("text helpers", "[core][text]") {
    CHECK(trim("  x y \n") == "x y");
    CHECK(collapse_whitespace(" a \n\t b  ") == "a b");
    CHECK(icontains("Hello World", "WORLD"));
    CHECK_FALSE(icontains("Hello", "bye"));
    CHECK(icount("ab AB ab", "ab") == 3);
    CHECK(ifind("xxAbC", "abc") == 2);
    CHECK(hex64(0) == "0000000000000000");
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
}

TEST_CASE("QuantizedScore accepts exactly six levels", "[core][score]") {
    for (int f = 0; f <= 5; ++f) {
        auto s = QuantizedScore::from_value(f / 5.0);
        CHECK(s.fifths() == f);
        CHECK(s.value() == f / 5.0);
    }
    CHECK_THROWS_AS(QuantizedScore::from_value(0.5), ParameterError);
    CHECK_THROWS_AS(QuantizedScore::from_value(1.2), ParameterError);
    CHECK_THROWS_AS(QuantizedScore::from_value(-0.2), ParameterError);
    CHECK_THROWS_AS(QuantizedScore::from_fifths(6), ParameterError);
}

TEST_CASE("QuantizedScore::nearest rounds halfway cases down", "[core][score]") {
    for (std::size_t c = 0; c <= 5; ++c) CHECK(QuantizedScore::nearest(c, 5).fifths() == static_cast<int>(c));
    // 1/2 = 0.5 sits between 0.4 and 0.6.
    CHECK(QuantizedScore::nearest(1, 2).value() == 0.4);
    CHECK(QuantizedScore::nearest(2, 3).value() == 0.6);
    CHECK(QuantizedScore::nearest(1, 3).value() == 0.4);
    CHECK_THROWS_AS(QuantizedScore::nearest(1, 0), ParameterError);
    CHECK_THROWS_AS(QuantizedScore::nearest(4, 3), ParameterError);
}

TEST_CASE("Query rejects empty and multi-line text", "[core][types]") {
    CHECK(Query("  a b ", QueryOrigin::question).text() == "a b");
    CHECK_THROWS_AS(Query("   ", QueryOrigin::question), ParameterError);
    CHECK_THROWS_AS(Query("a\nb", QueryOrigin::question), ParameterError);
}

TEST_CASE("check_options enforces the permutation invariant", "[core][types]") {
    VqaSample s = make_sample();
    CHECK(check_options(s).empty());

    auto bad = s;
    bad.options['E'] = "Nobody";
    CHECK_FALSE(check_options(bad).empty());

    bad = s;
    bad.options['A'] = "Bob";
    CHECK_FALSE(check_options(bad).empty());

    bad = s;
    bad.gt_letter = 'C';
    CHECK_FALSE(check_options(bad).empty());

    bad = s;
    bad.options.erase('D');
    CHECK_FALSE(check_options(bad).empty());
}

TEST_CASE("core types survive a JSONL round trip", "[core][json]") {
    VqaSample s = make_sample();
    SearchHit hit{"https://a.com/x", "Title", "Snippet ...", 3, Query("q", QueryOrigin::image)};
    WebsiteDoc doc;
    doc.hit = hit;
    doc.fetch_status = FetchStatus::fetched;
    doc.sentences = {"One.", "Two.", "Three.", "Four."};
    doc.segments.push_back({hit.url, 0, "One. Two. Three.", 3, 3, 0});
    doc.segments.push_back({hit.url, 1, "Four.", 1, 1, 3});

    std::stringstream ss;
    write_jsonl(ss, std::vector<VqaSample>{s, s});
    auto back = read_jsonl<VqaSample>(ss);
    REQUIRE(back.size() == 2);
    CHECK(back[0] == s);

    CHECK(json(hit).get<SearchHit>() == hit);
    CHECK(json(doc).get<WebsiteDoc>() == doc);
    CHECK(json(doc.segments[1]).get<ContentSegment>() == doc.segments[1]);

    PipelineConfig c;
    c.website_budget = TopN{7};
    c.segment_cut = 12;
    c.cluster_count = 4;
    c.rng_seed = 99;
    c.snippet_policy = SnippetPolicy::mixture;
    auto c2 = json(c).get<PipelineConfig>();
    CHECK(c2.website_budget == c.website_budget);
    CHECK(c2.segment_cut == 12);
    CHECK(c2.cluster_count == 4);
    CHECK(c2.rng_seed == 99);
    CHECK(c2.snippet_policy == SnippetPolicy::mixture);

    auto q = json(QuantizedScore::from_fifths(3)).get<QuantizedScore>();
    CHECK(q.fifths() == 3);
    CHECK_THROWS(json(0.3).get<QuantizedScore>());
}

TEST_CASE("read_jsonl reports the failing line", "[core][json]") {
    SearchHit hit{"https://a.com", "", "", 1, Query("q", QueryOrigin::question)};
    std::stringstream ss(json(hit).dump() + "\n\nnot json\n");
    try {
        read_jsonl<SearchHit>(ss);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
}

TEST_CASE("PipelineConfig validation", "[core][config]") {
    PipelineConfig c;
    CHECK_NOTHROW(c.validate());
    c.cluster_count = 30;
    CHECK_THROWS_AS(c.validate(), ParameterError);
    c = {};
    c.website_budget = TokenFraction{0.0};
    CHECK_THROWS_AS(c.validate(), ParameterError);
    c.website_budget = TokenFraction{1.0};
    CHECK_NOTHROW(c.validate());
    c.website_budget = TopN{0};
    CHECK_THROWS_AS(c.validate(), ParameterError);
}

TEST_CASE("config files accept key = value and JSON", "[core][config]") {
    json kv = parse_key_values("# comment\ntop_n = 4\nsnippet_policy = \"mixture\"\nclusters = 3\n"
                               "include_option_e = false\nsearch_url = https://s.example/api\n");
    PipelineConfig c = apply_config({}, kv);
    CHECK(std::get<TopN>(c.website_budget).n == 4);
    CHECK(c.snippet_policy == SnippetPolicy::mixture);
    CHECK(c.cluster_count == 3);
    CHECK_FALSE(c.include_option_e);
    CHECK(kv["search_url"] == "https://s.example/api");
    CHECK_THROWS_AS(parse_key_values("just words"), ParseError);

    c = apply_config({}, json{{"theta", 0.7}, {"seed", 5}});
    CHECK(std::get<TokenFraction>(c.website_budget).theta == 0.7);
    CHECK(c.rng_seed == 5);
}

TEST_CASE("parallel_map keeps index order and rethrows the first error", "[core][parallel]") {
    for (std::size_t workers : {1u, 3u, 8u}) {
        auto out = parallel_map(50, workers, [](std::size_t i) {
            std::this_thread::sleep_for(std::chrono::microseconds((50 - i) * 20));
            return i * i;
        });
        REQUIRE(out.size() == 50);
        for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == i * i);
    }
    try {
        parallel_map(10, 4, [](std::size_t i) -> int {
            if (i == 3 || i == 7) throw Error("boom " + std::to_string(i));
            return 0;
        });
        FAIL("expected an exception");
    } catch (const Error& e) {
        CHECK(std::string(e.what()) == "boom 3");
    }
    CHECK(parallel_map(0, 4, [](std::size_t) { return 1; }).empty());
}

TEST_CASE("derive_seed depends on key and seed only", "[core][rng]") {
    CHECK(derive_seed(1, "a") == derive_seed(1, "a"));
    CHECK(derive_seed(1, "a") != derive_seed(1, "b"));
    CHECK(derive_seed(1, "a") != derive_seed(2, "a"));
}
