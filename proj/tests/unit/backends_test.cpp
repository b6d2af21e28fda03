#include <catch_amalgamated.hpp>

#include <httplib.h>

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <thread>

#include "iag/backends/http.hpp"
#include "iag/backends/mock.hpp"
#include "iag/core/errors.hpp"
#include "iag/fetch_cache.hpp"
#include "iag/hierfilter.hpp"

using namespace iag;
using namespace std::chrono_literals;

namespace {

// Local HTTP server on an ephemeral port, stopped on destruction.
class TestServer {
public:
    TestServer() {
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~TestServer() {
        server_.stop();
        thread_.join();
    }
    httplib::Server& operator*() { return server_; }
    std::string url(const std::string& path) const { return "http://127.0.0.1:" + std::to_string(port_) + path; }

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

HttpEndpoint fast_endpoint(std::string url) {
    HttpEndpoint e;
    e.url = std::move(url);
    e.backoff = 5ms;
    e.timeout = 2000ms;
    return e;
}

ChatRequest hello() {
    return {"m", {{"user", "hello", std::nullopt}}};
}

}  // namespace

TEST_CASE("http_chat_call returns the reply text", "[backends][http]") {
    TestServer srv;
    json seen;
    std::string auth;
    (*srv).Post("/chat", [&](const httplib::Request& req, httplib::Response& res) {
        seen = json::parse(req.body);
        auth = req.get_header_value("Authorization");
        res.set_content(R"({"text":"B"})", "application/json");
    });
    auto ep = fast_endpoint(srv.url("/chat"));
    ep.api_key = "k123";
    ChatRequest req{"model-x", {{"user", "  spaced  prompt ", std::string("img://1")}}};
    auto out = http_chat_call(ep, req);
    CHECK(out.text == "B");
    CHECK(out.attempts == 1);
    CHECK(auth == "Bearer k123");
    CHECK(seen["model"] == "model-x");
    CHECK(seen["messages"][0]["content"] == "  spaced  prompt ");
    CHECK(seen["messages"][0]["image_ref"] == "img://1");
}

TEST_CASE("http_chat_call retries a 500 and succeeds", "[backends][http]") {
    TestServer srv;
    std::atomic<int> calls{0};
    (*srv).Post("/chat", [&](const httplib::Request&, httplib::Response& res) {
        if (calls++ == 0) {
            res.status = 500;
            return;
        }
        res.set_content(R"({"text":"ok"})", "application/json");
    });
    auto out = http_chat_call(fast_endpoint(srv.url("/chat")), hello());
    CHECK(out.text == "ok");
    CHECK(out.attempts == 2);
}

TEST_CASE("http_chat_call does not retry client errors", "[backends][http]") {
    TestServer srv;
    std::atomic<int> calls{0};
    (*srv).Post("/chat", [&](const httplib::Request&, httplib::Response& res) {
        ++calls;
        res.status = 404;
    });
    try {
        http_chat_call(fast_endpoint(srv.url("/chat")), hello());
        FAIL("expected BackendUnavailable");
    } catch (const BackendUnavailable& e) {
        CHECK(e.attempts == 1);
    }
    CHECK(calls == 1);
}

TEST_CASE("http_chat_call gives up after three timeouts", "[backends][http]") {
    TestServer srv;
    std::atomic<int> calls{0};
    (*srv).Post("/chat", [&](const httplib::Request&, httplib::Response& res) {
        ++calls;
        std::this_thread::sleep_for(400ms);
        res.set_content(R"({"text":"late"})", "application/json");
    });
    auto ep = fast_endpoint(srv.url("/chat"));
    ep.timeout = 100ms;
    try {
        http_chat_call(ep, hello());
        FAIL("expected BackendUnavailable");
    } catch (const BackendUnavailable& e) {
        CHECK(e.attempts == 3);
    }
    CHECK(calls == 3);
}

TEST_CASE("http_chat_call rejects replies without text", "[backends][http]") {
    TestServer srv;
    (*srv).Post("/chat", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"choices":[]})", "application/json");
    });
    CHECK_THROWS_AS(http_chat_call(fast_endpoint(srv.url("/chat")), hello()), BackendUnavailable);
}

TEST_CASE("unreachable endpoint exhausts retries", "[backends][http]") {
    auto ep = fast_endpoint("http://127.0.0.1:1/chat");
    try {
        http_chat_call(ep, hello());
        FAIL("expected BackendUnavailable");
    } catch (const BackendUnavailable& e) {
        CHECK(e.attempts == 3);
    }
}

TEST_CASE("rate limiter spaces requests", "[backends][http]") {
    RateLimiter limiter(30ms);
    auto start = std::chrono::steady_clock::now();
    for (int i = 0; i < 4; ++i) limiter.acquire();
    CHECK(std::chrono::steady_clock::now() - start >= 90ms);
}

TEST_CASE("network search, embedder and visual backends speak their wire formats", "[backends][http]") {
    TestServer srv;
    (*srv).Post("/search", [](const httplib::Request& req, httplib::Response& res) {
        auto body = json::parse(req.body);
        json results = json::array();
        results.push_back({{"url", "HTTPS://A.com/x#frag"}, {"title", "t1"}, {"snippet", "s1"}});
        results.push_back({{"url", "not a url"}, {"title", "bad"}});
        results.push_back({{"url", "https://b.com/"}, {"title", "t2"}, {"snippet", "s2"}});
        results.push_back({{"url", "https://c.com/"}, {"title", "t3"}, {"snippet", "s3"}});
        res.set_content(json{{"results", results}, {"echo", body["query"]}}.dump(), "application/json");
    });
    (*srv).Post("/embed", [](const httplib::Request& req, httplib::Response& res) {
        auto body = json::parse(req.body);
        std::size_t n = body["kind"] == "image" ? 3 : 2;
        res.set_content(json{{"embedding", std::vector<double>(n, 0.5)}}.dump(), "application/json");
    });
    (*srv).Post("/visual", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"related_terms":["x y"],"related_titles":["x y z"]})", "application/json");
    });

    HttpWebSearch search(fast_endpoint(srv.url("/search")));
    auto hits = search.search(Query("pororo", QueryOrigin::question), 2);
    REQUIRE(hits.size() == 2);
    CHECK(hits[0].url == "https://a.com/x");
    CHECK(hits[0].rank == 1);
    CHECK(hits[1].url == "https://b.com");
    CHECK(hits[1].rank == 2);
    CHECK(hits[1].query_origin.text() == "pororo");

    HttpEmbedder embedder(fast_endpoint(srv.url("/embed")), "clip", 2);
    CHECK(embedder.embed(EmbedInput::text("a")).size() == 2);
    CHECK_THROWS_AS(embedder.embed(EmbedInput::image("img")), BackendUnavailable);

    HttpVisualSearch visual(fast_endpoint(srv.url("/visual")));
    auto v = visual.lookup("img://1");
    CHECK_FALSE(v.entity_name);
    CHECK(v.related_terms == std::vector<std::string>{"x y"});
}

TEST_CASE("HttpFetcher reports status and content type and truncates", "[backends][http]") {
    TestServer srv;
    (*srv).Get("/page", [](const httplib::Request&, httplib::Response& res) {
        res.set_content("<p>Hello there.</p>", "text/html");
    });
    (*srv).Get("/big", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(std::string(10000, 'x'), "text/plain");
    });
    (*srv).Get("/gone", [](const httplib::Request&, httplib::Response& res) { res.status = 404; });

    HttpFetcher fetcher;
    auto page = fetcher.fetch(srv.url("/page"));
    CHECK(page.status == 200);
    CHECK(page.content_type == "text/html");
    CHECK(page.body == "<p>Hello there.</p>");
    CHECK(fetcher.fetch(srv.url("/gone")).status == 404);

    FetchOptions small;
    small.max_bytes = 100;
    auto big = HttpFetcher(small).fetch(srv.url("/big"));
    CHECK(big.body.size() == 100);
    CHECK_THROWS_AS(fetcher.fetch("http://127.0.0.1:1/x"), BackendUnavailable);
}

TEST_CASE("mock_scorer_from_table looks up instruction hashes", "[backends][mock]") {
    std::string hit = render_content_instruction("ctx", "q");
    auto scorer = mock_scorer_from_table({{instruction_hash(hit), 'B'}}, 'E');
    CHECK(scorer->score_option(hit, std::nullopt) == 'B');
    CHECK(scorer->score_option(render_content_instruction("other", "q"), std::nullopt) == 'E');
    CHECK(scorer->score_option(hit, std::nullopt) == scorer->score_option(hit, std::nullopt));
}

TEST_CASE("oracle_scorer checks the scored field only", "[backends][mock]") {
    auto oracle = oracle_scorer("Lee Jin");
    CHECK(oracle->score_option(render_content_instruction("The prize went to Lee Jin.", "Who?"), std::nullopt) == 'A');
    CHECK(oracle->score_option(render_content_instruction("Nothing here.", "Who?"), std::nullopt) == 'F');
    CHECK(oracle->score_option(render_content_instruction("won by LEE JIN", "Who?"), std::nullopt) == 'A');
    // The answer appearing only in the question does not count.
    CHECK(oracle->score_option(render_content_instruction("Nothing.", "Is it Lee Jin?"), std::nullopt) == 'F');
    CHECK(oracle->score_option(render_website_instruction("t", "snip Lee Jin", "q"), std::nullopt) == 'A');
    CHECK(oracle->score_option(render_website_instruction("Lee Jin", "snip", "q"), std::nullopt) == 'F');
}

TEST_CASE("HashEmbedder is deterministic and unit-norm", "[backends][mock]") {
    HashEmbedder e(32, 7);
    auto a = e.embed(EmbedInput::text("alpha"));
    auto b = e.embed(EmbedInput::text("alpha"));
    auto c = e.embed(EmbedInput::text("beta"));
    auto img = e.embed(EmbedInput::image("alpha"));
    REQUIRE(a.size() == 32);
    CHECK(a == b);
    CHECK(a != c);
    CHECK(a != img);
    double norm = 0;
    for (double x : a) norm += x * x;
    CHECK(std::abs(norm - 1.0) < 1e-12);
    CHECK(HashEmbedder(32, 8).embed(EmbedInput::text("alpha")) != a);
}

TEST_CASE("static mocks", "[backends][mock]") {
    Query q("k", QueryOrigin::question);
    std::vector<SearchHit> hits;
    for (int i = 0; i < 5; ++i) {
        hits.push_back({"https://s" + std::to_string(i) + ".com", "t", "s", 1, q});
    }
    StaticWebSearch search({{"k", hits}}, {"down"});
    auto got = search.search(q, 3);
    REQUIRE(got.size() == 3);
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i].rank == static_cast<int>(i) + 1);
    CHECK(search.search(Query("missing", QueryOrigin::question), 3).empty());
    CHECK_THROWS(search.search(Query("down", QueryOrigin::question), 3));

    GazetteerNer ner({"Detective Conan", "Conan", "Tokyo"});
    auto spans = ner.entities("In Tokyo, Detective Conan aired.");
    REQUIRE(spans.size() == 3);
    CHECK(spans[0].text == "Tokyo");
    CHECK(spans[1].text == "Detective Conan");
    CHECK(spans[2].text == "Conan");

    TableHypernyms hyper(std::map<std::string, std::string>{{"Detective Conan", "anime franchise"}});
    CHECK(hyper.hypernym("Detective Conan") == "anime franchise");
    CHECK_THROWS(hyper.hypernym("Nobody"));

    StaticFetcher fetcher({{"https://a.com", {200, "text/html", "<p>x</p>"}}});
    CHECK(fetcher.fetch("https://a.com").body == "<p>x</p>");
    CHECK_THROWS(fetcher.fetch("https://b.com"));

    ScriptedGenerator gen({{"apple", "red"}, {"apple pie", "never"}}, "none");
    CHECK(gen.generate("an apple pie", std::nullopt) == "red");
    CHECK(gen.generate("pear", std::nullopt) == "none");
}

TEST_CASE("LLM-backed NER and hypernyms parse replies", "[backends][http]") {
    auto model = std::make_shared<ScriptedGenerator>(
        std::vector<std::pair<std::string, std::string>>{
            {"named entities", "Tokyo\nNot In Text\nDetective Conan\n"},
            {"hypernym for Detective Conan", " \"Anime franchise.\"\nextra"}},
        "");
    LlmNer ner(model);
    auto spans = ner.entities("Detective Conan airs in Tokyo");
    REQUIRE(spans.size() == 2);
    CHECK(spans[0].text == "Detective Conan");
    CHECK(spans[0].offset == 0);
    CHECK(spans[1].text == "Tokyo");

    LlmHypernyms hyper(model);
    CHECK(hyper.hypernym("Detective Conan") == "Anime franchise");
    CHECK_THROWS_AS(hyper.hypernym("Other"), BackendUnavailable);
}

TEST_CASE("fetch cache replays pages offline", "[backends][cache]") {
    auto dir = std::filesystem::temp_directory_path() / "iag_fetch_cache_test";
    std::filesystem::remove_all(dir);
    {
        auto upstream = std::make_shared<StaticFetcher>(std::map<std::string, FetchResponse>{
            {"https://a.com/x", {200, "text/html", "<p>A.</p>"}}, {"https://b.com", {404, "text/html", ""}}});
        CachingFetcher online(std::make_shared<FetchCache>(dir), upstream);
        CHECK(online.fetch("https://a.com/x").body == "<p>A.</p>");
        CHECK(online.fetch("https://b.com").status == 404);
        CHECK_THROWS(online.fetch("https://c.com"));
    }
    auto cache = std::make_shared<FetchCache>(dir);
    CHECK(cache->size() == 2);
    CachingFetcher offline(cache, nullptr);
    auto page = offline.fetch("https://a.com/x");
    CHECK(page.status == 200);
    CHECK(page.content_type == "text/html");
    CHECK(page.body == "<p>A.</p>");
    CHECK(offline.fetch("https://b.com").status == 404);
    CHECK_THROWS_AS(offline.fetch("https://c.com"), BackendUnavailable);
    std::filesystem::remove_all(dir);
}
