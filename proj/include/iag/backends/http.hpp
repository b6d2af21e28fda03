#pragma once

#include <chrono>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "iag/backends/interfaces.hpp"

namespace iag {

struct HttpEndpoint {
    std::string url;
    std::string api_key;  // sent as "Authorization: Bearer <key>" when set
    int max_attempts = 3;
    std::chrono::milliseconds backoff{250};  // doubled after each failed attempt
    std::chrono::milliseconds timeout{30000};
    std::chrono::milliseconds min_interval{0};  // rate limit between requests
};

struct ChatMessage {
    std::string role;
    std::string content;
    std::optional<std::string> image_ref;
};

struct ChatRequest {
    std::string model;
    std::vector<ChatMessage> messages;
};

struct ChatResponse {
    std::string text;
    int attempts = 0;
};

json to_wire(const ChatRequest& request);

// Minimum spacing between requests; callers queue up behind each other.
class RateLimiter {
public:
    explicit RateLimiter(std::chrono::milliseconds interval) : interval_(interval) {}
    void acquire();

private:
    std::chrono::milliseconds interval_;
    std::mutex mu_;
    std::chrono::steady_clock::time_point next_{};
};

struct JsonReply {
    json body;
    int attempts = 0;
};

// POSTs a JSON body. Connection failures, timeouts, 429 and 5xx are retried
// with exponential backoff up to endpoint.max_attempts; other non-2xx replies
// fail immediately. Throws BackendUnavailable carrying the attempt count.
JsonReply post_json(const HttpEndpoint& endpoint, const json& body, RateLimiter* limiter = nullptr);

// Wire format: {model, messages:[{role, content, image_ref?}]} -> {text}.
ChatResponse http_chat_call(const HttpEndpoint& endpoint, const ChatRequest& request,
                            RateLimiter* limiter = nullptr);

class ChatGenerator final : public GeneratorBackend {
public:
    ChatGenerator(HttpEndpoint endpoint, std::string model);
    std::string generate(const std::string& prompt, const ImageRef& image_ref) const override;

private:
    HttpEndpoint endpoint_;
    std::string model_;
    mutable RateLimiter limiter_;
};

// Scorer on top of any text generator: first character of the trimmed reply,
// or '?' when the reply is empty.
class GeneratorScorer final : public ScorerBackend {
public:
    explicit GeneratorScorer(std::shared_ptr<const GeneratorBackend> model);
    char score_option(const std::string& instruction, const ImageRef& image_ref) const override;

private:
    std::shared_ptr<const GeneratorBackend> model_;
};

// Wire format: {model, kind: "text"|"image", input} -> {embedding: [...]}.
class HttpEmbedder final : public EmbedderBackend {
public:
    HttpEmbedder(HttpEndpoint endpoint, std::string model, std::size_t dim);
    std::vector<double> embed(const EmbedInput& input) const override;
    std::size_t dimension() const override { return dim_; }

private:
    HttpEndpoint endpoint_;
    std::string model_;
    std::size_t dim_;
    mutable RateLimiter limiter_;
};

// Wire format: {query, count} -> {results: [{url, title, snippet}]}.
class HttpWebSearch final : public WebSearchBackend {
public:
    explicit HttpWebSearch(HttpEndpoint endpoint);
    std::vector<SearchHit> search(const Query& query, std::size_t limit) const override;

private:
    HttpEndpoint endpoint_;
    mutable RateLimiter limiter_;
};

// Wire format: {image_ref} -> {entity_name?, related_terms: [...], related_titles: [...]}.
class HttpVisualSearch final : public VisualSearchBackend {
public:
    explicit HttpVisualSearch(HttpEndpoint endpoint);
    VisualSearchResult lookup(const std::string& image_ref) const override;

private:
    HttpEndpoint endpoint_;
    mutable RateLimiter limiter_;
};

// Wire format: {term, count} -> {images: ["<ref>", ...]}.
class HttpImageSearch final : public ImageSearchBackend {
public:
    explicit HttpImageSearch(HttpEndpoint endpoint);
    std::vector<std::string> search_images(const std::string& term, std::size_t limit) const override;

private:
    HttpEndpoint endpoint_;
    mutable RateLimiter limiter_;
};

struct FetchOptions {
    std::chrono::milliseconds timeout{10000};
    std::size_t max_bytes = 2 * 1024 * 1024;
    std::string user_agent = "iag-fetch/1.0";
};

// Plain GET with redirects; bodies beyond max_bytes are truncated.
class HttpFetcher final : public Fetcher {
public:
    explicit HttpFetcher(FetchOptions options = {});
    FetchResponse fetch(const std::string& url) const override;

private:
    FetchOptions options_;
};

// Named-entity spans from a text generator, one entity per reply line.
class LlmNer final : public NerBackend {
public:
    explicit LlmNer(std::shared_ptr<const GeneratorBackend> model);
    std::vector<EntitySpan> entities(const std::string& text) const override;

private:
    std::shared_ptr<const GeneratorBackend> model_;
};

class LlmHypernyms final : public HypernymBackend {
public:
    explicit LlmHypernyms(std::shared_ptr<const GeneratorBackend> model);
    std::string hypernym(const std::string& entity) const override;

private:
    std::shared_ptr<const GeneratorBackend> model_;
};

std::string ner_prompt(const std::string& text);
std::string hypernym_prompt(const std::string& entity);

}  // namespace iag
