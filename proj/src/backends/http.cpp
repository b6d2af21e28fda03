#include "iag/backends/http.hpp"

#include <httplib.h>

#include <algorithm>
#include <thread>

#include "iag/core/errors.hpp"
#include "iag/core/text.hpp"
#include "iag/core/url.hpp"

namespace iag {

namespace {

std::string base_of(const UrlParts& parts) {
    std::string base = parts.scheme + "://" + parts.host;
    if (parts.port != 0) base += ":" + std::to_string(parts.port);
    return base;
}

void configure(httplib::Client& cli, std::chrono::milliseconds timeout) {
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
    auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
    cli.set_connection_timeout(secs.count(), usecs.count());
    cli.set_read_timeout(secs.count(), usecs.count());
    cli.set_write_timeout(secs.count(), usecs.count());
}

bool transient_status(int status) {
    return status == 429 || status >= 500;
}

}  // namespace

void RateLimiter::acquire() {
    if (interval_.count() <= 0) return;
    std::chrono::steady_clock::time_point slot;
    {
        std::lock_guard<std::mutex> lock(mu_);
        auto now = std::chrono::steady_clock::now();
        slot = std::max(now, next_);
        next_ = slot + interval_;
    }
    std::this_thread::sleep_until(slot);
}

json to_wire(const ChatRequest& request) {
    json messages = json::array();
    for (const auto& m : request.messages) {
        json msg{{"role", m.role}, {"content", m.content}};
        if (m.image_ref) msg["image_ref"] = *m.image_ref;
        messages.push_back(std::move(msg));
    }
    return json{{"model", request.model}, {"messages", std::move(messages)}};
}

JsonReply post_json(const HttpEndpoint& endpoint, const json& body, RateLimiter* limiter) {
    UrlParts parts = split_url(endpoint.url);
    httplib::Client cli(base_of(parts));
    configure(cli, endpoint.timeout);

    httplib::Headers headers;
    if (!endpoint.api_key.empty()) headers.emplace("Authorization", "Bearer " + endpoint.api_key);
    const std::string payload = body.dump();
    const int max_attempts = std::max(1, endpoint.max_attempts);

    auto backoff = endpoint.backoff;
    std::string last_error;
    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
        if (limiter) limiter->acquire();
        auto res = cli.Post(parts.target, headers, payload, "application/json");
        if (res && res->status >= 200 && res->status < 300) {
            try {
                return {json::parse(res->body), attempt};
            } catch (const json::exception& e) {
                throw BackendUnavailable(endpoint.url + ": malformed JSON reply: " + e.what(), attempt);
            }
        }
        if (res) {
            last_error = "HTTP " + std::to_string(res->status);
            if (!transient_status(res->status)) throw BackendUnavailable(endpoint.url + ": " + last_error, attempt);
        } else {
            last_error = httplib::to_string(res.error());
        }
        if (attempt < max_attempts) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
    }
    throw BackendUnavailable(endpoint.url + ": " + last_error, max_attempts);
}

ChatResponse http_chat_call(const HttpEndpoint& endpoint, const ChatRequest& request, RateLimiter* limiter) {
    JsonReply reply = post_json(endpoint, to_wire(request), limiter);
    if (!reply.body.is_object() || !reply.body.contains("text") || !reply.body["text"].is_string()) {
        throw BackendUnavailable(endpoint.url + ": reply has no text field", reply.attempts);
    }
    return {reply.body["text"].get<std::string>(), reply.attempts};
}

ChatGenerator::ChatGenerator(HttpEndpoint endpoint, std::string model)
    : endpoint_(std::move(endpoint)), model_(std::move(model)), limiter_(endpoint_.min_interval) {}

std::string ChatGenerator::generate(const std::string& prompt, const ImageRef& image_ref) const {
    ChatRequest request{model_, {{"user", prompt, image_ref}}};
    return http_chat_call(endpoint_, request, &limiter_).text;
}

GeneratorScorer::GeneratorScorer(std::shared_ptr<const GeneratorBackend> model) : model_(std::move(model)) {}

char GeneratorScorer::score_option(const std::string& instruction, const ImageRef& image_ref) const {
    std::string reply = model_->generate(instruction, image_ref);
    std::string_view t = trim(reply);
    return t.empty() ? '?' : t.front();
}

HttpEmbedder::HttpEmbedder(HttpEndpoint endpoint, std::string model, std::size_t dim)
    : endpoint_(std::move(endpoint)), model_(std::move(model)), dim_(dim), limiter_(endpoint_.min_interval) {}

std::vector<double> HttpEmbedder::embed(const EmbedInput& input) const {
    json body{{"model", model_},
              {"kind", input.kind == EmbedInput::Kind::image ? "image" : "text"},
              {"input", input.value}};
    JsonReply reply = post_json(endpoint_, body, &limiter_);
    auto v = reply.body.at("embedding").get<std::vector<double>>();
    if (v.size() != dim_) {
        throw BackendUnavailable(endpoint_.url + ": embedding has dimension " + std::to_string(v.size()),
                                 reply.attempts);
    }
    return v;
}

HttpWebSearch::HttpWebSearch(HttpEndpoint endpoint)
    : endpoint_(std::move(endpoint)), limiter_(endpoint_.min_interval) {}

std::vector<SearchHit> HttpWebSearch::search(const Query& query, std::size_t limit) const {
    JsonReply reply = post_json(endpoint_, json{{"query", query.text()}, {"count", limit}}, &limiter_);
    std::vector<SearchHit> hits;
    for (const auto& r : reply.body.value("results", json::array())) {
        if (hits.size() >= limit) break;
        SearchHit hit;
        try {
            hit.url = normalize_url(r.at("url").get<std::string>());
        } catch (const ParseError&) {
            continue;
        }
        hit.title = r.value("title", "");
        hit.snippet = r.value("snippet", "");
        hit.rank = static_cast<int>(hits.size()) + 1;
        hit.query_origin = query;
        hits.push_back(std::move(hit));
    }
    return hits;
}

HttpVisualSearch::HttpVisualSearch(HttpEndpoint endpoint)
    : endpoint_(std::move(endpoint)), limiter_(endpoint_.min_interval) {}

VisualSearchResult HttpVisualSearch::lookup(const std::string& image_ref) const {
    JsonReply reply = post_json(endpoint_, json{{"image_ref", image_ref}}, &limiter_);
    VisualSearchResult out;
    if (reply.body.contains("entity_name") && reply.body["entity_name"].is_string()) {
        out.entity_name = reply.body["entity_name"].get<std::string>();
    }
    out.related_terms = reply.body.value("related_terms", std::vector<std::string>{});
    out.related_titles = reply.body.value("related_titles", std::vector<std::string>{});
    return out;
}

HttpImageSearch::HttpImageSearch(HttpEndpoint endpoint)
    : endpoint_(std::move(endpoint)), limiter_(endpoint_.min_interval) {}

std::vector<std::string> HttpImageSearch::search_images(const std::string& term, std::size_t limit) const {
    JsonReply reply = post_json(endpoint_, json{{"term", term}, {"count", limit}}, &limiter_);
    auto images = reply.body.value("images", std::vector<std::string>{});
    if (images.size() > limit) images.resize(limit);
    return images;
}

HttpFetcher::HttpFetcher(FetchOptions options) : options_(std::move(options)) {}

FetchResponse HttpFetcher::fetch(const std::string& url) const {
    UrlParts parts = split_url(url);
    httplib::Client cli(base_of(parts));
    configure(cli, options_.timeout);
    cli.set_follow_location(true);

    FetchResponse out;
    bool truncated = false;
    httplib::Headers headers{{"User-Agent", options_.user_agent}};
    auto res = cli.Get(
        parts.target, headers,
        [&](const httplib::Response& r) {
            out.status = r.status;
            out.content_type = r.get_header_value("Content-Type");
            return true;
        },
        [&](const char* data, std::size_t len) {
            std::size_t room = options_.max_bytes - out.body.size();
            out.body.append(data, std::min(room, len));
            if (len >= room) {
                truncated = true;
                return false;
            }
            return true;
        });
    if (!res && !(truncated && res.error() == httplib::Error::Canceled)) {
        throw BackendUnavailable(url + ": " + httplib::to_string(res.error()), 1);
    }
    return out;
}

std::string ner_prompt(const std::string& text) {
    return "List the named entities that appear verbatim in the following question, one per line, "
           "most salient first. Print nothing else.\nQuestion: " + text;
}

std::string hypernym_prompt(const std::string& entity) {
    return "Give a one-to-three word hypernym for " + entity + ". Print only the hypernym.";
}

LlmNer::LlmNer(std::shared_ptr<const GeneratorBackend> model) : model_(std::move(model)) {}

std::vector<EntitySpan> LlmNer::entities(const std::string& text) const {
    std::string reply = model_->generate(ner_prompt(text), std::nullopt);
    std::vector<EntitySpan> spans;
    std::size_t start = 0;
    while (start <= reply.size()) {
        auto end = reply.find('\n', start);
        if (end == std::string::npos) end = reply.size();
        std::string_view line = trim(std::string_view(reply).substr(start, end - start));
        if (!line.empty()) {
            if (auto pos = text.find(line); pos != std::string::npos) {
                spans.push_back({std::string(line), pos});
            }
        }
        start = end + 1;
    }
    std::stable_sort(spans.begin(), spans.end(),
                     [](const EntitySpan& a, const EntitySpan& b) { return a.offset < b.offset; });
    return spans;
}

LlmHypernyms::LlmHypernyms(std::shared_ptr<const GeneratorBackend> model) : model_(std::move(model)) {}

std::string LlmHypernyms::hypernym(const std::string& entity) const {
    std::string reply = model_->generate(hypernym_prompt(entity), std::nullopt);
    std::string_view line = trim(reply);
    if (auto nl = line.find('\n'); nl != std::string_view::npos) line = trim(line.substr(0, nl));
    while (!line.empty() && (line.back() == '.' || line.back() == '"')) line.remove_suffix(1);
    while (!line.empty() && line.front() == '"') line.remove_prefix(1);
    if (line.empty()) throw BackendUnavailable("empty hypernym reply for " + entity, 1);
    return std::string(line);
}

}  // namespace iag
