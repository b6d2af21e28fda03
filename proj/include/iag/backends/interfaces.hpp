#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "iag/core/types.hpp"

namespace iag {

using ImageRef = std::optional<std::string>;

// Answers an A-F helpfulness instruction with one letter. Implementations
// return whatever letter the model produced; validation and the retry policy
// live with the caller.
class ScorerBackend {
public:
    virtual ~ScorerBackend() = default;
    virtual char score_option(const std::string& instruction, const ImageRef& image_ref) const = 0;
};

class GeneratorBackend {
public:
    virtual ~GeneratorBackend() = default;
    virtual std::string generate(const std::string& prompt, const ImageRef& image_ref) const = 0;
};

struct EmbedInput {
    enum class Kind { text, image };
    Kind kind = Kind::text;
    std::string value;

    static EmbedInput text(std::string s) { return {Kind::text, std::move(s)}; }
    static EmbedInput image(std::string ref) { return {Kind::image, std::move(ref)}; }
};

class EmbedderBackend {
public:
    virtual ~EmbedderBackend() = default;
    virtual std::vector<double> embed(const EmbedInput& input) const = 0;
    virtual std::size_t dimension() const = 0;
};

class WebSearchBackend {
public:
    virtual ~WebSearchBackend() = default;
    // At most `limit` hits ranked 1..n.
    virtual std::vector<SearchHit> search(const Query& query, std::size_t limit) const = 0;
};

struct VisualSearchResult {
    std::optional<std::string> entity_name;
    std::vector<std::string> related_terms;
    std::vector<std::string> related_titles;

    bool empty() const {
        return (!entity_name || entity_name->empty()) && related_terms.empty() && related_titles.empty();
    }
};

class VisualSearchBackend {
public:
    virtual ~VisualSearchBackend() = default;
    // Throws on lookup failure.
    virtual VisualSearchResult lookup(const std::string& image_ref) const = 0;
};

class ImageSearchBackend {
public:
    virtual ~ImageSearchBackend() = default;
    virtual std::vector<std::string> search_images(const std::string& term, std::size_t limit) const = 0;
};

struct FetchResponse {
    int status = 0;
    std::string content_type;
    std::string body;
};

class Fetcher {
public:
    virtual ~Fetcher() = default;
    // Throws on network failure; HTTP errors come back as a status code.
    virtual FetchResponse fetch(const std::string& url) const = 0;
};

struct EntitySpan {
    std::string text;
    std::size_t offset = 0;
};

class NerBackend {
public:
    virtual ~NerBackend() = default;
    virtual std::vector<EntitySpan> entities(const std::string& text) const = 0;
};

class HypernymBackend {
public:
    virtual ~HypernymBackend() = default;
    // Throws on backend failure.
    virtual std::string hypernym(const std::string& entity) const = 0;
};

}  // namespace iag
