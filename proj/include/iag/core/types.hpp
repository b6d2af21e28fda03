#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "iag/core/text.hpp"

namespace iag {

using json = nlohmann::json;

enum class QueryOrigin { question, image, trend, manual };

// A search query. Text is trimmed on construction and must be a non-empty
// single line.
class Query {
public:
    Query(std::string_view text, QueryOrigin origin);

    const std::string& text() const { return text_; }
    QueryOrigin origin() const { return origin_; }

    bool operator==(const Query&) const = default;

private:
    std::string text_;
    QueryOrigin origin_;
};

struct SearchHit {
    std::string url;  // normalized
    std::string title;
    std::string snippet;
    int rank = 1;  // 1-based, per query
    Query query_origin{"unknown", QueryOrigin::manual};

    bool operator==(const SearchHit&) const = default;
};

struct ContentSegment {
    std::string site_url;
    std::size_t index = 0;
    std::string text;
    std::size_t sentence_count = 0;
    std::size_t token_count = 0;
    std::size_t first_sentence = 0;  // offset into the owning document's sentences

    bool operator==(const ContentSegment&) const = default;
};

enum class FetchStatus { fetched, unavailable };

struct WebsiteDoc {
    SearchHit hit;
    FetchStatus fetch_status = FetchStatus::unavailable;
    std::vector<std::string> sentences;
    std::vector<ContentSegment> segments;

    bool available() const { return fetch_status == FetchStatus::fetched; }
    std::size_t token_count() const;

    bool operator==(const WebsiteDoc&) const = default;
};

enum class Category { politics, entertainment, announcement, sports, economic, technology, society };
inline constexpr std::array<Category, 7> kAllCategories = {
    Category::politics,   Category::entertainment, Category::announcement, Category::sports,
    Category::economic,   Category::technology,    Category::society};

inline constexpr std::string_view kComplementOption = "No Correct Answers";
inline constexpr char kComplementLetter = 'E';

struct VqaSample {
    std::string id;
    std::string image_ref;
    std::string question;
    std::map<char, std::string> options;  // 'A'..'D' plus 'E' = kComplementOption
    std::optional<char> gt_letter;
    std::string gt_answer;
    std::array<std::string, 3> distractors;
    std::optional<Category> category;
    std::optional<ContentSegment> gt_segment;
    std::optional<std::string> source_query;

    bool operator==(const VqaSample&) const = default;
};

// Returns an empty string when the option invariants hold, otherwise a
// description of the first violation.
std::string check_options(const VqaSample& sample);

// Helpfulness level in {0.0, 0.2, 0.4, 0.6, 0.8, 1.0}, stored as an exact
// count of fifths.
class QuantizedScore {
public:
    constexpr QuantizedScore() = default;

    static QuantizedScore from_fifths(int fifths);
    static QuantizedScore from_value(double value);
    // Nearest level to correct/total; exact halfway cases round down.
    static QuantizedScore nearest(std::size_t correct, std::size_t total);

    constexpr int fifths() const { return fifths_; }
    constexpr double value() const { return fifths_ / 5.0; }

    constexpr auto operator<=>(const QuantizedScore&) const = default;

private:
    int fifths_ = 0;
};

struct TopN {
    std::size_t n = 10;
    bool operator==(const TopN&) const = default;
};
struct TokenFraction {
    double theta = 0.4;
    bool operator==(const TokenFraction&) const = default;
};
using WebsiteBudget = std::variant<TopN, TokenFraction>;

enum class SnippetPolicy { raw, discard, mixture };

struct PipelineConfig {
    WebsiteBudget website_budget = TokenFraction{0.4};
    std::size_t segment_cut = 20;   // M
    std::size_t cluster_count = 5;  // K
    std::uint64_t rng_seed = 0;
    SnippetPolicy snippet_policy = SnippetPolicy::raw;
    Tokenizer tokenizer = Tokenizer::whitespace;

    std::size_t per_query_limit = 10;
    std::size_t workers = 1;
    bool include_option_e = true;
    double image_query_support = 0.6;

    // Throws ParameterError.
    void validate() const;
};

std::string_view to_string(QueryOrigin v);
std::string_view to_string(FetchStatus v);
std::string_view to_string(Category v);
std::string_view to_string(SnippetPolicy v);
std::string_view to_string(Tokenizer v);
std::string_view short_label(Category v);  // column header, e.g. "pol."

QueryOrigin parse_query_origin(std::string_view s);
FetchStatus parse_fetch_status(std::string_view s);
Category parse_category(std::string_view s);
SnippetPolicy parse_snippet_policy(std::string_view s);
Tokenizer parse_tokenizer(std::string_view s);

void to_json(json& j, const SearchHit& v);
void from_json(const json& j, SearchHit& v);
void to_json(json& j, const ContentSegment& v);
void from_json(const json& j, ContentSegment& v);
void to_json(json& j, const WebsiteDoc& v);
void from_json(const json& j, WebsiteDoc& v);
void to_json(json& j, const VqaSample& v);
void from_json(const json& j, VqaSample& v);
void to_json(json& j, const PipelineConfig& v);
void from_json(const json& j, PipelineConfig& v);

}  // namespace iag

namespace nlohmann {

template <>
struct adl_serializer<iag::Query> {
    static iag::Query from_json(const json& j);
    static void to_json(json& j, const iag::Query& q);
};

template <>
struct adl_serializer<iag::QuantizedScore> {
    static iag::QuantizedScore from_json(const json& j);
    static void to_json(json& j, const iag::QuantizedScore& s);
};

}  // namespace nlohmann
