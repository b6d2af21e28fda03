#include "iag/core/types.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "iag/core/errors.hpp"

namespace iag {

Query::Query(std::string_view text, QueryOrigin origin) : text_(trim(text)), origin_(origin) {
    if (text_.empty()) throw ParameterError("query text is empty");
    if (text_.find_first_of("\r\n") != std::string::npos) {
        throw ParameterError("query text contains a newline: " + text_);
    }
}

std::size_t WebsiteDoc::token_count() const {
    std::size_t n = 0;
    for (const auto& s : segments) n += s.token_count;
    return n;
}

std::string check_options(const VqaSample& sample) {
    for (char letter : {'A', 'B', 'C', 'D', 'E'}) {
        if (!sample.options.count(letter)) return std::string("missing option ") + letter;
    }
    if (sample.options.size() != 5) return "unexpected option letters";
    if (sample.options.at('E') != kComplementOption) return "option E is not the complement option";

    std::multiset<std::string> expected{sample.gt_answer, sample.distractors[0], sample.distractors[1],
                                        sample.distractors[2]};
    std::multiset<std::string> actual;
    for (char letter : {'A', 'B', 'C', 'D'}) actual.insert(sample.options.at(letter));
    if (expected != actual) return "options A-D are not a permutation of the answer and distractors";

    if (sample.gt_letter) {
        char g = *sample.gt_letter;
        if (g >= 'A' && g <= 'D') {
            if (sample.options.at(g) != sample.gt_answer) return "gt_letter does not point at gt_answer";
            int matches = 0;
            for (char letter : {'A', 'B', 'C', 'D'}) matches += sample.options.at(letter) == sample.gt_answer;
            if (matches != 1) return "gt_answer appears in more than one option";
        } else if (g != 'E') {
            return "gt_letter out of range";
        }
    }
    return {};
}

QuantizedScore QuantizedScore::from_fifths(int fifths) {
    if (fifths < 0 || fifths > 5) throw ParameterError("quantized score out of range");
    QuantizedScore s;
    s.fifths_ = fifths;
    return s;
}

QuantizedScore QuantizedScore::from_value(double value) {
    double scaled = value * 5.0;
    double rounded = std::round(scaled);
    if (!std::isfinite(value) || std::abs(scaled - rounded) > 1e-9 || rounded < 0 || rounded > 5) {
        throw ParameterError("not a quantized score level: " + std::to_string(value));
    }
    return from_fifths(static_cast<int>(rounded));
}

QuantizedScore QuantizedScore::nearest(std::size_t correct, std::size_t total) {
    if (total == 0 || correct > total) throw ParameterError("invalid vote counts");
    // distance of level f to correct/total, scaled by 5*total
    auto dist = [&](int f) {
        long long d = 5LL * static_cast<long long>(correct) - f * static_cast<long long>(total);
        return d < 0 ? -d : d;
    };
    int best = 0;
    for (int f = 1; f <= 5; ++f) {
        if (dist(f) < dist(best)) best = f;
    }
    return from_fifths(best);
}

void PipelineConfig::validate() const {
    if (const auto* top = std::get_if<TopN>(&website_budget)) {
        if (top->n < 1) throw ParameterError("top_n must be >= 1");
    } else {
        double theta = std::get<TokenFraction>(website_budget).theta;
        if (!(theta > 0.0 && theta <= 1.0)) throw ParameterError("theta must be in (0, 1]");
    }
    if (segment_cut < 1) throw ParameterError("segment_cut must be >= 1");
    if (cluster_count < 1) throw ParameterError("cluster_count must be >= 1");
    if (cluster_count > segment_cut) throw ParameterError("cluster_count must not exceed segment_cut");
    if (per_query_limit < 1) throw ParameterError("per_query_limit must be >= 1");
    if (!(image_query_support > 0.0 && image_query_support <= 1.0)) {
        throw ParameterError("image_query_support must be in (0, 1]");
    }
}

// ---------------------------------------------------------------------------
// enum names

namespace {

template <typename E, std::size_t N>
E parse_enum(std::string_view s, const std::array<std::pair<E, std::string_view>, N>& table,
             const char* what) {
    for (const auto& [value, name] : table) {
        if (name == s) return value;
    }
    throw ParseError(std::string("unknown ") + what + ": " + std::string(s));
}

template <typename E, std::size_t N>
std::string_view name_of(E v, const std::array<std::pair<E, std::string_view>, N>& table) {
    for (const auto& [value, name] : table) {
        if (value == v) return name;
    }
    return "?";
}

constexpr std::array<std::pair<QueryOrigin, std::string_view>, 4> kOrigins{{
    {QueryOrigin::question, "question"},
    {QueryOrigin::image, "image"},
    {QueryOrigin::trend, "trend"},
    {QueryOrigin::manual, "manual"},
}};
constexpr std::array<std::pair<FetchStatus, std::string_view>, 2> kStatuses{{
    {FetchStatus::fetched, "fetched"},
    {FetchStatus::unavailable, "unavailable"},
}};
constexpr std::array<std::pair<Category, std::string_view>, 7> kCategories{{
    {Category::politics, "politics"},
    {Category::entertainment, "entertainment"},
    {Category::announcement, "announcement"},
    {Category::sports, "sports"},
    {Category::economic, "economic"},
    {Category::technology, "technology"},
    {Category::society, "society"},
}};
constexpr std::array<std::pair<Category, std::string_view>, 7> kCategoryLabels{{
    {Category::politics, "pol."},
    {Category::entertainment, "ent."},
    {Category::announcement, "ann."},
    {Category::sports, "sp."},
    {Category::economic, "eco."},
    {Category::technology, "tech."},
    {Category::society, "soc."},
}};
constexpr std::array<std::pair<SnippetPolicy, std::string_view>, 3> kPolicies{{
    {SnippetPolicy::raw, "raw"},
    {SnippetPolicy::discard, "discard"},
    {SnippetPolicy::mixture, "mixture"},
}};
constexpr std::array<std::pair<Tokenizer, std::string_view>, 1> kTokenizers{{
    {Tokenizer::whitespace, "whitespace"},
}};

}  // namespace

std::string_view to_string(QueryOrigin v) { return name_of(v, kOrigins); }
std::string_view to_string(FetchStatus v) { return name_of(v, kStatuses); }
std::string_view to_string(Category v) { return name_of(v, kCategories); }
std::string_view to_string(SnippetPolicy v) { return name_of(v, kPolicies); }
std::string_view to_string(Tokenizer v) { return name_of(v, kTokenizers); }
std::string_view short_label(Category v) { return name_of(v, kCategoryLabels); }

QueryOrigin parse_query_origin(std::string_view s) { return parse_enum(s, kOrigins, "query origin"); }
FetchStatus parse_fetch_status(std::string_view s) { return parse_enum(s, kStatuses, "fetch status"); }
Category parse_category(std::string_view s) { return parse_enum(s, kCategories, "category"); }
SnippetPolicy parse_snippet_policy(std::string_view s) { return parse_enum(s, kPolicies, "snippet policy"); }
Tokenizer parse_tokenizer(std::string_view s) { return parse_enum(s, kTokenizers, "tokenizer"); }

// ---------------------------------------------------------------------------
// JSON

namespace {

std::string letter_string(char c) { return std::string(1, c); }

char parse_letter(const json& j) {
    auto s = j.get<std::string>();
    if (s.size() != 1) throw ParseError("expected a single letter, got '" + s + "'");
    return s[0];
}

}  // namespace

void to_json(json& j, const SearchHit& v) {
    j = json{{"url", v.url},
             {"title", v.title},
             {"snippet", v.snippet},
             {"rank", v.rank},
             {"query_origin", v.query_origin}};
}

void from_json(const json& j, SearchHit& v) {
    v.url = j.at("url").get<std::string>();
    v.title = j.value("title", "");
    v.snippet = j.value("snippet", "");
    v.rank = j.at("rank").get<int>();
    if (v.rank < 1) throw ParseError("rank must be >= 1");
    v.query_origin = j.at("query_origin").get<Query>();
}

void to_json(json& j, const ContentSegment& v) {
    j = json{{"site_url", v.site_url},
             {"index", v.index},
             {"text", v.text},
             {"sentence_count", v.sentence_count},
             {"token_count", v.token_count},
             {"first_sentence", v.first_sentence}};
}

void from_json(const json& j, ContentSegment& v) {
    v.site_url = j.at("site_url").get<std::string>();
    v.index = j.at("index").get<std::size_t>();
    v.text = j.at("text").get<std::string>();
    v.sentence_count = j.at("sentence_count").get<std::size_t>();
    v.token_count = j.at("token_count").get<std::size_t>();
    v.first_sentence = j.value("first_sentence", std::size_t{0});
}

void to_json(json& j, const WebsiteDoc& v) {
    j = json{{"hit", v.hit},
             {"fetch_status", to_string(v.fetch_status)},
             {"sentences", v.sentences},
             {"segments", v.segments}};
}

void from_json(const json& j, WebsiteDoc& v) {
    v.hit = j.at("hit").get<SearchHit>();
    v.fetch_status = parse_fetch_status(j.at("fetch_status").get<std::string>());
    v.sentences = j.value("sentences", std::vector<std::string>{});
    v.segments = j.value("segments", std::vector<ContentSegment>{});
    if (!v.available() && !v.segments.empty()) throw ParseError("unavailable document with segments");
}

void to_json(json& j, const VqaSample& v) {
    json options = json::object();
    for (const auto& [letter, text] : v.options) options[letter_string(letter)] = text;
    j = json{{"id", v.id},
             {"image_ref", v.image_ref},
             {"question", v.question},
             {"options", options},
             {"gt_letter", v.gt_letter ? json(letter_string(*v.gt_letter)) : json(nullptr)},
             {"gt_answer", v.gt_answer},
             {"distractors", v.distractors},
             {"category", v.category ? json(to_string(*v.category)) : json(nullptr)},
             {"gt_segment", v.gt_segment ? json(*v.gt_segment) : json(nullptr)},
             {"source_query", v.source_query ? json(*v.source_query) : json(nullptr)}};
}

void from_json(const json& j, VqaSample& v) {
    v.id = j.at("id").get<std::string>();
    v.image_ref = j.value("image_ref", "");
    v.question = j.at("question").get<std::string>();
    v.options.clear();
    for (const auto& [key, text] : j.at("options").items()) {
        if (key.size() != 1) throw ParseError("bad option key: " + key);
        v.options[key[0]] = text.get<std::string>();
    }
    v.gt_letter.reset();
    if (j.contains("gt_letter") && !j["gt_letter"].is_null()) v.gt_letter = parse_letter(j["gt_letter"]);
    v.gt_answer = j.value("gt_answer", "");
    v.distractors = j.at("distractors").get<std::array<std::string, 3>>();
    v.category.reset();
    if (j.contains("category") && !j["category"].is_null()) {
        v.category = parse_category(j["category"].get<std::string>());
    }
    v.gt_segment.reset();
    if (j.contains("gt_segment") && !j["gt_segment"].is_null()) {
        v.gt_segment = j["gt_segment"].get<ContentSegment>();
    }
    v.source_query.reset();
    if (j.contains("source_query") && !j["source_query"].is_null()) {
        v.source_query = j["source_query"].get<std::string>();
    }
}

void to_json(json& j, const PipelineConfig& v) {
    j = json::object();
    if (const auto* top = std::get_if<TopN>(&v.website_budget)) {
        j["website_budget"] = json{{"top_n", top->n}};
    } else {
        j["website_budget"] = json{{"token_fraction", std::get<TokenFraction>(v.website_budget).theta}};
    }
    j["segment_cut"] = v.segment_cut;
    j["cluster_count"] = v.cluster_count;
    j["rng_seed"] = v.rng_seed;
    j["snippet_policy"] = to_string(v.snippet_policy);
    j["tokenizer"] = to_string(v.tokenizer);
    j["per_query_limit"] = v.per_query_limit;
    j["include_option_e"] = v.include_option_e;
    j["image_query_support"] = v.image_query_support;
}

void from_json(const json& j, PipelineConfig& v) {
    if (j.contains("website_budget")) {
        const auto& b = j["website_budget"];
        if (b.contains("top_n")) {
            v.website_budget = TopN{b["top_n"].get<std::size_t>()};
        } else {
            v.website_budget = TokenFraction{b.at("token_fraction").get<double>()};
        }
    }
    v.segment_cut = j.value("segment_cut", v.segment_cut);
    v.cluster_count = j.value("cluster_count", v.cluster_count);
    v.rng_seed = j.value("rng_seed", v.rng_seed);
    if (j.contains("snippet_policy")) v.snippet_policy = parse_snippet_policy(j["snippet_policy"].get<std::string>());
    if (j.contains("tokenizer")) v.tokenizer = parse_tokenizer(j["tokenizer"].get<std::string>());
    v.per_query_limit = j.value("per_query_limit", v.per_query_limit);
    v.include_option_e = j.value("include_option_e", v.include_option_e);
    v.image_query_support = j.value("image_query_support", v.image_query_support);
    v.validate();
}

}  // namespace iag

namespace nlohmann {

iag::Query adl_serializer<iag::Query>::from_json(const json& j) {
    return iag::Query(j.at("text").get<std::string>(), iag::parse_query_origin(j.at("origin").get<std::string>()));
}

void adl_serializer<iag::Query>::to_json(json& j, const iag::Query& q) {
    j = json{{"text", q.text()}, {"origin", iag::to_string(q.origin())}};
}

iag::QuantizedScore adl_serializer<iag::QuantizedScore>::from_json(const json& j) {
    return iag::QuantizedScore::from_value(j.get<double>());
}

void adl_serializer<iag::QuantizedScore>::to_json(json& j, const iag::QuantizedScore& s) {
    j = s.value();
}

}  // namespace nlohmann
