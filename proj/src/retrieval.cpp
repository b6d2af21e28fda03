#include "iag/retrieval.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <set>

#include "iag/core/errors.hpp"
#include "iag/core/parallel.hpp"
#include "iag/core/text.hpp"
#include "iag/core/url.hpp"
#include "iag/html.hpp"

namespace iag {

namespace {

constexpr std::array<std::string_view, 40> kAbbreviations = {
    "mr",   "mrs",  "ms",   "dr",   "prof", "sr",   "jr",   "st",   "vs",   "etc",
    "inc",  "ltd",  "co",   "corp", "gov",  "gen",  "col",  "lt",   "sgt",  "rep",
    "sen",  "no",   "jan",  "feb",  "mar",  "apr",  "jun",  "jul",  "aug",  "sep",
    "sept", "oct",  "nov",  "dec",  "e.g",  "i.e",  "u.s",  "u.k",  "a.m",  "p.m"};

bool is_terminator(char c) {
    return c == '.' || c == '!' || c == '?';
}

bool is_closer(char c) {
    return c == '"' || c == '\'' || c == ')' || c == ']';
}

bool is_space(char c) {
    return std::isspace(static_cast<unsigned char>(c)) != 0;
}

bool abbreviation_before(std::string_view text, std::size_t dot) {
    std::size_t b = dot;
    while (b > 0 && !is_space(text[b - 1])) --b;
    std::string word = to_lower(text.substr(b, dot - b));
    while (!word.empty() && (word.front() == '(' || word.front() == '"' || word.front() == '\'')) {
        word.erase(word.begin());
    }
    for (auto a : kAbbreviations) {
        if (word == a) return true;
    }
    return false;
}

bool html_like(const FetchResponse& r) {
    if (r.content_type.empty()) return true;
    std::string ct = to_lower(r.content_type);
    return ct.find("html") != std::string::npos || ct.find("text/plain") != std::string::npos;
}

}  // namespace

std::vector<std::string> split_sentences(std::string_view text) {
    std::vector<std::string> out;
    auto emit = [&](std::size_t from, std::size_t to) {
        std::string s = collapse_whitespace(text.substr(from, to - from));
        if (!s.empty()) out.push_back(std::move(s));
    };

    std::size_t start = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (!is_terminator(text[i])) continue;
        std::size_t j = i;
        while (j + 1 < text.size() && is_terminator(text[j + 1])) ++j;
        const bool single_dot = j == i && text[i] == '.';
        while (j + 1 < text.size() && is_closer(text[j + 1])) ++j;
        const bool boundary = j + 1 == text.size() || is_space(text[j + 1]);
        if (boundary && !(single_dot && abbreviation_before(text, i))) {
            emit(start, j + 1);
            start = j + 1;
        }
        i = j;
    }
    if (start < text.size()) emit(start, text.size());
    return out;
}

std::vector<ContentSegment> segment(const std::vector<std::string>& sentences, const std::string& site_url,
                                    std::size_t group_size, Tokenizer tokenizer) {
    if (group_size == 0) throw ParameterError("group_size must be positive");
    std::vector<ContentSegment> out;
    for (std::size_t first = 0; first < sentences.size(); first += group_size) {
        std::size_t last = std::min(first + group_size, sentences.size());
        ContentSegment seg;
        seg.site_url = site_url;
        seg.index = out.size();
        seg.first_sentence = first;
        seg.sentence_count = last - first;
        std::vector<std::string> group(sentences.begin() + static_cast<long>(first),
                                       sentences.begin() + static_cast<long>(last));
        seg.text = join(group, " ");
        seg.token_count = count_tokens(seg.text, tokenizer);
        out.push_back(std::move(seg));
    }
    return out;
}

std::vector<SearchHit> search_all(const QueryBundle& bundle, const WebSearchBackend& backend,
                                  std::size_t per_query_limit, std::size_t workers, Diagnostics* diag) {
    const std::vector<Query> queries = bundle.all();
    if (queries.empty()) throw PreconditionError("query bundle is empty");

    struct PerQuery {
        std::vector<SearchHit> hits;
        std::string error;
    };
    auto results = parallel_map(queries.size(), workers, [&](std::size_t i) {
        PerQuery r;
        try {
            r.hits = backend.search(queries[i], per_query_limit);
        } catch (const std::exception& e) {
            r.error = e.what();
        }
        return r;
    });

    std::vector<SearchHit> merged;
    std::set<std::string> seen;
    for (std::size_t i = 0; i < results.size(); ++i) {
        if (!results[i].error.empty()) {
            flag(diag, "retrieval", "query '" + queries[i].text() + "' failed: " + results[i].error);
            continue;
        }
        for (auto& hit : results[i].hits) {
            try {
                hit.url = normalize_url(hit.url);
            } catch (const ParseError& e) {
                flag(diag, "retrieval", e.what());
                continue;
            }
            if (seen.insert(hit.url).second) merged.push_back(std::move(hit));
        }
    }
    if (merged.empty()) throw RetrievalEmpty("no search results for any query");
    return merged;
}

WebsiteDoc parse_page(const SearchHit& hit, const FetchResponse& response, Tokenizer tokenizer,
                      std::string* failure) {
    WebsiteDoc doc;
    doc.hit = hit;
    doc.fetch_status = FetchStatus::unavailable;
    auto fail = [&](std::string why) {
        if (failure) *failure = std::move(why);
        return doc;
    };
    if (response.status < 200 || response.status >= 300) return fail("HTTP " + std::to_string(response.status));
    if (!html_like(response)) return fail("not HTML: " + response.content_type);

    std::vector<std::string> sentences = split_sentences(html_to_text(response.body));
    if (sentences.empty()) return fail("page has no text");
    doc.segments = segment(sentences, hit.url, kSentencesPerSegment, tokenizer);
    doc.sentences = std::move(sentences);
    doc.fetch_status = FetchStatus::fetched;
    return doc;
}

WebsiteDoc fetch_and_parse(const SearchHit& hit, const Fetcher& fetcher, Tokenizer tokenizer,
                           std::string* failure) {
    try {
        return parse_page(hit, fetcher.fetch(hit.url), tokenizer, failure);
    } catch (const std::exception& e) {
        if (failure) *failure = e.what();
        WebsiteDoc doc;
        doc.hit = hit;
        doc.fetch_status = FetchStatus::unavailable;
        return doc;
    }
}

std::vector<WebsiteDoc> fetch_all(const std::vector<SearchHit>& hits, const Fetcher& fetcher, std::size_t workers,
                                  Tokenizer tokenizer, Diagnostics* diag) {
    struct Fetched {
        WebsiteDoc doc;
        std::string failure;
    };
    auto results = parallel_map(hits.size(), workers, [&](std::size_t i) {
        Fetched f;
        f.doc = fetch_and_parse(hits[i], fetcher, tokenizer, &f.failure);
        return f;
    });
    std::vector<WebsiteDoc> docs;
    docs.reserve(results.size());
    for (auto& r : results) {
        if (!r.doc.available()) flag(diag, "retrieval", r.doc.hit.url + " unavailable: " + r.failure);
        docs.push_back(std::move(r.doc));
    }
    return docs;
}

const WebsiteDoc* RetrievalResult::find(const std::string& url) const {
    for (const auto& d : docs) {
        if (d.hit.url == url) return &d;
    }
    return nullptr;
}

RetrievalResult retrieve(const QueryBundle& bundle, const WebSearchBackend& search, const Fetcher& fetcher,
                         const PipelineConfig& config, Diagnostics* diag) {
    RetrievalResult result;
    result.hits = search_all(bundle, search, config.per_query_limit, config.workers, diag);
    result.docs = fetch_all(result.hits, fetcher, std::max<std::size_t>(1, std::min<std::size_t>(config.workers, 8)),
                            config.tokenizer, diag);
    return result;
}

}  // namespace iag
