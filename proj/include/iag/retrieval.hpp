#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "iag/backends/interfaces.hpp"
#include "iag/core/diagnostics.hpp"
#include "iag/core/types.hpp"
#include "iag/querygen.hpp"

namespace iag {

inline constexpr std::size_t kSentencesPerSegment = 3;

// Splits after '.', '!' or '?' (runs of them, plus closing quotes/brackets)
// when followed by whitespace or the end of text. A single '.' after a known
// abbreviation does not end a sentence. Whitespace inside each sentence is
// collapsed; empty sentences are never returned.
std::vector<std::string> split_sentences(std::string_view text);

// Consecutive groups of `group_size` sentences joined by one space. The last
// group may be shorter.
std::vector<ContentSegment> segment(const std::vector<std::string>& sentences, const std::string& site_url,
                                    std::size_t group_size = kSentencesPerSegment,
                                    Tokenizer tokenizer = Tokenizer::whitespace);

// Per-query results concatenated in query order and deduplicated by
// normalized URL (first occurrence wins). Failing queries are skipped with a
// flag; throws RetrievalEmpty when nothing comes back at all.
std::vector<SearchHit> search_all(const QueryBundle& bundle, const WebSearchBackend& backend,
                                  std::size_t per_query_limit, std::size_t workers = 1,
                                  Diagnostics* diag = nullptr);

// Never throws for fetch problems: failures, non-2xx, non-HTML bodies and
// pages without text all come back as unavailable. `failure` receives the
// reason when non-null.
WebsiteDoc fetch_and_parse(const SearchHit& hit, const Fetcher& fetcher, Tokenizer tokenizer = Tokenizer::whitespace,
                           std::string* failure = nullptr);

// Parses an already-downloaded page.
WebsiteDoc parse_page(const SearchHit& hit, const FetchResponse& response, Tokenizer tokenizer,
                      std::string* failure = nullptr);

// Bounded worker pool; output follows hit order.
std::vector<WebsiteDoc> fetch_all(const std::vector<SearchHit>& hits, const Fetcher& fetcher, std::size_t workers,
                                  Tokenizer tokenizer = Tokenizer::whitespace, Diagnostics* diag = nullptr);

struct RetrievalResult {
    std::vector<SearchHit> hits;
    std::vector<WebsiteDoc> docs;  // same order as hits

    const WebsiteDoc* find(const std::string& url) const;
};

RetrievalResult retrieve(const QueryBundle& bundle, const WebSearchBackend& search, const Fetcher& fetcher,
                         const PipelineConfig& config, Diagnostics* diag = nullptr);

}  // namespace iag
