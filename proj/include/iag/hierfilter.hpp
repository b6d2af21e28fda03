#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "iag/backends/interfaces.hpp"
#include "iag/core/diagnostics.hpp"
#include "iag/core/types.hpp"

namespace iag {

QuantizedScore letter_to_score(char letter);  // throws InvalidLetterError outside A-F
char score_to_letter(QuantizedScore score);

std::string render_website_instruction(const std::string& title, const std::string& snippet,
                                       const std::string& question);
std::string render_content_instruction(const std::string& context, const std::string& question);

struct LetterScore {
    char raw_letter = 'F';
    QuantizedScore score;
    std::string problem;  // non-empty when the scorer misbehaved
};

// One scorer call with the retry policy: an invalid letter gets one retry,
// then falls back to F. Backend exceptions score 0.0 immediately.
LetterScore score_with_policy(const ScorerBackend& scorer, const std::string& instruction, const ImageRef& image);

struct ScoredWebsite {
    SearchHit hit;
    QuantizedScore score;
    char raw_letter = 'F';
    std::string scored_snippet;  // what the scorer saw (differs from hit.snippet under mixture)
};

struct ScoredSegment {
    ContentSegment segment;
    QuantizedScore score;
    char raw_letter = 'F';
};

using DocIndex = std::map<std::string, const WebsiteDoc*>;
DocIndex index_docs(const std::vector<WebsiteDoc>& docs);

// Expands a (possibly truncated) snippet to the full sentences of the fetched
// page that contain it. Empty when the snippet cannot be located.
std::string complete_snippet(const std::string& snippet, const WebsiteDoc& doc);

std::vector<ScoredWebsite> score_websites(const std::vector<SearchHit>& hits, const DocIndex& docs,
                                          const VqaSample& sample, const ScorerBackend& scorer,
                                          SnippetPolicy policy, std::size_t workers = 1,
                                          Diagnostics* diag = nullptr);

struct WebsiteSelection {
    std::vector<WebsiteDoc> docs;
    std::size_t processed_tokens = 0;  // segment tokens of the kept docs
    std::size_t total_tokens = 0;      // segment tokens of every fetched doc
};

// Orders by (score desc, hit order) and applies the budget. Unavailable
// documents are never returned; throws EmptyContext when nothing is left.
WebsiteSelection select_websites(const std::vector<ScoredWebsite>& scored, const WebsiteBudget& budget,
                                 const DocIndex& docs);

std::vector<ScoredSegment> score_segments(const std::vector<WebsiteDoc>& docs, const VqaSample& sample,
                                          const ScorerBackend& scorer, std::size_t workers = 1,
                                          Diagnostics* diag = nullptr);

// Stable: ties keep input order.
std::vector<ScoredSegment> select_top_segments(const std::vector<ScoredSegment>& scored, std::size_t m);

}  // namespace iag
