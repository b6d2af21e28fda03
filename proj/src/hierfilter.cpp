#include "iag/hierfilter.hpp"

#include <algorithm>

#include "iag/core/errors.hpp"
#include "iag/core/parallel.hpp"
#include "iag/core/text.hpp"

namespace iag {

namespace {

constexpr std::string_view kOptionsTail = " Options: A. 1.0 B. 0.8 C. 0.6 D. 0.4 E. 0.2 F. 0.0";

ImageRef image_of(const VqaSample& sample) {
    if (sample.image_ref.empty()) return std::nullopt;
    return sample.image_ref;
}

std::string strip_ellipses(std::string_view s) {
    s = trim(s);
    for (bool changed = true; changed;) {
        changed = false;
        for (std::string_view e : {std::string_view("..."), std::string_view("…")}) {
            if (s.size() >= e.size() && s.substr(0, e.size()) == e) {
                s = trim(s.substr(e.size()));
                changed = true;
            }
            if (s.size() >= e.size() && s.substr(s.size() - e.size()) == e) {
                s = trim(s.substr(0, s.size() - e.size()));
                changed = true;
            }
        }
    }
    return std::string(s);
}

template <typename Item>
std::vector<Item> sorted_by_score(std::vector<Item> items) {
    std::stable_sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.score > b.score; });
    return items;
}

}  // namespace

QuantizedScore letter_to_score(char letter) {
    if (letter < 'A' || letter > 'F') throw InvalidLetterError(letter);
    return QuantizedScore::from_fifths(5 - (letter - 'A'));
}

char score_to_letter(QuantizedScore score) {
    return static_cast<char>('A' + (5 - score.fifths()));
}

std::string render_website_instruction(const std::string& title, const std::string& snippet,
                                       const std::string& question) {
    std::string out =
        "How helpful is an article with such a title and snippet in answering the question based on the image? "
        "Choose the best option. Title: ";
    out += title;
    out += " Snippet: ";
    out += snippet;
    out += " Question: ";
    out += question;
    out += kOptionsTail;
    return out;
}

std::string render_content_instruction(const std::string& context, const std::string& question) {
    std::string out =
        "How helpful is this context in answering the question based on the image? Choose the best option. "
        "Context: ";
    out += context;
    out += " Question: ";
    out += question;
    out += kOptionsTail;
    return out;
}

LetterScore score_with_policy(const ScorerBackend& scorer, const std::string& instruction, const ImageRef& image) {
    LetterScore out;
    try {
        for (int attempt = 0; attempt < 2; ++attempt) {
            char letter = scorer.score_option(instruction, image);
            if (letter >= 'A' && letter <= 'F') {
                out.raw_letter = letter;
                out.score = letter_to_score(letter);
                if (attempt > 0) out.problem = "invalid letter on first try";
                return out;
            }
            out.problem = std::string("invalid letter '") + letter + "'";
        }
        out.problem += " after retry, using F";
    } catch (const std::exception& e) {
        out.problem = std::string("scorer failed: ") + e.what();
    }
    out.raw_letter = 'F';
    out.score = QuantizedScore{};
    return out;
}

DocIndex index_docs(const std::vector<WebsiteDoc>& docs) {
    DocIndex index;
    for (const auto& d : docs) index.emplace(d.hit.url, &d);
    return index;
}

std::string complete_snippet(const std::string& snippet, const WebsiteDoc& doc) {
    if (!doc.available() || doc.sentences.empty()) return {};
    std::string needle = collapse_whitespace(strip_ellipses(snippet));
    if (needle.empty()) return {};

    std::vector<std::size_t> starts;
    std::string joined;
    for (const auto& s : doc.sentences) {
        if (!joined.empty()) joined += ' ';
        starts.push_back(joined.size());
        joined += s;
    }

    std::size_t pos = ifind(joined, needle);
    std::size_t len = needle.size();
    if (pos == std::string::npos && needle.size() > 30) {
        len = 30;
        pos = ifind(joined, std::string_view(needle).substr(0, len));
    }
    if (pos == std::string::npos) return {};

    auto sentence_at = [&](std::size_t offset) {
        auto it = std::upper_bound(starts.begin(), starts.end(), offset);
        return static_cast<std::size_t>(it - starts.begin()) - 1;
    };
    std::size_t first = sentence_at(pos);
    std::size_t last = sentence_at(pos + len - 1);
    std::vector<std::string> parts(doc.sentences.begin() + static_cast<long>(first),
                                   doc.sentences.begin() + static_cast<long>(last) + 1);
    return join(parts, " ");
}

std::vector<ScoredWebsite> score_websites(const std::vector<SearchHit>& hits, const DocIndex& docs,
                                          const VqaSample& sample, const ScorerBackend& scorer,
                                          SnippetPolicy policy, std::size_t workers, Diagnostics* diag) {
    auto doc_for = [&](const SearchHit& hit) -> const WebsiteDoc* {
        auto it = docs.find(hit.url);
        return it == docs.end() ? nullptr : it->second;
    };

    std::vector<ScoredWebsite> pending;
    for (const auto& hit : hits) {
        const WebsiteDoc* doc = doc_for(hit);
        if (policy == SnippetPolicy::discard && (!doc || !doc->available())) continue;
        ScoredWebsite sw;
        sw.hit = hit;
        sw.scored_snippet = hit.snippet;
        if (policy == SnippetPolicy::mixture && doc) {
            if (std::string full = complete_snippet(hit.snippet, *doc); !full.empty()) sw.scored_snippet = full;
        }
        pending.push_back(std::move(sw));
    }

    const ImageRef image = image_of(sample);
    auto results = parallel_map(pending.size(), workers, [&](std::size_t i) {
        return score_with_policy(
            scorer, render_website_instruction(pending[i].hit.title, pending[i].scored_snippet, sample.question),
            image);
    });
    for (std::size_t i = 0; i < pending.size(); ++i) {
        pending[i].raw_letter = results[i].raw_letter;
        pending[i].score = results[i].score;
        if (!results[i].problem.empty()) flag(diag, "hierfilter", pending[i].hit.url + ": " + results[i].problem);
    }
    return pending;
}

WebsiteSelection select_websites(const std::vector<ScoredWebsite>& scored, const WebsiteBudget& budget,
                                 const DocIndex& docs) {
    if (scored.empty()) throw EmptyContext("no websites to select from");

    WebsiteSelection out;
    for (const auto& [url, doc] : docs) {
        if (doc->available()) out.total_tokens += doc->token_count();
    }

    std::vector<const WebsiteDoc*> ordered;
    for (const auto& sw : sorted_by_score(scored)) {
        auto it = docs.find(sw.hit.url);
        ordered.push_back(it == docs.end() ? nullptr : it->second);
    }
    auto keep = [&](const WebsiteDoc* d) {
        out.docs.push_back(*d);
        out.processed_tokens += d->token_count();
    };

    if (const auto* top = std::get_if<TopN>(&budget)) {
        for (std::size_t i = 0; i < ordered.size() && i < top->n; ++i) {
            if (ordered[i] && ordered[i]->available()) keep(ordered[i]);
        }
    } else {
        const double theta = std::get<TokenFraction>(budget).theta;
        const double limit = theta * static_cast<double>(out.total_tokens);
        const double tolerance = 1e-9 * static_cast<double>(out.total_tokens);
        std::size_t cumulative = 0;
        for (const WebsiteDoc* d : ordered) {
            if (!d || !d->available()) continue;
            cumulative += d->token_count();
            if (static_cast<double>(cumulative) > limit + tolerance) {
                if (out.docs.empty()) keep(d);
                break;
            }
            keep(d);
        }
    }
    if (out.docs.empty()) throw EmptyContext("no fetched website survived selection");
    return out;
}

std::vector<ScoredSegment> score_segments(const std::vector<WebsiteDoc>& docs, const VqaSample& sample,
                                          const ScorerBackend& scorer, std::size_t workers, Diagnostics* diag) {
    std::vector<ScoredSegment> pending;
    for (const auto& doc : docs) {
        for (const auto& seg : doc.segments) pending.push_back({seg, QuantizedScore{}, 'F'});
    }
    const ImageRef image = image_of(sample);
    auto results = parallel_map(pending.size(), workers, [&](std::size_t i) {
        return score_with_policy(scorer, render_content_instruction(pending[i].segment.text, sample.question),
                                 image);
    });
    for (std::size_t i = 0; i < pending.size(); ++i) {
        pending[i].raw_letter = results[i].raw_letter;
        pending[i].score = results[i].score;
        if (!results[i].problem.empty()) {
            flag(diag, "hierfilter",
                 pending[i].segment.site_url + "#" + std::to_string(pending[i].segment.index) + ": " +
                     results[i].problem);
        }
    }
    return pending;
}

std::vector<ScoredSegment> select_top_segments(const std::vector<ScoredSegment>& scored, std::size_t m) {
    if (m == 0) throw ParameterError("segment cut M must be at least 1");
    auto sorted = sorted_by_score(scored);
    if (sorted.size() > m) sorted.resize(m);
    return sorted;
}

}  // namespace iag
