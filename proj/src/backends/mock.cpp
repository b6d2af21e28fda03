#include "iag/backends/mock.hpp"

#include <algorithm>
#include <cmath>

#include "iag/core/errors.hpp"
#include "iag/core/rng.hpp"
#include "iag/core/text.hpp"

namespace iag {

std::uint64_t instruction_hash(const std::string& instruction) {
    return fnv1a64(instruction);
}

std::string scored_field(const std::string& instruction) {
    for (std::string_view marker : {"Context: ", "Snippet: "}) {
        auto start = instruction.find(marker);
        if (start == std::string::npos) continue;
        start += marker.size();
        auto end = instruction.rfind(" Question: ");
        if (end == std::string::npos || end < start) end = instruction.size();
        return instruction.substr(start, end - start);
    }
    return instruction;
}

TableScorer::TableScorer(std::map<std::uint64_t, char> table, char fallback)
    : table_(std::move(table)), fallback_(fallback) {
    if (fallback_ < 'A' || fallback_ > 'F') throw ParameterError("default letter must be in A-F");
}

char TableScorer::score_option(const std::string& instruction, const ImageRef&) const {
    auto it = table_.find(instruction_hash(instruction));
    return it == table_.end() ? fallback_ : it->second;
}

std::shared_ptr<const ScorerBackend> mock_scorer_from_table(std::map<std::uint64_t, char> table, char fallback) {
    return std::make_shared<TableScorer>(std::move(table), fallback);
}

OracleScorer::OracleScorer(std::string answer) : answer_(std::move(answer)) {
    if (trim(answer_).empty()) throw ParameterError("oracle answer must be non-empty");
}

char OracleScorer::score_option(const std::string& instruction, const ImageRef&) const {
    return icontains(scored_field(instruction), answer_) ? 'A' : 'F';
}

std::shared_ptr<const ScorerBackend> oracle_scorer(std::string answer) {
    return std::make_shared<OracleScorer>(std::move(answer));
}

ScriptedGenerator::ScriptedGenerator(std::vector<std::pair<std::string, std::string>> rules, std::string fallback)
    : rules_(std::move(rules)), fallback_(std::move(fallback)) {}

std::string ScriptedGenerator::generate(const std::string& prompt, const ImageRef&) const {
    for (const auto& [key, reply] : rules_) {
        if (prompt.find(key) != std::string::npos) return reply;
    }
    return fallback_;
}

HashEmbedder::HashEmbedder(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
    if (dim_ == 0) throw ParameterError("embedding dimension must be positive");
}

std::vector<double> HashEmbedder::embed(const EmbedInput& input) const {
    std::string key = (input.kind == EmbedInput::Kind::image ? "image:" : "text:") + input.value;
    std::uint64_t state = seed_ ^ fnv1a64(key);
    std::vector<double> v(dim_);
    double norm = 0.0;
    for (auto& x : v) {
        state = splitmix64(state);
        // top 53 bits -> [-1, 1)
        x = static_cast<double>(state >> 11) * 0x1.0p-52 - 1.0;
        norm += x * x;
    }
    norm = std::sqrt(norm);
    if (norm == 0.0) {
        v[0] = 1.0;
        return v;
    }
    for (auto& x : v) x /= norm;
    return v;
}

StaticWebSearch::StaticWebSearch(std::map<std::string, std::vector<SearchHit>> results, std::set<std::string> failing)
    : results_(std::move(results)), failing_(std::move(failing)) {}

std::vector<SearchHit> StaticWebSearch::search(const Query& query, std::size_t limit) const {
    if (failing_.count(query.text())) throw BackendUnavailable("search failed for '" + query.text() + "'", 1);
    auto it = results_.find(query.text());
    if (it == results_.end()) return {};
    std::vector<SearchHit> out;
    for (const auto& hit : it->second) {
        if (out.size() >= limit) break;
        SearchHit h = hit;
        h.rank = static_cast<int>(out.size()) + 1;
        h.query_origin = query;
        out.push_back(std::move(h));
    }
    return out;
}

StaticVisualSearch::StaticVisualSearch(std::map<std::string, VisualSearchResult> results)
    : results_(std::move(results)) {}

VisualSearchResult StaticVisualSearch::lookup(const std::string& image_ref) const {
    auto it = results_.find(image_ref);
    if (it == results_.end()) throw BackendUnavailable("visual search has no entry for " + image_ref, 1);
    return it->second;
}

StaticImageSearch::StaticImageSearch(std::map<std::string, std::vector<std::string>> results)
    : results_(std::move(results)) {}

std::vector<std::string> StaticImageSearch::search_images(const std::string& term, std::size_t limit) const {
    auto it = results_.find(term);
    if (it == results_.end()) return {};
    std::vector<std::string> out(it->second.begin(),
                                 it->second.begin() + static_cast<long>(std::min(limit, it->second.size())));
    return out;
}

StaticFetcher::StaticFetcher(std::map<std::string, FetchResponse> pages) : pages_(std::move(pages)) {}

FetchResponse StaticFetcher::fetch(const std::string& url) const {
    auto it = pages_.find(url);
    if (it == pages_.end()) throw BackendUnavailable("unreachable: " + url, 1);
    return it->second;
}

GazetteerNer::GazetteerNer(std::vector<std::string> entries) : entries_(std::move(entries)) {}

std::vector<EntitySpan> GazetteerNer::entities(const std::string& text) const {
    std::vector<EntitySpan> spans;
    for (const auto& entry : entries_) {
        if (entry.empty()) continue;
        for (auto pos = ifind(text, entry); pos != std::string::npos; pos = ifind(text, entry, pos + 1)) {
            spans.push_back({text.substr(pos, entry.size()), pos});
        }
    }
    std::sort(spans.begin(), spans.end(), [](const EntitySpan& a, const EntitySpan& b) {
        if (a.offset != b.offset) return a.offset < b.offset;
        return a.text.size() > b.text.size();
    });
    return spans;
}

TableHypernyms::TableHypernyms(std::map<std::string, std::string> table) : table_(std::move(table)) {}

std::string TableHypernyms::hypernym(const std::string& entity) const {
    auto it = table_.find(entity);
    if (it == table_.end()) throw BackendUnavailable("no hypernym for " + entity, 1);
    return it->second;
}

}  // namespace iag
