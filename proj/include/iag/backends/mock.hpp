#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "iag/backends/interfaces.hpp"

namespace iag {

// Key used by table-driven mocks.
std::uint64_t instruction_hash(const std::string& instruction);

// Returns the "Context:" or "Snippet:" field of a rendered filter instruction,
// or the whole instruction when neither marker is present.
std::string scored_field(const std::string& instruction);

class TableScorer final : public ScorerBackend {
public:
    TableScorer(std::map<std::uint64_t, char> table, char fallback);
    char score_option(const std::string& instruction, const ImageRef& image_ref) const override;

private:
    std::map<std::uint64_t, char> table_;
    char fallback_;
};

std::shared_ptr<const ScorerBackend> mock_scorer_from_table(std::map<std::uint64_t, char> table, char fallback);

// "A" when the scored field contains the answer (case-insensitive), else "F".
class OracleScorer final : public ScorerBackend {
public:
    explicit OracleScorer(std::string answer);
    char score_option(const std::string& instruction, const ImageRef& image_ref) const override;

private:
    std::string answer_;
};

std::shared_ptr<const ScorerBackend> oracle_scorer(std::string answer);

// First rule whose key occurs in the prompt wins.
class ScriptedGenerator final : public GeneratorBackend {
public:
    ScriptedGenerator(std::vector<std::pair<std::string, std::string>> rules, std::string fallback);
    std::string generate(const std::string& prompt, const ImageRef& image_ref) const override;

private:
    std::vector<std::pair<std::string, std::string>> rules_;
    std::string fallback_;
};

// Seeded hash of the input bytes expanded to `dim` components, L2-normalized.
class HashEmbedder final : public EmbedderBackend {
public:
    explicit HashEmbedder(std::size_t dim = 32, std::uint64_t seed = 0);
    std::vector<double> embed(const EmbedInput& input) const override;
    std::size_t dimension() const override { return dim_; }

private:
    std::size_t dim_;
    std::uint64_t seed_;
};

class StaticWebSearch final : public WebSearchBackend {
public:
    explicit StaticWebSearch(std::map<std::string, std::vector<SearchHit>> results,
                             std::set<std::string> failing = {});
    std::vector<SearchHit> search(const Query& query, std::size_t limit) const override;

private:
    std::map<std::string, std::vector<SearchHit>> results_;
    std::set<std::string> failing_;
};

class StaticVisualSearch final : public VisualSearchBackend {
public:
    explicit StaticVisualSearch(std::map<std::string, VisualSearchResult> results);
    VisualSearchResult lookup(const std::string& image_ref) const override;

private:
    std::map<std::string, VisualSearchResult> results_;
};

class StaticImageSearch final : public ImageSearchBackend {
public:
    explicit StaticImageSearch(std::map<std::string, std::vector<std::string>> results);
    std::vector<std::string> search_images(const std::string& term, std::size_t limit) const override;

private:
    std::map<std::string, std::vector<std::string>> results_;
};

// Unknown URLs behave like unreachable hosts.
class StaticFetcher final : public Fetcher {
public:
    explicit StaticFetcher(std::map<std::string, FetchResponse> pages);
    FetchResponse fetch(const std::string& url) const override;

private:
    std::map<std::string, FetchResponse> pages_;
};

// Case-insensitive dictionary matcher; spans ordered by position, longer first.
class GazetteerNer final : public NerBackend {
public:
    explicit GazetteerNer(std::vector<std::string> entries);
    std::vector<EntitySpan> entities(const std::string& text) const override;

private:
    std::vector<std::string> entries_;
};

class TableHypernyms final : public HypernymBackend {
public:
    explicit TableHypernyms(std::map<std::string, std::string> table);
    std::string hypernym(const std::string& entity) const override;

private:
    std::map<std::string, std::string> table_;
};

}  // namespace iag
