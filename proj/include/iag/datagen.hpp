#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "iag/backends/interfaces.hpp"
#include "iag/core/diagnostics.hpp"
#include "iag/core/types.hpp"

namespace iag {

struct Date {
    int year = 1970;
    int month = 1;
    int day = 1;

    // Strict YYYY-MM-DD with calendar validation. Throws ParseError.
    static Date parse(std::string_view s);
    std::string str() const;

    auto operator<=>(const Date&) const = default;
};

enum class QuerySource { trends_feed, manual };

struct TrendQuery {
    std::string text;
    Date date;
    QuerySource source = QuerySource::trends_feed;

    bool operator==(const TrendQuery&) const = default;
};

// Lines are "YYYY-MM-DD <query>"; blank lines and '#' comments are ignored,
// malformed lines are skipped with a flag. Trend entries win duplicate texts
// (case-insensitive).
std::vector<TrendQuery> load_queries(std::istream& trends, std::istream& manual, Diagnostics* diag = nullptr);
std::vector<TrendQuery> load_queries(const std::filesystem::path& trends, const std::filesystem::path& manual,
                                     Diagnostics* diag = nullptr);

std::string qa_generation_prompt(const std::string& content);

struct QaDraft {
    ContentSegment segment;
    std::string question;
    std::string correct;
    std::array<std::string, 3> distractors;
    std::optional<std::string> entity;
    std::optional<std::string> hypernym;
};

inline constexpr std::size_t kMaxAnswerWords = 3;

// Reads the "Question:", "Correct answer:" and "Incorrect answers: A. B. C."
// fields. Missing or empty fields and repeated answers reject the draft;
// answers over three words are kept and flagged.
std::optional<QaDraft> parse_qa_reply(const std::string& reply, const ContentSegment& segment,
                                      Diagnostics* diag = nullptr);
std::optional<QaDraft> gen_qa_pair(const ContentSegment& segment, const GeneratorBackend& llm,
                                   Diagnostics* diag = nullptr);

// The model answers the draft as a four-option question with the segment as
// context; true iff it picks the correct answer.
bool verify_qa(const QaDraft& draft, const GeneratorBackend& llm, std::uint64_t seed, Diagnostics* diag = nullptr);

// First entity by position in the question.
std::optional<std::string> extract_entity(const std::string& question, const NerBackend& ner);

struct HypernymRewrite {
    std::string question;
    std::string hypernym;
};

// Replaces the first occurrence of `entity`. Throws PreconditionError when the
// entity is not in the question; nullopt when the backend fails or returns
// the entity itself.
std::optional<HypernymRewrite> hypernym_replace(const std::string& question, const std::string& entity,
                                                const HypernymBackend& hypernyms, Diagnostics* diag = nullptr);

inline constexpr std::size_t kDefaultImageClusters = 3;
inline constexpr std::size_t kImagesPerEntity = 10;

// Members of the most populous image cluster (lowest cluster index on ties),
// in search order. Empty when the search returns nothing.
std::vector<std::string> assign_images(const std::string& entity, const ImageSearchBackend& images,
                                       const EmbedderBackend& embedder, std::size_t k_img, std::uint64_t seed,
                                       std::size_t limit = kImagesPerEntity);

// Seeded shuffle of the answer and distractors into A-D plus the complement
// option E.
VqaSample assemble_sample(const QaDraft& draft, const std::string& image_ref, const std::string& id,
                          std::uint64_t seed);

struct TemporalSplit {
    std::vector<VqaSample> train;
    std::vector<VqaSample> test;
};

// Samples whose source query is dated on or after the cutoff go to test.
// Samples without a dated source query are dropped with a flag.
TemporalSplit temporal_split(const std::vector<VqaSample>& samples, const std::map<std::string, Date>& query_dates,
                             const Date& cutoff, Diagnostics* diag = nullptr);

// Manual screening round trip: every sample is exported with "keep": null;
// a reviewer sets true/false and only kept samples are imported back.
void write_review(const std::filesystem::path& path, const std::vector<VqaSample>& samples);
std::vector<VqaSample> read_review(const std::filesystem::path& path, Diagnostics* diag = nullptr);

struct DatagenBackends {
    std::shared_ptr<const WebSearchBackend> search;
    std::shared_ptr<const Fetcher> fetcher;
    std::shared_ptr<const GeneratorBackend> llm;
    std::shared_ptr<const NerBackend> ner;
    std::shared_ptr<const HypernymBackend> hypernyms;
    std::shared_ptr<const ImageSearchBackend> images;
    std::shared_ptr<const EmbedderBackend> embedder;
};

struct DatagenOptions {
    std::size_t news_per_query = 1;
    std::size_t max_segments_per_news = 0;  // 0 = every segment
    std::size_t image_clusters = kDefaultImageClusters;
    std::uint64_t seed = 0;
    std::size_t workers = 1;
};

struct DatagenStats {
    std::size_t queries = 0;
    std::size_t queries_without_news = 0;
    std::size_t segments = 0;
    std::size_t rejected_parse = 0;
    std::size_t rejected_verify = 0;
    std::size_t no_entity = 0;
    std::size_t no_hypernym = 0;
    std::size_t no_images = 0;
    std::size_t samples = 0;

    bool operator==(const DatagenStats&) const = default;
};

struct DatagenResult {
    std::vector<VqaSample> samples;
    // Segments of the news document each sample came from, keyed by sample id
    // (input for pseudo-score labeling).
    std::map<std::string, std::vector<ContentSegment>> news_segments;
    std::map<std::string, SearchHit> news_hits;  // keyed by sample id
    DatagenStats stats;
};

DatagenResult generate_samples(const std::vector<TrendQuery>& queries, const DatagenBackends& backends,
                               const DatagenOptions& options, Diagnostics* diag = nullptr);

std::string_view to_string(QuerySource v);
void to_json(json& j, const TrendQuery& v);
void to_json(json& j, const DatagenStats& v);

}  // namespace iag
