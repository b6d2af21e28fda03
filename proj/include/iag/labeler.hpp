#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "iag/backends/interfaces.hpp"
#include "iag/core/diagnostics.hpp"
#include "iag/core/types.hpp"

namespace iag {

inline constexpr std::size_t kDefaultVoters = 5;
inline constexpr std::size_t kDistractorSegments = 4;

struct VoteOutcome {
    std::string sample_id;
    ContentSegment segment;
    std::vector<bool> votes;  // empty for the ground-truth segment
    QuantizedScore pseudo;
    bool ground_truth = false;
};

using Voters = std::vector<std::shared_ptr<const GeneratorBackend>>;

// Seeded sample without replacement of min(k, available) segments other than
// `gt` (matched by site and index).
std::vector<ContentSegment> sample_distractor_segments(const std::vector<ContentSegment>& news,
                                                       const ContentSegment& gt, std::size_t k, std::uint64_t seed);

// correct/voters rounded to the nearest level (exact when voters == 5).
QuantizedScore vote_rate(std::size_t correct, std::size_t voters);

// Each voter answers the sample with the segment as context. A failing voter
// counts as a wrong vote.
VoteOutcome pseudo_score_segment(const VqaSample& sample, const ContentSegment& segment, const Voters& voters,
                                 std::size_t workers = 1, Diagnostics* diag = nullptr);

// Max over the site's segment outcomes. Throws ParameterError when empty.
QuantizedScore pseudo_score_website(const std::vector<VoteOutcome>& outcomes);

// Ground-truth segment (fixed at 1.0) followed by up to four voted distractor
// segments drawn from the same news document.
std::vector<VoteOutcome> label_sample(const VqaSample& sample, const std::vector<ContentSegment>& news,
                                      const Voters& voters, std::uint64_t seed, std::size_t workers = 1,
                                      Diagnostics* diag = nullptr);

enum class RecordKind { website, content };

struct InstructionRecord {
    RecordKind kind = RecordKind::content;
    std::string instruction;
    char target = 'F';
    std::string sample_id;
    std::string site_url;
    std::optional<std::size_t> segment_index;
    std::string image_ref;

    bool operator==(const InstructionRecord&) const = default;
};

struct TrainingRecords {
    std::vector<InstructionRecord> website;
    std::vector<InstructionRecord> content;
};

// Records ordered by sample id, then site order in `sites`, then segment
// index. Sites without a title or snippet get no website record.
TrainingRecords emit_training_records(const std::vector<VqaSample>& samples,
                                      const std::vector<VoteOutcome>& outcomes,
                                      const std::vector<SearchHit>& sites, Diagnostics* diag = nullptr);

void write_training_records(const TrainingRecords& records, const std::filesystem::path& dir);

void to_json(json& j, const InstructionRecord& v);
void from_json(const json& j, InstructionRecord& v);
void to_json(json& j, const VoteOutcome& v);

}  // namespace iag
