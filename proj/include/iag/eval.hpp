#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "iag/augment.hpp"
#include "iag/backends/interfaces.hpp"
#include "iag/core/diagnostics.hpp"
#include "iag/core/types.hpp"
#include "iag/diversity.hpp"
#include "iag/hierfilter.hpp"
#include "iag/querygen.hpp"
#include "iag/retrieval.hpp"

namespace iag {

struct Backends {
    std::shared_ptr<const GeneratorBackend> query_llm;
    std::shared_ptr<const VisualSearchBackend> visual;
    std::shared_ptr<const WebSearchBackend> search;
    std::shared_ptr<const Fetcher> fetcher;
    std::shared_ptr<const ScorerBackend> website_scorer;
    std::shared_ptr<const ScorerBackend> content_scorer;
    std::shared_ptr<const EmbedderBackend> embedder;
    std::shared_ptr<const GeneratorBackend> answerer;
};

enum class Strategy { raw, sim_q, sim_v, sim_qv, ours_topk, ours_div, gt_segment };
inline constexpr std::array<Strategy, 7> kAllStrategies = {Strategy::raw,       Strategy::sim_q,    Strategy::sim_v,
                                                           Strategy::sim_qv,    Strategy::ours_topk,
                                                           Strategy::ours_div,  Strategy::gt_segment};

std::string_view to_string(Strategy s);
Strategy parse_strategy(std::string_view s);

// Query generation and retrieval for one sample. Retrieval-empty is recorded
// (empty() is true) rather than thrown.
struct Gathered {
    QueryBundle bundle;
    bool queries_fell_back = false;
    RetrievalResult retrieval;
    bool empty = true;
};

Gathered gather(const VqaSample& sample, const PipelineConfig& config, const Backends& backends, std::size_t workers,
                Diagnostics* diag);

// Website and content filtering down to the top-M segments.
struct Filtered {
    std::vector<ScoredWebsite> websites;
    WebsiteSelection selection;
    std::size_t segments_scored = 0;
    std::vector<ScoredSegment> top;
};

Filtered filter(const VqaSample& sample, const Gathered& gathered, const PipelineConfig& config,
                const Backends& backends, std::size_t workers, Diagnostics* diag);

struct PipelineRun {
    std::string context;  // X
    AnswerRecord answer;
    json trace;  // {"stages": [...5 entries...], "flags": [...]}
    std::size_t processed_tokens = 0;
    std::size_t total_tokens = 0;
};

// querygen -> retrieval -> hierfilter -> diversity -> augment. Retrieval-empty
// and empty-context conditions degrade to answering with X = ""; any other
// failure is rethrown as StageError naming the stage.
PipelineRun run_pipeline(const VqaSample& sample, const PipelineConfig& config, const Backends& backends,
                         Strategy strategy = Strategy::ours_div);

struct CategoryStat {
    std::size_t n = 0;
    std::size_t correct = 0;
    double accuracy() const { return n ? static_cast<double>(correct) / static_cast<double>(n) : 0.0; }
};

struct EvalReport {
    Strategy strategy = Strategy::ours_div;
    std::size_t n_samples = 0;  // evaluated (excludes skipped)
    std::size_t n_skipped = 0;  // samples without a ground-truth letter
    std::size_t n_correct = 0;
    double overall_accuracy = 0.0;
    std::map<Category, CategoryStat> per_category;
    std::size_t uncategorized = 0;
    std::size_t processed_tokens = 0;
    std::size_t total_tokens = 0;
    PipelineConfig config;
    std::vector<AnswerRecord> records;
    std::vector<Flag> flags;
};

// Samples run in parallel over config.workers; results are merged in input
// order.
EvalReport evaluate(const std::vector<VqaSample>& samples, Strategy strategy, const PipelineConfig& config,
                    const Backends& backends);

json report_json(const EvalReport& report, bool with_records = false);
// Aligned columns: strategy, pol. ent. ann. sp. eco. tech. soc. overall (percent).
std::string report_table(const std::vector<EvalReport>& reports);

struct ThetaRow {
    double theta = 0.0;
    double processed_percent = 0.0;
    double accuracy = 0.0;
};

struct ThetaSweep {
    std::vector<ThetaRow> rows;
    bool tokens_monotonic = true;
};

// Ours (Div-K) at each θ; retrieval runs once per sample.
ThetaSweep theta_sweep(const std::vector<VqaSample>& samples, const std::vector<double>& thetas,
                       const PipelineConfig& config, const Backends& backends);

struct CompareRow {
    std::size_t k = 0;
    double topk_accuracy = 0.0;
    double div_accuracy = 0.0;
};

// Top-K and Div-K over the same filtered segments for each K.
std::vector<CompareRow> compare_topk_div(const std::vector<VqaSample>& samples, const std::vector<std::size_t>& ks,
                                         const PipelineConfig& config, const Backends& backends);

json to_json(const ThetaSweep& sweep);
json to_json(const std::vector<CompareRow>& rows);
std::string sweep_table(const ThetaSweep& sweep);
std::string compare_table(const std::vector<CompareRow>& rows);

}  // namespace iag
