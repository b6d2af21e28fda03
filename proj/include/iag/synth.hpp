#pragma once

// Deterministic synthetic worlds and context-reading mock models used by the
// test suites and by the CLI's --offline mode.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "iag/backends/interfaces.hpp"
#include "iag/datagen.hpp"

namespace iag::synth {

// Made-up capitalized word built from syllables.
std::string make_name(std::mt19937_64& rng, int syllables);

struct McqView {
    std::string context;
    std::string question;
    std::map<char, std::string> options;
};

// Inverse of build_mcq_prompt; nullopt for other prompts.
std::optional<McqView> parse_mcq_prompt(const std::string& prompt);

// Token-set Jaccard similarity of at least 0.8.
bool near_duplicate(const std::string& a, const std::string& b);

// Answers multiple-choice prompts with the option mentioned most often in the
// context (earliest letter on ties) and otherwise with a letter in A-E picked
// by hashing the prompt. Question-query prompts get the first gazetteer entry
// found in the question; QA-generation prompts get the reply of the first
// fact whose key occurs in the content.
class ContextReader final : public GeneratorBackend {
public:
    struct Fact {
        std::string key;
        std::string reply;
    };

    explicit ContextReader(std::vector<std::string> gazetteer = {}, std::vector<Fact> facts = {});
    std::string generate(const std::string& prompt, const ImageRef& image_ref) const override;

    static char answer_mcq(const McqView& view, const std::string& prompt);

private:
    std::vector<std::string> gazetteer_;
    std::vector<Fact> facts_;
};

// Like ContextReader, but replies with non-answers when more than half of the
// newline-separated context segments have a near-duplicate in the context.
class DuplicatePenalizingReader final : public GeneratorBackend {
public:
    explicit DuplicatePenalizingReader(std::shared_ptr<const GeneratorBackend> inner);
    std::string generate(const std::string& prompt, const ImageRef& image_ref) const override;

private:
    std::shared_ptr<const GeneratorBackend> inner_;
};

// Wraps a model; with probability `error_rate` (decided by hashing the
// prompt) a multiple-choice reply is replaced by a different letter.
class FallibleReader final : public GeneratorBackend {
public:
    FallibleReader(std::shared_ptr<const GeneratorBackend> inner, double error_rate, std::uint64_t seed);
    std::string generate(const std::string& prompt, const ImageRef& image_ref) const override;

private:
    std::shared_ptr<const GeneratorBackend> inner_;
    double error_rate_;
    std::uint64_t seed_;
};

// Scores "A" when the scored field contains the answer to the instruction's
// question and "F" otherwise. With noise p, a hash of the instruction picks a
// uniformly random letter instead with probability p.
class AnswerKeyScorer final : public ScorerBackend {
public:
    explicit AnswerKeyScorer(std::map<std::string, std::string> answers, double noise = 0.0, std::uint64_t seed = 0);
    char score_option(const std::string& instruction, const ImageRef& image_ref) const override;

private:
    std::map<std::string, std::string> answers_;
    double noise_;
    std::uint64_t seed_;
};

struct WorldOptions {
    std::size_t samples = 100;
    std::size_t sites = 50;
    std::size_t segments_per_site = 10;
    // 0: one planted answer segment per sample over boilerplate filler.
    // n > 0: the answer segment is copied onto n sites over unique filler.
    std::size_t duplicate_copies = 0;
    std::size_t boilerplate_blocks = 4;
    double unavailable_fraction = 0.0;
    std::uint64_t seed = 0;
};

struct PlantedInfo {
    std::string topic;
    std::string answer;
    std::string answer_text;                // the planted segment's text
    std::vector<std::size_t> answer_sites;  // site numbers carrying it
    std::vector<std::size_t> answer_segments;
};

class SyntheticWorld {
public:
    explicit SyntheticWorld(WorldOptions options);

    const WorldOptions& options() const;
    const std::vector<VqaSample>& samples() const;
    const PlantedInfo& planted(std::size_t sample) const;

    std::string site_url(std::size_t sample, std::size_t site) const;
    bool site_available(std::size_t sample, std::size_t site) const;
    std::vector<std::string> page_sentences(std::size_t sample, std::size_t site) const;
    std::string page_html(std::size_t sample, std::size_t site) const;
    std::vector<SearchHit> hits(std::size_t sample) const;

    std::shared_ptr<const WebSearchBackend> search() const;
    std::shared_ptr<const Fetcher> fetcher() const;
    std::shared_ptr<const VisualSearchBackend> visual() const;
    std::shared_ptr<const GeneratorBackend> reader() const;
    std::shared_ptr<const GeneratorBackend> duplicate_penalizing_reader() const;
    std::shared_ptr<const ScorerBackend> scorer(double noise = 0.0, std::uint64_t seed = 0) const;
    std::shared_ptr<const EmbedderBackend> embedder() const;

    struct State;

private:
    std::shared_ptr<const State> state_;
};

// Image embeddings with planted clusters: refs "img://<group>/<n>" lie close to
// a per-group direction, refs whose last part starts with 'x' are outliers.
// Text inputs are hashed.
class ClusteredImageEmbedder final : public EmbedderBackend {
public:
    explicit ClusteredImageEmbedder(std::size_t dim = 32, std::uint64_t seed = 0);
    std::vector<double> embed(const EmbedInput& input) const override;
    std::size_t dimension() const override { return dim_; }

private:
    std::size_t dim_;
    std::uint64_t seed_;
};

struct DatagenWorld {
    std::string trends_text;
    std::string manual_text;
    DatagenBackends backends;
    std::vector<std::string> entities;
};

// Twenty dated news queries (mid February to the end of April 2024) with
// two-segment news pages, plus a handful of planted failures: a failing
// search, an unreachable page, a malformed QA reply, an entity-free question,
// a missing hypernym, an unverifiable draft and an entity without images.
DatagenWorld make_datagen_world(std::uint64_t seed = 0);

}  // namespace iag::synth
