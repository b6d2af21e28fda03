#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "iag/backends/interfaces.hpp"
#include "iag/core/diagnostics.hpp"
#include "iag/core/types.hpp"

namespace iag {

inline constexpr std::string_view kQuestionQueryInstruction =
    "Do not try to answer the question, just print the most informative no more than three entities in "
    "the question. Put them on one line and separate them with comm.";

inline constexpr std::size_t kMaxQuestionQueries = 3;

std::string question_query_prompt(const std::string& question);

struct QuestionQueries {
    std::vector<Query> queries;
    bool fell_back = false;  // reply was empty; the question itself is the query
};

// Splits the model's one-line reply on ',' and the full-width comma.
QuestionQueries gen_question_queries(const std::string& question, const GeneratorBackend& llm);

// Entity name when the visual lookup has one, otherwise the longest common
// token run over related terms and titles. Lookup failures yield no queries.
std::vector<Query> gen_image_queries(const std::string& image_ref, const VisualSearchBackend& visual,
                                     double min_support = 0.6, Diagnostics* diag = nullptr);

// Longest contiguous token sequence shared by at least ceil(min_support * n)
// of the strings, compared case-folded with punctuation removed. Ties go to
// higher support, then to the earliest occurrence in the first string that
// contains the run. The surface form comes from that occurrence.
std::string longest_common_token_run(const std::vector<std::string>& strings, double min_support);

struct QueryBundle {
    std::vector<Query> question_queries;
    std::vector<Query> image_queries;

    std::vector<Query> all() const;
    std::size_t size() const { return question_queries.size() + image_queries.size(); }
};

// Drops case-insensitive duplicate texts, keeping the first.
QueryBundle make_bundle(std::vector<Query> question_queries, std::vector<Query> image_queries);

}  // namespace iag
