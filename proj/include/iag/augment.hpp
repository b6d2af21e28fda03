#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "iag/backends/interfaces.hpp"
#include "iag/core/diagnostics.hpp"
#include "iag/core/types.hpp"

namespace iag {

// Options A-D always; E ("No Correct Answers") only when include_e is set.
std::string build_mcq_prompt(const std::string& context, const VqaSample& sample, bool include_e = true);

// A matcher returns the letter it recognizes in a model reply, if any.
using AnswerPattern = std::function<std::optional<char>(const std::string& raw, const VqaSample& sample)>;

// "B", "B.", "(B)", "B: ..." but not "A dog".
std::optional<char> match_leading_letter(const std::string& raw, const VqaSample& sample);
std::optional<char> match_answer_is(const std::string& raw, const VqaSample& sample);
std::optional<char> match_answer_colon(const std::string& raw, const VqaSample& sample);
std::optional<char> match_option_text(const std::string& raw, const VqaSample& sample);

const std::vector<AnswerPattern>& default_patterns();

// First pattern that matches wins. Letters outside the sample's options are
// ignored.
std::optional<char> extract_answer(const std::string& raw, const VqaSample& sample,
                                   const std::vector<AnswerPattern>& patterns = default_patterns());

struct AnswerRecord {
    std::string sample_id;
    std::string raw_output;
    std::optional<char> extracted;
    std::optional<bool> correct;  // set whenever gt is known; no extraction counts as wrong
    std::string error;            // model failure, empty otherwise

    bool operator==(const AnswerRecord&) const = default;
};

AnswerRecord answer_sample(const VqaSample& sample, const std::string& context, const GeneratorBackend& model,
                           bool include_e = true, Diagnostics* diag = nullptr,
                           const std::vector<AnswerPattern>& patterns = default_patterns());

void to_json(json& j, const AnswerRecord& v);
void from_json(const json& j, AnswerRecord& v);

}  // namespace iag
