#include "iag/augment.hpp"

#include <cctype>

#include "iag/core/text.hpp"

namespace iag {

namespace {

bool is_alnum(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

std::optional<char> offered(char letter, const VqaSample& sample) {
    if (sample.options.count(letter)) return letter;
    return std::nullopt;
}

// Letter right after `marker` (case-insensitive), optionally wrapped in
// parentheses and not followed by another alphanumeric character.
std::optional<char> letter_after(const std::string& raw, std::string_view marker, const VqaSample& sample) {
    for (std::size_t pos = ifind(raw, marker); pos != std::string::npos; pos = ifind(raw, marker, pos + 1)) {
        std::size_t i = pos + marker.size();
        while (i < raw.size() && raw[i] == ' ') ++i;
        if (i < raw.size() && raw[i] == '(') ++i;
        if (i >= raw.size()) continue;
        char c = raw[i];
        if (c < 'A' || c > 'Z') continue;
        if (i + 1 < raw.size() && is_alnum(raw[i + 1])) continue;
        if (auto l = offered(c, sample)) return l;
    }
    return std::nullopt;
}

std::string normalized_option(std::string_view s) {
    std::string t = to_lower(collapse_whitespace(s));
    while (!t.empty() && t.back() == '.') t.pop_back();
    return std::string(trim(t));
}

}  // namespace

std::string build_mcq_prompt(const std::string& context, const VqaSample& sample, bool include_e) {
    auto option = [&](char letter) {
        auto it = sample.options.find(letter);
        return it == sample.options.end() ? std::string() : it->second;
    };
    std::string out = "Given context: ";
    out += context;
    out += " Question: ";
    out += sample.question;
    out += " Answers:";
    for (char letter : {'A', 'B', 'C', 'D'}) {
        out += ' ';
        out += letter;
        out += '.';
        out += option(letter);
    }
    out += ' ';
    if (include_e) {
        out += "E.";
        out += kComplementOption;
        out += ' ';
    }
    out += "Answer with the option's letter from the given choices directly based on the context and the image.";
    return out;
}

std::optional<char> match_leading_letter(const std::string& raw, const VqaSample& sample) {
    std::string_view t = trim(raw);
    if (!t.empty() && t.front() == '(') {
        if (t.size() >= 3 && t[2] == ')') return offered(t[1], sample);
        return std::nullopt;
    }
    if (t.empty()) return std::nullopt;
    if (t.size() > 1 && std::string_view(".):,").find(t[1]) == std::string_view::npos) return std::nullopt;
    return offered(t.front(), sample);
}

std::optional<char> match_answer_is(const std::string& raw, const VqaSample& sample) {
    return letter_after(raw, "the answer is", sample);
}

std::optional<char> match_answer_colon(const std::string& raw, const VqaSample& sample) {
    return letter_after(raw, "answer:", sample);
}

std::optional<char> match_option_text(const std::string& raw, const VqaSample& sample) {
    const std::string reply = normalized_option(raw);
    if (reply.empty()) return std::nullopt;
    for (const auto& [letter, text] : sample.options) {
        if (normalized_option(text) == reply) return letter;
    }
    return std::nullopt;
}

const std::vector<AnswerPattern>& default_patterns() {
    static const std::vector<AnswerPattern> patterns = {match_leading_letter, match_answer_is, match_answer_colon,
                                                        match_option_text};
    return patterns;
}

std::optional<char> extract_answer(const std::string& raw, const VqaSample& sample,
                                   const std::vector<AnswerPattern>& patterns) {
    for (const auto& p : patterns) {
        if (auto l = p(raw, sample)) return l;
    }
    return std::nullopt;
}

AnswerRecord answer_sample(const VqaSample& sample, const std::string& context, const GeneratorBackend& model,
                           bool include_e, Diagnostics* diag, const std::vector<AnswerPattern>& patterns) {
    AnswerRecord rec;
    rec.sample_id = sample.id;
    ImageRef image;
    if (!sample.image_ref.empty()) image = sample.image_ref;
    try {
        rec.raw_output = model.generate(build_mcq_prompt(context, sample, include_e), image);
        rec.extracted = extract_answer(rec.raw_output, sample, patterns);
    } catch (const std::exception& e) {
        rec.error = e.what();
        flag(diag, "augment", sample.id + ": model failed: " + rec.error);
    }
    if (sample.gt_letter) rec.correct = rec.extracted.has_value() && *rec.extracted == *sample.gt_letter;
    return rec;
}

void to_json(json& j, const AnswerRecord& v) {
    j = json{{"sample_id", v.sample_id}, {"raw_output", v.raw_output}};
    j["extracted"] = v.extracted ? json(std::string(1, *v.extracted)) : json(nullptr);
    j["correct"] = v.correct ? json(*v.correct) : json(nullptr);
    if (!v.error.empty()) j["error"] = v.error;
}

void from_json(const json& j, AnswerRecord& v) {
    v.sample_id = j.at("sample_id").get<std::string>();
    v.raw_output = j.value("raw_output", std::string{});
    v.extracted.reset();
    if (j.contains("extracted") && j["extracted"].is_string()) {
        auto s = j["extracted"].get<std::string>();
        if (!s.empty()) v.extracted = s.front();
    }
    v.correct.reset();
    if (j.contains("correct") && j["correct"].is_boolean()) v.correct = j["correct"].get<bool>();
    v.error = j.value("error", std::string{});
}

}  // namespace iag
