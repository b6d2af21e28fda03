#include "iag/querygen.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>

#include "iag/core/errors.hpp"
#include "iag/core/text.hpp"

namespace iag {

namespace {

constexpr std::string_view kFullWidthComma = "\xEF\xBC\x8C";

struct Token {
    std::string key;      // case-folded, punctuation removed
    std::string surface;  // original token with edge punctuation trimmed
};

std::vector<Token> tokenize(const std::string& s) {
    std::vector<Token> out;
    for (const auto& raw : split_whitespace(s)) {
        Token t;
        for (char c : raw) {
            if (!std::ispunct(static_cast<unsigned char>(c))) {
                t.key += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            }
        }
        if (t.key.empty()) continue;
        std::size_t b = 0;
        std::size_t e = raw.size();
        while (b < e && std::ispunct(static_cast<unsigned char>(raw[b]))) ++b;
        while (e > b && std::ispunct(static_cast<unsigned char>(raw[e - 1]))) --e;
        t.surface = raw.substr(b, e - b);
        out.push_back(std::move(t));
    }
    return out;
}

std::string first_nonempty_line(const std::string& reply) {
    std::size_t start = 0;
    while (start <= reply.size()) {
        auto end = reply.find_first_of("\r\n", start);
        if (end == std::string::npos) end = reply.size();
        std::string_view line = trim(std::string_view(reply).substr(start, end - start));
        if (!line.empty()) return std::string(line);
        start = end + 1;
    }
    return {};
}

}  // namespace

std::string question_query_prompt(const std::string& question) {
    return "Question: " + question + "\n" + std::string(kQuestionQueryInstruction);
}

QuestionQueries gen_question_queries(const std::string& question, const GeneratorBackend& llm) {
    if (trim(question).empty()) throw PreconditionError("question is empty");

    std::string line = first_nonempty_line(llm.generate(question_query_prompt(question), std::nullopt));
    for (auto pos = line.find(kFullWidthComma); pos != std::string::npos; pos = line.find(kFullWidthComma)) {
        line.replace(pos, kFullWidthComma.size(), ",");
    }

    QuestionQueries out;
    std::set<std::string> seen;
    std::size_t start = 0;
    while (start <= line.size() && out.queries.size() < kMaxQuestionQueries) {
        auto end = line.find(',', start);
        if (end == std::string::npos) end = line.size();
        std::string_view part = trim(std::string_view(line).substr(start, end - start));
        if (!part.empty() && seen.insert(to_lower(part)).second) {
            out.queries.emplace_back(part, QueryOrigin::question);
        }
        start = end + 1;
    }
    if (out.queries.empty()) {
        out.queries.emplace_back(collapse_whitespace(question), QueryOrigin::question);
        out.fell_back = true;
    }
    return out;
}

std::vector<Query> gen_image_queries(const std::string& image_ref, const VisualSearchBackend& visual,
                                     double min_support, Diagnostics* diag) {
    VisualSearchResult result;
    try {
        result = visual.lookup(image_ref);
    } catch (const std::exception& e) {
        flag(diag, "querygen", std::string("visual lookup failed: ") + e.what());
        return {};
    }
    if (result.entity_name && !trim(*result.entity_name).empty()) {
        return {Query(collapse_whitespace(*result.entity_name), QueryOrigin::image)};
    }
    std::vector<std::string> pool = result.related_terms;
    pool.insert(pool.end(), result.related_titles.begin(), result.related_titles.end());
    if (pool.empty()) {
        flag(diag, "querygen", "visual lookup returned nothing for " + image_ref);
        return {};
    }
    std::string run = longest_common_token_run(pool, min_support);
    if (run.empty()) return {};
    return {Query(run, QueryOrigin::image)};
}

std::string longest_common_token_run(const std::vector<std::string>& strings, double min_support) {
    if (strings.empty()) throw PreconditionError("longest_common_token_run needs at least one string");
    if (!(min_support > 0.0 && min_support <= 1.0)) throw ParameterError("min_support must be in (0, 1]");

    const std::size_t n = strings.size();
    const std::size_t need =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(min_support * static_cast<double>(n) - 1e-9)));

    struct Occurrence {
        std::set<std::size_t> members;
        std::size_t first_string = 0;
        std::size_t first_pos = 0;
        std::size_t length = 0;
    };
    std::vector<std::vector<Token>> tokens;
    tokens.reserve(n);
    for (const auto& s : strings) tokens.push_back(tokenize(s));

    std::map<std::string, Occurrence> runs;
    for (std::size_t si = 0; si < n; ++si) {
        const auto& t = tokens[si];
        for (std::size_t b = 0; b < t.size(); ++b) {
            std::string key;
            for (std::size_t e = b; e < t.size(); ++e) {
                if (e > b) key += '\x1f';
                key += t[e].key;
                auto [it, inserted] = runs.try_emplace(key);
                if (inserted) {
                    it->second.first_string = si;
                    it->second.first_pos = b;
                    it->second.length = e - b + 1;
                }
                it->second.members.insert(si);
            }
        }
    }

    const Occurrence* best = nullptr;
    for (const auto& [key, occ] : runs) {
        if (occ.members.size() < need) continue;
        if (!best) {
            best = &occ;
            continue;
        }
        auto rank = [](const Occurrence* o) {
            return std::make_tuple(o->length, o->members.size());
        };
        auto position = [](const Occurrence* o) { return std::make_pair(o->first_string, o->first_pos); };
        if (rank(&occ) > rank(best) || (rank(&occ) == rank(best) && position(&occ) < position(best))) {
            best = &occ;
        }
    }
    if (!best) return {};

    const auto& t = tokens[best->first_string];
    std::vector<std::string> surface;
    for (std::size_t i = 0; i < best->length; ++i) surface.push_back(t[best->first_pos + i].surface);
    return join(surface, " ");
}

std::vector<Query> QueryBundle::all() const {
    std::vector<Query> out = question_queries;
    out.insert(out.end(), image_queries.begin(), image_queries.end());
    return out;
}

QueryBundle make_bundle(std::vector<Query> question_queries, std::vector<Query> image_queries) {
    QueryBundle bundle;
    std::set<std::string> seen;
    for (auto& q : question_queries) {
        if (seen.insert(to_lower(q.text())).second) bundle.question_queries.push_back(std::move(q));
    }
    for (auto& q : image_queries) {
        if (seen.insert(to_lower(q.text())).second) bundle.image_queries.push_back(std::move(q));
    }
    return bundle;
}

}  // namespace iag
