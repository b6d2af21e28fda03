#include "iag/core/config.hpp"

#include <fstream>
#include <sstream>

#include "iag/core/errors.hpp"
#include "iag/core/text.hpp"

namespace iag {

json parse_key_values(std::string_view text) {
    json out = json::object();
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view body = trim(line);
        if (body.empty() || body[0] == '#' || body[0] == '[') continue;
        auto eq = body.find('=');
        if (eq == std::string_view::npos) {
            throw ParseError("config line " + std::to_string(lineno) + ": expected key = value");
        }
        std::string key(trim(body.substr(0, eq)));
        std::string_view value = trim(body.substr(eq + 1));
        if (!value.empty() && value.front() == '"') {
            auto close = value.find('"', 1);
            if (close == std::string_view::npos) {
                throw ParseError("config line " + std::to_string(lineno) + ": unterminated string");
            }
            out[key] = std::string(value.substr(1, close - 1));
            continue;
        }
        if (auto hash = value.find('#'); hash != std::string_view::npos) value = trim(value.substr(0, hash));
        if (value == "true" || value == "false") {
            out[key] = value == "true";
            continue;
        }
        try {
            std::size_t used = 0;
            std::string v(value);
            if (v.find_first_of(".eE") == std::string::npos) {
                long long n = std::stoll(v, &used);
                if (used == v.size()) {
                    out[key] = n;
                    continue;
                }
            } else {
                double d = std::stod(v, &used);
                if (used == v.size()) {
                    out[key] = d;
                    continue;
                }
            }
        } catch (const std::exception&) {
        }
        out[key] = std::string(value);
    }
    return out;
}

json load_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    std::string text = buf.str();
    std::string_view body = trim(text);
    if (!body.empty() && body.front() == '{') return json::parse(body);
    return parse_key_values(text);
}

PipelineConfig apply_config(PipelineConfig base, const json& flat) {
    if (flat.contains("top_n")) base.website_budget = TopN{flat["top_n"].get<std::size_t>()};
    if (flat.contains("theta")) base.website_budget = TokenFraction{flat["theta"].get<double>()};
    if (flat.contains("segment_cut")) base.segment_cut = flat["segment_cut"].get<std::size_t>();
    if (flat.contains("clusters")) base.cluster_count = flat["clusters"].get<std::size_t>();
    if (flat.contains("seed")) base.rng_seed = flat["seed"].get<std::uint64_t>();
    if (flat.contains("snippet_policy")) {
        base.snippet_policy = parse_snippet_policy(flat["snippet_policy"].get<std::string>());
    }
    if (flat.contains("per_query_limit")) base.per_query_limit = flat["per_query_limit"].get<std::size_t>();
    if (flat.contains("workers")) base.workers = flat["workers"].get<std::size_t>();
    if (flat.contains("include_option_e")) base.include_option_e = flat["include_option_e"].get<bool>();
    if (flat.contains("image_query_support")) {
        base.image_query_support = flat["image_query_support"].get<double>();
    }
    base.validate();
    return base;
}

}  // namespace iag
