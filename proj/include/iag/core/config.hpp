#pragma once

#include <filesystem>
#include <string_view>

#include "iag/core/types.hpp"

namespace iag {

// Reads either a JSON object or a flat `key = value` file (TOML subset:
// '#' comments, quoted or bare strings, numbers, true/false).
json load_config_file(const std::filesystem::path& path);
json parse_key_values(std::string_view text);

// Flat keys: top_n, theta, segment_cut, clusters, seed, snippet_policy,
// per_query_limit, workers, include_option_e, image_query_support.
// Unknown keys are left for other consumers (endpoints and the like).
PipelineConfig apply_config(PipelineConfig base, const json& flat);

}  // namespace iag
