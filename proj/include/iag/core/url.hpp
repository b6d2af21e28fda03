#pragma once

#include <string>
#include <string_view>

namespace iag {

struct UrlParts {
    std::string scheme;  // "http" or "https"
    std::string host;
    int port = 0;        // 0 when absent or default
    std::string target;  // path + query, starts with '/' (or empty)
};

// Lowercases scheme and host, drops the default port and the fragment, and
// removes a lone trailing slash. Throws ParseError for anything that is not an
// absolute http/https URL.
std::string normalize_url(std::string_view raw);

UrlParts split_url(std::string_view raw);

}  // namespace iag
