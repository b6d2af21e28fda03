#include "iag/core/url.hpp"

#include <cctype>

#include "iag/core/errors.hpp"
#include "iag/core/text.hpp"

namespace iag {

namespace {

bool valid_host_char(char c) {
    unsigned char u = static_cast<unsigned char>(c);
    return std::isalnum(u) || c == '-' || c == '.' || c == '_' || u >= 0x80;
}

}  // namespace

UrlParts split_url(std::string_view raw) {
    std::string_view s = trim(raw);
    auto sep = s.find("://");
    if (sep == std::string_view::npos) throw ParseError("not an absolute URL: " + std::string(raw));

    UrlParts parts;
    parts.scheme = to_lower(s.substr(0, sep));
    if (parts.scheme != "http" && parts.scheme != "https") {
        throw ParseError("unsupported URL scheme: " + std::string(raw));
    }
    std::string_view rest = s.substr(sep + 3);
    if (auto hash = rest.find('#'); hash != std::string_view::npos) rest = rest.substr(0, hash);

    auto path_start = rest.find_first_of("/?");
    std::string_view authority = rest.substr(0, path_start);
    std::string_view target = path_start == std::string_view::npos ? "" : rest.substr(path_start);

    if (auto at = authority.rfind('@'); at != std::string_view::npos) authority = authority.substr(at + 1);
    std::string_view host = authority;
    if (auto colon = authority.rfind(':'); colon != std::string_view::npos) {
        host = authority.substr(0, colon);
        std::string_view port = authority.substr(colon + 1);
        if (port.empty() || port.size() > 5) throw ParseError("bad port in URL: " + std::string(raw));
        int value = 0;
        for (char c : port) {
            if (!std::isdigit(static_cast<unsigned char>(c))) {
                throw ParseError("bad port in URL: " + std::string(raw));
            }
            value = value * 10 + (c - '0');
        }
        if (value == 0 || value > 65535) throw ParseError("bad port in URL: " + std::string(raw));
        parts.port = value;
    }
    if (host.empty()) throw ParseError("missing host in URL: " + std::string(raw));
    for (char c : host) {
        if (!valid_host_char(c)) throw ParseError("bad host in URL: " + std::string(raw));
    }
    for (char c : target) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            throw ParseError("whitespace in URL: " + std::string(raw));
        }
    }
    parts.host = to_lower(host);
    if ((parts.scheme == "http" && parts.port == 80) || (parts.scheme == "https" && parts.port == 443)) {
        parts.port = 0;
    }
    parts.target = std::string(target);
    if (parts.target.empty() || parts.target[0] == '?') parts.target.insert(0, "/");
    return parts;
}

std::string normalize_url(std::string_view raw) {
    UrlParts parts = split_url(raw);
    std::string out = parts.scheme + "://" + parts.host;
    if (parts.port != 0) out += ":" + std::to_string(parts.port);
    std::string target = parts.target;
    if (target == "/") {
        target.clear();
    } else if (target.rfind("/?", 0) == 0) {
        target.erase(0, 1);
    }
    return out + target;
}

}  // namespace iag
